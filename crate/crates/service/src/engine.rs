//! Request logic over one loaded dataset and its artifacts.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use molscape_core::align::{align_compounds, write_sdf, AlignmentResult, SdfRecord};
use molscape_core::chem::{
    compute_descriptors, compute_ecfp, compute_path_fingerprint, parse_smiles, DrugLikenessRecord,
};
use molscape_core::dataset::{load_dataset, AddedCompound, Dataset, SessionState};
use molscape_core::dr::{Projection2D, ProjectionSource, Representation, TrustKind, TrustScores};
use molscape_core::view::{
    bin_points, difference_view, lasso_select, select_hexes, Axial, DifferenceViewModel, FeatureTable, HexGrid,
    HexLayout, OpacityScale, Selection, SelectionSource,
};
use serde::{Deserialize, Serialize};

use crate::artifacts::{
    preprocess_path, projector_path, read_json, tsne_path, PreprocessArtifact, ProjectorArtifact, TsneArtifact,
    ARTIFACT_VERSION, PREPROCESS_FORMAT, PROJECTOR_ARTIFACT_FORMAT, TSNE_FORMAT,
};
use crate::config::PipelineConfig;
use crate::error::{ApiError, PipelineError};
use crate::table::{query_table, TablePage, TableQuery};

pub struct RepresentationView {
    pub tsne: TsneArtifact,
    pub projector: Option<ProjectorArtifact>,
}

pub struct Engine {
    pub dataset: Dataset,
    pub features: FeatureTable,
    pub views: BTreeMap<Representation, RepresentationView>,
    pub config: PipelineConfig,
    pub artifacts_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetSummary {
    pub name: String,
    pub artifact_version: u32,
    pub compounds: usize,
    pub targets: Vec<String>,
    pub representations: Vec<Representation>,
    pub projectors: Vec<Representation>,
    pub conformers: usize,
    pub features: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProjectedPoint {
    pub id: String,
    pub x: f64,
    pub y: f64,
    pub pearson_r: f64,
    pub kendall_tau: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AddedPoint {
    pub id: String,
    pub smiles: String,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProjectionView {
    pub artifact_version: u32,
    pub representation: Representation,
    pub source: ProjectionSource,
    pub points: Vec<ProjectedPoint>,
    /// Session compounds placed by the projector, drawn highlighted.
    pub added: Vec<AddedPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BinsView {
    pub artifact_version: u32,
    pub representation: Representation,
    pub source: ProjectionSource,
    #[serde(flatten)]
    pub layout: HexLayout,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DifferenceView {
    pub artifact_version: u32,
    #[serde(flatten)]
    pub model: DifferenceViewModel,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlignmentView {
    pub artifact_version: u32,
    #[serde(flatten)]
    pub result: AlignmentResult,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SelectionShape {
    Hexes { representation: Representation, cells: Vec<Axial> },
    Lasso { representation: Representation, polygon: Vec<[f64; 2]> },
    Ids { ids: Vec<String> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Combine {
    #[default]
    Replace,
    Union,
    Intersection,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct SelectionRequest {
    pub name: Option<String>,
    #[serde(flatten)]
    pub shape: SelectionShape,
    #[serde(default)]
    pub source: Option<ProjectionSource>,
    #[serde(default)]
    pub radius: Option<f64>,
    /// Combines with the existing selection of the same name.
    #[serde(default)]
    pub combine: Combine,
}

impl Engine {
    /// Loads the dataset and artifacts. Every representation needs a fitted
    /// t-SNE layout; trained projectors are optional.
    pub fn load(manifest: &Path, artifacts_dir: &Path, config: PipelineConfig) -> Result<Engine, PipelineError> {
        let dataset = load_dataset(manifest)?;
        let mut missing = Vec::new();
        let pre = preprocess_path(artifacts_dir);
        if !pre.exists() {
            missing.push(format!("{} (run `molscape preprocess`)", pre.display()));
        }
        for &repr in dataset.representations.keys() {
            let p = tsne_path(artifacts_dir, repr);
            if !p.exists() {
                missing.push(format!("{} (run `molscape fit-tsne`)", p.display()));
            }
        }
        if !missing.is_empty() {
            return Err(PipelineError::MissingArtifacts(missing));
        }
        let pre: PreprocessArtifact = read_json(&pre, PREPROCESS_FORMAT)?;
        let stale = |path: &Path, name: &str| PipelineError::Artifact {
            path: path.display().to_string(),
            message: format!("written for dataset `{name}`, not `{}`", dataset.name),
        };
        if pre.dataset != dataset.name || pre.compounds != dataset.compounds.len() {
            return Err(stale(&preprocess_path(artifacts_dir), &pre.dataset));
        }
        let mut views = BTreeMap::new();
        for (&repr, matrix) in &dataset.representations {
            let path = tsne_path(artifacts_dir, repr);
            let tsne: TsneArtifact = read_json(&path, TSNE_FORMAT)?;
            if tsne.dataset != dataset.name || tsne.projection.ids() != matrix.ids() {
                return Err(stale(&path, &tsne.dataset));
            }
            let path = projector_path(artifacts_dir, repr);
            let projector = if path.exists() {
                let p: ProjectorArtifact = read_json(&path, PROJECTOR_ARTIFACT_FORMAT)?;
                if p.dataset != dataset.name || p.model.input_width() != matrix.dim() {
                    return Err(stale(&path, &p.dataset));
                }
                Some(p)
            } else {
                None
            };
            views.insert(repr, RepresentationView { tsne, projector });
        }
        let features = dataset.feature_table();
        Ok(Engine { dataset, features, views, config, artifacts_dir: artifacts_dir.to_path_buf() })
    }

    pub fn summary(&self) -> DatasetSummary {
        DatasetSummary {
            name: self.dataset.name.clone(),
            artifact_version: ARTIFACT_VERSION,
            compounds: self.dataset.compounds.len(),
            targets: self.dataset.targets.clone(),
            representations: self.views.keys().copied().collect(),
            projectors: self.views.iter().filter(|(_, v)| v.projector.is_some()).map(|(r, _)| *r).collect(),
            conformers: self.dataset.conformers.len(),
            features: self.features.names().map(String::from).collect(),
        }
    }

    fn view(&self, repr: Representation) -> Result<&RepresentationView, ApiError> {
        self.views
            .get(&repr)
            .ok_or_else(|| ApiError::bad_request("unknown_representation", format!("no `{repr}` representation")))
    }

    pub fn projection(
        &self,
        repr: Representation,
        source: ProjectionSource,
    ) -> Result<(&Projection2D, &TrustScores), ApiError> {
        let view = self.view(repr)?;
        match source {
            ProjectionSource::Tsne => Ok((&view.tsne.projection, &view.tsne.trust)),
            ProjectionSource::Parametric => view
                .projector
                .as_ref()
                .map(|p| (&p.projection, &p.trust))
                .ok_or_else(|| ApiError::not_found("no_projector", format!("no trained projector for `{repr}`"))),
        }
    }

    /// Default grid of the projection, or the same origin at `radius`.
    pub fn grid(&self, projection: &Projection2D, radius: Option<f64>) -> Result<HexGrid, ApiError> {
        let grid = HexGrid::default_for(projection.coords())?;
        Ok(match radius {
            Some(r) => grid.with_radius(r)?,
            None => grid,
        })
    }

    pub fn projection_view(
        &self,
        repr: Representation,
        source: ProjectionSource,
        session: Option<&SessionState>,
    ) -> Result<ProjectionView, ApiError> {
        let (projection, trust) = self.projection(repr, source)?;
        let points = projection
            .ids()
            .iter()
            .zip(projection.coords())
            .enumerate()
            .map(|(i, (id, c))| ProjectedPoint {
                id: id.clone(),
                x: c[0],
                y: c[1],
                pearson_r: trust.pearson_r[i],
                kendall_tau: trust.kendall_tau[i],
            })
            .collect();
        let added = session
            .map(|s| {
                s.added
                    .iter()
                    .filter_map(|a| {
                        a.coordinates.get(&repr).copied().flatten().map(|c| AddedPoint {
                            id: a.id.clone(),
                            smiles: a.smiles.clone(),
                            x: c[0],
                            y: c[1],
                        })
                    })
                    .collect()
            })
            .unwrap_or_default();
        Ok(ProjectionView { artifact_version: ARTIFACT_VERSION, representation: repr, source, points, added })
    }

    pub fn bins(
        &self,
        repr: Representation,
        source: ProjectionSource,
        radius: Option<f64>,
        feature: Option<&str>,
        trust: TrustKind,
    ) -> Result<BinsView, ApiError> {
        let (projection, scores) = self.projection(repr, source)?;
        let default = HexGrid::default_for(projection.coords())?;
        let scale = OpacityScale::calibrate(projection, default);
        let mut layout = bin_points(projection, self.grid(projection, radius)?, &scale)?;
        if let Some(f) = feature {
            layout.aggregate(f, &self.features)?;
        }
        layout.attach_trust(scores, trust)?;
        Ok(BinsView { artifact_version: ARTIFACT_VERSION, representation: repr, source, layout })
    }

    pub fn select(&self, request: &SelectionRequest) -> Result<Selection, ApiError> {
        let source = request.source.unwrap_or(ProjectionSource::Tsne);
        let selection = match &request.shape {
            SelectionShape::Hexes { representation, cells } => {
                let (projection, _) = self.projection(*representation, source)?;
                let scale = OpacityScale::calibrate(projection, HexGrid::default_for(projection.coords())?);
                let layout = bin_points(projection, self.grid(projection, request.radius)?, &scale)?;
                select_hexes(&layout, cells)
            }
            SelectionShape::Lasso { representation, polygon } => {
                lasso_select(self.projection(*representation, source)?.0, polygon)?
            }
            SelectionShape::Ids { ids } => {
                let s = Selection::new(ids.iter().cloned(), SelectionSource::Table);
                s.validate(self.dataset.compounds.iter().map(|c| c.id.as_str()))?;
                s
            }
        };
        Ok(match &request.name {
            Some(n) => selection.named(n.clone()),
            None => selection,
        })
    }

    /// Difference view of `selection` from `reference` into `compared`. A
    /// custom radius is taken in the reference layout's units and scaled to
    /// the compared layout by the ratio of their default radii.
    pub fn difference(
        &self,
        reference: Representation,
        compared: Representation,
        source: ProjectionSource,
        selection: &Selection,
        radius: Option<f64>,
    ) -> Result<DifferenceView, ApiError> {
        let (a, trust_a) = self.projection(reference, source)?;
        let (b, _) = self.projection(compared, source)?;
        let default_a = HexGrid::default_for(a.coords())?;
        let default_b = HexGrid::default_for(b.coords())?;
        let (grid_a, grid_b) = match radius {
            Some(r) => {
                (default_a.with_radius(r)?, default_b.with_radius(r * default_b.circumradius / default_a.circumradius)?)
            }
            None => (default_a, default_b),
        };
        let model = difference_view(selection, a, b, grid_a, grid_b, trust_a, &self.config.difference)?;
        Ok(DifferenceView { artifact_version: ARTIFACT_VERSION, model })
    }

    pub fn table(
        &self,
        query: &TableQuery,
        group_by: Option<(Representation, ProjectionSource, Option<f64>)>,
    ) -> Result<TablePage, ApiError> {
        let hexes = match group_by {
            Some((repr, source, radius)) => {
                let (projection, _) = self.projection(repr, source)?;
                let grid = self.grid(projection, radius)?;
                Some(
                    projection
                        .ids()
                        .iter()
                        .zip(projection.coords())
                        .map(|(id, &c)| (id.clone(), grid.locate(c)))
                        .collect(),
                )
            }
            None => None,
        };
        query_table(&self.features, query, hexes.as_ref())
    }

    /// Featurizes and projects a new compound. Nothing is recorded here.
    pub fn featurize_compound(&self, id: String, smiles: &str) -> Result<AddedCompound, ApiError> {
        let graph = parse_smiles(smiles).map_err(molscape_core::chem::ChemError::from)?;
        let fp = &self.dataset.fingerprints;
        let mut fingerprints = BTreeMap::new();
        fingerprints.insert(Representation::Ecfp, compute_ecfp(&graph, fp.ecfp_radius, fp.bits)?.ones().collect());
        fingerprints.insert(
            Representation::Path,
            compute_path_fingerprint(&graph, fp.max_path_length, fp.bits)?.ones().collect(),
        );
        let descriptors = compute_descriptors(&graph)?;
        let druglikeness = DrugLikenessRecord::from_descriptors(&descriptors);
        let rows = self.dataset.featurize(&graph)?;
        let mut coordinates = BTreeMap::new();
        for (&repr, view) in &self.views {
            let placed = match (&view.projector, rows.get(&repr)) {
                (Some(p), Some(row)) => Some(p.model.project(row)?),
                _ => None,
            };
            coordinates.insert(repr, placed);
        }
        Ok(AddedCompound {
            id,
            smiles: smiles.to_string(),
            fingerprints,
            descriptors,
            druglikeness,
            coordinates,
            highlight: true,
        })
    }

    pub fn align(&self, ids: &[String]) -> Result<AlignmentView, ApiError> {
        let mut graphs = Vec::with_capacity(ids.len());
        let mut conformers = Vec::with_capacity(ids.len());
        let mut unknown = Vec::new();
        let mut without = Vec::new();
        for id in ids {
            match (self.dataset.compound(id), self.dataset.conformers.get(id)) {
                (Some(c), Some(conf)) => {
                    graphs.push(&c.graph);
                    conformers.push(conf);
                }
                (Some(_), None) => without.push(id.clone()),
                (None, _) => unknown.push(id.clone()),
            }
        }
        if !unknown.is_empty() {
            return Err(molscape_core::view::ViewError::UnknownCompounds(unknown).into());
        }
        if !without.is_empty() {
            return Err(ApiError::new(
                axum::http::StatusCode::UNPROCESSABLE_ENTITY,
                "no_conformer",
                format!("no 3D structure for: {}", without.join(", ")),
            ));
        }
        let result = align_compounds(&graphs, &conformers, &self.config.align)?;
        Ok(AlignmentView { artifact_version: ARTIFACT_VERSION, result })
    }

    /// SD file of the given compounds, aligned when `aligned` is set.
    pub fn export_sdf(&self, ids: &[String], aligned: bool) -> Result<String, ApiError> {
        let positions: BTreeMap<String, Vec<[f64; 3]>> = if aligned && ids.len() >= 2 {
            self.align(ids)?.result.compounds.into_iter().map(|c| (c.id, c.positions)).collect()
        } else {
            BTreeMap::new()
        };
        let mut records: Vec<SdfRecord> = Vec::with_capacity(ids.len());
        for id in ids {
            let compound = self
                .dataset
                .compound(id)
                .ok_or_else(|| molscape_core::view::ViewError::UnknownCompounds(vec![id.clone()]))?;
            let conf = self.dataset.conformers.get(id).ok_or_else(|| {
                ApiError::new(
                    axum::http::StatusCode::UNPROCESSABLE_ENTITY,
                    "no_conformer",
                    format!("no 3D structure for {id}"),
                )
            })?;
            let mut data =
                BTreeMap::from([("id".to_string(), id.clone()), ("smiles".to_string(), compound.smiles.clone())]);
            for (t, class) in &compound.activity {
                data.insert(format!("activity:{t}"), class.to_string());
            }
            let pos = positions.get(id).unwrap_or(&conf.positions);
            records.push(conf.to_record(&compound.graph, pos, data));
        }
        Ok(write_sdf(&records))
    }
}
