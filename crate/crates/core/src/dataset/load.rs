use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::activity::{label_activity, ActivityClass};
use super::preprocess::{preprocess_descriptors, DescriptorColumn, PreprocessReport};
use super::DatasetError;
use crate::align::{parse_sdf, Conformer3D};
use crate::chem::{
    compute_descriptors, compute_ecfp, compute_path_fingerprint, parse_smiles, DescriptorVector, DrugLikenessRecord,
    MolecularGraph, COMPUTED_DESCRIPTORS, DEFAULT_ECFP_RADIUS, DEFAULT_FINGERPRINT_BITS, DEFAULT_MAX_PATH_LENGTH,
};
use crate::dr::{EmbeddingMatrix, Representation};
use crate::view::{FeatureTable, FeatureValues};

pub const MANIFEST_VERSION: u32 = 1;

/// Feature columns that fill the ingested drug-likeness fields.
pub const LOGP: &str = "logp";
pub const ACIDIC_PKA: &str = "acidic_pka";
pub const BASIC_PKA: &str = "basic_pka";
pub const QED: &str = "qed";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetColumn {
    pub name: String,
    /// Column of IC50 values in nM.
    pub column: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct FingerprintSettings {
    pub bits: usize,
    pub ecfp_radius: usize,
    pub max_path_length: usize,
}

impl Default for FingerprintSettings {
    fn default() -> Self {
        FingerprintSettings {
            bits: DEFAULT_FINGERPRINT_BITS,
            ecfp_radius: DEFAULT_ECFP_RADIUS,
            max_path_length: DEFAULT_MAX_PATH_LENGTH,
        }
    }
}

/// JSON document naming the files of a dataset, relative to itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub name: String,
    /// CSV with `id`, `smiles`, target and feature columns.
    pub compounds: PathBuf,
    #[serde(default)]
    pub targets: Vec<TargetColumn>,
    /// Numeric feature columns; `None` takes every remaining column.
    #[serde(default)]
    pub features: Option<Vec<String>>,
    /// Extra descriptor columns (CSV keyed by `id`) merged with the computed subset.
    #[serde(default)]
    pub descriptors: Option<PathBuf>,
    /// Precomputed embedding matrix (CSV keyed by `id`).
    #[serde(default)]
    pub embeddings: Option<PathBuf>,
    #[serde(default)]
    pub conformers: Option<PathBuf>,
    #[serde(default)]
    pub fingerprints: FingerprintSettings,
}

impl Manifest {
    pub fn read(path: &Path) -> Result<Manifest, DatasetError> {
        let text = std::fs::read_to_string(path).map_err(|e| DatasetError::io(path, e))?;
        let manifest: Manifest =
            serde_json::from_str(&text).map_err(|e| DatasetError::Format(format!("{}: {e}", path.display())))?;
        if manifest.version != MANIFEST_VERSION {
            return Err(DatasetError::Version {
                what: "manifest",
                expected: MANIFEST_VERSION,
                found: manifest.version,
            });
        }
        Ok(manifest)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Compound {
    pub id: String,
    pub smiles: String,
    pub graph: MolecularGraph,
    pub ic50: BTreeMap<String, Option<f64>>,
    pub activity: BTreeMap<String, ActivityClass>,
    pub druglikeness: DrugLikenessRecord,
    pub descriptors: DescriptorVector,
    /// Feature columns other than the drug-likeness fields.
    pub features: BTreeMap<String, Option<f64>>,
}

/// Column layout and scaling of the descriptor representation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescriptorModel {
    pub columns: Vec<String>,
    pub computed: Vec<bool>,
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
    pub dropped: Vec<String>,
}

impl DescriptorModel {
    /// Standardized row for a compound outside the dataset. Ingested columns
    /// are unknown for it and take the training mean.
    pub fn transform(&self, computed: &DescriptorVector) -> Vec<f64> {
        self.columns
            .iter()
            .enumerate()
            .map(|(k, name)| {
                let raw = if self.computed[k] { computed.get(name).unwrap_or(self.mean[k]) } else { self.mean[k] };
                (raw - self.mean[k]) / self.scale[k]
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub name: String,
    pub targets: Vec<String>,
    pub compounds: Vec<Compound>,
    pub representations: BTreeMap<Representation, EmbeddingMatrix>,
    pub descriptor_model: DescriptorModel,
    pub fingerprints: FingerprintSettings,
    pub conformers: BTreeMap<String, Conformer3D>,
}

fn parse_number(raw: &str) -> Option<f64> {
    let t = raw.trim();
    if t.is_empty() || t.eq_ignore_ascii_case("nan") || t.eq_ignore_ascii_case("na") {
        return None;
    }
    t.parse::<f64>().ok().filter(|v| !v.is_nan())
}

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

fn read_csv(path: &Path) -> Result<Table, DatasetError> {
    let mut reader =
        csv::Reader::from_path(path).map_err(|e| DatasetError::Format(format!("{}: {e}", path.display())))?;
    let header = reader
        .headers()
        .map_err(|e| DatasetError::Format(format!("{}: {e}", path.display())))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| DatasetError::Format(format!("{}: {e}", path.display())))?;
        rows.push(rec.iter().map(|s| s.to_string()).collect());
    }
    Ok(Table { header, rows })
}

fn column_index(table: &Table, name: &str, path: &Path) -> Result<usize, DatasetError> {
    table
        .header
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| DatasetError::Format(format!("{}: missing column `{name}`", path.display())))
}

/// Reads an id-keyed numeric CSV and reorders it to `ids`.
fn read_keyed_matrix(path: &Path, ids: &[String]) -> Result<(Vec<String>, Vec<Vec<f64>>), DatasetError> {
    let table = read_csv(path)?;
    let id_col = column_index(&table, "id", path)?;
    let names: Vec<String> =
        table.header.iter().enumerate().filter(|(k, _)| *k != id_col).map(|(_, h)| h.clone()).collect();
    let mut by_id: HashMap<String, Vec<f64>> = HashMap::new();
    let mut offenders = Vec::new();
    for row in &table.rows {
        let id = row[id_col].trim().to_string();
        let values = row
            .iter()
            .enumerate()
            .filter(|(k, _)| *k != id_col)
            .map(|(_, v)| parse_number(v).unwrap_or(f64::NAN))
            .collect();
        if by_id.insert(id.clone(), values).is_some() {
            offenders.push(format!("duplicate `{id}`"));
        }
    }
    let known: HashSet<&str> = ids.iter().map(|s| s.as_str()).collect();
    for id in by_id.keys() {
        if !known.contains(id.as_str()) {
            offenders.push(format!("unexpected `{id}`"));
        }
    }
    for id in ids {
        if !by_id.contains_key(id) {
            offenders.push(format!("missing `{id}`"));
        }
    }
    if !offenders.is_empty() {
        offenders.sort();
        offenders.truncate(10);
        return Err(DatasetError::Misaligned { file: path.display().to_string(), offenders });
    }
    let rows = ids.iter().map(|id| by_id.remove(id).expect("checked above")).collect();
    Ok((names, rows))
}

fn fingerprint_matrix(
    repr: Representation,
    compounds: &[Compound],
    fp: &FingerprintSettings,
) -> Result<EmbeddingMatrix, DatasetError> {
    let rows = compounds
        .iter()
        .map(|c| {
            fingerprint_row(repr, &c.graph, fp)
                .map_err(|e| DatasetError::Compound { id: c.id.clone(), message: e.to_string() })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(EmbeddingMatrix::new(repr, compounds.iter().map(|c| c.id.clone()).collect(), rows)?)
}

pub(crate) fn fingerprint_row(
    repr: Representation,
    graph: &MolecularGraph,
    fp: &FingerprintSettings,
) -> Result<Vec<f64>, crate::chem::ChemError> {
    let bits = match repr {
        Representation::Ecfp => compute_ecfp(graph, fp.ecfp_radius, fp.bits)?,
        Representation::Path => compute_path_fingerprint(graph, fp.max_path_length, fp.bits)?,
        _ => unreachable!("not a fingerprint representation"),
    };
    Ok(bits.to_dense())
}

fn descriptor_matrix(
    compounds: &[Compound],
    ingested: Option<(Vec<String>, Vec<Vec<f64>>)>,
) -> Result<(EmbeddingMatrix, DescriptorModel, PreprocessReport), DatasetError> {
    let mut columns: Vec<DescriptorColumn> = COMPUTED_DESCRIPTORS
        .iter()
        .map(|&name| DescriptorColumn {
            name: name.to_string(),
            values: compounds.iter().map(|c| c.descriptors.get(name).unwrap_or(f64::NAN)).collect(),
        })
        .collect();
    if let Some((names, rows)) = ingested {
        for (k, name) in names.into_iter().enumerate() {
            if COMPUTED_DESCRIPTORS.contains(&name.as_str()) {
                continue;
            }
            columns.push(DescriptorColumn { name, values: rows.iter().map(|r| r[k]).collect() });
        }
    }
    let report = preprocess_descriptors(columns);
    let n = compounds.len() as f64;
    let mut mean = Vec::new();
    let mut scale = Vec::new();
    for col in &report.columns {
        let m = col.values.iter().sum::<f64>() / n;
        let var = col.values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n;
        mean.push(m);
        scale.push(if var.sqrt() > 1e-12 { var.sqrt() } else { 1.0 });
    }
    let rows: Vec<Vec<f64>> = (0..compounds.len())
        .map(|i| report.columns.iter().enumerate().map(|(k, c)| (c.values[i] - mean[k]) / scale[k]).collect())
        .collect();
    let model = DescriptorModel {
        columns: report.columns.iter().map(|c| c.name.clone()).collect(),
        computed: report.columns.iter().map(|c| COMPUTED_DESCRIPTORS.contains(&c.name.as_str())).collect(),
        mean,
        scale,
        dropped: report.dropped.clone(),
    };
    let matrix =
        EmbeddingMatrix::new(Representation::Descriptors, compounds.iter().map(|c| c.id.clone()).collect(), rows)?;
    Ok((matrix, model, report))
}

/// Loads a dataset and computes every representation it does not ingest.
pub fn load_dataset(manifest_path: &Path) -> Result<Dataset, DatasetError> {
    let manifest = Manifest::read(manifest_path)?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let resolve = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { base.join(p) };

    let compounds_path = resolve(&manifest.compounds);
    let table = read_csv(&compounds_path)?;
    let id_col = column_index(&table, "id", &compounds_path)?;
    let smiles_col = column_index(&table, "smiles", &compounds_path)?;
    let target_cols = manifest
        .targets
        .iter()
        .map(|t| column_index(&table, &t.column, &compounds_path).map(|k| (t.name.clone(), k)))
        .collect::<Result<Vec<_>, _>>()?;
    let reserved: HashSet<usize> = [id_col, smiles_col].into_iter().chain(target_cols.iter().map(|t| t.1)).collect();
    let feature_cols: Vec<(String, usize)> = match &manifest.features {
        Some(names) => names
            .iter()
            .map(|n| column_index(&table, n, &compounds_path).map(|k| (n.clone(), k)))
            .collect::<Result<_, _>>()?,
        None => table
            .header
            .iter()
            .enumerate()
            .filter(|(k, _)| !reserved.contains(k))
            .map(|(k, h)| (h.clone(), k))
            .collect(),
    };

    let mut seen = HashSet::new();
    let mut duplicates = Vec::new();
    let mut compounds = Vec::with_capacity(table.rows.len());
    for row in &table.rows {
        let id = row[id_col].trim().to_string();
        if !seen.insert(id.clone()) {
            duplicates.push(id.clone());
            continue;
        }
        let smiles = row[smiles_col].trim().to_string();
        let graph =
            parse_smiles(&smiles).map_err(|e| DatasetError::Compound { id: id.clone(), message: e.to_string() })?;
        let descriptors = compute_descriptors(&graph)
            .map_err(|e| DatasetError::Compound { id: id.clone(), message: e.to_string() })?;
        let mut druglikeness = DrugLikenessRecord::from_descriptors(&descriptors);
        let mut features = BTreeMap::new();
        for (name, k) in &feature_cols {
            let v = parse_number(&row[*k]);
            match name.as_str() {
                LOGP => druglikeness.set_logp(v),
                ACIDIC_PKA => druglikeness.acidic_pka = v,
                BASIC_PKA => druglikeness.basic_pka = v,
                QED => druglikeness.qed = v,
                _ => {
                    features.insert(name.clone(), v);
                }
            }
        }
        let ic50: BTreeMap<String, Option<f64>> =
            target_cols.iter().map(|(t, k)| (t.clone(), parse_number(&row[*k]))).collect();
        let activity = ic50.iter().map(|(t, v)| (t.clone(), label_activity(*v))).collect();
        compounds.push(Compound { id, smiles, graph, ic50, activity, druglikeness, descriptors, features });
    }
    if !duplicates.is_empty() {
        duplicates.truncate(10);
        return Err(DatasetError::DuplicateIds(duplicates));
    }
    let ids: Vec<String> = compounds.iter().map(|c| c.id.clone()).collect();

    let mut representations = BTreeMap::new();
    for repr in [Representation::Ecfp, Representation::Path] {
        representations.insert(repr, fingerprint_matrix(repr, &compounds, &manifest.fingerprints)?);
    }
    let ingested = manifest.descriptors.as_ref().map(|p| read_keyed_matrix(&resolve(p), &ids)).transpose()?;
    let (desc_matrix, descriptor_model, _) = descriptor_matrix(&compounds, ingested)?;
    representations.insert(Representation::Descriptors, desc_matrix);
    if let Some(p) = &manifest.embeddings {
        let path = resolve(p);
        let (_, rows) = read_keyed_matrix(&path, &ids)?;
        if let Some(i) = rows.iter().position(|r| r.iter().any(|v| v.is_nan())) {
            return Err(DatasetError::Compound { id: ids[i].clone(), message: "embedding has missing values".into() });
        }
        representations
            .insert(Representation::Embeddings, EmbeddingMatrix::new(Representation::Embeddings, ids.clone(), rows)?);
    }

    let mut conformers = BTreeMap::new();
    if let Some(p) = &manifest.conformers {
        let path = resolve(p);
        let text = std::fs::read_to_string(&path).map_err(|e| DatasetError::io(&path, e))?;
        let index: HashMap<&str, usize> = ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
        for record in parse_sdf(&text)? {
            let id = record.data.get("id").cloned().unwrap_or_else(|| record.title.clone());
            let Some(&i) = index.get(id.as_str()) else {
                return Err(DatasetError::Misaligned {
                    file: path.display().to_string(),
                    offenders: vec![format!("unexpected `{id}`")],
                });
            };
            let conf = Conformer3D::from_record(id.clone(), &record)?;
            conf.check_against(&compounds[i].graph)?;
            conformers.insert(id, conf);
        }
    }

    Ok(Dataset {
        name: manifest.name,
        targets: manifest.targets.iter().map(|t| t.name.clone()).collect(),
        compounds,
        representations,
        descriptor_model,
        fingerprints: manifest.fingerprints,
        conformers,
    })
}

/// Name of the activity feature for `target`.
pub fn activity_feature(target: &str) -> String {
    format!("activity:{target}")
}

impl Dataset {
    pub fn ids(&self) -> Vec<String> {
        self.compounds.iter().map(|c| c.id.clone()).collect()
    }

    pub fn compound(&self, id: &str) -> Option<&Compound> {
        self.compounds.iter().find(|c| c.id == id)
    }

    pub fn class_counts(&self, target: &str) -> BTreeMap<ActivityClass, usize> {
        let mut counts = BTreeMap::new();
        for c in &self.compounds {
            if let Some(&class) = c.activity.get(target) {
                *counts.entry(class).or_default() += 1;
            }
        }
        counts
    }

    /// Quantitative and categorical columns usable for colouring, aggregation and tables.
    pub fn feature_table(&self) -> FeatureTable {
        let mut table = FeatureTable::new(self.ids());
        for t in &self.targets {
            let values = self.compounds.iter().map(|c| c.activity.get(t).map(|a| a.as_str().to_string())).collect();
            table
                .insert(
                    activity_feature(t),
                    FeatureValues::Categorical { values, priority: ActivityClass::priority_labels() },
                )
                .expect("row-aligned");
        }
        let mut quantitative = |name: &str, f: &dyn Fn(&Compound) -> Option<f64>| {
            let values = self.compounds.iter().map(f).collect();
            table.insert(name, FeatureValues::Quantitative { values }).expect("row-aligned");
        };
        quantitative("molecular_weight", &|c| Some(c.druglikeness.molecular_weight));
        quantitative(LOGP, &|c| c.druglikeness.logp);
        quantitative(ACIDIC_PKA, &|c| c.druglikeness.acidic_pka);
        quantitative(BASIC_PKA, &|c| c.druglikeness.basic_pka);
        quantitative(QED, &|c| c.druglikeness.qed);
        quantitative("h_bond_donors", &|c| Some(c.druglikeness.h_bond_donors as f64));
        quantitative("h_bond_acceptors", &|c| Some(c.druglikeness.h_bond_acceptors as f64));
        quantitative("ro5_violations", &|c| Some(c.druglikeness.ro5_violations as f64));
        for t in &self.targets {
            quantitative(&format!("ic50:{t}"), &|c| c.ic50.get(t).copied().flatten());
        }
        let extra: Vec<String> =
            self.compounds.first().map(|c| c.features.keys().cloned().collect()).unwrap_or_default();
        for name in extra {
            quantitative(&name, &|c| c.features.get(&name).copied().flatten());
        }
        table
    }

    /// Feature rows of a compound outside the dataset, per representation it
    /// can be computed for.
    pub fn featurize(
        &self,
        graph: &MolecularGraph,
    ) -> Result<BTreeMap<Representation, Vec<f64>>, crate::chem::ChemError> {
        let mut out = BTreeMap::new();
        for repr in [Representation::Ecfp, Representation::Path] {
            out.insert(repr, fingerprint_row(repr, graph, &self.fingerprints)?);
        }
        out.insert(Representation::Descriptors, self.descriptor_model.transform(&compute_descriptors(graph)?));
        Ok(out)
    }
}
