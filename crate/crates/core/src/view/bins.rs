use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::aggregate::{aggregate_feature, Aggregate, FeatureTable};
use super::hex::{Axial, HexGrid};
use super::ViewError;
use crate::dr::{Projection2D, TrustKind, TrustScores};

/// Opacity of the least populated bins.
pub const OPACITY_FLOOR: f64 = 0.08;

/// Maps bin counts to opacity; the saturating count grows linearly with
/// hexagon area so smaller hexagons need fewer members to look solid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpacityScale {
    /// Saturating count per unit area.
    pub density: f64,
    pub floor: f64,
}

impl OpacityScale {
    /// Calibrates so the densest bin of `projection` under `grid` saturates.
    pub fn calibrate(projection: &Projection2D, grid: HexGrid) -> OpacityScale {
        let mut counts: BTreeMap<Axial, usize> = BTreeMap::new();
        for &p in projection.coords() {
            *counts.entry(grid.locate(p)).or_default() += 1;
        }
        let densest = counts.values().copied().max().unwrap_or(1);
        OpacityScale { density: densest as f64 / grid.area(), floor: OPACITY_FLOOR }
    }

    pub fn saturation(&self, grid: &HexGrid) -> usize {
        ((self.density * grid.area()).round() as usize).max(1)
    }

    pub fn opacity(&self, count: usize, grid: &HexGrid) -> f64 {
        (count as f64 / self.saturation(grid) as f64).clamp(self.floor, 1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HexBin {
    pub axial: Axial,
    pub center: [f64; 2],
    pub ids: Vec<String>,
    pub count: usize,
    pub opacity: f64,
    pub aggregates: BTreeMap<String, Aggregate>,
    pub mean_trust: Option<f64>,
}

/// Occupied bins of one projection under one grid, ordered by axial coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HexLayout {
    pub grid: HexGrid,
    pub saturation: usize,
    pub bins: Vec<HexBin>,
}

impl HexLayout {
    pub fn bin(&self, axial: Axial) -> Option<&HexBin> {
        self.bins.binary_search_by(|b| b.axial.cmp(&axial)).ok().map(|i| &self.bins[i])
    }

    pub fn total_count(&self) -> usize {
        self.bins.iter().map(|b| b.count).sum()
    }

    /// Fills every bin's aggregate of `feature`.
    pub fn aggregate(&mut self, feature: &str, table: &FeatureTable) -> Result<(), ViewError> {
        for bin in &mut self.bins {
            let agg = aggregate_feature(&bin.ids, feature, table)?;
            bin.aggregates.insert(feature.to_string(), agg);
        }
        Ok(())
    }

    /// Sets every bin's mean trust score of the given kind.
    pub fn attach_trust(&mut self, trust: &TrustScores, kind: TrustKind) -> Result<(), ViewError> {
        let index: std::collections::HashMap<&str, usize> =
            trust.ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
        let scores = trust.scores(kind);
        for bin in &mut self.bins {
            let mut missing = Vec::new();
            let mut sum = 0.0;
            for id in &bin.ids {
                match index.get(id.as_str()) {
                    Some(&i) => sum += scores[i],
                    None => missing.push(id.clone()),
                }
            }
            if !missing.is_empty() {
                return Err(ViewError::UnknownCompounds(missing));
            }
            bin.mean_trust = Some(sum / bin.count as f64);
        }
        Ok(())
    }
}

/// Groups points by cell; errors on the first non-finite coordinate.
pub(crate) fn group_points(
    ids: &[String],
    coords: &[[f64; 2]],
    grid: &HexGrid,
) -> Result<BTreeMap<Axial, Vec<String>>, ViewError> {
    let mut cells: BTreeMap<Axial, Vec<String>> = BTreeMap::new();
    for (id, &p) in ids.iter().zip(coords) {
        if !p[0].is_finite() || !p[1].is_finite() {
            return Err(ViewError::NonFinite(id.clone()));
        }
        cells.entry(grid.locate(p)).or_default().push(id.clone());
    }
    Ok(cells)
}

/// Assigns every point to the hexagon with the nearest center.
pub fn bin_points(projection: &Projection2D, grid: HexGrid, scale: &OpacityScale) -> Result<HexLayout, ViewError> {
    if projection.is_empty() {
        return Err(ViewError::Empty);
    }
    let cells = group_points(projection.ids(), projection.coords(), &grid)?;
    let bins = cells
        .into_iter()
        .map(|(axial, ids)| HexBin {
            axial,
            center: grid.center(axial),
            count: ids.len(),
            opacity: scale.opacity(ids.len(), &grid),
            ids,
            aggregates: BTreeMap::new(),
            mean_trust: None,
        })
        .collect();
    Ok(HexLayout { grid, saturation: scale.saturation(&grid), bins })
}

/// Re-bins at a new circumradius, keeping the origin and opacity density.
pub fn rescale(
    projection: &Projection2D,
    grid: HexGrid,
    circumradius: f64,
    scale: &OpacityScale,
) -> Result<HexLayout, ViewError> {
    bin_points(projection, grid.with_radius(circumradius)?, scale)
}
