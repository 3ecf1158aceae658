use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::bins::{bin_points, group_points, HexLayout, OpacityScale};
use super::hex::{Axial, HexGrid};
use super::selection::Selection;
use super::ViewError;
use crate::dr::{Projection2D, Representation, TrustKind, TrustScores};

/// Largest inner hexagon relative to the cell circumradius.
pub const INNER_SIZE_CAP: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrustReduction {
    #[default]
    Mean,
    Min,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DifferenceConfig {
    pub trust: TrustKind,
    pub reduction: TrustReduction,
    pub floor: f64,
}

impl Default for DifferenceConfig {
    fn default() -> Self {
        DifferenceConfig { trust: TrustKind::Kendall, reduction: TrustReduction::Mean, floor: super::OPACITY_FLOOR }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OuterBin {
    pub axial: Axial,
    pub center: [f64; 2],
    pub count: usize,
    /// Reduced trust of the members, clamped into `[floor, 1]`.
    pub opacity: f64,
    pub trust: f64,
    /// Whether any member is in the selection.
    pub selected: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InnerHex {
    /// Cell of the compared grid, drawn in the reference layout.
    pub axial: Axial,
    pub center: [f64; 2],
    pub circumradius: f64,
    pub ids: Vec<String>,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifferenceViewModel {
    pub reference: Representation,
    pub compared: Representation,
    pub grid: HexGrid,
    pub outer: Vec<OuterBin>,
    pub inner: Vec<InnerHex>,
}

fn missing_ids(selection: &Selection, projection: &Projection2D) -> Vec<String> {
    let known: std::collections::HashSet<&str> = projection.ids().iter().map(|s| s.as_str()).collect();
    selection.ids.iter().filter(|id| !known.contains(id.as_str())).cloned().collect()
}

/// Shows where the compounds selected in `a` fall in `b`.
///
/// The outer layer is `a` binned under `grid_a`, each bin's opacity its
/// reduced trust. The selected compounds are re-binned in `b` under
/// `grid_b`; each occupied cell becomes an inner hexagon at the same axial
/// position of `grid_a`. Inner sizes scale with the square root of the
/// count, relative to the larger of the densest outer bin and the densest
/// inner cell, so area tracks count.
pub fn difference_view(
    selection: &Selection,
    a: &Projection2D,
    b: &Projection2D,
    grid_a: HexGrid,
    grid_b: HexGrid,
    trust_a: &TrustScores,
    config: &DifferenceConfig,
) -> Result<DifferenceViewModel, ViewError> {
    if selection.is_empty() {
        return Err(ViewError::Empty);
    }
    let mut missing = missing_ids(selection, a);
    missing.extend(missing_ids(selection, b));
    if !missing.is_empty() {
        missing.sort();
        missing.dedup();
        return Err(ViewError::UnknownCompounds(missing));
    }
    let layout: HexLayout = bin_points(a, grid_a, &OpacityScale { density: 1.0, floor: config.floor })?;
    let trust_index: HashMap<&str, f64> =
        trust_a.ids.iter().map(|s| s.as_str()).zip(trust_a.scores(config.trust).iter().copied()).collect();

    let mut outer = Vec::with_capacity(layout.bins.len());
    for bin in &layout.bins {
        let mut scores = Vec::with_capacity(bin.count);
        for id in &bin.ids {
            scores.push(*trust_index.get(id.as_str()).ok_or_else(|| ViewError::UnknownCompounds(vec![id.clone()]))?);
        }
        let trust = match config.reduction {
            TrustReduction::Mean => scores.iter().sum::<f64>() / scores.len() as f64,
            TrustReduction::Min => scores.iter().copied().fold(f64::INFINITY, f64::min),
        };
        outer.push(OuterBin {
            axial: bin.axial,
            center: bin.center,
            count: bin.count,
            opacity: trust.clamp(config.floor, 1.0),
            trust,
            selected: bin.ids.iter().any(|id| selection.contains(id)),
        });
    }

    let (ids, coords): (Vec<String>, Vec<[f64; 2]>) =
        b.ids().iter().zip(b.coords()).filter(|(id, _)| selection.contains(id)).map(|(id, &c)| (id.clone(), c)).unzip();
    let cells = group_points(&ids, &coords, &grid_b)?;
    let densest_outer = layout.bins.iter().map(|x| x.count).max().unwrap_or(1);
    let densest_inner = cells.values().map(|v| v.len()).max().unwrap_or(1);
    let reference = densest_outer.max(densest_inner) as f64;
    let inner = cells
        .into_iter()
        .map(|(axial, ids)| InnerHex {
            axial,
            center: grid_a.center(axial),
            circumradius: INNER_SIZE_CAP * grid_a.circumradius * (ids.len() as f64 / reference).sqrt(),
            count: ids.len(),
            ids,
        })
        .collect();
    Ok(DifferenceViewModel { reference: a.representation, compared: b.representation, grid: grid_a, outer, inner })
}
