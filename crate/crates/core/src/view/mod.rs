//! Data models behind the hexagonal, detail and difference views.

mod aggregate;
mod bins;
mod difference;
mod hex;
mod selection;

use thiserror::Error;

pub use aggregate::{aggregate_feature, majority_class, Aggregate, FeatureTable, FeatureValues};
pub use bins::{bin_points, rescale, HexBin, HexLayout, OpacityScale, OPACITY_FLOOR};
pub use difference::{
    difference_view, DifferenceConfig, DifferenceViewModel, InnerHex, OuterBin, TrustReduction, INNER_SIZE_CAP,
};
pub use hex::{Axial, HexGrid};
pub use selection::{lasso_select, point_in_polygon, select_hexes, Selection, SelectionSource};

#[derive(Debug, Error, PartialEq)]
pub enum ViewError {
    #[error("hexagon circumradius must be positive and finite, got {0}")]
    InvalidRadius(f64),
    #[error("non-finite coordinate for `{0}`")]
    NonFinite(String),
    #[error("nothing to bin or select")]
    Empty,
    #[error("unknown feature `{0}`")]
    UnknownFeature(String),
    #[error("unknown compounds: {}", .0.join(", "))]
    UnknownCompounds(Vec<String>),
    #[error("lasso polygon needs at least 3 vertices, got {0}")]
    Polygon(usize),
    #[error("shape error: {0}")]
    Shape(String),
}
