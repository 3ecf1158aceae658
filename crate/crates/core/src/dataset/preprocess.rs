use serde::{Deserialize, Serialize};

/// Largest tolerated fraction of NaN entries in a kept column.
pub const MAX_NAN_FRACTION: f64 = 0.10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescriptorColumn {
    pub name: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessReport {
    pub columns: Vec<DescriptorColumn>,
    pub dropped: Vec<String>,
    /// `(column, replaced NaN count, fill value)` for every column that had gaps.
    pub filled: Vec<(String, usize, f64)>,
}

/// Drops columns with more than 10% NaN and replaces the remaining NaN of
/// each column by its maximum.
pub fn preprocess_descriptors(columns: Vec<DescriptorColumn>) -> PreprocessReport {
    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    let mut filled = Vec::new();
    for mut col in columns {
        let n = col.values.len();
        let nan = col.values.iter().filter(|v| v.is_nan()).count();
        if n == 0 || nan == n || nan as f64 > MAX_NAN_FRACTION * n as f64 {
            dropped.push(col.name);
            continue;
        }
        if nan > 0 {
            let max = col.values.iter().copied().filter(|v| !v.is_nan()).fold(f64::NEG_INFINITY, f64::max);
            col.values.iter_mut().filter(|v| v.is_nan()).for_each(|v| *v = max);
            filled.push((col.name.clone(), nan, max));
        }
        kept.push(col);
    }
    PreprocessReport { columns: kept, dropped, filled }
}
