//! Sorting, filtering and hexagon grouping for the table view.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use molscape_core::view::{Axial, FeatureTable, FeatureValues};
use serde::{Deserialize, Serialize};

use crate::error::ApiError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CompareOp {
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = "!=")]
    Ne,
}

impl CompareOp {
    fn holds(self, ord: Ordering) -> bool {
        match self {
            CompareOp::Gt => ord == Ordering::Greater,
            CompareOp::Ge => ord != Ordering::Less,
            CompareOp::Lt => ord == Ordering::Less,
            CompareOp::Le => ord != Ordering::Greater,
            CompareOp::Eq => ord == Ordering::Equal,
            CompareOp::Ne => ord != Ordering::Equal,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Filter {
    pub column: String,
    pub op: CompareOp,
    pub value: String,
}

/// Parses `logp>6.75;activity:x=active` into filters.
pub fn parse_filters(text: &str) -> Result<Vec<Filter>, ApiError> {
    const OPS: [(&str, CompareOp); 6] = [
        (">=", CompareOp::Ge),
        ("<=", CompareOp::Le),
        ("!=", CompareOp::Ne),
        (">", CompareOp::Gt),
        ("<", CompareOp::Lt),
        ("=", CompareOp::Eq),
    ];
    text.split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|clause| {
            let (pos, sym, op) = OPS
                .iter()
                .filter_map(|(sym, op)| clause.find(sym).map(|p| (p, *sym, *op)))
                .min_by_key(|(p, sym, _)| (*p, std::cmp::Reverse(sym.len())))
                .ok_or_else(|| ApiError::bad_request("invalid_filter", format!("no comparison in `{clause}`")))?;
            Ok(Filter {
                column: clause[..pos].trim().to_string(),
                op,
                value: clause[pos + sym.len()..].trim().to_string(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Number(f64),
    Text(String),
}

fn cell(values: &FeatureValues, row: usize) -> Option<Cell> {
    match values {
        FeatureValues::Quantitative { values } => values[row].map(Cell::Number),
        FeatureValues::Categorical { values, .. } => values[row].clone().map(Cell::Text),
    }
}

fn compare(a: &Cell, b: &Cell) -> Ordering {
    match (a, b) {
        (Cell::Number(x), Cell::Number(y)) => x.total_cmp(y),
        (Cell::Text(x), Cell::Text(y)) => x.cmp(y),
        (Cell::Number(_), Cell::Text(_)) => Ordering::Less,
        (Cell::Text(_), Cell::Number(_)) => Ordering::Greater,
    }
}

fn matches(values: &FeatureValues, row: usize, filter: &Filter) -> Result<bool, ApiError> {
    let Some(value) = cell(values, row) else {
        return Ok(false);
    };
    let target = match values {
        FeatureValues::Quantitative { .. } => Cell::Number(
            filter
                .value
                .parse()
                .map_err(|_| ApiError::bad_request("invalid_filter", format!("`{}` is not a number", filter.value)))?,
        ),
        FeatureValues::Categorical { .. } => Cell::Text(filter.value.clone()),
    };
    Ok(filter.op.holds(compare(&value, &target)))
}

/// Five-number summary with linearly interpolated quartiles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quartiles {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub n: usize,
}

pub fn quartiles(values: &[f64]) -> Option<Quartiles> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let at = |q: f64| {
        let pos = q * (v.len() - 1) as f64;
        let (lo, frac) = (pos.floor() as usize, pos.fract());
        if frac == 0.0 {
            v[lo]
        } else {
            v[lo] + frac * (v[lo + 1] - v[lo])
        }
    };
    Some(Quartiles { min: v[0], q1: at(0.25), median: at(0.5), q3: at(0.75), max: v[v.len() - 1], n: v.len() })
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default)]
pub struct TableQuery {
    pub sort: Option<String>,
    pub desc: bool,
    pub filter: Option<String>,
    pub offset: usize,
    pub limit: Option<usize>,
}

pub const DEFAULT_PAGE: usize = 50;
pub const MAX_PAGE: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableRow {
    pub id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hex: Option<Axial>,
    pub values: BTreeMap<String, Option<Cell>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HexGroup {
    pub hex: Axial,
    pub count: usize,
    pub summaries: BTreeMap<String, Quartiles>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TablePage {
    /// Rows passing the filters, before paging.
    pub total: usize,
    pub offset: usize,
    pub rows: Vec<TableRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub groups: Option<Vec<HexGroup>>,
}

/// Filters, sorts and pages the feature table. With `hexes`, rows are
/// grouped by cell first and every group gets quartile summaries of the
/// quantitative columns over its filtered members.
pub fn query_table(
    table: &FeatureTable,
    query: &TableQuery,
    hexes: Option<&BTreeMap<String, Axial>>,
) -> Result<TablePage, ApiError> {
    let filters = query.filter.as_deref().map(parse_filters).transpose()?.unwrap_or_default();
    let column = |name: &str| {
        table.get(name).ok_or_else(|| ApiError::bad_request("unknown_feature", format!("unknown feature `{name}`")))
    };
    let mut rows: Vec<usize> = Vec::new();
    'rows: for i in 0..table.ids().len() {
        for f in &filters {
            if !matches(column(&f.column)?, i, f)? {
                continue 'rows;
            }
        }
        rows.push(i);
    }
    let sort_column = query.sort.as_deref().map(column).transpose()?;
    let hex_of = |i: usize| hexes.and_then(|h| h.get(&table.ids()[i]).copied());
    rows.sort_by(|&i, &j| {
        let by_hex = hex_of(i).cmp(&hex_of(j));
        let by_key = match sort_column {
            Some(col) => match (cell(col, i), cell(col, j)) {
                (Some(a), Some(b)) if query.desc => compare(&b, &a),
                (Some(a), Some(b)) => compare(&a, &b),
                (Some(_), None) => Ordering::Less,
                (None, Some(_)) => Ordering::Greater,
                (None, None) => Ordering::Equal,
            },
            None => Ordering::Equal,
        };
        by_hex.then(by_key).then_with(|| table.ids()[i].cmp(&table.ids()[j]))
    });

    let groups = hexes.map(|_| {
        let mut members: BTreeMap<Axial, Vec<usize>> = BTreeMap::new();
        for &i in &rows {
            if let Some(h) = hex_of(i) {
                members.entry(h).or_default().push(i);
            }
        }
        members
            .into_iter()
            .map(|(hex, idx)| {
                let summaries = table
                    .names()
                    .filter_map(|name| match table.get(name) {
                        Some(FeatureValues::Quantitative { values }) => {
                            let v: Vec<f64> = idx.iter().filter_map(|&i| values[i]).collect();
                            quartiles(&v).map(|q| (name.to_string(), q))
                        }
                        _ => None,
                    })
                    .collect();
                HexGroup { hex, count: idx.len(), summaries }
            })
            .collect()
    });

    let limit = query.limit.unwrap_or(DEFAULT_PAGE).min(MAX_PAGE);
    let page = rows
        .iter()
        .skip(query.offset)
        .take(limit)
        .map(|&i| TableRow {
            id: table.ids()[i].clone(),
            hex: hex_of(i),
            values: table.names().map(|n| (n.to_string(), table.get(n).and_then(|v| cell(v, i)))).collect(),
        })
        .collect();
    Ok(TablePage { total: rows.len(), offset: query.offset, rows: page, groups })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quartiles_interpolate() {
        let q = quartiles(&[4.0, 1.0, 3.0, 2.0]).unwrap();
        assert_eq!((q.min, q.q1, q.median, q.q3, q.max), (1.0, 1.75, 2.5, 3.25, 4.0));
        let q = quartiles(&[7.0]).unwrap();
        assert_eq!((q.q1, q.median, q.q3), (7.0, 7.0, 7.0));
        let q = quartiles(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!((q.q1, q.median, q.q3), (2.0, 3.0, 4.0));
        assert!(quartiles(&[]).is_none());
    }

    #[test]
    fn filter_syntax() {
        let f = parse_filters("logp>6.75; activity:x = active;qed<=0.5;a>=1;b!=c").unwrap();
        let got: Vec<(&str, CompareOp, &str)> = f.iter().map(|f| (f.column.as_str(), f.op, f.value.as_str())).collect();
        assert_eq!(
            got,
            vec![
                ("logp", CompareOp::Gt, "6.75"),
                ("activity:x", CompareOp::Eq, "active"),
                ("qed", CompareOp::Le, "0.5"),
                ("a", CompareOp::Ge, "1"),
                ("b", CompareOp::Ne, "c"),
            ]
        );
        assert!(parse_filters("logp").is_err());
    }

    fn table() -> FeatureTable {
        let mut t = FeatureTable::new(["a", "b", "c", "d"].map(String::from).to_vec());
        t.insert("x", FeatureValues::Quantitative { values: vec![Some(3.0), None, Some(1.0), Some(2.0)] }).unwrap();
        t.insert(
            "k",
            FeatureValues::Categorical {
                values: ["p", "q", "p", "q"].map(|s| Some(s.to_string())).to_vec(),
                priority: vec![],
            },
        )
        .unwrap();
        t
    }

    #[test]
    fn missing_values_sort_last_both_ways() {
        let ids = |p: &TablePage| p.rows.iter().map(|r| r.id.clone()).collect::<Vec<_>>();
        let asc = query_table(&table(), &TableQuery { sort: Some("x".into()), ..Default::default() }, None).unwrap();
        assert_eq!(ids(&asc), ["c", "d", "a", "b"]);
        let desc =
            query_table(&table(), &TableQuery { sort: Some("x".into()), desc: true, ..Default::default() }, None)
                .unwrap();
        assert_eq!(ids(&desc), ["a", "d", "c", "b"]);
    }

    #[test]
    fn grouping_summarizes_filtered_members() {
        let hexes: BTreeMap<String, Axial> = [("a", (0, 0)), ("b", (0, 0)), ("c", (1, 0)), ("d", (0, 0))]
            .into_iter()
            .map(|(id, (q, r))| (id.to_string(), Axial { q, r }))
            .collect();
        let query = TableQuery { filter: Some("k=q".into()), ..Default::default() };
        let page = query_table(&table(), &query, Some(&hexes)).unwrap();
        assert_eq!(page.total, 2);
        let groups = page.groups.unwrap();
        assert_eq!(groups.len(), 1);
        assert_eq!(groups[0].count, 2);
        assert_eq!(groups[0].summaries["x"].n, 1);
        assert_eq!(groups[0].summaries["x"].median, 2.0);
    }

    #[test]
    fn unknown_columns_are_rejected() {
        let q = TableQuery { sort: Some("nope".into()), ..Default::default() };
        assert_eq!(query_table(&table(), &q, None).unwrap_err().body.code, "unknown_feature");
    }
}
