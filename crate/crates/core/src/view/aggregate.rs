use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::ViewError;

/// Per-compound values of one feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FeatureValues {
    /// Labels plus the tie-break order for the modal label: earlier wins.
    Categorical {
        values: Vec<Option<String>>,
        priority: Vec<String>,
    },
    Quantitative {
        values: Vec<Option<f64>>,
    },
}

impl FeatureValues {
    fn len(&self) -> usize {
        match self {
            FeatureValues::Categorical { values, .. } => values.len(),
            FeatureValues::Quantitative { values } => values.len(),
        }
    }
}

/// Feature columns keyed by name, row-aligned with `ids`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FeatureTable {
    ids: Vec<String>,
    index: HashMap<String, usize>,
    columns: BTreeMap<String, FeatureValues>,
}

impl FeatureTable {
    pub fn new(ids: Vec<String>) -> FeatureTable {
        let index = ids.iter().enumerate().map(|(i, id)| (id.clone(), i)).collect();
        FeatureTable { ids, index, columns: BTreeMap::new() }
    }

    pub fn insert(&mut self, name: impl Into<String>, values: FeatureValues) -> Result<(), ViewError> {
        let name = name.into();
        if values.len() != self.ids.len() {
            return Err(ViewError::Shape(format!(
                "feature `{name}` has {} values for {} compounds",
                values.len(),
                self.ids.len()
            )));
        }
        self.columns.insert(name, values);
        Ok(())
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.columns.keys().map(|k| k.as_str())
    }

    pub fn get(&self, name: &str) -> Option<&FeatureValues> {
        self.columns.get(name)
    }

    pub fn row(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Aggregate {
    /// Modal label (`None` when every member is missing) and label counts.
    Class { label: Option<String>, counts: BTreeMap<String, usize> },
    /// Mean over members with a value, and how many had one.
    Mean { value: Option<f64>, n: usize },
}

/// Most frequent label; ties go to the label listed first in `priority`,
/// then to the lexicographically smallest unlisted label.
pub fn majority_class<'a>(labels: impl IntoIterator<Item = &'a str>, priority: &[String]) -> Option<String> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for l in labels {
        *counts.entry(l).or_default() += 1;
    }
    let rank = |l: &str| priority.iter().position(|p| p == l).unwrap_or(priority.len());
    counts
        .into_iter()
        .max_by(|a, b| a.1.cmp(&b.1).then_with(|| rank(b.0).cmp(&rank(a.0))).then_with(|| b.0.cmp(a.0)))
        .map(|(l, _)| l.to_string())
}

/// Aggregates `feature` over the compounds named in `ids`. Members without a
/// value are skipped.
pub fn aggregate_feature(ids: &[String], feature: &str, table: &FeatureTable) -> Result<Aggregate, ViewError> {
    let column = table.get(feature).ok_or_else(|| ViewError::UnknownFeature(feature.to_string()))?;
    let rows = ids
        .iter()
        .map(|id| table.row(id).ok_or_else(|| ViewError::UnknownCompounds(vec![id.clone()])))
        .collect::<Result<Vec<usize>, _>>()?;
    Ok(match column {
        FeatureValues::Categorical { values, priority } => {
            let labels: Vec<&str> = rows.iter().filter_map(|&r| values[r].as_deref()).collect();
            let mut counts = BTreeMap::new();
            for l in &labels {
                *counts.entry(l.to_string()).or_default() += 1;
            }
            Aggregate::Class { label: majority_class(labels, priority), counts }
        }
        FeatureValues::Quantitative { values } => {
            let present: Vec<f64> = rows.iter().filter_map(|&r| values[r]).filter(|v| !v.is_nan()).collect();
            let value = (!present.is_empty()).then(|| present.iter().sum::<f64>() / present.len() as f64);
            Aggregate::Mean { value, n: present.len() }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> FeatureTable {
        let mut t = FeatureTable::new(vec!["a".into(), "b".into(), "c".into(), "d".into()]);
        let s = |x: &str| Some(x.to_string());
        t.insert(
            "activity",
            FeatureValues::Categorical {
                values: vec![s("active"), s("active"), s("inactive"), s("inactive")],
                priority: vec!["active".into(), "moderately_active".into(), "inactive".into()],
            },
        )
        .unwrap();
        t.insert("logp", FeatureValues::Quantitative { values: vec![Some(1.0), Some(2.0), Some(3.0), None] }).unwrap();
        t
    }

    fn ids(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|x| x.to_string()).collect()
    }

    #[test]
    fn modal_class_and_mean() {
        let t = table();
        match aggregate_feature(&ids(&["a", "b", "c"]), "activity", &t).unwrap() {
            Aggregate::Class { label, counts } => {
                assert_eq!(label.as_deref(), Some("active"));
                assert_eq!(counts["inactive"], 1);
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(
            aggregate_feature(&ids(&["a", "b", "c", "d"]), "logp", &t).unwrap(),
            Aggregate::Mean { value: Some(2.0), n: 3 }
        );
        assert_eq!(aggregate_feature(&ids(&["b"]), "logp", &t).unwrap(), Aggregate::Mean { value: Some(2.0), n: 1 });
    }

    #[test]
    fn ties_prefer_the_priority_order() {
        let t = table();
        match aggregate_feature(&ids(&["a", "c"]), "activity", &t).unwrap() {
            Aggregate::Class { label, .. } => assert_eq!(label.as_deref(), Some("active")),
            other => panic!("{other:?}"),
        }
        let p = vec!["x".to_string()];
        assert_eq!(majority_class(["z", "y"], &p).as_deref(), Some("y"));
        assert_eq!(majority_class(["z", "x"], &p).as_deref(), Some("x"));
        assert_eq!(majority_class([], &p), None);
    }

    #[test]
    fn unknown_feature() {
        assert!(matches!(aggregate_feature(&ids(&["a"]), "qed", &table()), Err(ViewError::UnknownFeature(_))));
    }
}
