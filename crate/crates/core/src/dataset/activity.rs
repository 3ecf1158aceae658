use std::fmt;

use serde::{Deserialize, Serialize};

/// Potency class from an IC50 value in nM.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActivityClass {
    Active,
    ModeratelyActive,
    Inactive,
    Unlabeled,
}

impl ActivityClass {
    /// Tie-break order for modal-class aggregation: earlier wins.
    pub const PRIORITY: [ActivityClass; 4] =
        [ActivityClass::Active, ActivityClass::ModeratelyActive, ActivityClass::Inactive, ActivityClass::Unlabeled];

    pub fn as_str(self) -> &'static str {
        match self {
            ActivityClass::Active => "active",
            ActivityClass::ModeratelyActive => "moderately_active",
            ActivityClass::Inactive => "inactive",
            ActivityClass::Unlabeled => "unlabeled",
        }
    }

    pub fn priority_labels() -> Vec<String> {
        Self::PRIORITY.iter().map(|c| c.as_str().to_string()).collect()
    }
}

impl fmt::Display for ActivityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// `< 10` nM is active, `10..=1000` moderately active, `> 1000` inactive.
/// Missing, non-positive or non-finite values are unlabeled.
pub fn label_activity(ic50_nm: Option<f64>) -> ActivityClass {
    match ic50_nm {
        Some(v) if v.is_finite() && v > 0.0 => {
            if v < 10.0 {
                ActivityClass::Active
            } else if v <= 1000.0 {
                ActivityClass::ModeratelyActive
            } else {
                ActivityClass::Inactive
            }
        }
        _ => ActivityClass::Unlabeled,
    }
}
