use serde::{Deserialize, Serialize};

use super::descriptors::{DescriptorVector, H_BOND_ACCEPTORS, H_BOND_DONORS, MOLECULAR_WEIGHT};

/// Drug-likeness fields shown per compound. Molecular weight, donors,
/// acceptors and the rule-of-five count are computed; the rest are ingested.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrugLikenessRecord {
    pub molecular_weight: f64,
    pub logp: Option<f64>,
    pub acidic_pka: Option<f64>,
    pub basic_pka: Option<f64>,
    pub qed: Option<f64>,
    pub h_bond_donors: u32,
    pub h_bond_acceptors: u32,
    pub ro5_violations: u8,
    /// Set when `logp` was missing and the count covers only three criteria.
    pub ro5_partial: bool,
}

impl DrugLikenessRecord {
    pub fn from_descriptors(desc: &DescriptorVector) -> DrugLikenessRecord {
        let mw = desc.get(MOLECULAR_WEIGHT).unwrap_or(0.0);
        let donors = desc.get(H_BOND_DONORS).unwrap_or(0.0) as u32;
        let acceptors = desc.get(H_BOND_ACCEPTORS).unwrap_or(0.0) as u32;
        let ro5 = compute_ro5(mw, None, donors, acceptors);
        DrugLikenessRecord {
            molecular_weight: mw,
            logp: None,
            acidic_pka: None,
            basic_pka: None,
            qed: None,
            h_bond_donors: donors,
            h_bond_acceptors: acceptors,
            ro5_violations: ro5.violations,
            ro5_partial: ro5.partial,
        }
    }

    /// Sets logP and recomputes the rule-of-five count.
    pub fn set_logp(&mut self, logp: Option<f64>) {
        self.logp = logp;
        let ro5 = compute_ro5(self.molecular_weight, logp, self.h_bond_donors, self.h_bond_acceptors);
        self.ro5_violations = ro5.violations;
        self.ro5_partial = ro5.partial;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ro5Count {
    pub violations: u8,
    pub partial: bool,
}

/// Lipinski rule-of-five violations: MW > 500, logP > 5, donors > 5,
/// acceptors > 10 (all strict). Without logP only three criteria are
/// counted and the result is flagged partial.
pub fn compute_ro5(molecular_weight: f64, logp: Option<f64>, donors: u32, acceptors: u32) -> Ro5Count {
    let mut violations = 0u8;
    violations += (molecular_weight > 500.0) as u8;
    violations += (donors > 5) as u8;
    violations += (acceptors > 10) as u8;
    if let Some(logp) = logp {
        violations += (logp > 5.0) as u8;
    }
    Ro5Count { violations, partial: logp.is_none() }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ro5_examples() {
        assert_eq!(compute_ro5(300.0, Some(2.0), 1, 3).violations, 0);
        assert_eq!(compute_ro5(600.0, Some(6.0), 6, 11).violations, 4);
        let boundary = compute_ro5(501.0, Some(5.0), 5, 10);
        assert_eq!(boundary, Ro5Count { violations: 1, partial: false });
    }

    #[test]
    fn missing_logp_is_partial() {
        let r = compute_ro5(600.0, None, 6, 11);
        assert_eq!(r, Ro5Count { violations: 3, partial: true });
    }

    #[test]
    fn record_recomputes_on_logp() {
        let mut d = DescriptorVector::new();
        d.insert(MOLECULAR_WEIGHT, 510.0, crate::chem::Provenance::Computed);
        d.insert(H_BOND_DONORS, 1.0, crate::chem::Provenance::Computed);
        d.insert(H_BOND_ACCEPTORS, 4.0, crate::chem::Provenance::Computed);
        let mut rec = DrugLikenessRecord::from_descriptors(&d);
        assert_eq!((rec.ro5_violations, rec.ro5_partial), (1, true));
        rec.set_logp(Some(5.5));
        assert_eq!((rec.ro5_violations, rec.ro5_partial), (2, false));
    }
}
