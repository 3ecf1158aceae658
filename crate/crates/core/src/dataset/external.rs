use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::chem::{DrugLikenessRecord, Provenance};

/// Environment variable holding the feature service base URL.
pub const FEATURE_SERVICE_ENV: &str = "MOLSCAPE_FEATURE_SERVICE_URL";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalUpdate {
    pub id: String,
    pub logp: Option<f64>,
    pub acidic_pka: Option<f64>,
    pub basic_pka: Option<f64>,
    pub qed: Option<f64>,
    pub provenance: Provenance,
}

impl ExternalUpdate {
    /// Overwrites the fields the service returned.
    pub fn apply(&self, record: &mut DrugLikenessRecord) {
        if self.logp.is_some() {
            record.set_logp(self.logp);
        }
        if self.acidic_pka.is_some() {
            record.acidic_pka = self.acidic_pka;
        }
        if self.basic_pka.is_some() {
            record.basic_pka = self.basic_pka;
        }
        if self.qed.is_some() {
            record.qed = self.qed;
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExternalFeatures {
    pub updates: Vec<ExternalUpdate>,
    pub errors: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FeatureService {
    Offline,
    /// ChEMBL-style REST root; molecules are fetched from `{base}/molecule/{id}.json`.
    Http {
        base_url: String,
        timeout: Duration,
    },
}

impl FeatureService {
    /// Online when the environment variable is set, offline otherwise.
    pub fn from_env() -> FeatureService {
        match std::env::var(FEATURE_SERVICE_ENV) {
            Ok(url) if !url.trim().is_empty() => {
                FeatureService::Http { base_url: url.trim().to_string(), timeout: Duration::from_secs(10) }
            }
            _ => FeatureService::Offline,
        }
    }
}

#[derive(Deserialize)]
struct MoleculeDoc {
    molecule_properties: Option<MoleculeProperties>,
}

#[derive(Deserialize)]
struct MoleculeProperties {
    alogp: Option<Number>,
    cx_most_apka: Option<Number>,
    cx_most_bpka: Option<Number>,
    qed_weighted: Option<Number>,
}

/// ChEMBL serializes numbers as strings.
#[derive(Deserialize)]
#[serde(untagged)]
enum Number {
    Float(f64),
    Text(String),
}

impl Number {
    fn value(&self) -> Option<f64> {
        match self {
            Number::Float(v) => Some(*v),
            Number::Text(s) => s.trim().parse().ok(),
        }
    }
}

fn fetch_one(agent: &ureq::Agent, base: &str, id: &str) -> Result<ExternalUpdate, String> {
    let url = format!("{}/molecule/{}.json", base.trim_end_matches('/'), id);
    let mut response = agent.get(&url).call().map_err(|e| e.to_string())?;
    let text = response.body_mut().read_to_string().map_err(|e| e.to_string())?;
    let doc: MoleculeDoc = serde_json::from_str(&text).map_err(|e| format!("unreadable response: {e}"))?;
    let props = doc.molecule_properties.ok_or("response has no molecule_properties")?;
    let get = |n: &Option<Number>| n.as_ref().and_then(Number::value);
    Ok(ExternalUpdate {
        id: id.to_string(),
        logp: get(&props.alogp),
        acidic_pka: get(&props.cx_most_apka),
        basic_pka: get(&props.cx_most_bpka),
        qed: get(&props.qed_weighted),
        provenance: Provenance::Ingested,
    })
}

/// Fetches the ingested drug-likeness fields per id. Failures are collected
/// per id and never abort the batch.
pub fn fetch_external_features(service: &FeatureService, ids: &[String]) -> ExternalFeatures {
    let FeatureService::Http { base_url, timeout } = service else {
        return ExternalFeatures::default();
    };
    let config = ureq::Agent::config_builder().timeout_global(Some(*timeout)).build();
    let agent = ureq::Agent::new_with_config(config);
    let mut out = ExternalFeatures::default();
    for id in ids {
        match fetch_one(&agent, base_url, id) {
            Ok(u) => out.updates.push(u),
            Err(e) => out.errors.push((id.clone(), e)),
        }
    }
    out
}
