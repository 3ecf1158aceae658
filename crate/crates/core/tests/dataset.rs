use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use molscape_core::dataset::{
    load_dataset, load_session, preprocess_descriptors, save_session, ActivityClass, DatasetError, DescriptorColumn,
    SessionState, ViewConfig,
};
use molscape_core::dr::Representation;
use molscape_core::view::{Selection, SelectionSource};
use proptest::prelude::*;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name).join("manifest.json")
}

const SMALL: &str = "id,smiles,ic50_x,logp\n\
a,CCO,5,0.1\n\
b,c1ccccc1O,10,1.5\n\
c,CC(=O)Nc1ccc(O)cc1,1500,0.5\n\
d,CN1CCN(CC1)c1ccccc1,,2.2\n\
e,OC(=O)c1ccccc1OC(C)=O,250,1.2\n";

fn write_small(dir: &Path, compounds: &str, embeddings: Option<&str>) -> PathBuf {
    std::fs::write(dir.join("c.csv"), compounds).unwrap();
    let mut manifest = serde_json::json!({
        "version": 1, "name": "small", "compounds": "c.csv",
        "targets": [{"name": "x", "column": "ic50_x"}],
    });
    if let Some(e) = embeddings {
        std::fs::write(dir.join("e.csv"), e).unwrap();
        manifest["embeddings"] = "e.csv".into();
    }
    let path = dir.join("manifest.json");
    std::fs::write(&path, manifest.to_string()).unwrap();
    path
}

#[test]
fn small_manifest_computes_representations() {
    let dir = tempfile::tempdir().unwrap();
    let d = load_dataset(&write_small(dir.path(), SMALL, None)).unwrap();
    assert_eq!(d.compounds.len(), 5);
    let reprs: Vec<Representation> = d.representations.keys().copied().collect();
    assert_eq!(reprs, vec![Representation::Ecfp, Representation::Path, Representation::Descriptors]);
    for m in d.representations.values() {
        assert_eq!(m.ids(), d.ids().as_slice());
    }
    assert_eq!(d.compounds[0].activity["x"], ActivityClass::Active);
    assert_eq!(d.compounds[1].activity["x"], ActivityClass::ModeratelyActive);
    assert_eq!(d.compounds[2].activity["x"], ActivityClass::Inactive);
    assert_eq!(d.compounds[3].activity["x"], ActivityClass::Unlabeled);
    assert_eq!(d.compounds[3].druglikeness.logp, Some(2.2));
}

#[test]
fn misaligned_embeddings_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let emb = "id,e0,e1\na,0,1\nb,1,0\nc,1,1\nd,0,0\n";
    let err = load_dataset(&write_small(dir.path(), SMALL, Some(emb))).unwrap_err();
    match err {
        DatasetError::Misaligned { offenders, .. } => assert_eq!(offenders, vec!["missing `e`"]),
        other => panic!("{other}"),
    }
}

#[test]
fn duplicate_ids_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let dup = format!("{SMALL}c,CCN,20,0.3\n");
    let err = load_dataset(&write_small(dir.path(), &dup, None)).unwrap_err();
    assert!(matches!(err, DatasetError::DuplicateIds(ref ids) if ids == &["c".to_string()]), "{err}");
}

#[test]
fn offender_list_is_capped_at_ten() {
    let dir = tempfile::tempdir().unwrap();
    let mut emb = String::from("id,e0,e1\n");
    for k in 0..15 {
        emb.push_str(&format!("z{k:02},0,1\n"));
    }
    let err = load_dataset(&write_small(dir.path(), SMALL, Some(&emb))).unwrap_err();
    let DatasetError::Misaligned { offenders, .. } = err else { panic!("{err}") };
    assert_eq!(offenders.len(), 10);
}

#[test]
fn p_glycoprotein_fixture_class_counts() {
    let d = load_dataset(&fixture("p_glycoprotein")).unwrap();
    assert_eq!(d.compounds.len(), 893);
    let counts = d.class_counts("p_glycoprotein");
    assert_eq!(counts[&ActivityClass::Active], 42);
    assert_eq!(counts[&ActivityClass::ModeratelyActive], 178);
    assert_eq!(counts[&ActivityClass::Inactive], 673);
    assert_eq!(d.representations.len(), 4);
    assert_eq!(d.descriptor_model.dropped, vec!["sparse_topology"]);
    assert!(d.descriptor_model.columns.iter().any(|c| c == "gappy_polarity"));
}

#[test]
fn serotonin_dopamine_fixture_class_counts() {
    let d = load_dataset(&fixture("serotonin_dopamine")).unwrap();
    assert_eq!(d.compounds.len(), 118);
    for (target, expected) in [("serotonin_1a", [14, 42, 62]), ("dopamine_d2", [5, 28, 85])] {
        let c = d.class_counts(target);
        let got = [ActivityClass::Active, ActivityClass::ModeratelyActive, ActivityClass::Inactive].map(|k| c[&k]);
        assert_eq!(got, expected, "{target}");
    }
    assert_eq!(d.conformers.len(), 118);
}

#[test]
fn loading_is_idempotent() {
    let path = fixture("serotonin_dopamine");
    assert_eq!(load_dataset(&path).unwrap(), load_dataset(&path).unwrap());
}

#[test]
fn featurize_matches_dataset_rows() {
    let d = load_dataset(&fixture("serotonin_dopamine")).unwrap();
    let c = &d.compounds[7];
    let rows = d.featurize(&c.graph).unwrap();
    for (repr, row) in rows {
        let m = &d.representations[&repr];
        let i = m.ids().iter().position(|id| *id == c.id).unwrap();
        for (x, y) in row.iter().zip(m.row(i)) {
            assert!((x - y).abs() < 1e-12, "{repr:?}");
        }
    }
}

fn session_for(dataset: &str) -> SessionState {
    let mut s = SessionState::new(dataset);
    for (k, ids) in [["SD0001", "SD0002"], ["SD0003", "SD0010"], ["SD0100", "SD0118"]].iter().enumerate() {
        let set: BTreeSet<String> = ids.iter().map(|s| s.to_string()).collect();
        s.selections.push(Selection::new(set, SelectionSource::Hexes).named(format!("pick {k}")));
    }
    s.view = ViewConfig { hex_radius: Some(0.1 + 0.2), color_feature: Some("logp".into()), ..ViewConfig::default() };
    s
}

#[test]
fn empty_session_round_trip() {
    let d = load_dataset(&fixture("serotonin_dopamine")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.json");
    let s = SessionState::new("serotonin-dopamine");
    save_session(&path, &s).unwrap();
    assert_eq!(load_session(&path, &[&d]).unwrap(), s);
}

#[test]
fn named_selections_survive_round_trip() {
    let d = load_dataset(&fixture("serotonin_dopamine")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.json");
    let s = session_for("serotonin-dopamine");
    save_session(&path, &s).unwrap();
    let back = load_session(&path, &[&d]).unwrap();
    assert_eq!(back, s);
    assert_eq!(back.view.hex_radius.unwrap().to_bits(), (0.1f64 + 0.2).to_bits());
    let names: Vec<_> = back.selections.iter().map(|s| s.name.clone().unwrap()).collect();
    assert_eq!(names, vec!["pick 0", "pick 1", "pick 2"]);
}

#[test]
fn session_for_missing_dataset_fails() {
    let d = load_dataset(&fixture("serotonin_dopamine")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.json");
    save_session(&path, &SessionState::new("gone")).unwrap();
    let err = load_session(&path, &[&d]).unwrap_err();
    assert!(err.to_string().contains("gone"), "{err}");
}

#[test]
fn session_version_mismatch() {
    let d = load_dataset(&fixture("serotonin_dopamine")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.json");
    std::fs::write(&path, r#"{"version": 7, "dataset": "serotonin-dopamine"}"#).unwrap();
    let err = load_session(&path, &[&d]).unwrap_err();
    assert!(matches!(err, DatasetError::Version { expected: 1, found: 7, .. }), "{err}");
}

proptest! {
    #[test]
    fn preprocess_never_outputs_nan(cols in prop::collection::vec(prop::collection::vec(prop::option::weighted(0.9, -1e3f64..1e3), 1..40), 1..6)) {
        let input: Vec<DescriptorColumn> = cols
            .iter()
            .enumerate()
            .map(|(k, c)| DescriptorColumn { name: format!("c{k}"), values: c.iter().map(|v| v.unwrap_or(f64::NAN)).collect() })
            .collect();
        let r = preprocess_descriptors(input.clone());
        prop_assert_eq!(r.columns.len() + r.dropped.len(), input.len());
        for col in &r.columns {
            prop_assert!(col.values.iter().all(|v| !v.is_nan()));
            let src = input.iter().find(|c| c.name == col.name).unwrap();
            let nan = src.values.iter().filter(|v| v.is_nan()).count();
            prop_assert!(nan as f64 <= 0.1 * src.values.len() as f64);
        }
    }
}
