//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use molscape_core::align::{find_mcs, kabsch, rmsd, DEFAULT_MCS_BUDGET};
use molscape_core::chem::{
    compute_ecfp, compute_path_fingerprint, parse_smiles, Atom, Bond, BondOrder, Element, MolecularGraph,
};
use molscape_core::dataset::{
    label_activity, load_dataset, preprocess_descriptors, ActivityClass, Dataset, DescriptorColumn,
};
use molscape_core::dr::{
    input_dissimilarities, joint_probabilities, kendall_tau_a, kl_divergence, kl_gradient, trust_from_distances,
    Activation, DenseLayer, DistanceMatrix, EmbeddingMatrix, KendallTies, Metric, ParametricProjector,
    ProjectionSource, ProjectorConfig, Representation,
};
use molscape_core::view::{
    bin_points, difference_view, Axial, DifferenceConfig, HexGrid, OpacityScale, Selection, SelectionSource,
};
use molscape_service::{pipeline, router, AppState, Engine, PipelineConfig};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use tower::ServiceExt;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn manifest(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name).join("manifest.json")
}

/// The serotonin-dopamine fixture run through the full default pipeline.
struct Prepared {
    _dir: tempfile::TempDir,
    dataset: Dataset,
    config: PipelineConfig,
    state: AppState,
    tsne_time: Duration,
    projector_time: Duration,
    runtime: tokio::runtime::Runtime,
}

impl Prepared {
    fn build() -> Prepared {
        let dir = tempfile::tempdir().unwrap();
        let dataset = load_dataset(&manifest("serotonin_dopamine")).unwrap();
        let config = PipelineConfig::default();
        pipeline::preprocess(&dataset, dir.path()).unwrap();
        let start = Instant::now();
        pipeline::fit_tsne_all(&dataset, dir.path(), &config, 0).unwrap();
        let tsne_time = start.elapsed();
        let start = Instant::now();
        pipeline::train_projectors(&dataset, dir.path(), &config, 0).unwrap();
        let projector_time = start.elapsed();
        let engine = Engine::load(&manifest("serotonin_dopamine"), dir.path(), config.clone()).unwrap();
        Prepared {
            _dir: dir,
            dataset,
            config,
            state: AppState::new(engine),
            tsne_time,
            projector_time,
            runtime: tokio::runtime::Runtime::new().unwrap(),
        }
    }

    fn engine(&self) -> &Engine {
        &self.state.engine
    }

    fn call(&self, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
        let app = router(self.state.clone());
        self.runtime.block_on(async move {
            let req = Request::builder().method(method).uri(uri);
            let req = match body {
                Some(b) => req.header("content-type", "application/json").body(Body::from(b.to_string())),
                None => req.body(Body::empty()),
            }
            .unwrap();
            let resp = app.oneshot(req).await.unwrap();
            let status = resp.status();
            let bytes = axum::body::to_bytes(resp.into_body(), usize::MAX).await.unwrap();
            (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
        })
    }
}

fn oracle_class(v: Option<f64>) -> ActivityClass {
    match v {
        Some(v) if v > 0.0 && v.is_finite() && v < 10.0 => ActivityClass::Active,
        Some(v) if v > 0.0 && v.is_finite() && v <= 1000.0 => ActivityClass::ModeratelyActive,
        Some(v) if v > 0.0 && v.is_finite() => ActivityClass::Inactive,
        _ => ActivityClass::Unlabeled,
    }
}

fn counts(d: &Dataset, target: &str) -> [usize; 3] {
    let c = d.class_counts(target);
    let get = |k| c.get(&k).copied().unwrap_or(0);
    [get(ActivityClass::Active), get(ActivityClass::ModeratelyActive), get(ActivityClass::Inactive)]
}

fn activity_labels() -> Outcome {
    let table = [
        (Some(0.5), ActivityClass::Active),
        (Some(9.99), ActivityClass::Active),
        (Some(10.0), ActivityClass::ModeratelyActive),
        (Some(10.01), ActivityClass::ModeratelyActive),
        (Some(999.0), ActivityClass::ModeratelyActive),
        (Some(1000.0), ActivityClass::ModeratelyActive),
        (Some(1000.01), ActivityClass::Inactive),
        (Some(25_000.0), ActivityClass::Inactive),
        (None, ActivityClass::Unlabeled),
    ];
    for (v, want) in table {
        ensure!(label_activity(v) == want, "IC50 {v:?} labeled {} instead of {want}", label_activity(v));
    }
    let mut checked = 0;
    for (name, expected) in [
        ("p_glycoprotein", vec![("p_glycoprotein", [42, 178, 673])]),
        ("serotonin_dopamine", vec![("serotonin_1a", [14, 42, 62]), ("dopamine_d2", [5, 28, 85])]),
    ] {
        let d = load_dataset(&manifest(name)).map_err(|e| e.to_string())?;
        for (target, want) in expected {
            let got = counts(&d, target);
            ensure!(got == want, "{target}: counts {got:?}, expected {want:?}");
            for c in &d.compounds {
                ensure!(c.activity[target] == oracle_class(c.ic50[target]), "{} mislabeled for {target}", c.id);
                checked += 1;
            }
        }
    }
    Ok(format!("thresholds exact; 42/178/673, 14/42/62, 5/28/85 reproduced; {checked} labels checked"))
}

fn descriptor_preprocessing() -> Outcome {
    let nan = f64::NAN;
    let n = 20;
    let column = |name: &str, gaps: &[usize]| DescriptorColumn {
        name: name.into(),
        values: (0..n).map(|i| if gaps.contains(&i) { nan } else { (i as f64 * 1.7).sin() * 10.0 }).collect(),
    };
    let columns = vec![
        column("full", &[]),
        column("one_gap", &[3]),
        column("ten_percent", &[0, 19]),
        column("fifteen_percent", &[1, 2, 3]),
        column("empty", &(0..n).collect::<Vec<_>>()),
    ];
    let report = preprocess_descriptors(columns.clone());
    let kept: Vec<&str> = report.columns.iter().map(|c| c.name.as_str()).collect();
    ensure!(kept == ["full", "one_gap", "ten_percent"], "kept {kept:?}");
    ensure!(report.dropped == ["fifteen_percent", "empty"], "dropped {:?}", report.dropped);
    for col in &report.columns {
        let original = &columns.iter().find(|c| c.name == col.name).unwrap().values;
        let max = original.iter().copied().filter(|v| !v.is_nan()).fold(f64::MIN, f64::max);
        for (a, b) in original.iter().zip(&col.values) {
            let want = if a.is_nan() { max } else { *a };
            ensure!(want.to_bits() == b.to_bits(), "{}: {b} instead of {want}", col.name);
        }
    }
    let pgp = load_dataset(&manifest("p_glycoprotein")).map_err(|e| e.to_string())?;
    let model = &pgp.descriptor_model;
    ensure!(model.dropped == ["sparse_topology"], "p-gp dropped {:?}", model.dropped);
    ensure!(model.columns.iter().any(|c| c == "gappy_polarity"), "gappy_polarity missing");
    Ok("drop above 10% NaN and fill by column maximum are exact".into())
}

fn tsne_internals(p: &Prepared) -> Outcome {
    let start = Instant::now();
    let mut worst_perplexity = 0.0f64;
    let mut worst_sum = 0.0f64;
    for name in ["serotonin_dopamine", "p_glycoprotein"] {
        let d = if name == "serotonin_dopamine" { p.dataset.clone() } else { load_dataset(&manifest(name)).unwrap() };
        for (&repr, matrix) in &d.representations {
            let config = p.config.tsne_config(matrix.rows(), 0);
            let n = matrix.rows();
            let dissim = input_dissimilarities(matrix, config.metric).map_err(|e| e.to_string())?;
            let (joint, achieved) =
                joint_probabilities(&dissim, n, config.perplexity, matrix.ids()).map_err(|e| e.to_string())?;
            for a in &achieved {
                worst_perplexity = worst_perplexity.max((a - config.perplexity).abs());
            }
            for i in 0..n {
                ensure!(joint[i * n + i] == 0.0, "{name}/{repr}: P has a non-zero diagonal");
                for j in 0..n {
                    ensure!(joint[i * n + j] >= 0.0, "{name}/{repr}: negative P");
                    ensure!(joint[i * n + j] == joint[j * n + i], "{name}/{repr}: P is not symmetric");
                }
            }
            worst_sum = worst_sum.max((joint.iter().sum::<f64>() - 1.0).abs());
        }
    }
    ensure!(worst_perplexity <= 1e-3, "row perplexity off by {worst_perplexity:e}");
    ensure!(worst_sum <= 1e-9, "P sums off by {worst_sum:e}");

    let mut kl = Vec::new();
    for (repr, view) in &p.engine().views {
        ensure!(
            view.tsne.final_kl <= view.tsne.initial_kl,
            "{repr}: KL rose from {} to {}",
            view.tsne.initial_kl,
            view.tsne.final_kl
        );
        kl.push(format!("{repr} {:.3}->{:.3}", view.tsne.initial_kl, view.tsne.final_kl));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let rows: Vec<Vec<f64>> = (0..10).map(|_| (0..5).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let ids: Vec<String> = (0..10).map(|i| format!("p{i}")).collect();
    let m = EmbeddingMatrix::new(Representation::Descriptors, ids.clone(), rows).unwrap();
    let dissim = input_dissimilarities(&m, Metric::Euclidean).unwrap();
    let (joint, _) = joint_probabilities(&dissim, 10, 3.0, &ids).map_err(|e| e.to_string())?;
    let y: Vec<[f64; 2]> = (0..10).map(|_| [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)]).collect();
    let grad = kl_gradient(&joint, &y);
    let h = 1e-5;
    let mut worst = 0.0f64;
    for i in 0..10 {
        for k in 0..2 {
            let mut plus = y.clone();
            let mut minus = y.clone();
            plus[i][k] += h;
            minus[i][k] -= h;
            let numeric = (kl_divergence(&joint, &plus) - kl_divergence(&joint, &minus)) / (2.0 * h);
            let rel = (grad[i][k] - numeric).abs() / grad[i][k].abs().max(numeric.abs()).max(1e-12);
            worst = worst.max(rel);
        }
    }
    ensure!(worst <= 1e-4, "KL gradient relative error {worst:e}");
    let elapsed = start.elapsed() + p.tsne_time;
    ensure!(elapsed < Duration::from_secs(30), "took {elapsed:?}");
    Ok(format!(
        "perplexity error {worst_perplexity:.1e}, |sum P - 1| {worst_sum:.1e}, gradient error {worst:.1e}; KL {}; fits {:.1} s",
        kl.join(", "),
        p.tsne_time.as_secs_f64()
    ))
}

fn random_layer(inputs: usize, outputs: usize, activation: Activation, rng: &mut ChaCha8Rng) -> DenseLayer {
    let mut layer = DenseLayer::zeros(inputs, outputs, activation);
    layer.weights.iter_mut().for_each(|w| *w = rng.random_range(-0.8..0.8));
    layer.bias.iter_mut().for_each(|b| *b = rng.random_range(-0.3..0.3));
    layer
}

fn projector(p: &Prepared) -> Outcome {
    let mut detail = Vec::new();
    for repr in [Representation::Ecfp, Representation::Path] {
        let view = &p.engine().views[&repr];
        let artifact = view.projector.as_ref().ok_or(format!("{repr}: no projector"))?;
        ensure!(p.dataset.representations[&repr].dim() == 1024, "{repr} is not 1024 bits wide");
        let want = ProjectorConfig { seed: artifact.config.seed, ..ProjectorConfig::small_dataset(repr) };
        ensure!(artifact.config == want, "{repr}: trained with {:?}", artifact.config);
        ensure!(
            want.hidden_layers == [50, 10]
                && want.activation == Activation::Relu
                && want.dropout == [0.25, 0.15, 0.1]
                && want.patience == 70
                && want.min_delta == 0.005
                && want.learning_rate == 1e-4,
            "{repr}: preset differs from the published hyperparameters"
        );
        let [rx, ry] = artifact.report.pearson;
        ensure!(rx >= 0.9 && ry >= 0.9, "{repr}: Pearson x {rx:.3}, y {ry:.3}");
        detail.push(format!("{repr} r=({rx:.3}, {ry:.3}) after {} epochs", artifact.report.epochs));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = 0.0f64;
    for activation in [Activation::Relu, Activation::Tanh, Activation::Sigmoid] {
        let layers = vec![
            random_layer(6, 5, activation, &mut rng),
            random_layer(5, 4, activation, &mut rng),
            random_layer(4, 2, Activation::Linear, &mut rng),
        ];
        let net = ParametricProjector::from_layers(Representation::Ecfp, layers.clone(), ProjectorConfig::default())
            .map_err(|e| e.to_string())?;
        let inputs: Vec<Vec<f64>> = (0..7).map(|_| (0..6).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let input_refs: Vec<&[f64]> = inputs.iter().map(|r| r.as_slice()).collect();
        let targets: Vec<[f64; 2]> =
            (0..7).map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]).collect();
        let (_, grads) = net.loss_and_gradient(&input_refs, &targets);
        let loss_at = |layers: Vec<DenseLayer>| {
            ParametricProjector::from_layers(Representation::Ecfp, layers, ProjectorConfig::default())
                .unwrap()
                .loss_and_gradient(&input_refs, &targets)
                .0
        };
        let h = 1e-6;
        for l in 0..layers.len() {
            for w in 0..layers[l].weights.len() + layers[l].bias.len() {
                let nudge = |delta: f64| {
                    let mut copy = layers.clone();
                    let nw = copy[l].weights.len();
                    if w < nw {
                        copy[l].weights[w] += delta;
                    } else {
                        copy[l].bias[w - nw] += delta;
                    }
                    loss_at(copy)
                };
                let numeric = (nudge(h) - nudge(-h)) / (2.0 * h);
                let nw = layers[l].weights.len();
                let analytic = if w < nw { grads[l].weights[w] } else { grads[l].bias[w - nw] };
                let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-7);
                worst = worst.max(rel);
            }
        }
    }
    ensure!(worst <= 1e-4, "backprop relative error {worst:e}");
    ensure!(p.projector_time < Duration::from_secs(600), "training took {:?}", p.projector_time);
    Ok(format!("{}; backprop error {worst:.1e}; training {:.1} s", detail.join(", "), p.projector_time.as_secs_f64()))
}

fn brute_tau(x: &[f64], y: &[f64]) -> f64 {
    let m = x.len();
    let mut net = 0i64;
    for i in 0..m {
        for j in i + 1..m {
            let a = x[i].partial_cmp(&x[j]).unwrap() as i64;
            let b = y[i].partial_cmp(&y[j]).unwrap() as i64;
            net += a * b;
        }
    }
    net as f64 / (m * (m - 1) / 2) as f64
}

fn trust_scores() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 40;
    let points: Vec<Vec<f64>> = (0..n).map(|_| (0..4).map(|_| rng.random_range(-3.0..3.0)).collect()).collect();
    let dist = DistanceMatrix::from_fn(n, |i, j| {
        points[i].iter().zip(&points[j]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    });
    let ids: Vec<String> = (0..n).map(|i| format!("c{i}")).collect();
    for ties in [KendallTies::TauA, KendallTies::TauB] {
        let t = trust_from_distances(Representation::Ecfp, &ids, &dist, &dist, ties).map_err(|e| e.to_string())?;
        ensure!(t.pearson_r.iter().all(|&r| r == 1.0), "identity Pearson not exactly 1: {:?}", t.pearson_r);
        ensure!(t.kendall_tau.iter().all(|&r| r == 1.0), "identity Kendall not exactly 1");
    }
    for case in 0..200 {
        let m = rng.random_range(2..=50);
        let tied = case % 2 == 0;
        let draw = |rng: &mut ChaCha8Rng| -> Vec<f64> {
            (0..m).map(|_| if tied { rng.random_range(0..6) as f64 } else { rng.random::<f64>() }).collect()
        };
        let x = draw(&mut rng);
        let y = draw(&mut rng);
        let fast = kendall_tau_a(&x, &y).map_err(|e| e.to_string())?;
        let slow = brute_tau(&x, &y);
        ensure!(fast == slow, "case {case} (m={m}): {fast} vs brute force {slow}");
    }
    Ok("identity r = tau = 1 exactly; 200 Kendall instances equal the brute-force count".into())
}

fn hexes(p: &Prepared) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let grid = HexGrid::new([rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)], 0.37).unwrap();
    for _ in 0..1000 {
        let q = [rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0)];
        let located = grid.locate(q);
        let dist = |h: Axial| {
            let c = grid.center(h);
            (c[0] - q[0]).hypot(c[1] - q[1])
        };
        let mut best = Axial::new(0, 0);
        for a in -60..=60 {
            for b in -60..=60 {
                if dist(Axial::new(a, b)) < dist(best) {
                    best = Axial::new(a, b);
                }
            }
        }
        ensure!(located == best || dist(located) == dist(best), "{q:?} located in {located:?}, nearest {best:?}");
    }

    let mut partitions = 0;
    for view in p.engine().views.values() {
        let proj = &view.tsne.projection;
        for radius in [None, Some(0.3), Some(5.0)] {
            let grid = p.engine().grid(proj, radius).map_err(|e| format!("{e:?}"))?;
            let layout =
                bin_points(proj, grid, &OpacityScale { density: 1.0, floor: 0.1 }).map_err(|e| e.to_string())?;
            let total: usize = layout.bins.iter().map(|b| b.count).sum();
            let distinct: HashSet<&String> = layout.bins.iter().flat_map(|b| &b.ids).collect();
            ensure!(total == proj.len() && distinct.len() == proj.len(), "partition broke: {total} of {}", proj.len());
            partitions += 1;
        }
    }

    let (a, trust_a) = p.engine().projection(Representation::Ecfp, ProjectionSource::Tsne).unwrap();
    let (b, _) = p.engine().projection(Representation::Path, ProjectionSource::Tsne).unwrap();
    let grid_a = HexGrid::default_for(a.coords()).unwrap();
    let grid_b = HexGrid::default_for(b.coords()).unwrap();
    let ids = a.ids().to_vec();
    for trial in 0..50 {
        let k = rng.random_range(1..=ids.len());
        let picked: Vec<String> = ids.choose_multiple(&mut rng, k).cloned().collect();
        let sel = Selection::new(picked, SelectionSource::Table);
        let config = DifferenceConfig::default();
        let diff = difference_view(&sel, a, b, grid_a, grid_b, trust_a, &config).map_err(|e| e.to_string())?;
        let mass: usize = diff.inner.iter().map(|h| h.count).sum();
        ensure!(mass == sel.len(), "trial {trial}: inner mass {mass} for {} selected", sel.len());

        let same = difference_view(&sel, a, a, grid_a, grid_a, trust_a, &config).map_err(|e| e.to_string())?;
        let mut expected = BTreeMap::new();
        for (id, &c) in a.ids().iter().zip(a.coords()) {
            if sel.contains(id) {
                *expected.entry(grid_a.locate(c)).or_insert(0usize) += 1;
            }
        }
        let got: BTreeMap<Axial, usize> = same.inner.iter().map(|h| (h.axial, h.count)).collect();
        ensure!(got == expected, "trial {trial}: identity inner hexagons differ from the selection's cells");
        for h in &same.inner {
            ensure!(h.center == grid_a.center(h.axial), "inner hexagon off its outer cell");
            let outer = same.outer.iter().find(|o| o.axial == h.axial).ok_or("inner hexagon without an outer bin")?;
            ensure!(outer.selected, "inner hexagon under an unselected bin");
        }
    }
    Ok(format!("1000 points match exhaustive search; {partitions} layouts partition; 50 difference views conserve mass and coincide for A = B"))
}

/// A random but valid spelling of `g`: bracket atoms with explicit hydrogen
/// counts, explicit bond symbols, random start atoms and branch order.
fn respell(g: &MolecularGraph, rng: &mut ChaCha8Rng) -> String {
    struct Walk<'a> {
        g: &'a MolecularGraph,
        seen: Vec<bool>,
        used: Vec<bool>,
        children: Vec<Vec<(usize, usize)>>,
        closures: Vec<Vec<usize>>,
    }
    fn visit(w: &mut Walk, a: usize, rng: &mut ChaCha8Rng) {
        w.seen[a] = true;
        let mut nbrs = w.g.neighbors(a).to_vec();
        nbrs.shuffle(rng);
        for (nb, bond) in nbrs {
            if w.used[bond] {
                continue;
            }
            w.used[bond] = true;
            if w.seen[nb] {
                w.closures[a].push(bond);
                w.closures[nb].push(bond);
            } else {
                w.children[a].push((nb, bond));
                visit(w, nb, rng);
            }
        }
    }
    fn symbol(order: BondOrder) -> &'static str {
        match order {
            BondOrder::Single => "-",
            BondOrder::Double => "=",
            BondOrder::Triple => "#",
            BondOrder::Aromatic => ":",
        }
    }
    fn write(w: &Walk, a: usize, opened: &mut HashSet<usize>, out: &mut String) {
        let atom = &w.g.atoms()[a];
        let mut sym = atom.element.symbol().to_string();
        if atom.aromatic {
            sym = sym.to_lowercase();
        }
        out.push('[');
        if let Some(iso) = atom.isotope {
            out.push_str(&iso.to_string());
        }
        out.push_str(&sym);
        if atom.hydrogens > 0 {
            out.push_str(&format!("H{}", atom.hydrogens));
        }
        match atom.charge {
            0 => {}
            c if c > 0 => out.push_str(&format!("+{c}")),
            c => out.push_str(&format!("-{}", -c)),
        }
        out.push(']');
        for &bond in &w.closures[a] {
            if opened.insert(bond) {
                out.push_str(symbol(w.g.bonds()[bond].order));
            }
            out.push_str(&format!("%{}", 10 + bond));
        }
        let kids = &w.children[a];
        for (i, &(c, bond)) in kids.iter().enumerate() {
            let last = i + 1 == kids.len();
            if !last {
                out.push('(');
            }
            out.push_str(symbol(w.g.bonds()[bond].order));
            write(w, c, opened, out);
            if !last {
                out.push(')');
            }
        }
    }
    let n = g.atom_count();
    let mut w = Walk {
        g,
        seen: vec![false; n],
        used: vec![false; g.bond_count()],
        children: vec![Vec::new(); n],
        closures: vec![Vec::new(); n],
    };
    let mut starts: Vec<usize> = (0..n).collect();
    starts.shuffle(rng);
    let mut roots = Vec::new();
    for s in starts {
        if !w.seen[s] {
            visit(&mut w, s, rng);
            roots.push(s);
        }
    }
    let mut opened = HashSet::new();
    let parts: Vec<String> = roots
        .into_iter()
        .map(|r| {
            let mut out = String::new();
            write(&w, r, &mut opened, &mut out);
            out
        })
        .collect();
    parts.join(".")
}

fn corpus() -> Vec<String> {
    let mut smiles: Vec<String> = [
        "CC(=O)Oc1ccccc1C(=O)O",
        "CN1C=NC2=C1C(=O)N(C(=O)N2C)C",
        "CC(C)Cc1ccc(cc1)C(C)C(=O)O",
        "C[N+](C)(C)CCOC(=O)C",
        "[O-][N+](=O)c1ccc(Cl)cc1",
        "OC(=O)C[NH3+]",
        "c1ccc2[nH]ccc2c1",
        "C#CCO",
        "CC1=CC(=O)c2ccccc2C1=O",
        "FC(F)(F)c1ccc(Oc2ccc(cc2)[N+](=O)[O-])cc1",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    for name in ["serotonin_dopamine", "p_glycoprotein"] {
        let path = manifest(name).with_file_name("compounds.csv");
        let mut reader = csv::Reader::from_path(path).unwrap();
        for row in reader.records().step_by(5).take(20) {
            smiles.push(row.unwrap()[1].to_string());
        }
    }
    smiles
}

fn fingerprints() -> Outcome {
    let corpus = corpus();
    ensure!(corpus.len() == 50, "corpus has {} molecules", corpus.len());
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut spellings = 0;
    for s in &corpus {
        let g = parse_smiles(s).map_err(|e| format!("{s}: {e}"))?;
        let ecfp = compute_ecfp(&g, 2, 1024).unwrap();
        let path = compute_path_fingerprint(&g, 7, 1024).unwrap();
        ensure!(ecfp == compute_ecfp(&g, 2, 1024).unwrap(), "{s}: ECFP not deterministic");
        ensure!(path == compute_path_fingerprint(&g, 7, 1024).unwrap(), "{s}: path fingerprint not deterministic");
        ensure!(ecfp.tanimoto(&ecfp) == 1.0 && path.tanimoto(&path) == 1.0, "{s}: self-similarity below 1");
        for _ in 0..5 {
            let other = respell(&g, &mut rng);
            let h = parse_smiles(&other).map_err(|e| format!("{other}: {e}"))?;
            ensure!(h.atom_count() == g.atom_count(), "{other}: atom count changed");
            ensure!(compute_ecfp(&h, 2, 1024).unwrap() == ecfp, "{s} respelled as {other}: ECFP differs");
            ensure!(compute_path_fingerprint(&h, 7, 1024).unwrap() == path, "{s} respelled as {other}: path differs");
            spellings += 1;
        }
    }
    Ok(format!("50 molecules, {spellings} respellings, identical bits; self-Tanimoto 1"))
}

fn random_graph(rng: &mut ChaCha8Rng, size: usize) -> MolecularGraph {
    let elements = ["C", "C", "C", "N", "O"];
    let atoms: Vec<Atom> =
        (0..size).map(|_| Atom::new(Element::from_symbol(elements.choose(rng).unwrap()).unwrap())).collect();
    let mut degree = vec![0; size];
    let mut edges = BTreeSet::new();
    for i in 1..size {
        let candidates: Vec<usize> = (0..i).filter(|&j| degree[j] < 4).collect();
        let j = *candidates.choose(rng).unwrap();
        edges.insert((j, i));
        degree[i] += 1;
        degree[j] += 1;
    }
    for _ in 0..rng.random_range(0..3) {
        let (a, b) = (rng.random_range(0..size), rng.random_range(0..size));
        let (a, b) = (a.min(b), a.max(b));
        if a != b && degree[a] < 4 && degree[b] < 4 && edges.insert((a, b)) {
            degree[a] += 1;
            degree[b] += 1;
        }
    }
    let bonds = edges.into_iter().map(|(a, b)| Bond { a, b, order: BondOrder::Single }).collect();
    MolecularGraph::new(atoms, bonds).unwrap()
}

fn connected(g: &MolecularGraph, atoms: &[usize]) -> bool {
    let Some(&first) = atoms.first() else { return true };
    let mut reached = vec![first];
    let mut stack = vec![first];
    while let Some(a) = stack.pop() {
        for &(nb, _) in g.neighbors(a) {
            if atoms.contains(&nb) && !reached.contains(&nb) {
                reached.push(nb);
                stack.push(nb);
            }
        }
    }
    reached.len() == atoms.len()
}

fn embeds(g: &MolecularGraph, sub: &[usize], h: &MolecularGraph, map: &mut Vec<usize>) -> bool {
    if map.len() == sub.len() {
        return true;
    }
    let a = sub[map.len()];
    for cand in 0..h.atom_count() {
        if map.contains(&cand) || h.atoms()[cand].element != g.atoms()[a].element {
            continue;
        }
        let consistent = map
            .iter()
            .enumerate()
            .all(|(k, &m)| g.bond_between(sub[k], a).is_some() == h.bond_between(m, cand).is_some());
        if consistent {
            map.push(cand);
            if embeds(g, sub, h, map) {
                return true;
            }
            map.pop();
        }
    }
    false
}

/// Largest connected induced subgraph of `g` that also occurs in `h`.
fn brute_mcs(g: &MolecularGraph, h: &MolecularGraph) -> usize {
    let n = g.atom_count();
    let mut best = 0;
    for mask in 1u32..(1 << n) {
        let sub: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
        if sub.len() > best && connected(g, &sub) && embeds(g, &sub, h, &mut Vec::new()) {
            best = sub.len();
        }
    }
    best
}

fn rotation(rng: &mut ChaCha8Rng) -> [[f64; 3]; 3] {
    let q: [f64; 4] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
    let norm = q.iter().map(|v| v * v).sum::<f64>().sqrt();
    let [w, x, y, z] = q.map(|v| v / norm);
    [
        [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
        [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
        [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
    ]
}

fn alignment(p: &Prepared) -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst_rmsd = 0.0f64;
    let mut worst_ortho = 0.0f64;
    for conf in p.dataset.conformers.values().take(40) {
        let pts = &conf.positions;
        let (t, err) = kabsch(pts, pts).map_err(|e| e.to_string())?;
        worst_rmsd = worst_rmsd.max(err);
        worst_ortho = worst_ortho.max(t.orthonormality_error());
        let r = rotation(&mut rng);
        let shift: [f64; 3] = std::array::from_fn(|_| rng.random_range(-20.0..20.0));
        let moved: Vec<[f64; 3]> = pts
            .iter()
            .map(|q| std::array::from_fn(|i| r[i][0] * q[0] + r[i][1] * q[1] + r[i][2] * q[2] + shift[i]))
            .collect();
        let (t, _) = kabsch(pts, &moved).map_err(|e| e.to_string())?;
        let back: Vec<[f64; 3]> = moved.iter().map(|&q| t.apply(q)).collect();
        worst_rmsd = worst_rmsd.max(rmsd(pts, &back));
        worst_ortho = worst_ortho.max(t.orthonormality_error());
    }
    ensure!(worst_rmsd < 1e-6, "recovery RMSD {worst_rmsd:e}");
    ensure!(worst_ortho <= 1e-8, "orthonormality error {worst_ortho:e}");

    for c in p.dataset.compounds.iter().step_by(10) {
        let mcs = find_mcs(&[&c.graph, &c.graph], DEFAULT_MCS_BUDGET).map_err(|e| e.to_string())?;
        ensure!(mcs.template.atom_count() == c.graph.atom_count(), "{}: self-MCS is partial", c.id);
    }

    for case in 0..200 {
        let size = rng.random_range(2..=8);
        let g = random_graph(&mut rng, size);
        let size = rng.random_range(2..=8);
        let h = random_graph(&mut rng, size);
        let mcs = find_mcs(&[&g, &h], DEFAULT_MCS_BUDGET).map_err(|e| e.to_string())?;
        let want = brute_mcs(&g, &h).max(brute_mcs(&h, &g));
        ensure!(mcs.exact, "case {case}: search timed out");
        ensure!(
            mcs.template.atom_count() == want,
            "case {case}: MCS {} atoms, exhaustive {want}",
            mcs.template.atom_count()
        );
        let (mg, mh) = (&mcs.mappings[0], &mcs.mappings[1]);
        ensure!(connected(&g, mg), "case {case}: MCS is disconnected");
        for i in 0..mg.len() {
            ensure!(g.atoms()[mg[i]].element == h.atoms()[mh[i]].element, "case {case}: element mismatch");
            for j in 0..mg.len() {
                ensure!(
                    g.bond_between(mg[i], mg[j]).is_some() == h.bond_between(mh[i], mh[j]).is_some(),
                    "case {case}: mapping is not an induced isomorphism"
                );
            }
        }
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(60), "took {elapsed:?}");
    Ok(format!(
        "RMSD {worst_rmsd:.1e}, orthonormality {worst_ortho:.1e}; self-MCS whole; 200 small pairs match exhaustive MCS; {:.1} s",
        elapsed.as_secs_f64()
    ))
}

fn nearest_cells(grid: &HexGrid, q: [f64; 2], k: usize) -> Vec<Axial> {
    let home = grid.locate(q);
    let mut cells: Vec<Axial> = std::iter::once(home).chain(home.neighbors()).collect();
    let dist = |h: &Axial| {
        let c = grid.center(*h);
        (c[0] - q[0]).hypot(c[1] - q[1])
    };
    cells.sort_by(|a, b| dist(a).total_cmp(&dist(b)));
    cells.truncate(k);
    cells
}

fn add_compound(p: &Prepared) -> Outcome {
    let (status, session) = p.call(Method::POST, "/v1/sessions", None);
    ensure!(status == StatusCode::CREATED, "session: {status}");
    let sid = session["id"].as_str().unwrap().to_string();
    let reprs = [Representation::Ecfp, Representation::Path, Representation::Descriptors];
    let mut hits: BTreeMap<Representation, usize> = BTreeMap::new();
    let mut latencies = Vec::new();
    for c in &p.dataset.compounds {
        let start = Instant::now();
        let (status, added) =
            p.call(Method::POST, &format!("/v1/sessions/{sid}/compounds"), Some(json!({"smiles": c.smiles})));
        latencies.push(start.elapsed());
        ensure!(status == StatusCode::CREATED, "{}: {status} {added}", c.id);
        for repr in reprs {
            let (proj, _) = p.engine().projection(repr, ProjectionSource::Tsne).unwrap();
            let grid = HexGrid::default_for(proj.coords()).unwrap();
            let xy = &added["coordinates"][repr.as_str()];
            let placed = [xy[0].as_f64().ok_or("missing coordinates")?, xy[1].as_f64().ok_or("missing coordinates")?];
            let original = proj.position(&c.id).unwrap();
            if nearest_cells(&grid, original, 3).contains(&grid.locate(placed)) {
                *hits.entry(repr).or_default() += 1;
            }
        }
    }
    let n = p.dataset.compounds.len();
    let (best, best_hits) = hits.iter().max_by_key(|(_, &h)| h).map(|(r, h)| (*r, *h)).unwrap_or((reprs[0], 0));
    let share = best_hits as f64 / n as f64;
    latencies.sort();
    let worst = *latencies.last().unwrap();
    let summary: Vec<String> = hits.iter().map(|(r, h)| format!("{r} {h}/{n}")).collect();
    ensure!(share >= 0.8, "best representation {best} places {:.1}% ({})", share * 100.0, summary.join(", "));
    ensure!(worst <= Duration::from_secs(4), "slowest add took {worst:?}");
    Ok(format!(
        "{} within 3 nearest hexes (best {best} {:.1}%); latency median {:.0} ms, max {:.0} ms",
        summary.join(", "),
        share * 100.0,
        latencies[n / 2].as_secs_f64() * 1e3,
        worst.as_secs_f64() * 1e3
    ))
}

fn alignment_latency(p: &Prepared) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let ids: Vec<String> = p.dataset.conformers.keys().cloned().collect();
    let mut times = Vec::new();
    for _ in 0..15 {
        let k = rng.random_range(5..=30);
        let picked: Vec<String> = ids.choose_multiple(&mut rng, k).cloned().collect();
        let start = Instant::now();
        let (status, body) = p.call(Method::POST, "/v1/align", Some(json!({"ids": picked})));
        times.push(start.elapsed());
        ensure!(status == StatusCode::OK, "{k} compounds: {status} {body}");
        ensure!(body["compounds"].as_array().map(|a| a.len()) == Some(k), "{k} compounds: wrong result size");
    }
    times.sort();
    let median = times[times.len() / 2];
    ensure!(median <= Duration::from_secs(2), "median {median:?}");
    Ok(format!(
        "15 selections of 5-30: median {:.0} ms, max {:.0} ms",
        median.as_secs_f64() * 1e3,
        times.last().unwrap().as_secs_f64() * 1e3
    ))
}

fn main() {
    // libtest flags such as --nocapture or a name filter are accepted and ignored.
    let _ = std::env::args();
    let built = Instant::now();
    let prepared = catch_unwind(Prepared::build);
    let setup = built.elapsed();
    let prepared = match prepared {
        Ok(p) => Some(p),
        Err(_) => {
            println!("setup: FAIL (fixture pipeline panicked)");
            None
        }
    };
    let needs = |f: fn(&Prepared) -> Outcome| -> Box<dyn Fn() -> Outcome + '_> {
        match &prepared {
            Some(p) => Box::new(move || f(p)),
            None => Box::new(|| Err("fixture pipeline unavailable".into())),
        }
    };
    let criteria: Vec<(&str, Duration, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("activity labeling", Duration::from_secs(1), Box::new(activity_labels)),
        ("descriptor preprocessing", Duration::from_secs(1), Box::new(descriptor_preprocessing)),
        ("t-SNE internals", Duration::from_secs(30), needs(tsne_internals)),
        ("parametric projector", Duration::from_secs(600), needs(projector)),
        ("trust scores", Duration::from_secs(60), Box::new(trust_scores)),
        ("hex binning and difference view", Duration::from_secs(60), needs(hexes)),
        ("fingerprints", Duration::from_secs(60), Box::new(fingerprints)),
        ("alignment", Duration::from_secs(60), needs(alignment)),
        ("add compound end-to-end", Duration::from_secs(600), needs(add_compound)),
        ("alignment service latency", Duration::from_secs(600), needs(alignment_latency)),
    ];
    println!("fixture pipeline ready in {:.1} s", setup.as_secs_f64());
    let mut failed = 0;
    for (i, (name, budget, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(_) if elapsed > *budget => Err(format!("exceeded {budget:?} with {elapsed:?}")),
            other => other,
        };
        match outcome {
            Ok(detail) => println!("criterion {:>2} {name}: PASS ({detail}) [{:.2} s]", i + 1, elapsed.as_secs_f64()),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} {name}: FAIL ({why}) [{:.2} s]", i + 1, elapsed.as_secs_f64());
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
