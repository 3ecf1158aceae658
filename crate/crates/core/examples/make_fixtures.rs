//! Regenerates the synthetic datasets under `fixtures/`.
//!
//! ```text
//! cargo run -p molscape-core --example make_fixtures -- fixtures
//! ```

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use molscape_core::align::{write_sdf, Conformer3D, RigidTransform};
use molscape_core::chem::{
    compute_descriptors, ecfp_identifiers, fnv1a64, parse_smiles, MolecularGraph, HETEROATOM_COUNT, MOLECULAR_WEIGHT,
    RING_COUNT, ROTATABLE_BOND_COUNT,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

const AMINERGIC: &[&str] = &[
    "c1cc({a})ccc1N2CCN(CCCCc3ccc({b})cc3)CC2",
    "c1cc({a})c(OC)cc1N2CCN(CCCN3C(=O)c4ccccc4C3=O)CC2",
    "c1cc({a})cnc1CNCC2CCc3cc({b})ccc3C2",
    "c1cc({a})c2c(c1)CCC(C2)N(CCC)CC({b})",
    "c1cc({a})c2c(c1)CCC(O2)CNCc3cncc(c3)c4ccc({b})cc4",
    "c1cc({a})c2c(c1)c(CCN({b})C)c[nH]2",
    "O=C(CCCN1CCC(CC1)({b})O)c2ccc({a})cc2",
    "c1cc({a})c(OC)c(c1)C(=O)NCC2CCCN2C({b})",
    "O=C1CCc2ccc(OCCCCN3CCN(CC3)c4ccc({b})c({a})c4)cc2N1",
    "c1c({a})nc(nc1)N2CCN(CC2)CCCCN3C(=O)CC4(CCCC4)CC3=O",
    "c1cc({a})c2c(c1)onc2C3CCN(CC3)CCc4ccc({b})cc4",
];

const TRANSPORTER: &[&str] = &[
    "COc1ccc(cc1({a}))CCN(C)CCCC(C#N)(C(C)C)c2ccc(OC)c({b})c2",
    "COc1cc2CCN(Cc2cc1OC)CCc3ccc(NC(=O)c4ccc({a})cc4)cc3",
    "O=C1CC(Oc2cc({a})cc(O)c12)c3ccc({b})cc3",
    "c1cc({a})ccc1C(c2ccc({b})cc2)N3CCN(CC3)CC=Cc4ccccc4",
    "CC(C)NCC(O)COc1ccc({a})c2ccccc12",
    "O=C(Nc1ccc({a})cc1)c2ccc(cc2)CN3CCN(C)CC3",
];

const SUBSTITUENTS: &[&str] = &[
    "",
    "F",
    "Cl",
    "Br",
    "C",
    "OC",
    "C(F)(F)F",
    "C#N",
    "N(C)C",
    "O",
    "C(=O)N",
    "c8ccccc8",
    "C9CC9",
    "OCC",
    "S(=O)(=O)C",
    "N",
    "C(C)C",
    "OC(F)(F)F",
];

fn fill(template: &str, a: &str, b: &str) -> String {
    let mut s = template.to_string();
    for (slot, sub) in [("{a}", a), ("{b}", b)] {
        if sub.is_empty() {
            s = s.replace(&format!("({slot})"), "");
        }
        s = s.replace(slot, sub);
    }
    s
}

struct Generated {
    id: String,
    smiles: String,
    graph: MolecularGraph,
    scaffold: usize,
    subs: [usize; 2],
}

fn library(prefix: &str, scaffolds: &[&str], n: usize, rng: &mut ChaCha8Rng) -> Vec<Generated> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    while out.len() < n {
        let scaffold = rng.random_range(0..scaffolds.len());
        let subs = [rng.random_range(0..SUBSTITUENTS.len()), rng.random_range(0..SUBSTITUENTS.len())];
        let b = if scaffolds[scaffold].contains("{b}") { subs[1] } else { 0 };
        let smiles = fill(scaffolds[scaffold], SUBSTITUENTS[subs[0]], SUBSTITUENTS[b]);
        if !seen.insert(smiles.clone()) {
            continue;
        }
        let graph = parse_smiles(&smiles).unwrap_or_else(|e| panic!("{smiles}: {e}"));
        out.push(Generated {
            id: format!("{prefix}{:04}", out.len() + 1),
            smiles,
            graph,
            scaffold,
            subs: [subs[0], b],
        });
    }
    out
}

/// Log-uniform IC50 values with exact class counts; lower scores are more potent.
fn assign_ic50(scores: &[f64], counts: [usize; 3], rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&i, &j| scores[i].total_cmp(&scores[j]));
    let mut ic50 = vec![0.0; scores.len()];
    let log_uniform =
        |rng: &mut ChaCha8Rng, lo: f64, hi: f64| (lo.ln() + rng.random::<f64>() * (hi.ln() - lo.ln())).exp();
    for (rank, &i) in order.iter().enumerate() {
        ic50[i] = if rank < counts[0] {
            log_uniform(rng, 0.3, 9.9)
        } else if rank < counts[0] + counts[1] {
            match rank - counts[0] {
                0 => 10.0,
                1 => 1000.0,
                _ => log_uniform(rng, 10.0, 1000.0),
            }
        } else {
            log_uniform(rng, 1000.5, 80_000.0)
        };
    }
    ic50
}

fn scores(mols: &[Generated], seed: u64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let noise = Normal::new(0.0, 0.6).unwrap();
    mols.iter()
        .map(|m| {
            let h = |k: u64| (fnv1a64(&(seed * 1000 + k).to_le_bytes()) % 1000) as f64 / 1000.0;
            2.0 * h(m.scaffold as u64)
                + 0.7 * h(100 + m.subs[0] as u64)
                + 0.4 * h(200 + m.subs[1] as u64)
                + noise.sample(rng)
        })
        .collect()
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.4}")).unwrap_or_default()
}

/// Sum of hashed Gaussian vectors over the ECFP identifiers, unit length.
fn embedding(graph: &MolecularGraph, dim: usize) -> Vec<f64> {
    let mut v = vec![0.0; dim];
    for id in ecfp_identifiers(graph, 1).unwrap() {
        let mut rng = ChaCha8Rng::seed_from_u64(id);
        let normal = Normal::new(0.0, 1.0).unwrap();
        v.iter_mut().for_each(|x| *x += normal.sample(&mut rng));
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| x / norm).collect()
}

fn topological_distances(graph: &MolecularGraph) -> Vec<Vec<usize>> {
    let n = graph.atom_count();
    (0..n)
        .map(|s| {
            let mut d = vec![usize::MAX; n];
            d[s] = 0;
            let mut queue = VecDeque::from([s]);
            while let Some(u) = queue.pop_front() {
                for &(v, _) in graph.neighbors(u) {
                    if d[v] == usize::MAX {
                        d[v] = d[u] + 1;
                        queue.push_back(v);
                    }
                }
            }
            d
        })
        .collect()
}

/// Crude 3D coordinates from stress minimization on graph distances.
fn embed_3d(graph: &MolecularGraph, rng: &mut ChaCha8Rng) -> Vec<[f64; 3]> {
    let d = topological_distances(graph);
    let n = graph.atom_count();
    let target = |k: usize| match k {
        1 => 1.45,
        2 => 2.45,
        k => 1.3 * k as f64,
    };
    let mut x: Vec<[f64; 3]> = (0..n).map(|_| std::array::from_fn(|_| rng.random::<f64>() * n as f64 * 0.5)).collect();
    for _ in 0..400 {
        let mut next = vec![[0.0; 3]; n];
        for i in 0..n {
            let mut weight = 0.0;
            for j in 0..n {
                if i == j {
                    continue;
                }
                let t = target(d[i][j]);
                let w = 1.0 / (t * t);
                let diff: [f64; 3] = std::array::from_fn(|k| x[i][k] - x[j][k]);
                let dist = diff.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-9);
                for k in 0..3 {
                    next[i][k] += w * (x[j][k] + t * diff[k] / dist);
                }
                weight += w;
            }
            for k in 0..3 {
                next[i][k] /= weight;
            }
        }
        x = next;
    }
    x
}

fn random_pose(rng: &mut ChaCha8Rng) -> RigidTransform {
    let normal = Normal::new(0.0, 1.0).unwrap();
    let q: [f64; 4] = std::array::from_fn(|_| normal.sample(rng));
    let n = q.iter().map(|v| v * v).sum::<f64>().sqrt();
    let [w, x, y, z] = q.map(|v| v / n);
    RigidTransform {
        rotation: [
            [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - z * w), 2.0 * (x * z + y * w)],
            [2.0 * (x * y + z * w), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - x * w)],
            [2.0 * (x * z - y * w), 2.0 * (y * z + x * w), 1.0 - 2.0 * (x * x + y * y)],
        ],
        translation: std::array::from_fn(|_| rng.random_range(-20.0..20.0)),
    }
}

struct Plan<'a> {
    dir: &'a str,
    name: &'a str,
    prefix: &'a str,
    scaffolds: Vec<&'a str>,
    n: usize,
    targets: Vec<(&'a str, [usize; 3])>,
    extra_descriptors: bool,
    conformers: bool,
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
}

fn generate(root: &Path, plan: &Plan, seed: u64) {
    let dir = root.join(plan.dir);
    std::fs::create_dir_all(&dir).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mols = library(plan.prefix, &plan.scaffolds, plan.n, &mut rng);

    let ic50: Vec<Vec<f64>> = plan
        .targets
        .iter()
        .enumerate()
        .map(|(t, (_, counts))| {
            let s = scores(&mols, seed + t as u64, &mut rng);
            assign_ic50(&s, *counts, &mut rng)
        })
        .collect();

    let noise = Normal::new(0.0, 0.5).unwrap();
    let mut csv = String::from("id,smiles");
    for (t, _) in &plan.targets {
        write!(csv, ",ic50_{t}").unwrap();
    }
    csv.push_str(",logp,acidic_pka,basic_pka,qed,scaffold\n");
    for (i, m) in mols.iter().enumerate() {
        let d = compute_descriptors(&m.graph).unwrap();
        let mw = d.get(MOLECULAR_WEIGHT).unwrap();
        let hetero = d.get(HETEROATOM_COUNT).unwrap();
        let logp = (rng.random::<f64>() > 0.03).then(|| -1.5 + 0.017 * mw - 0.2 * hetero + noise.sample(&mut rng));
        let acidic = (rng.random::<f64>() < 0.35).then(|| rng.random_range(2.5..12.0));
        let basic = m.smiles.contains('N').then(|| rng.random_range(6.0..10.5)).filter(|_| rng.random::<f64>() > 0.1);
        let qed = (rng.random::<f64>() > 0.05)
            .then(|| (0.9 - (mw - 350.0).abs() / 700.0 + 0.1 * noise.sample(&mut rng)).clamp(0.05, 0.95));
        write!(csv, "{},{}", m.id, m.smiles).unwrap();
        for t in &ic50 {
            write!(csv, ",{:.3}", t[i]).unwrap();
        }
        writeln!(csv, ",{},{},{},{},{}", fmt_opt(logp), fmt_opt(acidic), fmt_opt(basic), fmt_opt(qed), m.scaffold)
            .unwrap();
    }
    write(&dir.join("compounds.csv"), &csv);

    let mut emb = String::from("id");
    for k in 0..32 {
        write!(emb, ",e{k}").unwrap();
    }
    emb.push('\n');
    for m in &mols {
        emb.push_str(&m.id);
        for v in embedding(&m.graph, 32) {
            write!(emb, ",{v:.6}").unwrap();
        }
        emb.push('\n');
    }
    write(&dir.join("embeddings.csv"), &emb);

    let mut manifest = serde_json::json!({
        "version": 1,
        "name": plan.name,
        "compounds": "compounds.csv",
        "targets": plan.targets.iter().map(|(t, _)| serde_json::json!({"name": t, "column": format!("ic50_{t}")})).collect::<Vec<_>>(),
        "features": ["logp", "acidic_pka", "basic_pka", "qed", "scaffold"],
        "embeddings": "embeddings.csv",
    });

    if plan.extra_descriptors {
        let mut desc = String::from("id,wiener_index,balaban_j,sparse_topology,gappy_polarity\n");
        for m in &mols {
            let d = topological_distances(&m.graph);
            let wiener: usize = d.iter().flatten().sum::<usize>() / 2;
            let rings = compute_descriptors(&m.graph).unwrap().get(RING_COUNT).unwrap();
            let rot = compute_descriptors(&m.graph).unwrap().get(ROTATABLE_BOND_COUNT).unwrap();
            let sparse = (rng.random::<f64>() < 0.7).then(|| rings * 1.7 + rng.random::<f64>());
            let gappy = (rng.random::<f64>() > 0.05).then(|| rot * 0.8 + noise.sample(&mut rng));
            let balaban = 1.0 + rings / (1.0 + rot) + 0.1 * noise.sample(&mut rng);
            writeln!(desc, "{},{wiener},{balaban:.4},{},{}", m.id, fmt_opt(sparse), fmt_opt(gappy)).unwrap();
        }
        write(&dir.join("descriptors.csv"), &desc);
        manifest["descriptors"] = "descriptors.csv".into();
    }

    if plan.conformers {
        let records: Vec<_> = mols
            .iter()
            .map(|m| {
                let pose = random_pose(&mut rng);
                let positions: Vec<[f64; 3]> =
                    embed_3d(&m.graph, &mut rng).into_iter().map(|p| pose.apply(p)).collect();
                let conf = Conformer3D {
                    id: m.id.clone(),
                    elements: m.graph.atoms().iter().map(|a| a.element).collect(),
                    positions: positions.clone(),
                    had_hydrogens: false,
                };
                conf.to_record(&m.graph, &positions, BTreeMap::from([("id".to_string(), m.id.clone())]))
            })
            .collect();
        write(&dir.join("conformers.sdf"), &write_sdf(&records));
        manifest["conformers"] = "conformers.sdf".into();
    }

    write(&dir.join("manifest.json"), &(serde_json::to_string_pretty(&manifest).unwrap() + "\n"));
    println!("{}: {} compounds", dir.display(), mols.len());
}

fn main() {
    let root: PathBuf = std::env::args().nth(1).unwrap_or_else(|| "fixtures".into()).into();
    generate(
        &root,
        &Plan {
            dir: "serotonin_dopamine",
            name: "serotonin-dopamine",
            prefix: "SD",
            scaffolds: AMINERGIC.to_vec(),
            n: 118,
            targets: vec![("serotonin_1a", [14, 42, 62]), ("dopamine_d2", [5, 28, 85])],
            extra_descriptors: false,
            conformers: true,
        },
        118,
    );
    generate(
        &root,
        &Plan {
            dir: "p_glycoprotein",
            name: "p-glycoprotein",
            prefix: "PG",
            scaffolds: AMINERGIC.iter().chain(TRANSPORTER).copied().collect(),
            n: 893,
            targets: vec![("p_glycoprotein", [42, 178, 673])],
            extra_descriptors: true,
            conformers: false,
        },
        893,
    );
}
