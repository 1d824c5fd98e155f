//! Acceptance suite: one line per criterion, non-zero exit if any fails.
//! Runs without the libtest harness so the report is always printed.

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use emtask_core::dataset::{
    kfold_by_material, pearson, pearson_matrix, Dataset, DedupePolicy, FeatureRow, FeatureTable, Fidelity, Property,
    PropertyChannel, PropertyRegistry, Transform,
};
use emtask_core::descriptors::{
    atom_estates, estate_vector, featurize, gas_product_ratio, oxygen_balance, vdw_volume, FeatureSchema,
};
use emtask_core::eval::{format_pm, mean_std, rmse, run_protocol_on_table, ModelFamily, ProtocolConfig};
use emtask_core::forest::{fit_forest, ForestConfig, Node};
use emtask_core::molgraph::parse_smiles;
use emtask_core::mtnn::{fit_mtnn, mse, train, GridCell, MTNet, MTNetConfig, NnGrid, Sample, SelectorLayer, TrainConfig};
use emtask_core::persist::{load_model, save_mtnn, MtnnBundle, SavedModel};
use emtask_core::rng::SplitMix64;

const DESCRIPTOR_TOL: f64 = 1e-9;
const ESTATE_TOL: f64 = 1e-9;
const FD_TOL: f64 = 1e-5;
const FD_STEP: f64 = 1e-6;
const KINK_MARGIN: f64 = 1e-3;
const TOY_RMSE: f64 = 1e-2;
const PROTOCOL_STD_FRACTION: f64 = 0.05;
const RMSE_TOL: f64 = 1e-9;
const PEARSON_TOL: f64 = 1e-12;

const CRIT1_LIMIT: Duration = Duration::from_secs(1);
const CRIT4_LIMIT: Duration = Duration::from_secs(30);
const CRIT7_LIMIT: Duration = Duration::from_secs(120);

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn close(got: f64, want: f64, tol: f64, what: &str) -> Result<(), String> {
    ensure((got - want).abs() <= tol, || format!("{what}: got {got}, want {want} (tol {tol:e})"))
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed <= limit, || format!("took {elapsed:.2?}, limit {limit:?}"))
}

fn fixtures() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures"))
}

fn corpus() -> Vec<(String, String)> {
    include_str!("../../core/tests/data/molecules.tsv")
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| {
            let cols: Vec<&str> = l.split('\t').collect();
            (cols[0].to_string(), cols[1].to_string())
        })
        .collect()
}

const TNT: &str = "Cc1c(cc(cc1[N+](=O)[O-])[N+](=O)[O-])[N+](=O)[O-]";
const RDX: &str = "C1N(CN(CN1[N+](=O)[O-])[N+](=O)[O-])[N+](=O)[O-]";
const NG: &str = "C(C(CO[N+](=O)[O-])O[N+](=O)[O-])O[N+](=O)[O-]";

fn crit1_descriptor_oracle() -> Outcome {
    let start = Instant::now();
    let counts = |s: &str| parse_smiles(s).unwrap().molecular_formula();
    // C7H5N3O6, 21 atoms: 100/21 * (6 - 14 - 2.5).
    close(oxygen_balance(&counts(TNT)), 100.0 / 21.0 * -10.5, DESCRIPTOR_TOL, "OB100(TNT)")?;
    close(oxygen_balance(&counts(TNT)), -50.0, DESCRIPTOR_TOL, "OB100(TNT) literal")?;
    // C3H5N3O9, 20 atoms: 100/20 * (9 - 6 - 2.5).
    close(oxygen_balance(&counts(NG)), 2.5, DESCRIPTOR_TOL, "OB100(NG)")?;
    // C3H6N6O6: (336 + 528 - 48) / (144 + 24 + 336 + 384).
    close(gas_product_ratio(&counts(RDX)).unwrap(), 816.0 / 888.0, DESCRIPTOR_TOL, "G(RDX)")?;
    close(gas_product_ratio(&counts(RDX)).unwrap(), 0.918918918918919, DESCRIPTOR_TOL, "G(RDX) literal")?;
    // C7H5N3O6: (168 + 528 - 40) / (336 + 20 + 168 + 384).
    close(gas_product_ratio(&counts(TNT)).unwrap(), 656.0 / 908.0, DESCRIPTOR_TOL, "G(TNT)")?;
    close(gas_product_ratio(&counts(TNT)).unwrap(), 0.722466960352423, DESCRIPTOR_TOL, "G(TNT) literal")?;
    // Each ethane carbon: delta_v = 4 - 3, delta = 1, N = 2, so I = 2 and
    // the symmetric perturbations cancel.
    let (n_heavy, delta_v, delta) = (2.0f64, 1.0, 1.0);
    let intrinsic = ((2.0 / n_heavy).powi(2) * delta_v + 1.0) / delta;
    close(estate_vector(&parse_smiles("CC").unwrap())[0], 2.0 * intrinsic, DESCRIPTOR_TOL, "S_C(ethane)")?;
    // One carbon, four hydrogens, four bonds.
    close(vdw_volume(&parse_smiles("C").unwrap()), 20.58 + 4.0 * 7.24 - 5.92 * 4.0, DESCRIPTOR_TOL, "V_vdW(CH4)")?;
    close(vdw_volume(&parse_smiles("C").unwrap()), 25.86, DESCRIPTOR_TOL, "V_vdW(CH4) literal")?;
    let elapsed = start.elapsed();
    within(elapsed, CRIT1_LIMIT)?;
    Ok(format!("6 oracles within {DESCRIPTOR_TOL:e} in {elapsed:.2?}"))
}

/// Distinct spellings of the same molecule: atom order, ring-closure
/// labels, nitro notation, explicit hydrogens and bracket atoms.
const SPELLINGS: [&[&str]; 12] = [
    &[TNT, "Cc1c(N(=O)=O)cc(N(=O)=O)cc1N(=O)=O", "[O-][N+](=O)c1cc([N+]([O-])=O)c(C)c([N+]([O-])=O)c1"],
    &[RDX, "[O-][N+](=O)N1CN([N+]([O-])=O)CN([N+]([O-])=O)C1", "O=N(=O)N1CN(N(=O)=O)CN(N(=O)=O)C1"],
    &[NG, "O=N(=O)OCC(ON(=O)=O)CON(=O)=O"],
    &[
        "C1N(CN(CN(CN1[N+](=O)[O-])[N+](=O)[O-])[N+](=O)[O-])[N+](=O)[O-]",
        "O=N(=O)N1CN(N(=O)=O)CN(N(=O)=O)CN(N(=O)=O)C1",
    ],
    &[
        "C(C(CO[N+](=O)[O-])(CO[N+](=O)[O-])CO[N+](=O)[O-])O[N+](=O)[O-]",
        "O=N(=O)OCC(CON(=O)=O)(CON(=O)=O)CON(=O)=O",
    ],
    &[
        "Nc1c(c(N)c(c(N)c1[N+](=O)[O-])[N+](=O)[O-])[N+](=O)[O-]",
        "[O-][N+](=O)c1c(N)c([N+]([O-])=O)c(N)c([N+]([O-])=O)c1N",
    ],
    &["C[N+](=O)[O-]", "[O-][N+](C)=O", "[CH3][N+](=O)[O-]"],
    &["NC(N)=C([N+](=O)[O-])[N+](=O)[O-]", "[O-][N+](=O)C(=C(N)N)[N+]([O-])=O"],
    &["O=C1NN=C(N1)[N+](=O)[O-]", "[O-][N+](=O)C1=NNC(=O)N1"],
    &["c1ccc2ccccc2c1", "c1cc2ccccc2cc1", "c%10ccc2ccccc2c%10"],
    &["OCC", "[H]OC([H])([H])C", "C(O)C"],
    &["C1C(CN1[N+](=O)[O-])([N+](=O)[O-])[N+](=O)[O-]", "O=N(=O)N1CC(C1)(N(=O)=O)N(=O)=O"],
];

fn crit2_representation_invariance() -> Outcome {
    let mut compared = 0;
    for group in SPELLINGS {
        let graphs: Vec<_> = group.iter().map(|s| parse_smiles(s).unwrap()).collect();
        let schema = FeatureSchema::from_graphs(&graphs, false);
        let first = featurize(&graphs[0], &schema, None).map_err(|e| format!("{}: {e}", group[0]))?;
        for (s, g) in group.iter().zip(&graphs).skip(1) {
            let v = featurize(g, &schema, None).map_err(|e| format!("{s}: {e}"))?;
            ensure(v == first, || format!("{} and {s} differ", group[0]))?;
            compared += 1;
        }
    }
    ensure(SPELLINGS.len() >= 10, || "fewer than 10 molecules".into())?;
    Ok(format!("{} molecules, {compared} alternate spellings, exact equality", SPELLINGS.len()))
}

fn crit3_estate_conservation() -> Outcome {
    let corpus = corpus();
    let mut worst: f64 = 0.0;
    for (name, smiles) in &corpus {
        let states = atom_estates(&parse_smiles(smiles).unwrap());
        let s: f64 = states.iter().map(|a| a.estate).sum();
        let i: f64 = states.iter().map(|a| a.intrinsic).sum();
        worst = worst.max((s - i).abs());
        close(s, i, ESTATE_TOL, name)?;
    }
    Ok(format!("{} corpus molecules, max |sum S - sum I| = {worst:.1e}", corpus.len()))
}

/// Independent forward pass; also reports the smallest absolute hidden
/// pre-activation.
fn reference_forward(net: &MTNet, x: &[f64], sel: &[f64]) -> (f64, f64) {
    let cfg = net.config();
    let sel_layer = (cfg.selector_dim > 0).then(|| cfg.selector_layer_index - 1);
    let n = net.layers().len();
    let mut a = x.to_vec();
    let mut closest = f64::INFINITY;
    for k in 0..n {
        if sel_layer == Some(k) {
            a.extend_from_slice(sel);
        }
        let l = net.layers()[k];
        let (w, b) = (net.weights(k), net.bias(k));
        let z: Vec<f64> = (0..l.fan_out)
            .map(|o| b[o] + (0..l.fan_in).map(|i| w[o * l.fan_in + i] * a[i]).sum::<f64>())
            .collect();
        if k + 1 == n {
            return (z[0], closest);
        }
        closest = z.iter().fold(closest, |m, v| m.min(v.abs()));
        a = z.iter().map(|v| v.max(0.0)).collect();
    }
    unreachable!("output layer returns")
}

struct Batch {
    xs: Vec<Vec<f64>>,
    sels: Vec<Vec<f64>>,
    ys: Vec<f64>,
}

impl Batch {
    fn samples(&self) -> Vec<Sample<'_>> {
        (0..self.ys.len())
            .map(|i| Sample {
                features: &self.xs[i],
                selector: &self.sels[i],
                target: self.ys[i],
            })
            .collect()
    }
}

/// Case `i` fixes depth, selector width and selector position so the 200
/// cases sweep every combination; draws repeat until every hidden
/// pre-activation clears the rectifier kink.
fn gradient_case(i: usize, rng: &mut SplitMix64) -> (MTNet, Batch) {
    let depth = 1 + i % 3;
    let selector_dim = (i / 3) % 4;
    let selector_layer_index = 1 + (i / 12) % depth;
    loop {
        let config = MTNetConfig {
            input_dim: 1 + rng.below(6),
            selector_dim,
            hidden_sizes: (0..depth).map(|_| 1 + rng.below(8)).collect(),
            selector_layer_index,
            l2_penalty: if rng.below(2) == 0 { 0.0 } else { 0.1 * rng.next_f64() },
            seed: rng.next_u64(),
        };
        let mut net = MTNet::new(config.clone()).unwrap();
        for p in net.params_mut() {
            *p += 0.1 * (rng.next_f64() - 0.5);
        }
        let n = 1 + rng.below(6);
        let xs: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..config.input_dim).map(|_| 2.0 * rng.next_f64() - 1.0).collect())
            .collect();
        let sels: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                let mut s = vec![0.0; selector_dim];
                if selector_dim > 0 {
                    s[rng.below(selector_dim)] = 1.0;
                }
                s
            })
            .collect();
        let ys = (0..n).map(|_| 2.0 * rng.next_f64() - 1.0).collect();
        if xs.iter().zip(&sels).all(|(x, s)| reference_forward(&net, x, s).1 > KINK_MARGIN) {
            return (net, Batch { xs, sels, ys });
        }
    }
}

/// `|g - fd| / (|g| + |fd|)` over the whole parameter vector.
fn fd_relative_error(net: &MTNet, batch: &Batch) -> f64 {
    let samples = batch.samples();
    let (_, analytic) = net.loss_and_gradient(&samples).unwrap();
    let mut probe = net.clone();
    let (mut num, mut na, mut nf) = (0.0, 0.0, 0.0);
    for (i, g) in analytic.iter().enumerate() {
        let orig = probe.params()[i];
        probe.params_mut()[i] = orig + FD_STEP;
        let up = probe.loss(&samples).unwrap();
        probe.params_mut()[i] = orig - FD_STEP;
        let down = probe.loss(&samples).unwrap();
        probe.params_mut()[i] = orig;
        let fd = (up - down) / (2.0 * FD_STEP);
        num += (g - fd).powi(2);
        na += g * g;
        nf += fd * fd;
    }
    let den = na.sqrt() + nf.sqrt();
    if den < 1e-12 {
        num.sqrt()
    } else {
        num.sqrt() / den
    }
}

fn crit4_gradient_check() -> Outcome {
    let start = Instant::now();
    let mut rng = SplitMix64::new(2024);
    let mut worst: f64 = 0.0;
    let mut positions = BTreeSet::new();
    for i in 0..200 {
        let (net, batch) = gradient_case(i, &mut rng);
        let err = fd_relative_error(&net, &batch);
        worst = worst.max(err);
        let cfg = net.config();
        if cfg.selector_dim > 0 {
            positions.insert((cfg.hidden_sizes.len(), cfg.selector_layer_index));
        }
        ensure(err < FD_TOL, || format!("case {i}: relative error {err:e}"))?;
    }
    ensure(positions.len() == 6, || format!("covered selector positions {positions:?}"))?;
    let elapsed = start.elapsed();
    within(elapsed, CRIT4_LIMIT)?;
    Ok(format!("200 cases, 6 selector positions, max rel err {worst:.1e} in {elapsed:.2?}"))
}

fn onehot(n: usize, k: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[k] = 1.0;
    v
}

fn crit5_selector_behavior() -> Outcome {
    let mut rng = SplitMix64::new(55);
    let mut zeroed = 0;
    for depth in 1..=3 {
        for index in 1..=depth {
            for trial in 0..10 {
                let mut net = MTNet::new(MTNetConfig {
                    input_dim: 3,
                    selector_dim: 4,
                    hidden_sizes: vec![5; depth],
                    selector_layer_index: index,
                    l2_penalty: 0.0,
                    seed: rng.next_u64(),
                })
                .unwrap();
                let (layer, cols) = net.selector_columns().unwrap();
                let fan_in = net.layers()[layer].fan_in;
                let w = net.layers()[layer].weight_range();
                for o in 0..net.layers()[layer].fan_out {
                    for c in cols.clone() {
                        net.params_mut()[w.start + o * fan_in + c] = 0.0;
                    }
                }
                let x: Vec<f64> = (0..3).map(|_| 2.0 * rng.next_f64() - 1.0).collect();
                let base = net.forward(&x, &onehot(4, 0)).unwrap();
                for k in 1..4 {
                    let out = net.forward(&x, &onehot(4, k)).unwrap();
                    ensure(out.to_bits() == base.to_bits(), || {
                        format!("depth {depth}, index {index}, trial {trial}: {out} vs {base}")
                    })?;
                }
                ensure(net.forward(&x, &[0.0; 4]).unwrap().to_bits() == base.to_bits(), || {
                    "zero selector differs".into()
                })?;
                zeroed += 1;
            }
            // Positive weights and inputs keep every unit active; selector
            // column k carries weight k, so outputs rise with k.
            let mut net = MTNet::new(MTNetConfig {
                input_dim: 3,
                selector_dim: 4,
                hidden_sizes: vec![5; depth],
                selector_layer_index: index,
                l2_penalty: 0.0,
                seed: 0,
            })
            .unwrap();
            net.params_mut().fill(0.1);
            let (layer, cols) = net.selector_columns().unwrap();
            let fan_in = net.layers()[layer].fan_in;
            let w = net.layers()[layer].weight_range();
            for o in 0..net.layers()[layer].fan_out {
                for (k, c) in cols.clone().enumerate() {
                    net.params_mut()[w.start + o * fan_in + c] = k as f64;
                }
            }
            let outs: Vec<f64> = (0..4).map(|k| net.forward(&[0.5, 0.2, 0.9], &onehot(4, k)).unwrap()).collect();
            ensure(outs.windows(2).all(|p| p[1] > p[0]), || {
                format!("depth {depth}, index {index}: outputs {outs:?} not distinct")
            })?;
        }
    }
    Ok(format!("{zeroed} zeroed nets selector-blind (bitwise), 6 constructed nets separate all 4 channels"))
}

fn random_dataset_csv(rng: &mut SplitMix64, n: usize) -> String {
    const SMILES: [&str; 6] = ["CC", "CO", "CN", "CCC", "OCCO", "C[N+](=O)[O-]"];
    let reg = PropertyRegistry::default_registry();
    let mut out = String::from("material_id,smiles,property,fidelity,value,density\n");
    for m in 0..n {
        let mut any = false;
        for (c, ch) in reg.channels().iter().enumerate() {
            let last = c + 1 == reg.len();
            if rng.below(3) == 0 || (last && !any) {
                any = true;
                out.push_str(&format!(
                    "m{m:03},{},{},{},{},\n",
                    SMILES[m % SMILES.len()],
                    ch.property,
                    ch.fidelity,
                    1.0 + 10.0 * rng.next_f64()
                ));
            }
        }
    }
    out
}

fn crit6_split_hygiene() -> Outcome {
    let mut rng = SplitMix64::new(6);
    let mut pairs = 0;
    for d in 0..50 {
        let n = 5 + rng.below(40);
        let k = 2 + rng.below(4);
        let text = random_dataset_csv(&mut rng, n);
        let data = Dataset::from_reader(text.as_bytes(), &PropertyRegistry::default_registry(), DedupePolicy::Reject)
            .map_err(|e| format!("dataset {d}: {e}"))?;
        let schema = FeatureSchema::from_graphs(data.materials().iter().map(|m| &m.graph), false);
        let table = FeatureTable::build(&data, &schema).unwrap();
        let ids = table.materials();
        for seed in [0u64, 1, 2, rng.next_u64()] {
            let plan = kfold_by_material(&ids, k, seed).unwrap();
            let again = kfold_by_material(&ids, k, seed).unwrap();
            ensure(plan == again, || format!("dataset {d}, seed {seed}: plans differ across runs"))?;
            let mut tested = BTreeSet::new();
            for f in 0..k {
                let (train, test): (Vec<&FeatureRow>, Vec<&FeatureRow>) =
                    table.rows.iter().partition(|r| plan.fold_of(&r.material) != Some(f));
                let train_m: BTreeSet<&str> = train.iter().map(|r| r.material.as_str()).collect();
                let test_m: BTreeSet<&str> = test.iter().map(|r| r.material.as_str()).collect();
                ensure(train_m.is_disjoint(&test_m), || format!("dataset {d}, seed {seed}, fold {f}: straddle"))?;
                ensure(train_m.len() + test_m.len() == ids.len(), || format!("dataset {d}: lost materials"))?;
                for m in test_m {
                    ensure(tested.insert(m), || format!("dataset {d}: {m} tested twice"))?;
                }
                pairs += 1;
            }
            ensure(tested.len() == ids.len(), || format!("dataset {d}, seed {seed}: folds miss materials"))?;
        }
    }
    Ok(format!("50 datasets, {pairs} (seed, fold) pairs clean"))
}

fn three_channel_registry() -> PropertyRegistry {
    PropertyRegistry::new(vec![
        PropertyChannel::new(Property::DetVelocity, Fidelity::Exp, "km/s", Transform::None),
        PropertyChannel::new(Property::DetPressure, Fidelity::Exp, "GPa", Transform::None),
        PropertyChannel::new(Property::HeatDetonation, Fidelity::Exp, "kJ/g", Transform::None),
    ])
    .unwrap()
}

/// 60 materials, three uniform features on [-1, 1], three channels that are
/// independent exact linear maps of the features.
fn linear_table() -> FeatureTable {
    let mut rng = SplitMix64::new(1);
    let d = 3;
    let w: Vec<Vec<f64>> = (0..3).map(|_| (0..d).map(|_| 2.0 * rng.next_f64() - 1.0).collect()).collect();
    let mut rows = Vec::new();
    for i in 0..60 {
        let x: Vec<f64> = (0..d).map(|_| 2.0 * rng.next_f64() - 1.0).collect();
        for (c, wc) in w.iter().enumerate() {
            rows.push(FeatureRow {
                material: format!("m{i:02}"),
                features: x.clone(),
                channel: c,
                target: wc.iter().zip(&x).map(|(a, b)| a * b).sum(),
            });
        }
    }
    FeatureTable {
        channels: three_channel_registry().channels().to_vec(),
        feature_names: (0..d).map(|j| format!("x{j}")).collect(),
        rows,
    }
}

fn crit7_overfit_sanity() -> Outcome {
    let start = Instant::now();
    let xs = [[-1.0], [-0.3], [0.4], [1.0]];
    let sel = [1.0];
    let samples: Vec<Sample> = xs
        .iter()
        .map(|x| Sample {
            features: x,
            selector: &sel,
            target: x[0],
        })
        .collect();
    let net = MTNet::new(MTNetConfig {
        input_dim: 1,
        selector_dim: 1,
        hidden_sizes: vec![16, 16],
        selector_layer_index: 2,
        l2_penalty: 0.0,
        seed: 3,
    })
    .unwrap();
    let cfg = TrainConfig {
        learning_rate: 1e-2,
        batch_size: 4,
        max_epochs: 2000,
        patience: 2000,
        ..TrainConfig::default()
    };
    let out = train(&net, &samples, &samples, &cfg).unwrap();
    let toy = mse(&out.net, &samples).unwrap().sqrt();
    ensure(toy < TOY_RMSE, || format!("toy train rmse {toy:e}"))?;
    ensure(out.history.len() <= 2000, || "more than 2000 epochs".into())?;

    let table = linear_table();
    let cfg = ProtocolConfig {
        nn_grid: NnGrid {
            hidden_sizes: vec![vec![16]],
            selector_layer: vec![SelectorLayer::LAST],
            learning_rate: vec![1e-2],
            batch_size: vec![16],
            l2_penalty: vec![0.0],
            max_epochs: 3000,
            patience: 3000,
        },
        ..ProtocolConfig::new(ModelFamily::MtNn, None, false)
    };
    let report = run_protocol_on_table(&table, &cfg).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for (c, s) in report.channels.iter().enumerate() {
        let ys: Vec<f64> = table.channel_rows(c).map(|r| r.target).collect();
        let (_, std) = mean_std(&ys).unwrap();
        worst = worst.max(s.rmse_mean / std);
        ensure(s.n_points == 15, || format!("{}: {} points", s.channel, s.n_points))?;
        ensure(s.rmse_mean < PROTOCOL_STD_FRACTION * std, || {
            format!("{}: rmse {} vs std {std}", s.channel, s.rmse_mean)
        })?;
    }
    let elapsed = start.elapsed();
    within(elapsed, CRIT7_LIMIT)?;
    Ok(format!(
        "toy rmse {toy:.1e}; protocol worst channel rmse/std {:.1}% in {elapsed:.2?}",
        100.0 * worst
    ))
}

fn sse(ys: &[f64]) -> f64 {
    let m = ys.iter().sum::<f64>() / ys.len() as f64;
    ys.iter().map(|y| (y - m).powi(2)).sum()
}

/// Every feature and midpoint, both sides' SSE recomputed from scratch; a
/// later candidate wins only by more than the tie tolerance.
fn exhaustive_split(x: &[Vec<f64>], y: &[f64]) -> Option<(usize, f64)> {
    let parent = sse(y);
    let eps = 1e-12 * parent.max(1.0);
    let mut best: Option<(usize, f64, f64)> = None;
    for f in 0..x[0].len() {
        let mut v: Vec<f64> = x.iter().map(|r| r[f]).collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        for p in v.windows(2) {
            let t = (p[0] + p[1]) / 2.0;
            let left: Vec<f64> = (0..y.len()).filter(|&i| x[i][f] <= t).map(|i| y[i]).collect();
            let right: Vec<f64> = (0..y.len()).filter(|&i| x[i][f] > t).map(|i| y[i]).collect();
            let gain = parent - sse(&left) - sse(&right);
            if gain > eps && best.is_none_or(|b| gain > b.2 + eps) {
                best = Some((f, t, gain));
            }
        }
    }
    best.map(|b| (b.0, b.1))
}

fn crit8_forest_oracle() -> Outcome {
    let mut rng = SplitMix64::new(8);
    let mut splits = 0;
    for case in 0..100 {
        let n = 2 + rng.below(11);
        let d = 1 + rng.below(3);
        // Half-integer features and integer targets make ties common.
        let x: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| (rng.below(9) as f64 - 4.0) / 2.0).collect()).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.below(11) as f64 - 5.0).collect();
        let forest = fit_forest(
            &x,
            &y,
            &ForestConfig {
                n_trees: 1,
                max_depth: 1,
                min_samples_leaf: 1,
                max_features: d,
                seed: rng.next_u64(),
                bootstrap: false,
            },
        )
        .unwrap();
        let got = match forest.trees[0].nodes[0] {
            Node::Split { feature, threshold, .. } => Some((feature, threshold)),
            Node::Leaf { .. } => None,
        };
        let want = exhaustive_split(&x, &y);
        splits += usize::from(want.is_some());
        ensure(got == want, || format!("case {case}: got {got:?}, oracle {want:?}"))?;
    }
    Ok(format!("100 datasets exact ({splits} splits, {} leaves)", 100 - splits))
}

fn crit9_metrics_oracle() -> Outcome {
    close(rmse(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 12.5f64.sqrt(), RMSE_TOL, "rmse")?;
    close(rmse(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 3.5355339059327378, RMSE_TOL, "rmse literal")?;
    // Means 2 and 2: sxy = 1, sxx = syy = 2.
    close(pearson(&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0]).unwrap(), 0.5, PEARSON_TOL, "pearson")?;

    // D exp on m1..m5, P exp on m3..m7 (P = 2 D + 1 on the overlap),
    // Q_ex exp on m8, m9 only.
    let mut text = String::from("material_id,smiles,property,fidelity,value,density\n");
    let d = [1.0, 2.5, 3.0, 4.5, 7.0];
    let p_extra = [11.0, 3.0];
    for (i, v) in d.iter().enumerate() {
        text.push_str(&format!("m{},CC,det_velocity,exp,{v},\n", i + 1));
    }
    for i in 3..=7 {
        let v = if i <= 5 { 2.0 * d[i - 1] + 1.0 } else { p_extra[i - 6] };
        text.push_str(&format!("m{i},CC,det_pressure,exp,{v},\n"));
    }
    text.push_str("m8,CC,heat_detonation,exp,4.0,\nm9,CC,heat_detonation,exp,5.0,\n");
    let data = Dataset::from_reader(text.as_bytes(), &three_channel_registry(), DedupePolicy::Reject)
        .map_err(|e| e.to_string())?;
    let m = pearson_matrix(&data);
    let want_overlap = [[5, 3, 0], [3, 5, 0], [0, 0, 2]];
    for (i, want_row) in want_overlap.iter().enumerate() {
        for (j, &want) in want_row.iter().enumerate() {
            ensure(m.overlap[i][j] == want, || format!("overlap[{i}][{j}] = {}, want {want}", m.overlap[i][j]))?;
            ensure(m.r[i][j] == m.r[j][i], || format!("r not symmetric at ({i}, {j})"))?;
        }
        ensure(m.r[i][i] == Some(1.0), || format!("diagonal {i} is {:?}", m.r[i][i]))?;
    }
    close(m.r[0][1].unwrap(), 1.0, PEARSON_TOL, "r(D, P) on overlap")?;
    ensure(m.r[0][2].is_none(), || "disjoint channels must be undefined".into())?;
    Ok("rmse, pearson and 3x3 sparse matrix exact".into())
}

fn emtask(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_emtask"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), || {
        format!("emtask {}: {}", args.join(" "), String::from_utf8_lossy(&out.stderr).trim())
    })
}

fn evaluate_fixture(out: &Path, jobs: &str) -> Result<(), String> {
    let data = fixtures().join("all_channels.csv");
    let grid = fixtures().join("tiny_grid.json");
    emtask(&[
        "evaluate",
        "--data",
        data.to_str().unwrap(),
        "--subset",
        "all",
        "--density",
        "--no-density",
        "--grid",
        grid.to_str().unwrap(),
        "--jobs",
        jobs,
        "--out",
        out.to_str().unwrap(),
    ])
}

fn without_timing(path: &Path) -> serde_json::Value {
    let mut v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    let obj = v.as_object_mut().unwrap();
    obj.remove("started_unix_seconds");
    obj.remove("wall_clock_seconds");
    v
}

fn crit10_determinism_and_persistence() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    evaluate_fixture(&a, "1")?;
    evaluate_fixture(&b, "4")?;
    let files = ["report.csv", "folds.csv", "table.md", "bars.csv", "improvements.csv", "reports.json"];
    for f in files {
        let (x, y) = (std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap());
        ensure(!x.is_empty() && x == y, || format!("{f} differs between runs"))?;
    }
    ensure(without_timing(&a.join("manifest.json")) == without_timing(&b.join("manifest.json")), || {
        "manifests differ beyond timing".into()
    })?;

    let registry = PropertyRegistry::default_registry();
    let data = Dataset::load_records(fixtures().join("all_channels.csv"), &registry, DedupePolicy::Reject)
        .map_err(|e| e.to_string())?;
    let schema = FeatureSchema::from_graphs(data.materials().iter().map(|m| &m.graph), true);
    let table = FeatureTable::build(&data, &schema).map_err(|e| e.to_string())?;
    let rows: Vec<&FeatureRow> = table.rows.iter().collect();
    let cell = GridCell {
        hidden_sizes: vec![12, 6],
        selector_layer_index: 2,
        learning_rate: 1e-2,
        batch_size: 16,
        l2_penalty: 1e-4,
    };
    let model = fit_mtnn(&rows, &table.channels, true, &cell, 30, 10, 77).map_err(|e| e.to_string())?;
    let bundle = MtnnBundle {
        model,
        schema: schema.clone(),
        registry,
    };
    let path = dir.path().join("m.emmt");
    save_mtnn(&path, &bundle).map_err(|e| e.to_string())?;
    let SavedModel::Mtnn(loaded) = load_model(&path).map_err(|e| e.to_string())? else {
        return Err("wrong model kind".into());
    };
    ensure(loaded.model.net.params() == bundle.model.net.params(), || "parameters differ".into())?;
    let mut rng = SplitMix64::new(10);
    let channels = bundle.registry.len();
    for i in 0..100 {
        let x: Vec<f64> = (0..schema.len()).map(|_| 4.0 * rng.next_f64() - 2.0).collect();
        let c = i % channels;
        let p = bundle.model.predict_transformed(&x, c).unwrap();
        let q = loaded.model.predict_transformed(&x, c).unwrap();
        ensure(p.to_bits() == q.to_bits(), || format!("input {i}: {p} vs {q}"))?;
    }
    Ok(format!(
        "{} artifacts byte-identical across --jobs 1/4; 100 reloaded predictions bit-identical",
        files.len()
    ))
}

const TABLE1_CHANNELS: [&str; 11] = [
    "det_velocity:exp",
    "det_pressure:exp",
    "heat_detonation:exp",
    "impact_h50:exp",
    "heat_form_crystal:exp",
    "det_velocity:calc",
    "det_pressure:calc",
    "heat_detonation:calc",
    "gurney_energy:calc",
    "heat_sublimation:calc",
    "heat_form_gas:calc",
];

/// `| <model> (<mode>) | m.mmm ± s.sss | m.mmm ± s.sss |`.
fn table_row_ok(line: &str) -> bool {
    let cells: Vec<&str> = line.trim_matches('|').split(" | ").map(str::trim).collect();
    let pm = |s: &str| {
        let parts: Vec<&str> = s.split(" ± ").collect();
        parts.len() == 2
            && parts.iter().all(|p| {
                p.parse::<f64>().is_ok() && p.rsplit_once('.').is_some_and(|(_, frac)| frac.len() == 3)
            })
    };
    cells.len() == 3
        && (cells[0].ends_with("(molecular descriptors only)")
            || cells[0].ends_with("(density + molecular descriptors)"))
        && pm(cells[1])
        && (pm(cells[2]) || cells[2] == "NA")
}

fn crit11_reproduction_harness() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let out = dir.path().join("eval");
    evaluate_fixture(&out, "2")?;

    let mut reader = csv::Reader::from_path(out.join("report.csv")).map_err(|e| e.to_string())?;
    let mut cells: BTreeMap<(String, String), (usize, f64, f64)> = BTreeMap::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| e.to_string())?;
        let key = (format!("{} {}", &rec[0], &rec[1]), rec[2].to_string());
        let n: usize = rec[4].parse().unwrap();
        ensure(n == 15, || format!("{key:?}: {n} fold points"))?;
        cells.insert(key, (n, rec[5].parse().unwrap(), rec[6].parse().unwrap()));
    }
    let models: BTreeSet<&String> = cells.keys().map(|k| &k.0).collect();
    ensure(models.len() == 6, || format!("expected 3 models x 2 density modes, got {models:?}"))?;
    for m in &models {
        for ch in TABLE1_CHANNELS {
            ensure(cells.contains_key(&((*m).clone(), ch.to_string())), || format!("{m} lacks {ch}"))?;
        }
    }

    let md = std::fs::read_to_string(out.join("table.md")).unwrap();
    let section: Vec<&str> = md
        .split("### ")
        .find(|s| s.starts_with("log(h50) exp"))
        .ok_or("no log(h50) table")?
        .lines()
        .collect();
    ensure(section.get(2) == Some(&"| Model | Test RMSE | Test R² |"), || "bad table header".into())?;
    let body: Vec<&str> = section.iter().skip(4).filter(|l| l.starts_with('|')).copied().collect();
    ensure(body.len() == 6, || format!("{} log(h50) rows", body.len()))?;
    for line in &body {
        ensure(table_row_ok(line), || format!("malformed row {line}"))?;
    }
    for ((model, ch), (_, mean, std)) in &cells {
        if ch == "impact_h50:exp" {
            let pm = format_pm(*mean, *std);
            ensure(body.iter().any(|l| l.contains(&pm)), || format!("{model}: {pm} missing from table"))?;
        }
    }
    let bars = std::fs::read_to_string(out.join("bars.csv")).unwrap();
    ensure(bars.lines().count() == 1 + 6 * 12, || "bars.csv shape".into())?;
    let improvements = std::fs::read_to_string(out.join("improvements.csv")).unwrap();
    ensure(improvements.lines().count() == 1 + 2 * 12, || "improvements.csv shape".into())?;

    ensure(format_pm(0.2381, 0.0103) == "0.238 ± 0.010", || "format_pm fixture".into())?;
    Ok(format!(
        "{} (model, channel) cells x 15 points; log(h50) table {} rows well formed",
        cells.len(),
        body.len()
    ))
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("descriptor oracle", crit1_descriptor_oracle),
        ("representation invariance", crit2_representation_invariance),
        ("e-state conservation", crit3_estate_conservation),
        ("gradient check", crit4_gradient_check),
        ("selector behavior", crit5_selector_behavior),
        ("split hygiene", crit6_split_hygiene),
        ("overfit sanity", crit7_overfit_sanity),
        ("forest split oracle", crit8_forest_oracle),
        ("metrics oracle", crit9_metrics_oracle),
        ("determinism and persistence", crit10_determinism_and_persistence),
        ("reproduction harness", crit11_reproduction_harness),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let result = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match result {
            Ok(detail) => println!("criterion {:>2} PASS {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL {name}: {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
