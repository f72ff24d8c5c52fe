//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;
use std::time::{Duration, Instant};

use hofs::criteria::{select_greedy, Criterion};
use hofs::data::{discretize, BinScheme, DataTable, DiscretizedView, FeatureKind, PreparedData};
use hofs::eval::{
    cross_validate, information_gain_curve, plugin_global_mi, rank_features, CvProtocol, Folds,
    GlobalMiMethod, Method, TrainConfig,
};
use hofs::hofs::{Engine, HofsConfig, SelectionTrace, SubsetPartition};
use hofs::ica::{infomax_gradient, infomax_log_likelihood, ColumnId, IcaConfig, IcaModel};
use hofs::infotheory::{self, Base};
use hofs::stats;
use hofs::synth::{gen_hetero, gen_tree, HeteroModelSpec, TreeModelSpec};
use nalgebra::DMatrix;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

struct TreeRun {
    table: DataTable,
    data: PreparedData,
    partition: SubsetPartition,
    trace: SelectionTrace,
    elapsed: Duration,
}

fn tree_run() -> TreeRun {
    let table = gen_tree(&TreeModelSpec::default()).unwrap();
    let start = Instant::now();
    let config = HofsConfig {
        t: 9,
        ..HofsConfig::default()
    };
    let data = PreparedData::new(&table, config.bins, config.scheme).unwrap();
    let (partition, trace) = Engine::new(&data, config).unwrap().run().unwrap();
    TreeRun {
        elapsed: start.elapsed(),
        table,
        data,
        partition,
        trace,
    }
}

fn tree_config() -> HofsConfig {
    HofsConfig {
        t: 9,
        ..HofsConfig::default()
    }
}

fn named_sets(table: &DataTable, sets: &[Vec<usize>]) -> Vec<Vec<String>> {
    sets.iter()
        .map(|s| s.iter().map(|&j| table.feature_names()[j].clone()).collect())
        .collect()
}

fn as_set_of_sets(sets: &[Vec<String>]) -> BTreeSet<BTreeSet<String>> {
    sets.iter().map(|s| s.iter().cloned().collect()).collect()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let table = gen_tree(&TreeModelSpec::default()).unwrap();
    let view = discretize(&table, 10, BinScheme::EqualFrequency).unwrap();
    let expected = [0.111, 0.052, 0.022, 0.058, 0.058, 0.025, 0.029, 0.012, 0.012];
    let got: Vec<f64> = (0..9)
        .map(|j| infotheory::mutual_information(&[view.column(j)], &[view.labels()]).unwrap())
        .collect();
    let worst = got
        .iter()
        .zip(expected)
        .map(|(g, e)| (g - e).abs())
        .fold(0.0, f64::max);
    let elapsed = start.elapsed();
    outcome(
        worst <= 0.01 && elapsed < Duration::from_secs(30),
        format!(
            "MI {:?}, max deviation {worst:.4} nats, {:.1}s",
            got.iter().map(|v| (v * 1000.0).round() / 1000.0).collect::<Vec<_>>(),
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_2(run: &TreeRun) -> Outcome {
    let got = named_sets(&run.table, &run.partition.feature_sets());
    let want: Vec<Vec<String>> = [["x1", "x4", "x5"], ["x2", "x6", "x7"], ["x3", "x8", "x9"]]
        .iter()
        .map(|s| s.iter().map(|v| v.to_string()).collect())
        .collect();
    let first = run.table.feature_names()[run.trace.steps[0].chosen].clone();
    outcome(
        as_set_of_sets(&got) == as_set_of_sets(&want)
            && first == "x1"
            && run.elapsed < Duration::from_secs(120),
        format!("partition {got:?}, first {first}, {:.1}s", run.elapsed.as_secs_f64()),
    )
}

struct HeteroRun {
    table: DataTable,
    data: PreparedData,
    partition: SubsetPartition,
    trace: SelectionTrace,
    elapsed: Duration,
}

fn hetero_config() -> HofsConfig {
    HofsConfig {
        t: 14,
        ..HofsConfig::default()
    }
}

fn hetero_run() -> HeteroRun {
    let table = gen_hetero(&HeteroModelSpec::default()).unwrap();
    let start = Instant::now();
    let config = hetero_config();
    let data = PreparedData::new(&table, config.bins, config.scheme).unwrap();
    let (partition, trace) = Engine::new(&data, config).unwrap().run().unwrap();
    HeteroRun {
        elapsed: start.elapsed(),
        table,
        data,
        partition,
        trace,
    }
}

fn criterion_3(run: &HeteroRun) -> Outcome {
    let sets = named_sets(&run.table, &run.partition.feature_sets());
    let first: BTreeSet<String> = sets[0].iter().cloned().collect();
    let want: BTreeSet<String> = ["F1", "F6", "F2", "F7"].iter().map(|s| s.to_string()).collect();
    let order: Vec<String> = run
        .trace
        .order()
        .iter()
        .map(|&j| run.table.feature_names()[j].clone())
        .collect();
    let noise: Vec<&String> = order
        .iter()
        .take(14)
        .filter(|n| ["F16", "F17", "F18", "F19", "F20"].contains(&n.as_str()))
        .collect();
    outcome(
        first == want && noise.is_empty() && run.elapsed < Duration::from_secs(60),
        format!(
            "first subset {:?}, noise in first 14 {noise:?}, order {order:?}, {:.1}s",
            sets[0],
            run.elapsed.as_secs_f64()
        ),
    )
}

fn criterion_4() -> Outcome {
    let x1 = vec![0.0, 0.0, 1.0, 1.0];
    let x2 = vec![0.0, 1.0, 0.0, 1.0];
    let x3 = vec![0.0; 4];
    let y: Vec<u32> = vec![1, 0, 0, 1];
    let table = DataTable::new(
        vec![x1, x2, x3],
        vec!["x1".into(), "x2".into(), "x3".into()],
        vec![FeatureKind::Categorical; 3],
        y,
        vec!["0".into(), "1".into()],
    )
    .unwrap();
    let data = PreparedData::new(&table, 5, BinScheme::EqualFrequency).unwrap();
    let joint = Base::Bits.convert(plugin_global_mi(&data, &[0, 1]).unwrap());
    let i1 = plugin_global_mi(&data, &[0]).unwrap();
    let i2 = plugin_global_mi(&data, &[1]).unwrap();
    let engine = Engine::new(&data, HofsConfig { t: 1, ..HofsConfig::default() }).unwrap();
    let mut partition = SubsetPartition::default();
    engine.assign_subset(&mut partition, 0).unwrap();
    let s2 = engine.hofs_score(1, &partition).unwrap();
    let s3 = engine.hofs_score(2, &partition).unwrap();
    outcome(
        (joint - 1.0).abs() <= 1e-12 && i1 == 0.0 && i2 == 0.0 && s2 > s3,
        format!("I(x1,x2:y) = {joint} bit, I(x1:y) = {i1}, I(x2:y) = {i2}, score(x2) = {s2:e}, score(x3) = {s3:e}"),
    )
}

/// Entropy from a fully materialized probability table.
#[allow(clippy::needless_range_loop)]
fn oracle_entropy(cols: &[Vec<u32>], idx: &[usize]) -> f64 {
    if idx.is_empty() {
        return 0.0;
    }
    let n = cols[0].len();
    let mut table: BTreeMap<Vec<u32>, usize> = BTreeMap::new();
    for i in 0..n {
        *table.entry(idx.iter().map(|&j| cols[j][i]).collect()).or_default() += 1;
    }
    table
        .values()
        .map(|&c| {
            let p = c as f64 / n as f64;
            -p * p.ln()
        })
        .sum()
}

fn oracle_mi(cols: &[Vec<u32>], a: &[usize], b: &[usize], given: &[usize]) -> f64 {
    let cat = |x: &[usize], y: &[usize]| -> Vec<usize> { x.iter().chain(y).copied().collect() };
    let v = oracle_entropy(cols, &cat(a, given)) + oracle_entropy(cols, &cat(b, given))
        - oracle_entropy(cols, &cat(&cat(a, b), given))
        - oracle_entropy(cols, given);
    v.max(0.0)
}

/// Straightforward re-scoring of the greedy criteria from the oracle.
fn oracle_order(criterion: Criterion, cols: &[Vec<u32>], y: usize, t: usize) -> Vec<usize> {
    let m = cols.len() - 1;
    let mut selected: Vec<usize> = Vec::new();
    while selected.len() < t {
        let mut best: Option<(usize, f64)> = None;
        for i in 0..m {
            if selected.contains(&i) {
                continue;
            }
            let rel = oracle_mi(cols, &[i], &[y], &[]);
            let score = if selected.is_empty() {
                rel
            } else {
                match criterion {
                    Criterion::Mrmr => {
                        let red: f64 = selected.iter().map(|&j| oracle_mi(cols, &[i], &[j], &[])).sum();
                        rel - red / selected.len() as f64
                    }
                    Criterion::Jmi => selected.iter().map(|&j| oracle_mi(cols, &[i, j], &[y], &[])).sum(),
                    Criterion::Cmim => {
                        let pen = selected
                            .iter()
                            .map(|&j| oracle_mi(cols, &[i], &[j], &[]) - oracle_mi(cols, &[i], &[j], &[y]))
                            .fold(f64::NEG_INFINITY, f64::max);
                        rel - pen
                    }
                    _ => unreachable!(),
                }
            };
            if best.is_none_or(|(_, b)| score > b + 1e-12) {
                best = Some((i, score));
            }
        }
        selected.push(best.unwrap().0);
    }
    selected
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let n = rng.random_range(1..=64);
        let k = rng.random_range(2..=4);
        let alphabet = rng.random_range(1..=3);
        let cols: Vec<Vec<u32>> = (0..k)
            .map(|_| (0..n).map(|_| rng.random_range(0..alphabet)).collect())
            .collect();
        let refs: Vec<&[u32]> = cols.iter().map(Vec::as_slice).collect();
        let all: Vec<usize> = (0..k).collect();
        let rest: Vec<usize> = (2..k).collect();
        let checks = [
            (infotheory::entropy(refs[0]).unwrap(), oracle_entropy(&cols, &[0])),
            (infotheory::joint_entropy(&refs).unwrap(), oracle_entropy(&cols, &all)),
            (
                infotheory::conditional_entropy(&refs[..1], &refs[1..]).unwrap(),
                (oracle_entropy(&cols, &all) - oracle_entropy(&cols, &all[1..])).max(0.0),
            ),
            (
                infotheory::mutual_information(&refs[..1], &refs[1..2]).unwrap(),
                oracle_mi(&cols, &[0], &[1], &[]),
            ),
            (
                infotheory::conditional_mutual_information(&refs[..1], &refs[1..2], &refs[2..]).unwrap(),
                oracle_mi(&cols, &[0], &[1], &rest),
            ),
        ];
        for (got, want) in checks {
            worst = worst.max((got - want).abs());
        }
    }
    let mut mismatches = Vec::new();
    for seed in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let n = 200;
        let y: Vec<u32> = (0..n).map(|_| rng.random_range(0..3)).collect();
        let mut cols: Vec<Vec<u32>> = (0..10)
            .map(|j| {
                (0..n)
                    .map(|i| {
                        if j < 4 && rng.random_bool(0.6) {
                            y[i] % 2 + (j as u32 % 2) * (y[i] / 2)
                        } else {
                            rng.random_range(0..3)
                        }
                    })
                    .collect()
            })
            .collect();
        let view = DiscretizedView::from_codes(cols.clone(), y.clone()).unwrap();
        cols.push(y);
        for c in [Criterion::Mrmr, Criterion::Jmi, Criterion::Cmim] {
            let got = select_greedy(c, &view, 10).unwrap().order;
            let want = oracle_order(c, &cols, 10, 10);
            if got != want {
                mismatches.push(format!("seed {seed} {c}: {got:?} vs {want:?}"));
            }
        }
    }
    outcome(
        worst <= 1e-12 && mismatches.is_empty(),
        format!("max oracle deviation {worst:.1e}; greedy order mismatches {mismatches:?}"),
    )
}

fn zcol(v: &[f64]) -> Arc<[f64]> {
    Arc::from(stats::zscore(v))
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut normal = |n: usize| -> Vec<f64> { (0..n).map(|_| StandardNormal.sample(&mut rng)).collect() };

    // (a) analytic gradient vs central differences, full batch.
    let xs: Vec<Vec<f64>> = (0..3).map(|_| normal(400)).collect();
    let inputs: Vec<&[f64]> = xs.iter().map(Vec::as_slice).collect();
    let mut wr = ChaCha8Rng::seed_from_u64(61);
    let w = DMatrix::from_fn(3, 3, |i, j| f64::from(u8::from(i == j)) + wr.random_range(-0.4..0.4));
    let g = infomax_gradient(&w, &inputs).unwrap();
    let h = 1e-6;
    let mut grad_err = 0.0f64;
    for i in 0..3 {
        for j in 0..3 {
            let mut p = w.clone();
            p[(i, j)] += h;
            let mut m = w.clone();
            m[(i, j)] -= h;
            let fd = (infomax_log_likelihood(&p, &inputs) - infomax_log_likelihood(&m, &inputs)) / (2.0 * h);
            grad_err = grad_err.max((fd - g[(i, j)]).abs() / g[(i, j)].abs().max(1e-3));
        }
    }

    // (b) two uniform sources mixed by a lower-triangular matrix.
    let mut ur = ChaCha8Rng::seed_from_u64(62);
    let r3 = 3f64.sqrt();
    let s1: Vec<f64> = (0..5000).map(|_| ur.random_range(-r3..r3)).collect();
    let s2: Vec<f64> = (0..5000).map(|_| ur.random_range(-r3..r3)).collect();
    let x2: Vec<f64> = s1.iter().zip(&s2).map(|(a, b)| 0.8 * a + b).collect();
    let cfg = IcaConfig::default();
    let model = IcaModel::fit_batch(
        &[ColumnId::Feature(0), ColumnId::Feature(1)],
        &[zcol(&s1), zcol(&x2)],
        &cfg,
    )
    .unwrap();
    let unmix_corr = model.avg_pearson();

    // (c) joint entropy of three small-alphabet columns.
    let a: Vec<f64> = normal(20000).iter().map(|v| v * 1.2).collect();
    let b: Vec<f64> = a.iter().zip(normal(20000)).map(|(a, e)| 0.6 * a + e).collect();
    let c: Vec<f64> = b.iter().zip(normal(20000)).map(|(b, e)| 0.4 * b + e).collect();
    let cols: Vec<Vec<f64>> = [a, b, c]
        .iter()
        .map(|v| v.iter().map(|x| x.round().clamp(-2.0, 2.0)).collect())
        .collect();
    let codes: Vec<Vec<u32>> = cols.iter().map(|v| v.iter().map(|x| (x + 2.0) as u32).collect()).collect();
    let code_refs: Vec<&[u32]> = codes.iter().map(Vec::as_slice).collect();
    let brute = infotheory::joint_entropy(&code_refs).unwrap();
    let ids: Vec<ColumnId> = (0..3).map(ColumnId::Feature).collect();
    let z: Vec<Arc<[f64]>> = cols.iter().map(|v| zcol(v)).collect();
    let joint = IcaModel::fit_batch(&ids, &z, &cfg).unwrap();
    // Undo the standardization's scaling: H(X) = H(Z) + Σ log σ_j.
    let log_scale: f64 = cols.iter().map(|v| 0.5 * stats::variance(v).ln()).sum();
    let estimate = joint.joint_entropy_estimate().unwrap() + log_scale;
    let rel = (estimate - brute).abs() / brute;

    // (d) structure after every append.
    let mut structural = true;
    let mut m = IcaModel::empty(cfg.signal_entropy);
    for (k, col) in z.iter().enumerate() {
        let next = m.append(ColumnId::Feature(k), col.clone(), &cfg).unwrap();
        for r in 0..m.dim() {
            structural &= next.row(r) == m.row(r) && next.signal(r) == m.signal(r);
        }
        let w = next.unmixing();
        for i in 0..w.nrows() {
            for j in i + 1..w.ncols() {
                structural &= w[(i, j)] == 0.0;
            }
        }
        let diag_log: f64 = (0..w.nrows()).map(|i| w[(i, i)].abs().ln()).sum();
        structural &= next.log_abs_det().unwrap() == diag_log;
        let det = w.determinant().abs();
        let prod: f64 = (0..w.nrows()).map(|i| w[(i, i)]).product::<f64>().abs();
        structural &= (det - prod).abs() <= 1e-9 * prod;
        m = next;
    }

    outcome(
        grad_err < 1e-4 && unmix_corr < 0.1 && rel < 0.1 && structural,
        format!(
            "(a) gradient rel err {grad_err:.1e}; (b) unmixed |r| {unmix_corr:.4}; (c) estimate {estimate:.4} vs brute {brute:.4} ({:.1}%); (d) {}",
            rel * 100.0,
            if structural { "ok" } else { "violated" }
        ),
    )
}

fn criterion_7(tree: &TreeRun, hetero: &HeteroRun) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, data, partition, config) in [
        ("tree", &tree.data, &tree.partition, tree_config()),
        ("hetero", &hetero.data, &hetero.partition, hetero_config()),
    ] {
        let engine = Engine::new(data, config).unwrap();
        let pearson = engine.pearson_diagnostics(partition).overall;
        let rb = engine.r_balance(partition).unwrap().mean.unwrap_or(f64::NAN);
        pass &= pearson < 0.15 && (0.85..=1.15).contains(&rb);
        parts.push(format!("{name}: avg |Pearson| {pearson:.4}, R_balance {rb:.3}"));
    }
    outcome(pass, parts.join("; "))
}

fn criterion_8(run: &TreeRun) -> Outcome {
    let engine = Engine::new(&run.data, tree_config()).unwrap();
    let order = run.trace.order();
    let gains = information_gain_curve(&engine, &order).unwrap();
    let total = hofs::eval::global_mi(&engine, &order, GlobalMiMethod::IcaPartition).unwrap();
    let sum: f64 = gains.iter().sum();
    let tail = gains.iter().skip(4).fold(0.0f64, |a, g| a.max(g.abs()));
    outcome(
        (gains[0] - 0.111).abs() <= 0.01 && tail <= 0.02 && (sum - total).abs() <= 1e-12,
        format!(
            "gains {:?}, max |gain| from step 5 {tail:.4}, telescoping error {:.1e}",
            gains.iter().map(|g| (g * 10000.0).round() / 10000.0).collect::<Vec<_>>(),
            (sum - total).abs()
        ),
    )
}

fn criterion_9(run: &TreeRun) -> Outcome {
    let protocol = CvProtocol {
        folds: Folds::KFold(10),
        seed: 9,
        feature_counts: vec![3],
    };
    let train = TrainConfig::default();
    // A fresh, smaller draw from the same model keeps cross-validation fast.
    let sample = gen_tree(&TreeModelSpec {
        n_samples: 10_000,
        seed: 19,
        ..TreeModelSpec::default()
    })
    .unwrap();
    let top3: Vec<usize> = run.trace.order()[..3].to_vec();
    let hofs_err = cross_validate(&sample, &top3, &protocol, &train).unwrap().error_rate;
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let random: Vec<f64> = (0..10)
        .map(|_| {
            let pick = index::sample(&mut rng, 9, 3).into_vec();
            cross_validate(&sample, &pick, &protocol, &train).unwrap().error_rate
        })
        .collect();
    let random_mean = stats::mean(&random);

    let config = HofsConfig {
        t: 9,
        bins: 4,
        ..HofsConfig::default()
    };
    let data4 = PreparedData::new(&run.table, 4, BinScheme::EqualFrequency).unwrap();
    let engine = Engine::new(&data4, config).unwrap();
    let mim = rank_features(&engine, Method::Baseline(Criterion::Mim), 9).unwrap();
    let hofs_mi = plugin_global_mi(&data4, &run.trace.order()).unwrap();
    let mim_mi = plugin_global_mi(&data4, &mim).unwrap();
    outcome(
        hofs_err < random_mean && hofs_mi >= mim_mi - 1e-12,
        format!(
            "HOFS top-3 error {hofs_err:.2}% vs random mean {random_mean:.2}%; global MI k=9 HOFS {hofs_mi:.4} vs MIM {mim_mi:.4}"
        ),
    )
}

fn main() {
    let tree = tree_run();
    let hetero = hetero_run();
    let results = [
        ("1 tree-model plug-in MI", criterion_1()),
        ("2 tree-model partition", criterion_2(&tree)),
        ("3 heterogeneous structure", criterion_3(&hetero)),
        ("4 XOR sanity", criterion_4()),
        ("5 oracle equivalence", criterion_5()),
        ("6 ICA validity", criterion_6()),
        ("7 ICA diagnostics", criterion_7(&tree, &hetero)),
        ("8 information gain curve", criterion_8(&tree)),
        ("9 classification and global MI", criterion_9(&tree)),
    ];
    let mut failed = 0;
    for (name, r) in &results {
        println!("criterion {name}: {} ({})", if r.pass { "PASS" } else { "FAIL" }, r.detail);
        failed += usize::from(!r.pass);
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
