//! Evaluation harness: a one-vs-rest logistic classifier, stratified
//! cross-validation, relative absolute error, global mutual information and
//! per-step information gain.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::criteria::{select_greedy, Criterion};
use crate::data::{DataTable, PreparedData};
use crate::error::{Error, Result};
use crate::hofs::{Engine, HofsConfig};
use crate::infotheory;
use crate::stats;

/// Joint plug-in estimates are limited to this many features.
pub const PLUGIN_ARITY_CAP: usize = 16;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lambda: f64,
    pub epochs: usize,
    pub learning_rate: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lambda: 1e-3,
            epochs: 500,
            learning_rate: 0.1,
        }
    }
}

/// One-vs-rest L2-regularized logistic scorers over standardized inputs.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearModel {
    means: Vec<f64>,
    scales: Vec<f64>,
    /// Per class: feature weights followed by the intercept.
    weights: Vec<Vec<f64>>,
}

impl LinearModel {
    pub fn n_classes(&self) -> usize {
        self.weights.len()
    }

    /// Per-class linear scores for one sample.
    pub fn scores(&self, x: &[f64]) -> Vec<f64> {
        let d = self.means.len();
        self.weights
            .iter()
            .map(|w| {
                let mut s = w[d];
                for k in 0..d {
                    s += w[k] * (x[k] - self.means[k]) / self.scales[k];
                }
                s
            })
            .collect()
    }

    pub fn predict(&self, x: &[f64]) -> u32 {
        let s = self.scores(x);
        let mut best = 0;
        for (c, &v) in s.iter().enumerate() {
            if v > s[best] {
                best = c;
            }
        }
        best as u32
    }

    pub fn weights(&self, class: usize) -> &[f64] {
        &self.weights[class]
    }
}

/// Trains on row-major samples `x` with labels in `0..n_classes`.
pub fn train_linear(
    x: &[Vec<f64>],
    y: &[u32],
    n_classes: usize,
    config: &TrainConfig,
) -> Result<LinearModel> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            expected: y.len(),
            found: x.len(),
        });
    }
    let n = y.len();
    if n == 0 {
        return Err(Error::Empty("training split"));
    }
    let mut present = vec![false; n_classes];
    for &c in y {
        present[c as usize] = true;
    }
    if present.iter().filter(|&&p| p).count() < 2 {
        return Err(Error::SingleClass);
    }
    let d = x[0].len();
    let mut means = vec![0.0; d];
    let mut scales = vec![1.0; d];
    for k in 0..d {
        let col: Vec<f64> = x.iter().map(|r| r[k]).collect();
        means[k] = stats::mean(&col);
        let sd = stats::variance(&col).sqrt();
        if sd > 0.0 {
            scales[k] = sd;
        }
    }
    let z: Vec<Vec<f64>> = x
        .iter()
        .map(|r| (0..d).map(|k| (r[k] - means[k]) / scales[k]).collect())
        .collect();

    let lr = config.learning_rate;
    let shrink = 1.0 / (1.0 + lr * config.lambda);
    let weights = (0..n_classes)
        .map(|c| {
            let target: Vec<f64> = y.iter().map(|&v| f64::from(u8::from(v as usize == c))).collect();
            let mut w = vec![0.0; d + 1];
            let mut grad = vec![0.0; d + 1];
            for _ in 0..config.epochs {
                grad.iter_mut().for_each(|g| *g = 0.0);
                for (row, t) in z.iter().zip(&target) {
                    let s = w[d] + row.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>();
                    let err = sigmoid(s) - t;
                    for k in 0..d {
                        grad[k] += err * row[k];
                    }
                    grad[d] += err;
                }
                for k in 0..d {
                    w[k] = (w[k] - lr * grad[k] / n as f64) * shrink;
                }
                w[d] -= lr * grad[d] / n as f64;
            }
            w
        })
        .collect();
    Ok(LinearModel {
        means,
        scales,
        weights,
    })
}

fn sigmoid(s: f64) -> f64 {
    if s >= 0.0 {
        1.0 / (1.0 + (-s).exp())
    } else {
        let e = s.exp();
        e / (1.0 + e)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Folds {
    KFold(usize),
    LeaveOneOut,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvProtocol {
    pub folds: Folds,
    pub seed: u64,
    pub feature_counts: Vec<usize>,
}

impl CvProtocol {
    /// Leave-one-out below 100 samples, 10 folds otherwise; `k` runs over
    /// 10, 20, …, min(100, M), or 1..=M when there are fewer than 10
    /// features.
    pub fn for_dataset(n_samples: usize, n_features: usize, seed: u64) -> Self {
        let folds = if n_samples < 100 {
            Folds::LeaveOneOut
        } else {
            Folds::KFold(10)
        };
        let feature_counts = if n_features >= 10 {
            (1..=10).map(|k| k * 10).take_while(|&k| k <= n_features).collect()
        } else {
            (1..=n_features).collect()
        };
        CvProtocol {
            folds,
            seed,
            feature_counts,
        }
    }
}

/// Fold index per sample. Each class is shuffled separately and dealt
/// round-robin, continuing where the previous class stopped.
pub fn stratified_folds(labels: &[u32], folds: usize, seed: u64) -> Vec<usize> {
    let n_classes = labels.iter().copied().max().map_or(0, |m| m as usize + 1);
    let mut assignment = vec![0; labels.len()];
    let mut next = 0;
    for c in 0..n_classes {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] as usize == c).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(stats::mix_seed(seed, &[c as u64]));
        members.shuffle(&mut rng);
        for i in members {
            assignment[i] = next % folds;
            next += 1;
        }
    }
    assignment
}

#[derive(Clone, Debug, PartialEq)]
pub struct CvOutcome {
    /// Mean held-out error over folds, in percent.
    pub error_rate: f64,
    /// Held-out prediction for every sample.
    pub predictions: Vec<u32>,
}

/// Cross-validated error of the linear classifier on the given features.
/// Feature order does not matter.
pub fn cross_validate(
    table: &DataTable,
    features: &[usize],
    protocol: &CvProtocol,
    train: &TrainConfig,
) -> Result<CvOutcome> {
    if features.is_empty() {
        return Err(Error::Empty("feature list"));
    }
    let mut features = features.to_vec();
    features.sort_unstable();
    features.dedup();
    for &j in &features {
        if j >= table.n_features() {
            return Err(Error::FeatureOutOfRange {
                index: j,
                n_features: table.n_features(),
            });
        }
    }
    let n = table.n_samples();
    let labels = table.labels();
    let (assignment, k) = match protocol.folds {
        Folds::LeaveOneOut => ((0..n).collect::<Vec<_>>(), n),
        Folds::KFold(k) => {
            if k < 2 || k > n {
                return Err(Error::InvalidArgument(format!("cannot make {k} folds of {n} samples")));
            }
            (stratified_folds(labels, k, protocol.seed), k)
        }
    };
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| features.iter().map(|&j| table.column(j)[i]).collect())
        .collect();
    let per_fold = (0..k)
        .into_par_iter()
        .map(|f| {
            let (train_x, train_y): (Vec<Vec<f64>>, Vec<u32>) = (0..n)
                .filter(|&i| assignment[i] != f)
                .map(|i| (rows[i].clone(), labels[i]))
                .unzip();
            let model = train_linear(&train_x, &train_y, table.n_classes(), train)?;
            Ok((0..n)
                .filter(|&i| assignment[i] == f)
                .map(|i| (i, model.predict(&rows[i])))
                .collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;
    let mut predictions = vec![0; n];
    let mut fold_errors = Vec::with_capacity(k);
    for fold in per_fold {
        if fold.is_empty() {
            continue;
        }
        let wrong = fold.iter().filter(|(i, p)| labels[*i] != *p).count();
        fold_errors.push(100.0 * wrong as f64 / fold.len() as f64);
        for (i, p) in fold {
            predictions[i] = p;
        }
    }
    Ok(CvOutcome {
        error_rate: stats::mean(&fold_errors),
        predictions,
    })
}

/// Relative absolute error `Σ|p − a| / Σ|mean(a) − a|`.
pub fn rae(predicted: &[f64], actual: &[f64]) -> Result<f64> {
    if predicted.len() != actual.len() {
        return Err(Error::LengthMismatch {
            expected: actual.len(),
            found: predicted.len(),
        });
    }
    let m = stats::mean(actual);
    let denom: f64 = actual.iter().map(|a| (a - m).abs()).sum();
    if denom == 0.0 {
        return Err(Error::ConstantTarget);
    }
    let num: f64 = predicted.iter().zip(actual).map(|(p, a)| (p - a).abs()).sum();
    Ok(num / denom)
}

/// Mean of per-classifier relative absolute errors.
pub fn arae(raes: &[f64]) -> Result<f64> {
    if raes.is_empty() {
        return Err(Error::Empty("RAE list"));
    }
    Ok(stats::mean(raes))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GlobalMiMethod {
    Plugin,
    IcaPartition,
}

/// Plug-in `I(x_{f_1}, …, x_{f_k} : y)`.
pub fn plugin_global_mi(data: &PreparedData, features: &[usize]) -> Result<f64> {
    if features.len() > PLUGIN_ARITY_CAP {
        return Err(Error::ArityCap {
            limit: PLUGIN_ARITY_CAP,
            requested: features.len(),
        });
    }
    if features.is_empty() {
        return Ok(0.0);
    }
    let cols: Vec<&[u32]> = features.iter().map(|&j| data.view.column(j)).collect();
    infotheory::mutual_information(&cols, &[data.view.labels()])
}

/// Groups features, taken in order, with the same correlation rule the
/// selection loop uses.
pub fn partition_by_correlation(data: &PreparedData, order: &[usize], c: f64) -> Vec<Vec<usize>> {
    let mut sets: Vec<Vec<usize>> = Vec::new();
    for &i in order {
        let x = &data.signals[i];
        let mut best: Option<(usize, f64)> = None;
        for (k, s) in sets.iter().enumerate() {
            let cov = s
                .iter()
                .map(|&u| stats::pearson(x, &data.signals[u]).abs())
                .sum::<f64>()
                / s.len() as f64;
            if best.is_none_or(|(_, b)| cov > b) {
                best = Some((k, cov));
            }
        }
        match best {
            Some((k, cov)) if cov > c => sets[k].push(i),
            _ => sets.push(vec![i]),
        }
    }
    sets
}

/// `Σ_subsets [H(y) − H(y | Ω)]` with the engine's ICA estimator.
pub fn ica_partition_mi(engine: &Engine<'_>, sets: &[Vec<usize>]) -> Result<f64> {
    let h = engine.label_entropy();
    sets.iter()
        .map(|s| engine.label_conditional_entropy(s).map(|c| h - c))
        .sum()
}

pub fn global_mi(engine: &Engine<'_>, features: &[usize], method: GlobalMiMethod) -> Result<f64> {
    match method {
        GlobalMiMethod::Plugin => plugin_global_mi(engine.data(), features),
        GlobalMiMethod::IcaPartition => {
            let sets = partition_by_correlation(engine.data(), features, engine.config().c);
            ica_partition_mi(engine, &sets)
        }
    }
}

/// Gain in partitioned ICA global MI from each successive feature of
/// `order`. The gains sum to the global MI of the whole order.
pub fn information_gain_curve(engine: &Engine<'_>, order: &[usize]) -> Result<Vec<f64>> {
    if order.is_empty() {
        return Err(Error::Empty("selection order"));
    }
    let cumulative = (1..=order.len())
        .into_par_iter()
        .map(|t| global_mi(engine, &order[..t], GlobalMiMethod::IcaPartition))
        .collect::<Result<Vec<_>>>()?;
    let mut prev = 0.0;
    Ok(cumulative
        .into_iter()
        .map(|g| {
            let gain = g - prev;
            prev = g;
            gain
        })
        .collect())
}

/// A selection method in a benchmark.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "method")]
pub enum Method {
    Baseline(Criterion),
    Hofs,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Baseline(c) => c.name(),
            Method::Hofs => "hofs",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("hofs") {
            Ok(Method::Hofs)
        } else {
            s.parse().map(Method::Baseline)
        }
    }
}

/// Ranks `t` features with the given method.
pub fn rank_features(engine: &Engine<'_>, method: Method, t: usize) -> Result<Vec<usize>> {
    match method {
        Method::Baseline(c) => Ok(select_greedy(c, &engine.data().view, t)?.order),
        Method::Hofs => {
            let config = HofsConfig {
                t,
                ..engine.config().clone()
            };
            Ok(Engine::new(engine.data(), config)?.run()?.1.order())
        }
    }
}

/// Scores at one feature count. MI values are in the engine's base.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KResult {
    pub k: usize,
    pub error_rate: f64,
    pub rae: f64,
    /// `None` when `k` exceeds the plug-in arity cap.
    pub global_mi_plugin: Option<f64>,
    pub global_mi_ica: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodReport {
    pub method: String,
    pub order: Vec<String>,
    pub per_k: Vec<KResult>,
    pub average_error: f64,
    /// Mean RAE over the evaluated feature counts.
    pub arae: f64,
    pub information_gain: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub protocol: CvProtocol,
    pub methods: Vec<MethodReport>,
}

/// Runs every method and evaluates its ranking under the protocol.
pub fn bench(
    table: &DataTable,
    engine: &Engine<'_>,
    methods: &[Method],
    protocol: &CvProtocol,
    train: &TrainConfig,
) -> Result<EvalReport> {
    if methods.is_empty() {
        return Err(Error::InvalidArgument("no methods to benchmark".into()));
    }
    let m = table.n_features();
    if protocol.feature_counts.iter().any(|&k| k == 0 || k > m) {
        return Err(Error::InvalidArgument(format!("feature counts must lie in 1..={m}")));
    }
    let t = protocol.feature_counts.iter().copied().max().unwrap_or(1);
    let actual: Vec<f64> = table.labels().iter().map(|&c| c as f64).collect();
    let unit = |v: f64| engine.config().base.convert(v);
    let mut reports = Vec::with_capacity(methods.len());
    for &method in methods {
        let order = rank_features(engine, method, t)?;
        let mut per_k = Vec::with_capacity(protocol.feature_counts.len());
        for &k in &protocol.feature_counts {
            let cv = cross_validate(table, &order[..k], protocol, train)?;
            let predicted: Vec<f64> = cv.predictions.iter().map(|&c| c as f64).collect();
            per_k.push(KResult {
                k,
                error_rate: cv.error_rate,
                rae: rae(&predicted, &actual)?,
                global_mi_plugin: if k <= PLUGIN_ARITY_CAP {
                    Some(unit(plugin_global_mi(engine.data(), &order[..k])?))
                } else {
                    None
                },
                global_mi_ica: unit(global_mi(engine, &order[..k], GlobalMiMethod::IcaPartition)?),
            });
        }
        let errors: Vec<f64> = per_k.iter().map(|r| r.error_rate).collect();
        let raes: Vec<f64> = per_k.iter().map(|r| r.rae).collect();
        reports.push(MethodReport {
            method: method.name().to_string(),
            order: order.iter().map(|&j| table.feature_names()[j].clone()).collect(),
            average_error: stats::mean(&errors),
            arae: arae(&raes)?,
            information_gain: information_gain_curve(engine, &order)?.into_iter().map(unit).collect(),
            per_k,
        });
    }
    Ok(EvalReport {
        protocol: protocol.clone(),
        methods: reports,
    })
}
