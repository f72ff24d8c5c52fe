//! Infomax ICA with a logistic source prior and lower-triangular unmixing.
//!
//! Rows of the unmixing matrix are learned one at a time: row `k` sees the
//! first `k + 1` input columns only. The triangular log-likelihood separates
//! into one concave problem per row,
//!
//! ```text
//! L_k(w) = mean_n log g'(w · z_n) + log |w_k|
//! ```
//!
//! so appending a column never touches earlier rows, and a batch fit is the
//! same procedure repeated. Entropies in input space follow from
//! `H(X) = Σ H(s_j) − log |det W|` with `log |det W| = Σ log |w_jj|`.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::equal_frequency_codes;
use crate::error::{Error, Result};
use crate::infotheory;
use crate::stats;

/// Diagonal entries are kept within `[DIAG_FLOOR, DIAG_CEIL]` in magnitude.
pub const DIAG_FLOOR: f64 = 1e-8;
pub const DIAG_CEIL: f64 = 1e8;

/// A new column whose least-squares residual on the existing inputs has
/// variance below this is treated as linearly dependent.
const DEPENDENCE_TOL: f64 = 1e-10;
const MAX_RESTARTS: usize = 4;
const STANDARDIZED_TOL: f64 = 1e-6;

/// Identifies the column behind each row of a model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnId {
    Feature(usize),
    Label,
}

impl ColumnId {
    fn seed_part(self) -> u64 {
        match self {
            ColumnId::Feature(j) => j as u64,
            ColumnId::Label => u64::MAX,
        }
    }
}

/// How the entropy of a single recovered signal is estimated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalEntropy {
    /// Differential entropy of a Gaussian with the signal's variance,
    /// `½ log(2πe σ²)`.
    Gaussian,
    /// Plug-in entropy of the signal binned into equal-frequency bins.
    Histogram { bins: usize },
}

impl SignalEntropy {
    pub fn estimate(self, signal: &[f64]) -> f64 {
        match self {
            SignalEntropy::Gaussian => {
                let var = stats::variance(signal).max(f64::MIN_POSITIVE);
                0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E * var).ln()
            }
            SignalEntropy::Histogram { bins } => {
                let codes = equal_frequency_codes(signal, bins.max(1));
                infotheory::entropy(&codes).unwrap_or(0.0)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IcaConfig {
    pub learning_rate: f64,
    /// `None` means `min(N, 256)`.
    pub batch_size: Option<usize>,
    pub max_epochs: usize,
    /// Stop when the relative change of the log-likelihood between epochs
    /// falls below this.
    pub convergence_tol: f64,
    pub seed: u64,
    pub signal_entropy: SignalEntropy,
    /// Full-batch Newton iterations run after the stochastic phase; 0
    /// disables the refinement.
    pub newton_steps: usize,
}

impl Default for IcaConfig {
    fn default() -> Self {
        IcaConfig {
            learning_rate: 0.01,
            batch_size: None,
            max_epochs: 200,
            convergence_tol: 1e-5,
            seed: 0,
            signal_entropy: SignalEntropy::Gaussian,
            newton_steps: 50,
        }
    }
}

impl IcaConfig {
    #[allow(clippy::neg_cmp_op_on_partial_ord)] // rejects NaN too
    pub fn validate(&self, n_samples: usize) -> Result<()> {
        if !(self.learning_rate > 0.0) || !(self.convergence_tol > 0.0) || self.max_epochs == 0 {
            return Err(Error::InvalidArgument(
                "ICA learning rate, tolerance and epochs must be positive".into(),
            ));
        }
        if let Some(b) = self.batch_size {
            if b == 0 || b > n_samples {
                return Err(Error::InvalidArgument(format!(
                    "batch size {b} outside 1..={n_samples}"
                )));
            }
        }
        if let SignalEntropy::Histogram { bins } = self.signal_entropy {
            if bins < 2 {
                return Err(Error::InvalidArgument("signal histogram needs ≥ 2 bins".into()));
            }
        }
        Ok(())
    }

    fn batch(&self, n: usize) -> usize {
        self.batch_size.unwrap_or(256).min(n).max(1)
    }
}

/// Optimization record for one learned row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RowFit {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub converged: bool,
    pub log_likelihood: f64,
    /// The column was linearly dependent on earlier inputs or the diagonal
    /// had to be clamped.
    pub degenerate: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IcaModel {
    ids: Vec<ColumnId>,
    inputs: Vec<Arc<[f64]>>,
    rows: Vec<Vec<f64>>,
    signals: Vec<Arc<[f64]>>,
    signal_entropies: Vec<f64>,
    fits: Vec<RowFit>,
    signal_entropy: SignalEntropy,
}

impl IcaModel {
    /// A model with no columns; the first [`append`](Self::append) makes it
    /// one-dimensional.
    pub fn empty(signal_entropy: SignalEntropy) -> Self {
        IcaModel {
            ids: Vec::new(),
            inputs: Vec::new(),
            rows: Vec::new(),
            signals: Vec::new(),
            signal_entropies: Vec::new(),
            fits: Vec::new(),
            signal_entropy,
        }
    }

    /// Fits a full triangular model on standardized columns, one row at a
    /// time in the given order.
    pub fn fit_batch(ids: &[ColumnId], columns: &[Arc<[f64]>], config: &IcaConfig) -> Result<Self> {
        if ids.len() != columns.len() {
            return Err(Error::LengthMismatch {
                expected: ids.len(),
                found: columns.len(),
            });
        }
        if columns.is_empty() {
            return Err(Error::Empty("column list"));
        }
        let n = columns[0].len();
        if n <= columns.len() {
            return Err(Error::InvalidArgument(format!(
                "need more samples ({n}) than columns ({})",
                columns.len()
            )));
        }
        for (k, c) in columns.iter().enumerate() {
            let m = stats::mean(c);
            let v = stats::variance(c);
            if m.abs() > STANDARDIZED_TOL || (v - 1.0).abs() > STANDARDIZED_TOL {
                return Err(Error::NotStandardized {
                    column: k,
                    mean: m,
                    variance: v,
                });
            }
        }
        let mut model = IcaModel::empty(config.signal_entropy);
        for (id, col) in ids.iter().zip(columns) {
            model = model.append(*id, col.clone(), config)?;
        }
        Ok(model)
    }

    /// Returns a copy of the model extended by one column. Only the new last
    /// row of `W` is learned; earlier rows and signals are shared unchanged.
    pub fn append(&self, id: ColumnId, column: Arc<[f64]>, config: &IcaConfig) -> Result<Self> {
        let n = column.len();
        if let Some(first) = self.inputs.first() {
            if first.len() != n {
                return Err(Error::LengthMismatch {
                    expected: first.len(),
                    found: n,
                });
            }
        }
        if n == 0 {
            return Err(Error::Empty("column"));
        }
        config.validate(n)?;
        if stats::variance(&column) <= 0.0 {
            return Err(Error::ZeroVariance {
                column: format!("{id:?}"),
            });
        }
        let mut inputs: Vec<&[f64]> = self.inputs.iter().map(|c| &c[..]).collect();
        inputs.push(&column);
        let dependent = residual_variance(&inputs) < DEPENDENCE_TOL;
        let seed_parts: Vec<u64> = self
            .ids
            .iter()
            .chain(std::iter::once(&id))
            .map(|c| c.seed_part())
            .collect();
        let seed = stats::mix_seed(config.seed, &seed_parts);
        let (mut row, mut fit) = fit_row(&inputs, config, seed)?;
        if !dependent && config.newton_steps > 0 {
            fit.converged |= newton_refine(&mut row, &inputs, config.newton_steps);
            fit.log_likelihood = row_log_likelihood(&row, &inputs);
        }
        let last = row.len() - 1;
        let mag = row[last].abs();
        if !(DIAG_FLOOR..=DIAG_CEIL).contains(&mag) {
            let sign = if row[last] < 0.0 { -1.0 } else { 1.0 };
            row[last] = sign * mag.clamp(DIAG_FLOOR, DIAG_CEIL);
            fit.degenerate = true;
        }
        fit.degenerate |= dependent;
        if fit.degenerate {
            log::debug!("degenerate unmixing row for {id:?}");
        }
        let signal: Arc<[f64]> = Arc::from(project(&row, &inputs));
        let entropy = self.signal_entropy.estimate(&signal);

        let mut out = self.clone();
        out.ids.push(id);
        out.inputs.push(column);
        out.rows.push(row);
        out.signals.push(signal);
        out.signal_entropies.push(entropy);
        out.fits.push(fit);
        Ok(out)
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn ids(&self) -> &[ColumnId] {
        &self.ids
    }

    /// Row `k` of `W`; it has `k + 1` entries (the rest are zero).
    pub fn row(&self, k: usize) -> &[f64] {
        &self.rows[k]
    }

    pub fn signal(&self, k: usize) -> &[f64] {
        &self.signals[k]
    }

    pub fn signal_entropies(&self) -> &[f64] {
        &self.signal_entropies
    }

    pub fn row_fits(&self) -> &[RowFit] {
        &self.fits
    }

    pub fn is_degenerate(&self) -> bool {
        self.fits.iter().any(|f| f.degenerate)
    }

    /// Dense `d × d` copy of `W`.
    pub fn unmixing(&self) -> DMatrix<f64> {
        let d = self.dim();
        DMatrix::from_fn(d, d, |i, j| if j <= i { self.rows[i][j] } else { 0.0 })
    }

    pub fn log_abs_det(&self) -> Result<f64> {
        self.rows
            .iter()
            .enumerate()
            .map(|(k, r)| {
                let d = r[k].abs();
                if d == 0.0 {
                    Err(Error::ZeroDiagonal(k))
                } else {
                    Ok(d.ln())
                }
            })
            .sum()
    }

    pub fn signal_entropy_sum(&self) -> f64 {
        self.signal_entropies.iter().sum()
    }

    /// `Σ H(s_j) − log |det W|`.
    pub fn joint_entropy_estimate(&self) -> Result<f64> {
        Ok(self.signal_entropy_sum() - self.log_abs_det()?)
    }

    /// Entropy of the last column given all earlier ones,
    /// `H(s_last) − log |w_last,last|`. The earlier rows cancel exactly
    /// between the two joint estimates.
    pub fn last_conditional_entropy(&self) -> Result<f64> {
        let k = self.dim().checked_sub(1).ok_or(Error::Empty("model"))?;
        let d = self.rows[k][k].abs();
        if d == 0.0 {
            return Err(Error::ZeroDiagonal(k));
        }
        Ok(self.signal_entropies[k] - d.ln())
    }

    /// Mean absolute Pearson correlation over all signal pairs; 0 when
    /// there are fewer than two signals.
    pub fn avg_pearson(&self) -> f64 {
        let refs: Vec<&[f64]> = self.signals.iter().map(|s| &s[..]).collect();
        avg_abs_pearson(&refs)
    }

    /// Mean of the per-sample log-likelihood under the logistic prior for
    /// the full triangular model.
    pub fn log_likelihood(&self) -> f64 {
        let inputs: Vec<&[f64]> = self.inputs.iter().map(|c| &c[..]).collect();
        let w = self.unmixing();
        infomax_log_likelihood(&w, &inputs)
    }
}

pub fn avg_abs_pearson(signals: &[&[f64]]) -> f64 {
    let d = signals.len();
    if d < 2 {
        log::debug!("average correlation of fewer than two signals is defined as 0");
        return 0.0;
    }
    let mut sum = 0.0;
    let mut pairs = 0usize;
    for i in 0..d {
        for j in i + 1..d {
            sum += stats::pearson(signals[i], signals[j]).abs();
            pairs += 1;
        }
    }
    sum / pairs as f64
}

/// `log g'(s)` for the logistic cdf `g`.
pub fn log_logistic_density(s: f64) -> f64 {
    let a = s.abs();
    -a - 2.0 * (-a).exp().ln_1p()
}

fn sigmoid(s: f64) -> f64 {
    if s >= 0.0 {
        1.0 / (1.0 + (-s).exp())
    } else {
        let e = s.exp();
        e / (1.0 + e)
    }
}

fn project(row: &[f64], inputs: &[&[f64]]) -> Vec<f64> {
    let n = inputs[0].len();
    let mut s = vec![0.0; n];
    for (w, col) in row.iter().zip(inputs) {
        if *w != 0.0 {
            s.iter_mut().zip(col.iter()).for_each(|(s, x)| *s += w * x);
        }
    }
    s
}

fn row_log_likelihood(row: &[f64], inputs: &[&[f64]]) -> f64 {
    let s = project(row, inputs);
    let last = row[row.len() - 1].abs();
    stats::mean(&s.iter().map(|&v| log_logistic_density(v)).collect::<Vec<_>>()) + last.ln()
}

/// Mini-batch gradient ascent on one row's log-likelihood, starting from the
/// unit vector on the last input. The step size decays as `α / √epoch`.
fn fit_row(inputs: &[&[f64]], config: &IcaConfig, seed: u64) -> Result<(Vec<f64>, RowFit)> {
    let d = inputs.len();
    let n = inputs[0].len();
    let batch = config.batch(n);
    let mut alpha = config.learning_rate;
    for restart in 0..=MAX_RESTARTS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut order: Vec<usize> = (0..n).collect();
        let mut w = vec![0.0; d];
        w[d - 1] = 1.0;
        let mut ll = row_log_likelihood(&w, inputs);
        let mut grad = vec![0.0; d];
        let mut converged = false;
        let mut epochs = 0;
        let mut failed = false;
        for epoch in 1..=config.max_epochs {
            epochs = epoch;
            order.shuffle(&mut rng);
            let step = alpha / (epoch as f64).sqrt();
            for chunk in order.chunks(batch) {
                grad.iter_mut().for_each(|g| *g = 0.0);
                for &i in chunk {
                    let s: f64 = w.iter().zip(inputs).map(|(w, c)| w * c[i]).sum();
                    let e = 1.0 - 2.0 * sigmoid(s);
                    grad.iter_mut().zip(inputs).for_each(|(g, c)| *g += e * c[i]);
                }
                let m = chunk.len() as f64;
                grad.iter_mut().for_each(|g| *g /= m);
                grad[d - 1] += 1.0 / w[d - 1];
                w.iter_mut().zip(&grad).for_each(|(w, g)| *w += step * g);
            }
            let next = row_log_likelihood(&w, inputs);
            if !next.is_finite() || w.iter().any(|v| !v.is_finite()) {
                failed = true;
                break;
            }
            let change = (next - ll).abs() / ll.abs().max(1e-12);
            ll = next;
            if change < config.convergence_tol {
                converged = true;
                break;
            }
        }
        if failed {
            log::debug!("row fit diverged, restart {} with smaller step", restart + 1);
            alpha *= 0.5;
            continue;
        }
        return Ok((
            w,
            RowFit {
                epochs,
                learning_rate: alpha,
                batch_size: batch,
                converged,
                log_likelihood: ll,
                degenerate: false,
            },
        ));
    }
    Err(Error::SingularUnmixing {
        restarts: MAX_RESTARTS,
    })
}

/// Newton ascent on the concave row objective with a backtracking line
/// search that keeps the diagonal's sign. Returns whether the predicted
/// improvement fell below tolerance.
fn newton_refine(w: &mut [f64], inputs: &[&[f64]], max_steps: usize) -> bool {
    let d = w.len();
    let n = inputs[0].len() as f64;
    let mut ll = row_log_likelihood(w, inputs);
    for _ in 0..max_steps {
        let s = project(w, inputs);
        let mut grad = nalgebra::DVector::<f64>::zeros(d);
        let mut hess = DMatrix::<f64>::zeros(d, d);
        for (i, &si) in s.iter().enumerate() {
            let g = sigmoid(si);
            let e = 1.0 - 2.0 * g;
            let c = -2.0 * g * (1.0 - g);
            for a in 0..d {
                let za = inputs[a][i];
                grad[a] += e * za;
                for b in 0..=a {
                    hess[(a, b)] += c * za * inputs[b][i];
                }
            }
        }
        grad /= n;
        hess /= n;
        for a in 0..d {
            for b in 0..a {
                hess[(b, a)] = hess[(a, b)];
            }
        }
        let last = w[d - 1];
        grad[d - 1] += 1.0 / last;
        hess[(d - 1, d - 1)] -= 1.0 / (last * last);
        let neg = -hess;
        let Some(step) = neg.cholesky().map(|ch| ch.solve(&grad)) else {
            return false;
        };
        // Newton decrement: predicted gain of the full step.
        if grad.dot(&step) < 1e-14 {
            return true;
        }
        let mut t = 1.0;
        let mut improved = false;
        for _ in 0..40 {
            let trial: Vec<f64> = w.iter().zip(step.iter()).map(|(w, s)| w + t * s).collect();
            if trial[d - 1] * last > 0.0 {
                let next = row_log_likelihood(&trial, inputs);
                if next >= ll {
                    w.copy_from_slice(&trial);
                    ll = next;
                    improved = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !improved {
            return false;
        }
    }
    false
}

/// Variance of the least-squares residual of the last column on the others.
fn residual_variance(inputs: &[&[f64]]) -> f64 {
    let d = inputs.len();
    let target = inputs[d - 1];
    if d == 1 {
        return stats::variance(target);
    }
    let n = target.len();
    let k = d - 1;
    let mut gram = DMatrix::<f64>::zeros(k, k);
    let mut rhs = nalgebra::DVector::<f64>::zeros(k);
    for a in 0..k {
        for b in a..k {
            let v: f64 = inputs[a].iter().zip(inputs[b]).map(|(x, y)| x * y).sum();
            gram[(a, b)] = v / n as f64;
            gram[(b, a)] = v / n as f64;
        }
        rhs[a] = inputs[a].iter().zip(target).map(|(x, y)| x * y).sum::<f64>() / n as f64;
    }
    let total: f64 = target.iter().map(|y| y * y).sum::<f64>() / n as f64;
    match gram.clone().cholesky() {
        Some(ch) => {
            let beta = ch.solve(&rhs);
            (total - beta.dot(&rhs)).max(0.0)
        }
        // Singular Gram matrix: the earlier columns are already dependent,
        // so judge the new column against their pseudo-inverse fit.
        None => match gram.pseudo_inverse(1e-12) {
            Ok(pinv) => (total - (pinv * &rhs).dot(&rhs)).max(0.0),
            Err(_) => total,
        },
    }
}

/// Mean log-likelihood of an unconstrained square unmixing matrix,
/// `mean_n Σ_j log g'(w_j · x_n) + log |det W|`.
#[allow(clippy::needless_range_loop)]
pub fn infomax_log_likelihood(w: &DMatrix<f64>, inputs: &[&[f64]]) -> f64 {
    let d = w.nrows();
    let n = inputs[0].len();
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..d {
            let s: f64 = (0..d).map(|k| w[(j, k)] * inputs[k][i]).sum();
            total += log_logistic_density(s);
        }
    }
    total / n as f64 + w.determinant().abs().ln()
}

/// Full-batch infomax gradient `mean_n (1 − 2 g(W x_n)) x_nᵀ + W⁻ᵀ`.
#[allow(clippy::needless_range_loop)]
pub fn infomax_gradient(w: &DMatrix<f64>, inputs: &[&[f64]]) -> Result<DMatrix<f64>> {
    let d = w.nrows();
    let n = inputs[0].len();
    let mut g = DMatrix::<f64>::zeros(d, d);
    for i in 0..n {
        for j in 0..d {
            let s: f64 = (0..d).map(|k| w[(j, k)] * inputs[k][i]).sum();
            let e = 1.0 - 2.0 * sigmoid(s);
            for k in 0..d {
                g[(j, k)] += e * inputs[k][i];
            }
        }
    }
    g /= n as f64;
    let inv = w
        .clone()
        .try_inverse()
        .ok_or(Error::SingularUnmixing { restarts: 0 })?;
    Ok(g + inv.transpose())
}
