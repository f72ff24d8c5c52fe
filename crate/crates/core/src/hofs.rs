//! Higher-order forward selection over a partition of mutually independent
//! feature subsets.
//!
//! The selected features are grouped into subsets `Ω¹ … Ωᴷ` assumed
//! independent and class-conditionally independent of each other. A
//! candidate `x_i` is scored as
//!
//! ```text
//! I(x_i:y) + Σ_j [ H(y | x_i) − H(y | Ωʲ ∪ x_i) ]
//! ```
//!
//! where each bracket is the information the whole subset `Ωʲ` adds about
//! `y` once `x_i` is known. `H(y | Ωʲ ∪ x_i)` comes from a triangular ICA
//! model of the subset extended by the candidate and then by the label: the
//! label row is the only one that survives the subtraction of the two joint
//! estimates, giving `H(s_y) − log |w_yy|`.
//!
//! Signal entropies are differential while `H(y)` is discrete, so every
//! ICA conditional entropy is anchored on the plug-in label entropy:
//! the one-column label model maps exactly to `H(y)`.

use std::collections::{BTreeMap, HashMap};
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::criteria::argmax;
use crate::data::{BinScheme, PreparedData};
use crate::error::{Error, Result};
use crate::ica::{ColumnId, IcaConfig, IcaModel};
use crate::infotheory::{self, Base};
use crate::stats;

/// How `H(y | x_i)` is estimated inside each subset term.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Baseline {
    /// The same anchored ICA estimator as the subset term, on the pair
    /// `[x_i, y]`, so estimator bias cancels in the difference.
    #[default]
    Ica,
    /// Plug-in `H(x_i, y) − H(x_i)` on the discretized view.
    Plugin,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HofsConfig {
    /// Number of features to select.
    pub t: usize,
    /// Correlation threshold for joining an existing subset.
    pub c: f64,
    pub bins: usize,
    pub scheme: BinScheme,
    /// Unit of the information quantities recorded in traces and reports.
    /// Engine methods always return nats.
    pub base: Base,
    pub baseline: Baseline,
    pub ica: IcaConfig,
}

impl Default for HofsConfig {
    fn default() -> Self {
        HofsConfig {
            t: 10,
            c: 0.3,
            bins: 5,
            scheme: BinScheme::EqualFrequency,
            base: Base::Nats,
            baseline: Baseline::Ica,
            ica: IcaConfig::default(),
        }
    }
}

impl HofsConfig {
    pub fn validate(&self, n_features: usize, n_samples: usize) -> Result<()> {
        if self.t == 0 || self.t > n_features {
            return Err(Error::InvalidArgument(format!(
                "number of features to select must be in 1..={n_features}, got {}",
                self.t
            )));
        }
        if !(0.0..=1.0).contains(&self.c) {
            return Err(Error::InvalidArgument(format!(
                "correlation threshold must lie in [0, 1], got {}",
                self.c
            )));
        }
        if self.bins < 2 {
            return Err(Error::InvalidArgument("need at least 2 bins".into()));
        }
        self.ica.validate(n_samples)
    }
}

/// One group of the partition. Constant columns carry no signal, so they
/// are listed in `features` but never enter the ICA model.
#[derive(Clone, Debug)]
pub struct Subset {
    pub features: Vec<usize>,
    pub model: IcaModel,
}

#[derive(Clone, Debug, Default)]
pub struct SubsetPartition {
    pub subsets: Vec<Subset>,
    pub order: Vec<usize>,
}

impl SubsetPartition {
    pub fn k(&self) -> usize {
        self.subsets.len()
    }

    pub fn feature_sets(&self) -> Vec<Vec<usize>> {
        self.subsets.iter().map(|s| s.features.clone()).collect()
    }

    pub fn contains(&self, feature: usize) -> bool {
        self.order.contains(&feature)
    }
}

/// One forward step. Information quantities are in the configured base.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: usize,
    pub chosen: usize,
    pub score: f64,
    pub candidate_scores: BTreeMap<usize, f64>,
    /// `I(x_chosen : y)`.
    pub relevance: f64,
    /// The chosen feature's term for each subset, in partition order.
    pub subset_terms: Vec<f64>,
    /// Largest mean absolute correlation with an existing subset.
    pub maxcov: Option<f64>,
    pub argcov_index: Option<usize>,
    pub subset_index: usize,
    pub created_new_subset: bool,
    /// Subset memberships before this step, for re-scoring.
    pub partition_before: Vec<Vec<usize>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SelectionTrace {
    pub steps: Vec<StepRecord>,
}

impl SelectionTrace {
    pub fn order(&self) -> Vec<usize> {
        self.steps.iter().map(|s| s.chosen).collect()
    }
}

/// Scoring state shared by a selection run: plug-in relevances, the label
/// anchor, and a memo of ICA conditional entropies keyed by the ordered
/// input columns (fits are seeded by those columns, so memoized values are
/// exactly what a refit would produce).
pub struct Engine<'a> {
    data: &'a PreparedData,
    config: HofsConfig,
    label_entropy: f64,
    label_constant: bool,
    anchor: f64,
    relevance: Vec<f64>,
    baseline: Vec<f64>,
    memo: Mutex<HashMap<Vec<usize>, f64>>,
}

/// Subset index, whether it was created, and the best `(subset, mean |r|)`.
pub type Assignment = (usize, bool, Option<(usize, f64)>);

impl<'a> Engine<'a> {
    pub fn new(data: &'a PreparedData, config: HofsConfig) -> Result<Self> {
        config.validate(data.n_features(), data.n_samples())?;
        let view = &data.view;
        let label_entropy = infotheory::entropy(view.labels())?;
        let label_constant = stats::variance(&data.label_signal) <= 0.0;
        let anchor = if label_constant {
            0.0
        } else {
            let m = IcaModel::empty(config.ica.signal_entropy).append(
                ColumnId::Label,
                data.label_signal.clone(),
                &config.ica,
            )?;
            label_entropy - m.last_conditional_entropy()?
        };
        let relevance = (0..data.n_features())
            .into_par_iter()
            .map(|i| infotheory::mutual_information(&[view.column(i)], &[view.labels()]))
            .collect::<Result<Vec<_>>>()?;
        let mut engine = Engine {
            data,
            config,
            label_entropy,
            label_constant,
            anchor,
            relevance,
            baseline: Vec::new(),
            memo: Mutex::new(HashMap::new()),
        };
        engine.baseline = (0..data.n_features())
            .into_par_iter()
            .map(|i| match engine.config.baseline {
                Baseline::Plugin => {
                    infotheory::conditional_entropy(&[view.labels()], &[view.column(i)])
                }
                Baseline::Ica => engine.label_conditional_entropy(&[i]),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(engine)
    }

    pub fn config(&self) -> &HofsConfig {
        &self.config
    }

    pub fn data(&self) -> &PreparedData {
        self.data
    }

    /// Plug-in `H(y)`.
    pub fn label_entropy(&self) -> f64 {
        self.label_entropy
    }

    /// Plug-in `I(x_i : y)`.
    pub fn relevance(&self, i: usize) -> f64 {
        self.relevance[i]
    }

    /// The `H(y | x_i)` estimate used inside every subset term.
    pub fn baseline(&self, i: usize) -> f64 {
        self.baseline[i]
    }

    fn is_constant(&self, j: usize) -> bool {
        self.data.signals[j].iter().all(|&v| v == 0.0)
    }

    /// ICA model over the given features in order, skipping constant
    /// columns.
    pub fn fit_model(&self, features: &[usize]) -> Result<IcaModel> {
        let mut model = IcaModel::empty(self.config.ica.signal_entropy);
        for &j in features {
            model = self.extend(&model, j)?;
        }
        Ok(model)
    }

    fn extend(&self, model: &IcaModel, j: usize) -> Result<IcaModel> {
        if self.is_constant(j) {
            return Ok(model.clone());
        }
        model.append(ColumnId::Feature(j), self.data.signals[j].clone(), &self.config.ica)
    }

    /// Anchored ICA estimate of `H(y | X)` for the features `X` in order.
    pub fn label_conditional_entropy(&self, features: &[usize]) -> Result<f64> {
        if let Some(&v) = self.memo.lock().unwrap().get(features) {
            return Ok(v);
        }
        let model = self.fit_model(features)?;
        self.label_conditional_entropy_of(&model, features)
    }

    fn label_conditional_entropy_of(&self, model: &IcaModel, features: &[usize]) -> Result<f64> {
        if self.label_constant {
            return Ok(0.0);
        }
        if let Some(&v) = self.memo.lock().unwrap().get(features) {
            return Ok(v);
        }
        let with_label = model.append(ColumnId::Label, self.data.label_signal.clone(), &self.config.ica)?;
        let v = self.anchor + with_label.last_conditional_entropy()?;
        self.memo.lock().unwrap().insert(features.to_vec(), v);
        Ok(v)
    }

    /// `H(y | x_i) − H(y | Ω ∪ x_i)` for one subset.
    pub fn subset_conditional_score(&self, subset: &Subset, candidate: usize) -> Result<f64> {
        self.check_candidate(candidate)?;
        if subset.features.contains(&candidate) {
            return Err(Error::AlreadySelected(candidate));
        }
        if self.label_constant {
            return Ok(0.0);
        }
        let mut key = subset.features.clone();
        key.push(candidate);
        let cached = self.memo.lock().unwrap().get(&key).copied();
        let conditional = match cached {
            Some(v) => v,
            None => {
                let scratch = self.extend(&subset.model, candidate)?;
                self.label_conditional_entropy_of(&scratch, &key)?
            }
        };
        Ok(self.baseline[candidate] - conditional)
    }

    fn check_candidate(&self, candidate: usize) -> Result<()> {
        let m = self.data.n_features();
        if candidate >= m {
            return Err(Error::FeatureOutOfRange {
                index: candidate,
                n_features: m,
            });
        }
        Ok(())
    }

    /// Relevance plus the per-subset terms.
    pub fn score_parts(&self, candidate: usize, partition: &SubsetPartition) -> Result<(f64, Vec<f64>)> {
        self.check_candidate(candidate)?;
        if partition.contains(candidate) {
            return Err(Error::AlreadySelected(candidate));
        }
        let terms = partition
            .subsets
            .iter()
            .map(|s| self.subset_conditional_score(s, candidate))
            .collect::<Result<Vec<_>>>()?;
        Ok((self.relevance[candidate], terms))
    }

    pub fn hofs_score(&self, candidate: usize, partition: &SubsetPartition) -> Result<f64> {
        let (rel, terms) = self.score_parts(candidate, partition)?;
        Ok(rel + terms.iter().sum::<f64>())
    }

    /// Mean absolute correlation of `chosen` with each subset.
    pub fn argcov(&self, partition: &SubsetPartition, chosen: usize) -> Vec<f64> {
        let x = &self.data.signals[chosen];
        partition
            .subsets
            .iter()
            .map(|s| {
                let sum: f64 = s
                    .features
                    .iter()
                    .map(|&u| stats::pearson(x, &self.data.signals[u]).abs())
                    .sum();
                sum / s.features.len() as f64
            })
            .collect()
    }

    /// Adds `chosen` to the most correlated subset when that correlation
    /// exceeds `C`, otherwise opens a new subset. Returns the subset index,
    /// whether it was created, and the largest mean correlation.
    pub fn assign_subset(
        &self,
        partition: &mut SubsetPartition,
        chosen: usize,
    ) -> Result<Assignment> {
        if partition.contains(chosen) {
            return Err(Error::AlreadySelected(chosen));
        }
        let covs = self.argcov(partition, chosen);
        let best = covs
            .iter()
            .copied()
            .enumerate()
            .fold(None, |best: Option<(usize, f64)>, (i, c)| match best {
                Some((_, bc)) if bc >= c => best,
                _ => Some((i, c)),
            });
        partition.order.push(chosen);
        match best {
            Some((idx, maxcov)) if maxcov > self.config.c => {
                let subset = &mut partition.subsets[idx];
                subset.model = self.extend(&subset.model, chosen)?;
                subset.features.push(chosen);
                Ok((idx, false, best))
            }
            _ => {
                partition.subsets.push(Subset {
                    features: vec![chosen],
                    model: self.fit_model(&[chosen])?,
                });
                Ok((partition.subsets.len() - 1, true, best))
            }
        }
    }

    /// Runs the forward search until `t` features are selected.
    pub fn run(&self) -> Result<(SubsetPartition, SelectionTrace)> {
        let m = self.data.n_features();
        let mut partition = SubsetPartition::default();
        let mut trace = SelectionTrace::default();
        for step in 0..self.config.t {
            let candidates: Vec<usize> = (0..m).filter(|i| !partition.contains(*i)).collect();
            let parts = candidates
                .par_iter()
                .map(|&i| self.score_parts(i, &partition).map(|p| (i, p)))
                .collect::<Result<Vec<_>>>()
                .map_err(|e| Error::Step {
                    step,
                    source: Box::new(e),
                })?;
            let scores: Vec<(usize, f64)> = parts
                .iter()
                .map(|(i, (rel, terms))| (*i, rel + terms.iter().sum::<f64>()))
                .collect();
            let (chosen, score) = argmax(&scores).expect("a candidate remains");
            let (relevance, subset_terms) = parts
                .into_iter()
                .find(|(i, _)| *i == chosen)
                .map(|(_, p)| p)
                .expect("chosen was scored");
            let partition_before = partition.feature_sets();
            let (subset_index, created, best) =
                self.assign_subset(&mut partition, chosen).map_err(|e| Error::Step {
                    step,
                    source: Box::new(e),
                })?;
            log::debug!(
                "step {step}: chose {} (score {score:.4}), subsets {:?}",
                self.data.feature_names[chosen],
                partition.feature_sets()
            );
            let unit = |v: f64| self.config.base.convert(v);
            trace.steps.push(StepRecord {
                t: step,
                chosen,
                score: unit(score),
                candidate_scores: scores.into_iter().map(|(i, s)| (i, unit(s))).collect(),
                relevance: unit(relevance),
                subset_terms: subset_terms.into_iter().map(unit).collect(),
                maxcov: best.map(|b| b.1),
                argcov_index: best.map(|b| b.0),
                subset_index,
                created_new_subset: created,
                partition_before,
            });
        }
        Ok((partition, trace))
    }

    /// Rebuilds a partition from feature sets listed in selection order.
    pub fn rebuild(&self, sets: &[Vec<usize>], order: &[usize]) -> Result<SubsetPartition> {
        let subsets = sets
            .iter()
            .map(|f| {
                Ok(Subset {
                    features: f.clone(),
                    model: self.fit_model(f)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SubsetPartition {
            subsets,
            order: order.to_vec(),
        })
    }

    /// Per-subset ratio of the plug-in `H(y | Ω)` to its ICA estimate.
    pub fn r_balance(&self, partition: &SubsetPartition) -> Result<RBalance> {
        if partition.subsets.is_empty() {
            return Err(Error::Empty("partition"));
        }
        let view = &self.data.view;
        let mut per_subset = Vec::with_capacity(partition.k());
        for s in &partition.subsets {
            let cols: Vec<&[u32]> = s.features.iter().map(|&j| view.column(j)).collect();
            let numerator = infotheory::conditional_entropy(&[view.labels()], &cols)?;
            let denominator = self.label_conditional_entropy_of(&s.model, &s.features)?;
            if denominator.abs() < 1e-12 {
                log::warn!("R_balance undefined for subset {:?}: zero denominator", s.features);
                per_subset.push(None);
            } else {
                per_subset.push(Some(numerator / denominator));
            }
        }
        let defined: Vec<f64> = per_subset.iter().flatten().copied().collect();
        let mean = (!defined.is_empty()).then(|| stats::mean(&defined));
        Ok(RBalance { per_subset, mean })
    }

    /// Mean absolute signal correlation inside each subset model.
    pub fn pearson_diagnostics(&self, partition: &SubsetPartition) -> PearsonDiagnostics {
        let per_subset: Vec<f64> = partition.subsets.iter().map(|s| s.model.avg_pearson()).collect();
        let multi: Vec<f64> = partition
            .subsets
            .iter()
            .zip(&per_subset)
            .filter(|(s, _)| s.model.dim() >= 2)
            .map(|(_, &p)| p)
            .collect();
        PearsonDiagnostics {
            overall: if multi.is_empty() { 0.0 } else { stats::mean(&multi) },
            per_subset,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RBalance {
    /// `None` where the denominator vanished.
    pub per_subset: Vec<Option<f64>>,
    pub mean: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PearsonDiagnostics {
    /// Subsets with fewer than two modeled signals report 0.
    pub per_subset: Vec<f64>,
    /// Mean over subsets with at least two signals; 0 if there are none.
    pub overall: f64,
}

/// Convenience wrapper: prepares the data and runs the forward search.
pub fn run_hofs(
    table: &crate::data::DataTable,
    config: &HofsConfig,
) -> Result<(SubsetPartition, SelectionTrace)> {
    let data = PreparedData::new(table, config.bins, config.scheme)?;
    Engine::new(&data, config.clone())?.run()
}
