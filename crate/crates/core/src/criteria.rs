//! Lower-order mutual-information criteria and the shared greedy forward
//! search.
//!
//! Each criterion scores a candidate `x_i` against the already selected set
//! `Ω` using pairwise plug-in terms only:
//!
//! | criterion | score |
//! |-----------|-------|
//! | MIM       | `I(x_i:y)` |
//! | MIFS      | `I(x_i:y) − β Σ_j I(x_i:x_j)` |
//! | JMI       | `Σ_j I({x_i,x_j}:y)`, or `I(x_i:y)` when `Ω = ∅` |
//! | mRMR      | `I(x_i:y) − (1/|Ω|) Σ_j I(x_i:x_j)` |
//! | CMIM      | `I(x_i:y) − max_j [I(x_i:x_j) − I(x_i:x_j|y)]` |
//! | SPEC-CMI  | `I(x_i:y) + Σ_j I(x_i:y|x_j)` |

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::DiscretizedView;
use crate::error::{Error, Result};
use crate::infotheory::{conditional_mutual_information, mutual_information};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Criterion {
    Mim,
    Mifs { beta: f64 },
    Jmi,
    Mrmr,
    Cmim,
    SpecCmi,
}

impl Criterion {
    pub const DEFAULT_MIFS_BETA: f64 = 1.0;

    pub fn name(&self) -> &'static str {
        match self {
            Criterion::Mim => "mim",
            Criterion::Mifs { .. } => "mifs",
            Criterion::Jmi => "jmi",
            Criterion::Mrmr => "mrmr",
            Criterion::Cmim => "cmim",
            Criterion::SpecCmi => "speccmi",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Criterion::Mifs { beta } if !(*beta >= 0.0 && beta.is_finite()) => Err(
                Error::InvalidArgument(format!("MIFS beta must be non-negative, got {beta}")),
            ),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mim" => Ok(Criterion::Mim),
            "mifs" => Ok(Criterion::Mifs {
                beta: Criterion::DEFAULT_MIFS_BETA,
            }),
            "jmi" => Ok(Criterion::Jmi),
            "mrmr" => Ok(Criterion::Mrmr),
            "cmim" => Ok(Criterion::Cmim),
            "speccmi" | "spec-cmi" | "spec_cmi" => Ok(Criterion::SpecCmi),
            other => Err(Error::InvalidArgument(format!("unknown criterion {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub order: Vec<usize>,
    /// Score of the chosen feature at each step.
    pub scores: Vec<f64>,
    /// Every candidate's score at each step.
    pub candidate_scores: Vec<BTreeMap<usize, f64>>,
}

/// Per-candidate running sums over the selected set, so each step only adds
/// the terms for the newest selected feature.
#[derive(Clone, Copy, Debug, Default)]
struct Accum {
    redundancy: f64,
    joint_relevance: f64,
    conditional_relevance: f64,
    cmim_penalty: Option<f64>,
}

fn check_candidate(view: &DiscretizedView, candidate: usize, selected: &[usize]) -> Result<()> {
    let m = view.n_features();
    for &j in selected.iter().chain(std::iter::once(&candidate)) {
        if j >= m {
            return Err(Error::FeatureOutOfRange {
                index: j,
                n_features: m,
            });
        }
    }
    if selected.contains(&candidate) {
        return Err(Error::AlreadySelected(candidate));
    }
    Ok(())
}

fn relevance(view: &DiscretizedView, i: usize) -> Result<f64> {
    mutual_information(&[view.column(i)], &[view.labels()])
}

fn update(criterion: Criterion, acc: &mut Accum, view: &DiscretizedView, i: usize, j: usize) -> Result<()> {
    let (xi, xj, y) = (view.column(i), view.column(j), view.labels());
    match criterion {
        Criterion::Mim => {}
        Criterion::Mifs { .. } | Criterion::Mrmr => {
            acc.redundancy += mutual_information(&[xi], &[xj])?;
        }
        Criterion::Jmi => {
            acc.joint_relevance += mutual_information(&[xi, xj], &[y])?;
        }
        Criterion::Cmim => {
            let p = mutual_information(&[xi], &[xj])? - conditional_mutual_information(&[xi], &[xj], &[y])?;
            acc.cmim_penalty = Some(acc.cmim_penalty.map_or(p, |q: f64| q.max(p)));
        }
        Criterion::SpecCmi => {
            acc.conditional_relevance += conditional_mutual_information(&[xi], &[y], &[xj])?;
        }
    }
    Ok(())
}

fn finish(criterion: Criterion, acc: &Accum, relevance: f64, n_selected: usize) -> f64 {
    match criterion {
        Criterion::Mim => relevance,
        Criterion::Mifs { beta } => relevance - beta * acc.redundancy,
        Criterion::Jmi if n_selected == 0 => relevance,
        Criterion::Jmi => acc.joint_relevance,
        Criterion::Mrmr if n_selected == 0 => relevance,
        Criterion::Mrmr => relevance - acc.redundancy / n_selected as f64,
        Criterion::Cmim => relevance - acc.cmim_penalty.unwrap_or(0.0),
        Criterion::SpecCmi => relevance + acc.conditional_relevance,
    }
}

/// Scores one candidate against an ordered selected set.
pub fn score_candidate(
    criterion: Criterion,
    candidate: usize,
    selected: &[usize],
    view: &DiscretizedView,
) -> Result<f64> {
    criterion.validate()?;
    check_candidate(view, candidate, selected)?;
    let mut acc = Accum::default();
    for &j in selected {
        update(criterion, &mut acc, view, candidate, j)?;
    }
    Ok(finish(criterion, &acc, relevance(view, candidate)?, selected.len()))
}

/// Index of the largest score; the lowest index wins ties.
pub(crate) fn argmax(scores: &[(usize, f64)]) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for &(i, s) in scores {
        match best {
            Some((bi, bs)) if bs > s || (bs == s && bi < i) => {}
            _ => best = Some((i, s)),
        }
    }
    best
}

/// Greedy forward selection of `t` features.
pub fn select_greedy(criterion: Criterion, view: &DiscretizedView, t: usize) -> Result<SelectionResult> {
    criterion.validate()?;
    let m = view.n_features();
    if t == 0 || t > m {
        return Err(Error::InvalidArgument(format!(
            "number of features to select must be in 1..={m}, got {t}"
        )));
    }
    let relevances: Vec<f64> = (0..m)
        .into_par_iter()
        .map(|i| relevance(view, i))
        .collect::<Result<_>>()?;
    let mut acc = vec![Accum::default(); m];
    let mut selected: Vec<usize> = Vec::with_capacity(t);
    let mut result = SelectionResult {
        order: Vec::with_capacity(t),
        scores: Vec::with_capacity(t),
        candidate_scores: Vec::with_capacity(t),
    };
    let mut remaining: Vec<usize> = (0..m).collect();
    while selected.len() < t {
        let scored: Vec<(usize, f64)> = remaining
            .iter()
            .map(|&i| (i, finish(criterion, &acc[i], relevances[i], selected.len())))
            .collect();
        let (chosen, score) = argmax(&scored).expect("at least one candidate remains");
        selected.push(chosen);
        remaining.retain(|&i| i != chosen);
        result.order.push(chosen);
        result.scores.push(score);
        result.candidate_scores.push(scored.into_iter().collect());
        if selected.len() < t {
            let updates: Vec<(usize, Accum)> = remaining
                .par_iter()
                .map(|&i| {
                    let mut a = acc[i];
                    update(criterion, &mut a, view, i, chosen).map(|_| (i, a))
                })
                .collect::<Result<_>>()?;
            for (i, a) in updates {
                acc[i] = a;
            }
        }
    }
    Ok(result)
}
