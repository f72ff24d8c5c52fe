//! Synthetic benchmark generators: a tree-structured Gaussian model and a
//! 20-feature heterogeneous dataset with planted redundant and noise
//! features.
//!
//! Every feature draws from its own ChaCha stream keyed by the feature
//! position, so adding or changing one column never perturbs the others.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{DataTable, FeatureKind};
use crate::error::{Error, Result};

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeModelSpec {
    pub n_samples: usize,
    pub seed: u64,
    /// Edge strengths from the label to `x1`, `x2`, `x3`.
    pub root_edge_weights: [f64; 3],
    pub child_noise_sd: f64,
}

impl Default for TreeModelSpec {
    fn default() -> Self {
        TreeModelSpec {
            n_samples: 100_000,
            seed: 7,
            root_edge_weights: [1.0, 0.65, 0.42],
            child_noise_sd: 1.0,
        }
    }
}

/// Samples the tree model: `Y ~ Bernoulli(½)`, `x_k = w_k·Y + ε` for the
/// three roots, and two children per root with `x_child = x_root + ε`.
pub fn gen_tree(spec: &TreeModelSpec) -> Result<DataTable> {
    let n = spec.n_samples;
    if n == 0 {
        return Err(Error::InvalidArgument("tree model needs at least one sample".into()));
    }
    if spec.root_edge_weights.iter().any(|w| !w.is_finite())
        || !(spec.child_noise_sd.is_finite() && spec.child_noise_sd >= 0.0)
    {
        return Err(Error::InvalidArgument("tree model weights must be finite".into()));
    }
    let mut rng = stream(spec.seed, 0);
    let labels: Vec<u32> = (0..n).map(|_| rng.random_range(0..2)).collect();

    let noise = |id: u64, sd: f64| -> Vec<f64> {
        let mut rng = stream(spec.seed, id);
        (0..n)
            .map(|_| {
                let e: f64 = StandardNormal.sample(&mut rng);
                sd * e
            })
            .collect()
    };
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); 9];
    for (k, &w) in spec.root_edge_weights.iter().enumerate() {
        let eps = noise(k as u64 + 1, 1.0);
        columns[k] = labels.iter().zip(eps).map(|(&y, e)| w * y as f64 + e).collect();
    }
    for child in 3..9 {
        let parent = (child - 3) / 2;
        let eps = noise(child as u64 + 1, spec.child_noise_sd);
        columns[child] = columns[parent].iter().zip(eps).map(|(p, e)| p + e).collect();
    }
    if labels.iter().all(|&y| y == labels[0]) {
        return Err(Error::TooFewClasses(1));
    }
    DataTable::new(
        columns,
        (1..=9).map(|k| format!("x{k}")).collect(),
        vec![FeatureKind::Continuous; 9],
        labels,
        vec!["0".into(), "1".into()],
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeteroModelSpec {
    pub seed: u64,
    /// Samples per block; the dataset has 10 blocks and 2 blocks per class.
    pub block_size: usize,
    /// Signed entries are `±(|N(mean, sd²)| + offset)`.
    pub magnitude_mean: f64,
    pub magnitude_sd: f64,
    pub magnitude_offset: f64,
    /// Fraction of categorical entries replaced in the noisy copies.
    pub flip_fraction: f64,
    /// Negative entries replaced by positive draws in the noisy numeric
    /// copies.
    pub flip_count: usize,
}

impl Default for HeteroModelSpec {
    fn default() -> Self {
        HeteroModelSpec {
            seed: 7,
            block_size: 100,
            magnitude_mean: 1.0,
            magnitude_sd: 0.5,
            magnitude_offset: 0.05,
            flip_fraction: 0.1,
            flip_count: 200,
        }
    }
}

#[derive(Clone, Copy)]
enum Cell {
    Level(u8),
    Pos,
    Neg,
}

use Cell::{Level as L, Neg as N, Pos as P};

/// Block-by-feature pattern for F1..F10 (rows are the ten blocks).
const PATTERN: [[Cell; 10]; 10] = [
    [L(1), L(0), L(0), N, N, L(1), L(0), L(0), N, N],
    [L(1), L(0), L(0), N, N, L(1), L(1), L(0), N, N],
    [L(2), L(1), L(0), N, N, L(1), L(1), L(0), N, N],
    [L(2), L(1), L(0), N, N, L(1), L(1), L(1), N, N],
    [L(0), L(0), L(1), N, N, L(0), L(1), L(1), N, N],
    [L(0), L(0), L(1), N, N, L(0), L(0), L(1), P, N],
    [L(0), L(0), L(0), P, N, L(0), L(0), L(1), P, N],
    [L(0), L(0), L(0), P, N, L(0), L(0), L(0), P, P],
    [L(0), L(0), L(0), P, P, L(0), L(0), L(0), P, P],
    [L(0), L(0), L(0), P, P, L(0), L(0), L(0), P, P],
];

const BLOCKS: usize = 10;

/// Levels of the categorical pattern columns F1, F2, F3.
const LEVELS: [u32; 3] = [3, 2, 2];

/// Generates the heterogeneous dataset: F1–F10 follow the block pattern,
/// F11–F13 are F1–F3 with a fraction of entries moved to another level,
/// F14–F15 are F4–F5 with `flip_count` negative entries made positive, and
/// F16–F20 are label-independent noise (three Gaussian, two 3-level
/// categorical).
pub fn gen_hetero(spec: &HeteroModelSpec) -> Result<DataTable> {
    let b = spec.block_size;
    if b == 0 {
        return Err(Error::InvalidArgument("block size must be positive".into()));
    }
    if !(0.0..=1.0).contains(&spec.flip_fraction) {
        return Err(Error::InvalidArgument("flip fraction must lie in [0, 1]".into()));
    }
    let magnitude = Normal::new(spec.magnitude_mean, spec.magnitude_sd)
        .map_err(|e| Error::InvalidArgument(format!("magnitude distribution: {e}")))?;
    let n = b * BLOCKS;
    let labels: Vec<u32> = (0..n).map(|i| (i / b / 2) as u32).collect();
    let draw = |rng: &mut ChaCha8Rng| magnitude.sample(rng).abs() + spec.magnitude_offset;

    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(20);
    #[allow(clippy::needless_range_loop)]
    for f in 0..10 {
        let mut rng = stream(spec.seed, f as u64 + 1);
        let col = (0..n)
            .map(|i| match PATTERN[i / b][f] {
                Cell::Level(v) => v as f64,
                Cell::Pos => draw(&mut rng),
                Cell::Neg => -draw(&mut rng),
            })
            .collect();
        columns.push(col);
    }

    for (k, &levels) in LEVELS.iter().enumerate() {
        let mut rng = stream(spec.seed, 11 + k as u64);
        let mut col = columns[k].clone();
        let flips = (spec.flip_fraction * n as f64).round() as usize;
        for i in index::sample(&mut rng, n, flips) {
            let current = col[i] as u32;
            let shift = rng.random_range(1..levels);
            col[i] = ((current + shift) % levels) as f64;
        }
        columns.push(col);
    }

    for k in 0..2 {
        let mut rng = stream(spec.seed, 14 + k as u64);
        let mut col = columns[3 + k].clone();
        let negatives: Vec<usize> = (0..n).filter(|&i| col[i] < 0.0).collect();
        if spec.flip_count > negatives.len() {
            return Err(Error::InvalidArgument(format!(
                "cannot flip {} of {} negative entries",
                spec.flip_count,
                negatives.len()
            )));
        }
        let mut chosen: Vec<usize> = index::sample(&mut rng, negatives.len(), spec.flip_count)
            .into_iter()
            .map(|p| negatives[p])
            .collect();
        chosen.sort_unstable();
        for i in chosen {
            col[i] = draw(&mut rng);
        }
        columns.push(col);
    }

    for k in 0..3 {
        let mut rng = stream(spec.seed, 16 + k as u64);
        columns.push((0..n).map(|_| StandardNormal.sample(&mut rng)).collect());
    }
    for k in 0..2 {
        let mut rng = stream(spec.seed, 19 + k as u64);
        columns.push((0..n).map(|_| rng.random_range(0..3u32) as f64).collect());
    }

    let categorical = [0, 1, 2, 5, 6, 7, 10, 11, 12, 18, 19];
    let kinds = (0..20)
        .map(|j| {
            if categorical.contains(&j) {
                FeatureKind::Categorical
            } else {
                FeatureKind::Continuous
            }
        })
        .collect();
    DataTable::new(
        columns,
        (1..=20).map(|k| format!("F{k}")).collect(),
        kinds,
        labels,
        (1..=5).map(|k| k.to_string()).collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_tree(seed: u64) -> DataTable {
        gen_tree(&TreeModelSpec {
            n_samples: 2000,
            seed,
            ..TreeModelSpec::default()
        })
        .unwrap()
    }

    #[test]
    fn tree_shape_and_determinism() {
        let a = small_tree(3);
        assert_eq!(a.n_features(), 9);
        assert_eq!(a.n_samples(), 2000);
        assert_eq!(a, small_tree(3));
        assert_ne!(a, small_tree(4));
    }

    #[test]
    fn tree_children_track_parents() {
        let t = small_tree(5);
        let r = crate::stats::pearson(t.column(0), t.column(3));
        assert!(r > 0.6, "x1~x4 correlation {r}");
    }

    #[test]
    fn hetero_layout() {
        let t = gen_hetero(&HeteroModelSpec::default()).unwrap();
        assert_eq!(t.n_samples(), 1000);
        assert_eq!(t.n_features(), 20);
        assert_eq!(t.labels()[0], 0);
        assert_eq!(t.labels()[199], 0);
        assert_eq!(t.labels()[200], 1);
        assert_eq!(t.labels()[999], 4);
        assert_eq!(t.label_names()[4], "5");
        let f1 = t.column(0);
        assert!(f1[..200].iter().all(|&v| v == 1.0));
        assert!(f1[200..400].iter().all(|&v| v == 2.0));
        assert!(f1[400..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn hetero_signs_follow_pattern() {
        let t = gen_hetero(&HeteroModelSpec::default()).unwrap();
        for (i, &v) in t.column(3).iter().enumerate() {
            assert_eq!(v > 0.0, i >= 600, "F4 row {i}");
        }
        for (i, &v) in t.column(9).iter().enumerate() {
            assert_eq!(v > 0.0, i >= 700, "F10 row {i}");
        }
    }

    #[test]
    fn hetero_noisy_copies() {
        let spec = HeteroModelSpec::default();
        let t = gen_hetero(&spec).unwrap();
        let neg = |j: usize| t.column(j).iter().filter(|&&v| v < 0.0).count();
        assert_eq!(neg(3) - neg(13), 200);
        assert_eq!(neg(4) - neg(14), 200);
        let changed = t.column(0).iter().zip(t.column(10)).filter(|(a, b)| a != b).count();
        assert_eq!(changed, 100);
        assert!(t.column(11).iter().all(|&v| v == 0.0 || v == 1.0));
        assert_eq!(t, gen_hetero(&spec).unwrap());
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(gen_tree(&TreeModelSpec {
            n_samples: 0,
            ..TreeModelSpec::default()
        })
        .is_err());
        assert!(gen_hetero(&HeteroModelSpec {
            flip_count: 601,
            ..HeteroModelSpec::default()
        })
        .is_err());
    }
}
