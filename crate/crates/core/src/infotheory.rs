//! Plug-in entropy and mutual information over integer-coded columns.
//!
//! All functions return nats; use [`Base::convert`] for bits. Joint outcomes
//! are counted with a mixed-radix key (dense table when small, hash map
//! otherwise), so a k-column joint entropy costs O(N·k).

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Values within this distance below zero are reported as zero.
pub const CLAMP_TOL: f64 = 1e-12;

const DENSE_LIMIT: u64 = 1 << 20;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Base {
    #[default]
    Nats,
    Bits,
}

impl Base {
    /// Converts a value in nats to this base.
    pub fn convert(self, nats: f64) -> f64 {
        match self {
            Base::Nats => nats,
            Base::Bits => nats / std::f64::consts::LN_2,
        }
    }
}

fn check_lengths(cols: &[&[u32]]) -> Result<usize> {
    let n = cols.first().map_or(0, |c| c.len());
    for c in cols {
        if c.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                found: c.len(),
            });
        }
    }
    Ok(n)
}

fn entropy_from_counts<I: IntoIterator<Item = u64>>(counts: I, n: usize) -> f64 {
    let n = n as f64;
    let h: f64 = counts
        .into_iter()
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum();
    h.max(0.0)
}

/// Joint outcome counts for the given columns, in no particular order.
pub fn joint_counts(cols: &[&[u32]]) -> Result<Vec<u64>> {
    let n = check_lengths(cols)?;
    if cols.is_empty() {
        return Ok(if n == 0 { vec![] } else { vec![n as u64] });
    }
    let radices: Vec<u64> = cols
        .iter()
        .map(|c| c.iter().copied().max().map_or(1, |m| m as u64 + 1))
        .collect();
    let space = radices
        .iter()
        .try_fold(1u64, |acc, &r| acc.checked_mul(r));
    match space {
        Some(space) if space <= DENSE_LIMIT && space <= 16 * n as u64 + 64 => {
            let mut counts = vec![0u64; space as usize];
            for i in 0..n {
                counts[mixed_key(cols, &radices, i) as usize] += 1;
            }
            Ok(counts)
        }
        Some(_) => {
            let mut counts: HashMap<u64, u64> = HashMap::with_capacity(n);
            for i in 0..n {
                *counts.entry(mixed_key(cols, &radices, i)).or_default() += 1;
            }
            Ok(counts.into_values().collect())
        }
        None => {
            let mut counts: HashMap<Vec<u32>, u64> = HashMap::with_capacity(n);
            for i in 0..n {
                let key: Vec<u32> = cols.iter().map(|c| c[i]).collect();
                *counts.entry(key).or_default() += 1;
            }
            Ok(counts.into_values().collect())
        }
    }
}

fn mixed_key(cols: &[&[u32]], radices: &[u64], i: usize) -> u64 {
    cols.iter()
        .zip(radices)
        .fold(0u64, |key, (c, &r)| key * r + c[i] as u64)
}

pub fn entropy(col: &[u32]) -> Result<f64> {
    if col.is_empty() {
        return Err(Error::Empty("column"));
    }
    joint_entropy(&[col])
}

/// Entropy of the tuple-valued variable formed by `cols`.
pub fn joint_entropy(cols: &[&[u32]]) -> Result<f64> {
    if cols.is_empty() {
        return Err(Error::Empty("column list"));
    }
    let n = check_lengths(cols)?;
    if n == 0 {
        return Err(Error::Empty("column"));
    }
    Ok(entropy_from_counts(joint_counts(cols)?, n))
}

fn joint_or_zero(cols: &[&[u32]]) -> Result<f64> {
    if cols.is_empty() {
        Ok(0.0)
    } else {
        joint_entropy(cols)
    }
}

fn concat<'a>(a: &[&'a [u32]], b: &[&'a [u32]]) -> Vec<&'a [u32]> {
    a.iter().chain(b).copied().collect()
}

fn clamp(v: f64) -> f64 {
    if v < 0.0 && v > -CLAMP_TOL {
        0.0
    } else {
        v.max(0.0)
    }
}

/// H(cols | given) = H(cols, given) − H(given).
pub fn conditional_entropy(cols: &[&[u32]], given: &[&[u32]]) -> Result<f64> {
    check_lengths(&concat(cols, given))?;
    Ok(clamp(joint_entropy(&concat(cols, given))? - joint_or_zero(given)?))
}

/// I(a : b) = H(a) + H(b) − H(a, b).
pub fn mutual_information(a: &[&[u32]], b: &[&[u32]]) -> Result<f64> {
    check_lengths(&concat(a, b))?;
    Ok(clamp(
        joint_entropy(a)? + joint_entropy(b)? - joint_entropy(&concat(a, b))?,
    ))
}

/// I(a : b | given) = H(a, given) + H(b, given) − H(a, b, given) − H(given).
pub fn conditional_mutual_information(
    a: &[&[u32]],
    b: &[&[u32]],
    given: &[&[u32]],
) -> Result<f64> {
    let ab = concat(a, b);
    check_lengths(&concat(&ab, given))?;
    Ok(clamp(
        joint_entropy(&concat(a, given))? + joint_entropy(&concat(b, given))?
            - joint_entropy(&concat(&ab, given))?
            - joint_or_zero(given)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::BTreeMap;

    fn bits(v: f64) -> f64 {
        Base::Bits.convert(v)
    }

    // XNOR over all four (x1, x2) combinations.
    const X1: [u32; 4] = [0, 0, 1, 1];
    const X2: [u32; 4] = [0, 1, 0, 1];
    const Y: [u32; 4] = [1, 0, 0, 1];

    #[test]
    fn entropy_examples() {
        assert_eq!(entropy(&[0, 0, 0, 0]).unwrap(), 0.0);
        assert!((bits(entropy(&[0, 1, 0, 1]).unwrap()) - 1.0).abs() < 1e-12);
        assert!((bits(entropy(&[0, 0, 1, 2]).unwrap()) - 1.5).abs() < 1e-12);
        assert!(entropy(&[]).is_err());
    }

    #[test]
    fn joint_entropy_examples() {
        let x: &[u32] = &[0, 1, 2, 1, 0];
        assert!((joint_entropy(&[x, x]).unwrap() - entropy(x).unwrap()).abs() < 1e-12);
        assert!((bits(joint_entropy(&[&X1, &X2]).unwrap()) - 2.0).abs() < 1e-12);
        assert!((bits(joint_entropy(&[&X1, &X2, &Y]).unwrap()) - 2.0).abs() < 1e-12);
        assert!(matches!(
            joint_entropy(&[&[0, 1], &[0]]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn conditional_examples() {
        let x: &[u32] = &[0, 1, 2, 1, 0];
        assert_eq!(conditional_entropy(&[x], &[x]).unwrap(), 0.0);
        assert!((conditional_entropy(&[x], &[]).unwrap() - entropy(x).unwrap()).abs() < 1e-12);
        assert!((bits(conditional_entropy(&[&Y], &[&X1]).unwrap()) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mutual_information_examples() {
        assert!(mutual_information(&[&X1], &[&Y]).unwrap().abs() < 1e-12);
        assert!((bits(mutual_information(&[&X1, &X2], &[&Y]).unwrap()) - 1.0).abs() < 1e-12);
        let x: &[u32] = &[0, 1, 2, 1, 0];
        assert!((mutual_information(&[x], &[x]).unwrap() - entropy(x).unwrap()).abs() < 1e-12);
        assert_eq!(mutual_information(&[&X1], &[&X2]).unwrap(), 0.0);
    }

    #[test]
    fn conditional_mutual_information_examples() {
        assert_eq!(conditional_mutual_information(&[&X1], &[&Y], &[&Y]).unwrap(), 0.0);
        let v = conditional_mutual_information(&[&X1], &[&X2], &[&Y]).unwrap();
        assert!((bits(v) - 1.0).abs() < 1e-12);
        let a: &[u32] = &[0, 1, 1, 0, 2];
        let b: &[u32] = &[1, 1, 0, 0, 2];
        assert_eq!(
            conditional_mutual_information(&[a], &[b], &[]).unwrap(),
            mutual_information(&[a], &[b]).unwrap()
        );
    }

    #[test]
    fn wide_joint_uses_fallback_keys() {
        // Radix product overflows u64, forcing tuple keys.
        let big = u32::MAX;
        let cols: Vec<Vec<u32>> = (0..3).map(|k| vec![0, big, k, big]).collect();
        let refs: Vec<&[u32]> = cols.iter().map(Vec::as_slice).collect();
        let h = joint_entropy(&refs).unwrap();
        // Rows 1 and 3 coincide: p = (1/4, 1/2, 1/4).
        assert!((h - 1.5 * std::f64::consts::LN_2).abs() < 1e-12);
    }

    /// Oracle: materialize the full probability table over all tuples.
    #[allow(clippy::needless_range_loop)]
    fn oracle_joint(cols: &[Vec<u32>], idx: &[usize]) -> f64 {
        if idx.is_empty() {
            return 0.0;
        }
        let n = cols[0].len();
        let mut table: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
        for i in 0..n {
            let key = idx.iter().map(|&j| cols[j][i]).collect();
            *table.entry(key).or_default() += 1.0 / n as f64;
        }
        table.values().map(|p| -p * p.ln()).sum()
    }

    fn dataset() -> impl Strategy<Value = Vec<Vec<u32>>> {
        (1usize..=64, 2usize..=4).prop_flat_map(|(n, k)| {
            proptest::collection::vec(proptest::collection::vec(0u32..3, n), k)
        })
    }

    proptest! {
        #[test]
        fn agrees_with_brute_force_oracle(cols in dataset()) {
            let refs: Vec<&[u32]> = cols.iter().map(Vec::as_slice).collect();
            let k = cols.len();
            let all: Vec<usize> = (0..k).collect();
            prop_assert!((entropy(refs[0]).unwrap() - oracle_joint(&cols, &[0])).abs() < 1e-12);
            prop_assert!((joint_entropy(&refs).unwrap() - oracle_joint(&cols, &all)).abs() < 1e-12);

            let h = |idx: &[usize]| oracle_joint(&cols, idx);
            let ce = h(&[0, 1]) - h(&[1]);
            prop_assert!((conditional_entropy(&refs[..1], &refs[1..2]).unwrap() - ce.max(0.0)).abs() < 1e-12);
            let mi = h(&[0]) + h(&[1]) - h(&[0, 1]);
            prop_assert!((mutual_information(&refs[..1], &refs[1..2]).unwrap() - mi.max(0.0)).abs() < 1e-12);
            let rest: Vec<usize> = (2..k).collect();
            let with = |extra: &[usize]| {
                let mut v = extra.to_vec();
                v.extend(&rest);
                h(&v)
            };
            let cmi = with(&[0]) + with(&[1]) - with(&[0, 1]) - h(&rest);
            let got = conditional_mutual_information(&refs[..1], &refs[1..2], &refs[2..]).unwrap();
            prop_assert!((got - cmi.max(0.0)).abs() < 1e-12);
        }

        #[test]
        fn chain_rule_and_monotonicity(cols in dataset()) {
            let refs: Vec<&[u32]> = cols.iter().map(Vec::as_slice).collect();
            let hab = joint_entropy(&refs[..2]).unwrap();
            let ha = entropy(refs[0]).unwrap();
            let hb_a = conditional_entropy(&refs[1..2], &refs[..1]).unwrap();
            prop_assert!((hab - ha - hb_a).abs() < 1e-12);
            let mut prev = 0.0;
            for t in 1..=refs.len() {
                let h = joint_entropy(&refs[..t]).unwrap();
                prop_assert!(h >= prev - 1e-12);
                prev = h;
            }
            let distinct = joint_counts(&refs).unwrap().iter().filter(|&&c| c > 0).count();
            prop_assert!(prev <= (distinct as f64).ln() + 1e-12);
        }

        #[test]
        fn bits_are_scaled_nats(cols in dataset()) {
            let h = entropy(&cols[0]).unwrap();
            prop_assert!((Base::Bits.convert(h) - h / std::f64::consts::LN_2).abs() < 1e-12);
        }
    }
}
