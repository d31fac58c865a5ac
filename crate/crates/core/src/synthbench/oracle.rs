//! Exhaustive reference split search for small inputs.
//!
//! Deliberately shares no code with the learners' sweep: every candidate
//! threshold is materialized, rows are partitioned by direct comparison, and
//! each criterion is recomputed from scratch with two-pass formulas.

use crate::dataset::RunTable;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::trees::{Criterion, Target};

pub const ORACLE_MAX_ROWS: usize = 20;
pub const ORACLE_MAX_VARIABLES: usize = 8;

#[derive(Clone, Debug, PartialEq)]
pub struct OracleSplit<T> {
    pub variable_index: usize,
    pub threshold: T,
    pub gain: T,
}

/// Best split of `rows` by brute force, under the same tie contract as the
/// learners: gains within `T::tie_tolerance()` (relative, floored at 1) are
/// equal and the earlier `(variable, threshold)` wins; a split must beat zero
/// by more than that tolerance.
pub fn oracle_best_split<T: Scalar>(
    table: &RunTable<T>,
    rows: &[usize],
    target: &Target<'_, T>,
    criterion: Criterion,
) -> Result<Option<OracleSplit<T>>> {
    if rows.len() > ORACLE_MAX_ROWS || table.variables().len() > ORACLE_MAX_VARIABLES {
        return Err(Error::Training(format!(
            "oracle limited to {ORACLE_MAX_ROWS} rows and {ORACLE_MAX_VARIABLES} variables"
        )));
    }
    if rows.is_empty() {
        return Err(Error::Training("oracle called with zero rows".into()));
    }
    if let (Criterion::Gini | Criterion::InfoGainRatio, Target::Continuous(_)) = (criterion, target) {
        return Err(Error::Training("criterion needs a categorical target".into()));
    }
    let y: Vec<T> = rows
        .iter()
        .map(|&r| match target {
            Target::Classes { codes, .. } => T::from_count(codes[r]),
            Target::Continuous(v) => v[r],
        })
        .collect();
    let k = match target {
        Target::Classes { k, .. } => *k,
        Target::Continuous(_) => 0,
    };
    let tol = T::tie_tolerance();
    let beats = |a: T, b: T| a - b > tol * T::one().max(a.abs()).max(b.abs());

    let mut best: Option<OracleSplit<T>> = None;
    for (j, var) in table.variables().iter().enumerate() {
        let x: Vec<T> = rows.iter().map(|&r| var.values[r]).collect();
        let mut distinct = x.clone();
        distinct.sort_by(|a, b| a.partial_cmp(b).unwrap());
        distinct.dedup();
        for w in distinct.windows(2) {
            let mut t = (w[0] + w[1]) / T::lit(2.0);
            if t <= w[0] {
                t = w[1];
            }
            let left: Vec<T> = (0..x.len()).filter(|&i| x[i] < t).map(|i| y[i]).collect();
            let right: Vec<T> = (0..x.len()).filter(|&i| x[i] >= t).map(|i| y[i]).collect();
            let gain = match criterion {
                Criterion::Sdr => sdr(&y, &left, &right),
                Criterion::Gini => gini_gain(&y, &left, &right, k),
                Criterion::InfoGainRatio => gain_ratio(&y, &left, &right, k),
            };
            let better = match &best {
                None => beats(gain, T::zero()),
                Some(b) => beats(gain, b.gain),
            };
            if better {
                best = Some(OracleSplit {
                    variable_index: j,
                    threshold: t,
                    gain,
                });
            }
        }
    }
    Ok(best)
}

fn sd<T: Scalar>(v: &[T]) -> T {
    if v.len() < 2 {
        return T::zero();
    }
    let n = T::from_count(v.len());
    let mean = v.iter().copied().sum::<T>() / n;
    let ss: T = v.iter().map(|&x| (x - mean) * (x - mean)).sum();
    (ss / (n - T::one())).sqrt()
}

fn sdr<T: Scalar>(all: &[T], left: &[T], right: &[T]) -> T {
    let n = T::from_count(all.len());
    sd(all) - T::from_count(left.len()) / n * sd(left) - T::from_count(right.len()) / n * sd(right)
}

fn proportions<T: Scalar>(v: &[T], k: usize) -> Vec<T> {
    let n = T::from_count(v.len());
    (0..k)
        .map(|c| T::from_count(v.iter().filter(|&&y| y == T::from_count(c)).count()) / n)
        .collect()
}

fn gini<T: Scalar>(v: &[T], k: usize) -> T {
    T::one() - proportions(v, k).iter().map(|&p| p * p).sum::<T>()
}

fn entropy<T: Scalar>(v: &[T], k: usize) -> T {
    -proportions(v, k)
        .iter()
        .filter(|&&p| p > T::zero())
        .map(|&p| p * p.log2())
        .sum::<T>()
}

fn gini_gain<T: Scalar>(all: &[T], left: &[T], right: &[T], k: usize) -> T {
    let n = T::from_count(all.len());
    gini(all, k) - T::from_count(left.len()) / n * gini(left, k) - T::from_count(right.len()) / n * gini(right, k)
}

fn gain_ratio<T: Scalar>(all: &[T], left: &[T], right: &[T], k: usize) -> T {
    let n = T::from_count(all.len());
    let (wl, wr) = (T::from_count(left.len()) / n, T::from_count(right.len()) / n);
    let info = entropy(all, k) - wl * entropy(left, k) - wr * entropy(right, k);
    let split_info = -(wl * wl.log2() + wr * wr.log2());
    info / split_info
}
