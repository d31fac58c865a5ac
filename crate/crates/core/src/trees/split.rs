use serde::{Deserialize, Serialize};

use super::SplitTest;
use crate::dataset::{ObjectiveValues, RunTable};
use crate::error::{Error, Result};
use crate::scalar::{improves, is_positive, midpoint, Scalar};

/// Split-quality measure.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Criterion {
    /// Standard deviation reduction (sample sd, `n - 1` denominator).
    Sdr,
    /// Information gain divided by split information, in bits.
    InfoGainRatio,
    /// Reduction of Gini impurity.
    Gini,
}

impl Criterion {
    pub const ALL: [Criterion; 3] = [Criterion::Sdr, Criterion::InfoGainRatio, Criterion::Gini];
}

/// Training target for split search.
#[derive(Clone, Copy, Debug)]
pub enum Target<'a, T> {
    /// Class codes in `0..k`.
    Classes {
        codes: &'a [usize],
        k: usize,
    },
    Continuous(&'a [T]),
}

impl<'a, T: Scalar> Target<'a, T> {
    pub fn from_objective(table: &'a RunTable<T>, objective: &str) -> Result<Self> {
        Ok(match &table.objective(objective)?.values {
            ObjectiveValues::Categorical { alphabet, codes } => Target::Classes {
                codes,
                k: alphabet.len(),
            },
            ObjectiveValues::Continuous(values) => Target::Continuous(values),
        })
    }

    /// Numeric value of row `i`; classes are coded to their index.
    pub(crate) fn numeric(&self, i: usize) -> T {
        match self {
            Target::Classes { codes, .. } => T::from_count(codes[i]),
            Target::Continuous(values) => values[i],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScoredSplit<T> {
    pub split: SplitTest<T>,
    pub gain: T,
}

/// Best `(variable, midpoint)` split of `rows` under `criterion`.
///
/// Returns `None` when no split has strictly positive gain. Ties (within
/// rounding tolerance) go to the lower variable index, then the lower
/// threshold.
pub fn best_split<T: Scalar>(
    table: &RunTable<T>,
    rows: &[usize],
    target: &Target<'_, T>,
    criterion: Criterion,
) -> Result<Option<ScoredSplit<T>>> {
    let columns: Vec<&[T]> = table.variables().iter().map(|v| v.values.as_slice()).collect();
    check_target(target, criterion)?;
    if rows.is_empty() {
        return Err(Error::Training("best_split called with zero rows".into()));
    }
    Ok(search(&columns, rows, target, criterion, 1).map(|c| ScoredSplit {
        split: SplitTest {
            variable: table.variables()[c.variable].name.clone(),
            variable_index: c.variable,
            threshold: c.threshold,
        },
        gain: c.gain,
    }))
}

pub(crate) fn check_target<T: Scalar>(target: &Target<'_, T>, criterion: Criterion) -> Result<()> {
    match (criterion, target) {
        (Criterion::InfoGainRatio | Criterion::Gini, Target::Continuous(_)) => Err(Error::Training(format!(
            "criterion {criterion:?} needs a categorical target"
        ))),
        _ => Ok(()),
    }
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct Candidate<T> {
    pub variable: usize,
    pub threshold: T,
    pub gain: T,
}

impl<T: Scalar> Candidate<T> {
    /// Better gain wins; otherwise lower variable, then lower threshold.
    pub(crate) fn beats(&self, other: &Candidate<T>) -> bool {
        if improves(self.gain, other.gain) {
            return true;
        }
        if improves(other.gain, self.gain) {
            return false;
        }
        (self.variable, self.threshold) < (other.variable, other.threshold)
    }
}

/// Sorted-sweep split search. `min_child` is the smallest admissible child.
pub(crate) fn search<T: Scalar>(
    columns: &[&[T]],
    rows: &[usize],
    target: &Target<'_, T>,
    criterion: Criterion,
    min_child: usize,
) -> Option<Candidate<T>> {
    let n = rows.len();
    if n < 2 * min_child.max(1) {
        return None;
    }
    let mut best: Option<Candidate<T>> = None;
    let mut order = rows.to_vec();
    let stats = ParentStats::new(rows, target, criterion);
    for (var, col) in columns.iter().enumerate() {
        order.copy_from_slice(rows);
        order.sort_by(|&a, &b| col[a].partial_cmp(&col[b]).expect("finite variable values"));
        let sds = (criterion == Criterion::Sdr).then(|| {
            let values: Vec<T> = order.iter().map(|&r| target.numeric(r)).collect();
            (prefix_sds(values.iter()), prefix_sds(values.iter().rev()))
        });
        let mut sweep = stats.sweep();
        for pos in 0..n - 1 {
            sweep.push(order[pos], target);
            let (lo, hi) = (col[order[pos]], col[order[pos + 1]]);
            let n_left = pos + 1;
            if lo == hi || n_left < min_child || n - n_left < min_child {
                continue;
            }
            let child_sds = sds.as_ref().map(|(l, r)| (l[n_left - 1], r[n - n_left - 1]));
            let gain = sweep.gain(&stats, n_left, n - n_left, child_sds);
            if !is_positive(gain) {
                continue;
            }
            let cand = Candidate {
                variable: var,
                threshold: midpoint(lo, hi),
                gain,
            };
            if best.as_ref().is_none_or(|b| cand.beats(b)) {
                best = Some(cand);
            }
        }
    }
    best
}

struct ParentStats<T> {
    criterion: Criterion,
    counts: Vec<usize>,
    n: usize,
    impurity: T,
}

struct Sweep {
    counts: Vec<usize>,
}

impl<T: Scalar> ParentStats<T> {
    fn new(rows: &[usize], target: &Target<'_, T>, criterion: Criterion) -> Self {
        let n = rows.len();
        let k = match target {
            Target::Classes { k, .. } => *k,
            Target::Continuous(_) => 0,
        };
        let mut counts = vec![0usize; k];
        if let Target::Classes { codes, .. } = target {
            for &r in rows {
                counts[codes[r]] += 1;
            }
        }
        let impurity = match criterion {
            Criterion::Sdr => {
                let mean = rows.iter().map(|&r| target.numeric(r)).sum::<T>() / T::from_count(n);
                let (sum, sum_sq) = rows.iter().fold((T::zero(), T::zero()), |(s, ss), &r| {
                    let d = target.numeric(r) - mean;
                    (s + d, ss + d * d)
                });
                sample_sd(n, sum, sum_sq)
            }
            Criterion::InfoGainRatio => entropy(&counts, n),
            Criterion::Gini => gini(&counts, n),
        };
        ParentStats {
            criterion,
            counts,
            n,
            impurity,
        }
    }

    fn sweep(&self) -> Sweep {
        Sweep {
            counts: vec![0; self.counts.len()],
        }
    }
}

impl Sweep {
    fn push<T: Scalar>(&mut self, row: usize, target: &Target<'_, T>) {
        if let Target::Classes { codes, .. } = target {
            self.counts[codes[row]] += 1;
        }
    }

    /// `child_sds` holds the left and right sample deviations when the criterion is SDR.
    fn gain<T: Scalar>(&self, parent: &ParentStats<T>, n_left: usize, n_right: usize, child_sds: Option<(T, T)>) -> T {
        let n = T::from_count(parent.n);
        let wl = T::from_count(n_left) / n;
        let wr = T::from_count(n_right) / n;
        match parent.criterion {
            Criterion::Sdr => {
                let (sd_l, sd_r) = child_sds.expect("SDR sweep carries child deviations");
                parent.impurity - (wl * sd_l + wr * sd_r)
            }
            Criterion::InfoGainRatio | Criterion::Gini => {
                let right: Vec<usize> = parent.counts.iter().zip(&self.counts).map(|(&p, &l)| p - l).collect();
                if parent.criterion == Criterion::Gini {
                    parent.impurity - (wl * gini(&self.counts, n_left) + wr * gini(&right, n_right))
                } else {
                    let info = parent.impurity - (wl * entropy(&self.counts, n_left) + wr * entropy(&right, n_right));
                    let split_info = -(wl * wl.log2() + wr * wr.log2());
                    info / split_info
                }
            }
        }
    }
}

/// Sample standard deviation of every prefix, by Welford's update so equal values give exactly zero.
fn prefix_sds<'a, T: Scalar + 'a>(values: impl Iterator<Item = &'a T>) -> Vec<T> {
    let (mut mean, mut m2) = (T::zero(), T::zero());
    values
        .enumerate()
        .map(|(i, &x)| {
            let delta = x - mean;
            mean = mean + delta / T::from_count(i + 1);
            m2 = m2 + delta * (x - mean);
            if i == 0 {
                T::zero()
            } else {
                (m2 / T::from_count(i)).max(T::zero()).sqrt()
            }
        })
        .collect()
}

pub(crate) fn sample_sd<T: Scalar>(n: usize, sum: T, sum_sq: T) -> T {
    if n < 2 {
        return T::zero();
    }
    let nf = T::from_count(n);
    let var = (sum_sq - sum * sum / nf) / T::from_count(n - 1);
    var.max(T::zero()).sqrt()
}

pub(crate) fn entropy<T: Scalar>(counts: &[usize], n: usize) -> T {
    let nf = T::from_count(n);
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = T::from_count(c) / nf;
            -p * p.log2()
        })
        .sum()
}

pub(crate) fn gini<T: Scalar>(counts: &[usize], n: usize) -> T {
    let nf = T::from_count(n);
    T::one()
        - counts
            .iter()
            .map(|&c| {
                let p = T::from_count(c) / nf;
                p * p
            })
            .sum::<T>()
}
