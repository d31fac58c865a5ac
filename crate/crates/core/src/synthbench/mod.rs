//! Synthetic screening problems with a known set of effective variables.
//!
//! Inputs are i.i.d. uniform on `[0, 1)`. The class of a run depends only on
//! the planted effective variables through one of three families, after
//! which a fixed fraction of labels is flipped to a different class.
//!
//! Randomness comes from xoshiro256++ seeded through SplitMix64
//! (`Xoshiro256PlusPlus::seed_from_u64`), so a seed names the same table on
//! every platform.

mod oracle;

use std::collections::HashSet;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

use crate::dataset::{default_labels, DiscretizationSpec, Objective, RunTable, Variable};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::screening::ImportanceRanking;

pub use oracle::{oracle_best_split, OracleSplit, ORACLE_MAX_ROWS, ORACLE_MAX_VARIABLES};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// Sum of the effective variables. Two classes split at `|S| / 2`; more
    /// classes cut the sum into equal-frequency bins.
    Linear,
    /// Parity of `v > 0.5` over the effective variables (two classes only).
    Xor,
    /// Squared distance of the effective variables from the cube centre,
    /// cut into equal-frequency classes.
    Radial,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Linear => "linear",
            Family::Xor => "xor",
            Family::Radial => "radial",
        })
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(Family::Linear),
            "xor" => Ok(Family::Xor),
            "radial" => Ok(Family::Radial),
            other => Err(Error::Synth(format!(
                "unknown family '{other}' (expected linear, xor or radial)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantedSpec {
    pub n_vars: usize,
    /// 1-based indices of the variables the class depends on.
    pub effective: Vec<usize>,
    pub family: Family,
    /// Fraction of labels flipped, in `[0, 0.5)`.
    pub noise_rate: f64,
    /// Number of classes.
    pub k: usize,
    pub seed: u64,
}

impl PlantedSpec {
    pub fn validate(&self, n_runs: usize) -> Result<()> {
        let fail = |m: String| Err(Error::Synth(m));
        if self.n_vars == 0 {
            return fail("n_vars must be >= 1".into());
        }
        if self.effective.is_empty() {
            return fail("at least one effective variable is required".into());
        }
        let mut seen = HashSet::new();
        for &e in &self.effective {
            if e == 0 || e > self.n_vars {
                return fail(format!("effective index {e} outside 1..={}", self.n_vars));
            }
            if !seen.insert(e) {
                return fail(format!("effective index {e} listed twice"));
            }
        }
        if !(0.0..0.5).contains(&self.noise_rate) {
            return fail(format!("noise_rate {} outside [0, 0.5)", self.noise_rate));
        }
        if self.k < 2 {
            return fail("k must be >= 2".into());
        }
        if self.family == Family::Xor && self.k != 2 {
            return fail("the xor family has exactly 2 classes".into());
        }
        if n_runs < self.k.max(2) {
            return fail(format!("{n_runs} runs cannot populate {} classes", self.k));
        }
        Ok(())
    }

    pub fn effective_names(&self) -> Vec<String> {
        self.effective.iter().map(|i| format!("v{i}")).collect()
    }
}

/// Generated table plus the ground truth it was planted with.
#[derive(Clone, Debug, PartialEq)]
pub struct Planted<T> {
    pub table: RunTable<T>,
    pub truth: Vec<String>,
    /// Runs whose label was flipped by the noise step.
    pub flipped: Vec<usize>,
}

/// Sidecar written next to a generated CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    pub spec: PlantedSpec,
    pub n_runs: usize,
    pub objective: String,
    pub effective_variables: Vec<String>,
    pub flipped_runs: Vec<usize>,
}

/// Draw `n_runs` runs of `spec.n_vars` uniform variables (`v1..vN`) and
/// label them into objective `O1`.
pub fn generate<T: Scalar>(spec: &PlantedSpec, n_runs: usize) -> Result<Planted<T>> {
    spec.validate(n_runs)?;
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(spec.seed);
    let mut columns = vec![Vec::with_capacity(n_runs); spec.n_vars];
    for _ in 0..n_runs {
        for col in columns.iter_mut() {
            col.push(rng.gen::<f64>());
        }
    }
    let variables: Vec<Variable<T>> = columns
        .into_iter()
        .enumerate()
        .map(|(j, col)| Variable {
            name: format!("v{}", j + 1),
            values: col.into_iter().map(T::lit).collect(),
        })
        .collect();
    let (codes, flipped) = label(spec, &variables, &mut rng)?;
    let table = RunTable::new(
        variables,
        vec![Objective::categorical("O1", default_labels(spec.k), codes)],
    )?;
    Ok(Planted {
        table,
        truth: spec.effective_names(),
        flipped,
    })
}

/// Label the runs of an existing table into a new objective. Noise draws use
/// `spec.seed`, so several objectives over the same inputs stay independent.
pub fn add_planted_objective<T: Scalar>(table: &RunTable<T>, name: &str, spec: &PlantedSpec) -> Result<Planted<T>> {
    spec.validate(table.n_runs())?;
    if spec.n_vars != table.variables().len() {
        return Err(Error::Synth(format!(
            "spec has {} variables, table has {}",
            spec.n_vars,
            table.variables().len()
        )));
    }
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(spec.seed);
    let (codes, flipped) = label(spec, table.variables(), &mut rng)?;
    let mut objectives = table.objectives().to_vec();
    objectives.push(Objective::categorical(name, default_labels(spec.k), codes));
    let truth = spec
        .effective
        .iter()
        .map(|&i| table.variables()[i - 1].name.clone())
        .collect();
    Ok(Planted {
        table: RunTable::new(table.variables().to_vec(), objectives)?,
        truth,
        flipped,
    })
}

fn label<T: Scalar>(
    spec: &PlantedSpec,
    vars: &[Variable<T>],
    rng: &mut Xoshiro256PlusPlus,
) -> Result<(Vec<usize>, Vec<usize>)> {
    let n = vars[0].values.len();
    let eff: Vec<&[T]> = spec.effective.iter().map(|&i| vars[i - 1].values.as_slice()).collect();
    let half = T::lit(0.5);
    let mut codes: Vec<usize> = match spec.family {
        Family::Xor => (0..n).map(|r| eff.iter().filter(|c| c[r] > half).count() % 2).collect(),
        Family::Linear if spec.k == 2 => {
            let cut = T::from_count(eff.len()) * half;
            (0..n)
                .map(|r| usize::from(eff.iter().map(|c| c[r]).sum::<T>() > cut))
                .collect()
        }
        Family::Linear | Family::Radial => {
            let score: Vec<T> = (0..n)
                .map(|r| match spec.family {
                    Family::Linear => eff.iter().map(|c| c[r]).sum(),
                    _ => eff.iter().map(|c| (c[r] - half) * (c[r] - half)).sum(),
                })
                .collect();
            let cuts = DiscretizationSpec::EqualFrequency {
                k: spec.k,
                labels: None,
            }
            .cut_points(&score)?;
            score
                .iter()
                .map(|&s| cuts.iter().filter(|&&c| c <= s).count())
                .collect()
        }
    };
    let n_flip = (spec.noise_rate * n as f64).round() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    for i in 0..n_flip {
        let j = rng.gen_range(i..n);
        order.swap(i, j);
    }
    let mut flipped = order[..n_flip].to_vec();
    flipped.sort_unstable();
    for &r in &flipped {
        codes[r] = (codes[r] + rng.gen_range(1..spec.k)) % spec.k;
    }
    Ok((codes, flipped))
}

/// Fraction of the planted variables among the top `|truth|` ranked ones.
pub fn recovery_score<T>(ranking: &ImportanceRanking<T>, truth: &[String]) -> Result<f64> {
    if truth.is_empty() {
        return Err(Error::Synth("truth set is empty".into()));
    }
    let top: HashSet<&str> = ranking
        .entries
        .iter()
        .take(truth.len())
        .map(|e| e.variable.as_str())
        .collect();
    let hits = truth.iter().filter(|t| top.contains(t.as_str())).count();
    Ok(hits as f64 / truth.len() as f64)
}
