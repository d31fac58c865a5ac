use serde::{Deserialize, Serialize};

use super::{Objective, ObjectiveValues, RunTable};
use crate::error::{Error, Result};
use crate::scalar::{midpoint, Scalar};

/// How a continuous objective is binned into classes.
///
/// Bins are half-open: a value equal to a cut point falls in the upper bin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DiscretizationSpec<T> {
    EqualWidth {
        k: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        labels: Option<Vec<String>>,
    },
    EqualFrequency {
        k: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        labels: Option<Vec<String>>,
    },
    ExplicitThresholds {
        thresholds: Vec<T>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        labels: Option<Vec<String>>,
    },
}

impl<T: Scalar> DiscretizationSpec<T> {
    pub fn method_name(&self) -> &'static str {
        match self {
            DiscretizationSpec::EqualWidth { .. } => "equal-width",
            DiscretizationSpec::EqualFrequency { .. } => "equal-frequency",
            DiscretizationSpec::ExplicitThresholds { .. } => "explicit-thresholds",
        }
    }

    pub fn labels(&self) -> Option<&[String]> {
        match self {
            DiscretizationSpec::EqualWidth { labels, .. }
            | DiscretizationSpec::EqualFrequency { labels, .. }
            | DiscretizationSpec::ExplicitThresholds { labels, .. } => labels.as_deref(),
        }
    }

    pub fn bin_count(&self) -> usize {
        match self {
            DiscretizationSpec::EqualWidth { k, .. } | DiscretizationSpec::EqualFrequency { k, .. } => *k,
            DiscretizationSpec::ExplicitThresholds { thresholds, .. } => thresholds.len() + 1,
        }
    }

    fn validate(&self, n_runs: usize) -> Result<()> {
        let bins = self.bin_count();
        if bins < 2 {
            return Err(Error::Discretization(format!(
                "at least 2 classes required, got {bins}"
            )));
        }
        if let DiscretizationSpec::EqualFrequency { k, .. } = self {
            if *k > n_runs {
                return Err(Error::Discretization(format!(
                    "equal-frequency with k={k} needs at least {k} runs, table has {n_runs}"
                )));
            }
        }
        if let DiscretizationSpec::ExplicitThresholds { thresholds, .. } = self {
            if thresholds.iter().any(|t| !t.is_finite()) {
                return Err(Error::Discretization("thresholds must be finite".into()));
            }
            if thresholds.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Discretization("thresholds must be strictly ascending".into()));
            }
        }
        if let Some(labels) = self.labels() {
            if labels.len() != bins {
                return Err(Error::Discretization(format!(
                    "{} labels given for {bins} classes",
                    labels.len()
                )));
            }
        }
        Ok(())
    }

    /// Cut points this spec produces for `values`.
    pub fn cut_points(&self, values: &[T]) -> Result<Vec<T>> {
        self.validate(values.len())?;
        match self {
            DiscretizationSpec::EqualWidth { k, .. } => {
                let lo = values.iter().copied().fold(T::infinity(), T::min);
                let hi = values.iter().copied().fold(T::neg_infinity(), T::max);
                if hi <= lo {
                    return Err(Error::Discretization(
                        "all values identical; equal-width bins would have zero width".into(),
                    ));
                }
                let width = (hi - lo) / T::from_count(*k);
                Ok((1..*k).map(|i| lo + width * T::from_count(i)).collect())
            }
            DiscretizationSpec::EqualFrequency { k, .. } => {
                let mut sorted = values.to_vec();
                sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
                let n = sorted.len();
                Ok((1..*k)
                    .map(|i| {
                        let q = i * n / *k;
                        midpoint(sorted[q - 1], sorted[q])
                    })
                    .collect())
            }
            DiscretizationSpec::ExplicitThresholds { thresholds, .. } => Ok(thresholds.clone()),
        }
    }
}

/// What a discretization did to one objective.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscretizationRecord<T> {
    pub method: String,
    pub thresholds: Vec<T>,
    pub labels: Vec<String>,
    /// Classes no run fell into.
    pub empty_classes: Vec<String>,
}

/// `a, b, ..., z, aa, ab, ...`
pub fn default_labels(k: usize) -> Vec<String> {
    (0..k)
        .map(|mut i| {
            let mut s = Vec::new();
            loop {
                s.push(b'a' + (i % 26) as u8);
                if i < 26 {
                    break;
                }
                i = i / 26 - 1;
            }
            s.reverse();
            String::from_utf8(s).unwrap()
        })
        .collect()
}

/// Class index of `value`: the number of cut points at or below it.
pub(crate) fn bin_of<T: Scalar>(value: T, cuts: &[T]) -> usize {
    cuts.iter().filter(|&&c| value >= c).count()
}

/// Replace a continuous objective by class labels.
pub fn discretize_objective<T: Scalar>(
    table: &RunTable<T>,
    objective: &str,
    spec: &DiscretizationSpec<T>,
) -> Result<RunTable<T>> {
    let values = match &table.objective(objective)?.values {
        ObjectiveValues::Continuous(v) => v,
        ObjectiveValues::Categorical { .. } => {
            return Err(Error::Discretization(format!(
                "objective '{objective}' is already categorical"
            )))
        }
    };
    let cuts = spec.cut_points(values)?;
    let labels = spec
        .labels()
        .map(<[String]>::to_vec)
        .unwrap_or_else(|| default_labels(spec.bin_count()));
    let codes: Vec<usize> = values.iter().map(|&v| bin_of(v, &cuts)).collect();
    let mut counts = vec![0usize; labels.len()];
    for &c in &codes {
        counts[c] += 1;
    }
    let empty_classes: Vec<String> = labels
        .iter()
        .zip(&counts)
        .filter(|(_, &n)| n == 0)
        .map(|(l, _)| l.clone())
        .collect();
    if !empty_classes.is_empty() {
        log::warn!(
            "discretizing '{objective}': classes {:?} received no runs",
            empty_classes
        );
    }
    let record = DiscretizationRecord {
        method: spec.method_name().to_string(),
        thresholds: cuts,
        labels: labels.clone(),
        empty_classes,
    };
    table.replace_objective(Objective::categorical(objective, labels, codes), Some(record))
}
