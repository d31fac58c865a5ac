//! Class-probability error metrics and validation protocols.
//!
//! Errors compare a predicted probability vector with the one-hot true
//! class and are averaged over classes as well as instances: MAE is the mean
//! of per-instance mean absolute deviations, RMSE the square root of the
//! mean of per-instance mean squared deviations.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::RunTable;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::trees::{LearnerKind, LearnerSpec, TreeModel};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Protocol {
    /// Resubstitution on the training runs.
    Training,
    #[default]
    #[serde(alias = "loo")]
    LeaveOneOut,
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Protocol::Training => "training",
            Protocol::LeaveOneOut => "leave-one-out",
        })
    }
}

impl std::str::FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "training" => Ok(Protocol::Training),
            "loo" | "leave-one-out" => Ok(Protocol::LeaveOneOut),
            other => Err(Error::Config(format!(
                "unknown protocol '{other}' (expected loo or training)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar"))]
pub struct InstanceRecord<T> {
    pub run: usize,
    pub true_class: usize,
    pub predicted: Vec<T>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar"))]
pub struct EvaluationResult<T> {
    pub protocol: Protocol,
    pub mae: T,
    pub rmse: T,
    /// `confusion[true][predicted]`, predicted = argmax (lowest index on ties).
    pub confusion: Vec<Vec<usize>>,
    pub per_instance: Vec<InstanceRecord<T>>,
}

impl<T: Scalar> EvaluationResult<T> {
    fn from_records(protocol: Protocol, k: usize, per_instance: Vec<InstanceRecord<T>>) -> Result<Self> {
        let mut abs_total = T::zero();
        let mut sq_total = T::zero();
        let mut confusion = vec![vec![0usize; k]; k];
        for rec in &per_instance {
            let (a, s) = instance_error(&rec.predicted, rec.true_class)?;
            abs_total = abs_total + a;
            sq_total = sq_total + s;
            confusion[rec.true_class][argmax(&rec.predicted)] += 1;
        }
        let n = T::from_count(per_instance.len().max(1));
        Ok(EvaluationResult {
            protocol,
            mae: abs_total / n,
            rmse: (sq_total / n).sqrt(),
            confusion,
            per_instance,
        })
    }

    /// Runs whose argmax class equals the true class.
    pub fn correct(&self) -> usize {
        (0..self.confusion.len()).map(|i| self.confusion[i][i]).sum()
    }

    pub fn accuracy(&self) -> f64 {
        self.correct() as f64 / self.per_instance.len().max(1) as f64
    }
}

/// Mean absolute and mean squared deviation of `predicted` from the one-hot
/// vector of `true_class`, both averaged over classes.
pub fn instance_error<T: Scalar>(predicted: &[T], true_class: usize) -> Result<(T, T)> {
    if true_class >= predicted.len() {
        return Err(Error::Evaluation(format!(
            "true class {true_class} outside a {}-class prediction",
            predicted.len()
        )));
    }
    let (abs, sq) = predicted
        .iter()
        .enumerate()
        .fold((T::zero(), T::zero()), |(a, s), (j, &p)| {
            let y = if j == true_class { T::one() } else { T::zero() };
            let d = p - y;
            (a + d.abs(), s + d * d)
        });
    let k = T::from_count(predicted.len());
    Ok((abs / k, sq / k))
}

pub(crate) fn argmax<T: Scalar>(p: &[T]) -> usize {
    (0..p.len()).fold(0, |best, j| if p[j] > p[best] { j } else { best })
}

fn model_row_mapping<T: Scalar>(model: &TreeModel<T>, table: &RunTable<T>) -> Result<Vec<Option<usize>>> {
    let referenced = model.referenced_variables();
    model
        .variables
        .iter()
        .enumerate()
        .map(|(i, name)| match table.variable_index(name) {
            Some(j) => Ok(Some(j)),
            None if referenced.contains(&i) => Err(Error::Evaluation(format!(
                "table lacks variable '{name}' used by the model"
            ))),
            None => Ok(None),
        })
        .collect()
}

fn predict_run<T: Scalar>(
    model: &TreeModel<T>,
    table: &RunTable<T>,
    mapping: &[Option<usize>],
    run: usize,
) -> Result<Vec<T>> {
    let row: Vec<T> = mapping
        .iter()
        .map(|m| m.map_or(T::zero(), |j| table.variables()[j].values[run]))
        .collect();
    model.predict_row(&row)
}

/// Resubstitution error of a trained model on `table`.
pub fn evaluate_training<T: Scalar>(
    model: &TreeModel<T>,
    table: &RunTable<T>,
    objective: &str,
) -> Result<EvaluationResult<T>> {
    let (alphabet, codes) = table.class_codes(objective)?;
    if alphabet != model.class_alphabet.as_slice() {
        return Err(Error::Evaluation(format!(
            "model classes {:?} differ from table classes {:?}",
            model.class_alphabet, alphabet
        )));
    }
    let mapping = model_row_mapping(model, table)?;
    let records = (0..table.n_runs())
        .map(|run| {
            Ok(InstanceRecord {
                run,
                true_class: codes[run],
                predicted: predict_run(model, table, &mapping, run)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    EvaluationResult::from_records(Protocol::Training, alphabet.len(), records)
}

/// Leave-one-out error: each run is scored by a model trained on the others.
///
/// The class alphabet comes from the full table, so every fold predicts over
/// the same classes even when the held-out class is missing from training.
pub fn evaluate_loo<T: Scalar>(
    spec: &LearnerSpec<T>,
    table: &RunTable<T>,
    objective: &str,
) -> Result<EvaluationResult<T>> {
    let folds = loo_fold_models(spec, table, objective)?;
    loo_result(&folds, table, objective)
}

/// One model per held-out run; model `i` never saw run `i`.
pub(crate) fn loo_fold_models<T: Scalar>(
    spec: &LearnerSpec<T>,
    table: &RunTable<T>,
    objective: &str,
) -> Result<Vec<TreeModel<T>>> {
    let n = table.n_runs();
    if n < 3 {
        return Err(Error::Evaluation(format!(
            "leave-one-out needs at least 3 runs, table has {n}"
        )));
    }
    spec.validate()?;
    table.class_codes(objective)?;
    (0..n)
        .into_par_iter()
        .map(|held_out| {
            let rows: Vec<usize> = (0..n).filter(|&r| r != held_out).collect();
            spec.train(&table.select_rows(&rows)?, objective)
        })
        .collect()
}

pub(crate) fn loo_result<T: Scalar>(
    folds: &[TreeModel<T>],
    table: &RunTable<T>,
    objective: &str,
) -> Result<EvaluationResult<T>> {
    let (alphabet, codes) = table.class_codes(objective)?;
    let records = folds
        .iter()
        .enumerate()
        .map(|(held_out, model)| {
            Ok(InstanceRecord {
                run: held_out,
                true_class: codes[held_out],
                predicted: model.predict_row(&table.row(held_out))?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    EvaluationResult::from_records(Protocol::LeaveOneOut, alphabet.len(), records)
}

/// Train (when needed) and score `spec` under `protocol`.
pub fn evaluate<T: Scalar>(
    spec: &LearnerSpec<T>,
    table: &RunTable<T>,
    objective: &str,
    protocol: Protocol,
) -> Result<EvaluationResult<T>> {
    match protocol {
        Protocol::LeaveOneOut => evaluate_loo(spec, table, objective),
        Protocol::Training => {
            let model = spec.train(table, objective)?;
            evaluate_training(&model, table, objective)
        }
    }
}

/// One learner's line in a comparison.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar"))]
pub struct ComparisonEntry<T> {
    pub rank: usize,
    pub kind: LearnerKind,
    pub spec: LearnerSpec<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result: Option<EvaluationResult<T>>,
    /// Set when training or evaluation failed for this learner.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub winner: bool,
}

/// Evaluate several learners under one protocol and rank them by RMSE, then
/// MAE, then learner name, then input position. Failed learners are kept,
/// marked, and ranked last.
pub fn compare_learners<T: Scalar>(
    table: &RunTable<T>,
    objective: &str,
    specs: &[LearnerSpec<T>],
    protocol: Protocol,
) -> Result<Vec<ComparisonEntry<T>>> {
    if specs.len() < 2 {
        return Err(Error::Evaluation("comparison needs at least 2 learners".into()));
    }
    let outcomes: Vec<(usize, Result<EvaluationResult<T>>)> = specs
        .iter()
        .enumerate()
        .map(|(i, spec)| (i, evaluate(spec, table, objective, protocol)))
        .collect();
    let mut scored: Vec<(usize, EvaluationResult<T>)> = Vec::new();
    let mut failed: Vec<(usize, String)> = Vec::new();
    for (i, outcome) in outcomes {
        match outcome {
            Ok(r) => scored.push((i, r)),
            Err(e) => {
                log::warn!("learner {} failed: {e}", specs[i].kind());
                failed.push((i, e.to_string()));
            }
        }
    }
    scored.sort_by(|(ia, a), (ib, b)| {
        a.rmse
            .partial_cmp(&b.rmse)
            .unwrap()
            .then(a.mae.partial_cmp(&b.mae).unwrap())
            .then(specs[*ia].kind().name().cmp(specs[*ib].kind().name()))
            .then(ia.cmp(ib))
    });
    let mut entries: Vec<ComparisonEntry<T>> = scored
        .into_iter()
        .map(|(i, r)| ComparisonEntry {
            rank: 0,
            kind: specs[i].kind(),
            spec: specs[i].clone(),
            result: Some(r),
            error: None,
            winner: false,
        })
        .collect();
    entries.extend(failed.into_iter().map(|(i, e)| ComparisonEntry {
        rank: 0,
        kind: specs[i].kind(),
        spec: specs[i].clone(),
        result: None,
        error: Some(e),
        winner: false,
    }));
    for (rank, e) in entries.iter_mut().enumerate() {
        e.rank = rank + 1;
    }
    if let Some(first) = entries.first_mut() {
        first.winner = first.result.is_some();
    }
    Ok(entries)
}
