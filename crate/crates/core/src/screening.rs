//! Variable ranking, threshold-driven selection, and design-space reduction.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::Write as _;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::dataset::RunTable;
use crate::error::{Error, Result};
use crate::evaluation::{evaluate, evaluate_training, loo_fold_models, loo_result, Protocol};
use crate::scalar::Scalar;
use crate::trees::{boosting_prefix, LearnerKind, LearnerSpec, TreeModel};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar"))]
pub struct RankEntry<T> {
    pub variable: String,
    pub variable_index: usize,
    /// Summed split gain credited to the variable.
    pub score: T,
    /// Shallowest split depth (trees) or earliest boosting iteration (ladtree).
    pub first_use: usize,
}

/// Variables a model actually splits on, most important first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar"))]
pub struct ImportanceRanking<T> {
    pub objective: String,
    pub learner: LearnerKind,
    pub entries: Vec<RankEntry<T>>,
}

impl<T> ImportanceRanking<T> {
    pub fn variables(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.variable.as_str()).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Rank the variables of `model` by the gains logged during training.
///
/// Trees order by total gain, then shallowest use, then column index.
/// Alternating trees order by the iteration that first used the variable,
/// then total gain, then column index, so the boosting order is kept.
pub fn rank_variables<T: Scalar>(model: &TreeModel<T>) -> ImportanceRanking<T> {
    let mut by_var: BTreeMap<usize, RankEntry<T>> = BTreeMap::new();
    for rec in &model.gain_log {
        let first = match model.kind {
            LearnerKind::Ladtree => rec.iteration.unwrap_or(rec.order + 1),
            _ => rec.depth,
        };
        let e = by_var.entry(rec.variable_index).or_insert_with(|| RankEntry {
            variable: rec.variable.clone(),
            variable_index: rec.variable_index,
            score: T::zero(),
            first_use: first,
        });
        e.score = e.score + rec.gain;
        e.first_use = e.first_use.min(first);
    }
    let mut entries: Vec<RankEntry<T>> = by_var.into_values().collect();
    let by_score = |a: &RankEntry<T>, b: &RankEntry<T>| b.score.partial_cmp(&a.score).unwrap_or(Ordering::Equal);
    match model.kind {
        LearnerKind::Ladtree => entries.sort_by(|a, b| {
            a.first_use
                .cmp(&b.first_use)
                .then(by_score(a, b))
                .then(a.variable_index.cmp(&b.variable_index))
        }),
        _ => entries.sort_by(|a, b| {
            by_score(a, b)
                .then(a.first_use.cmp(&b.first_use))
                .then(a.variable_index.cmp(&b.variable_index))
        }),
    }
    ImportanceRanking {
        objective: model.objective.clone(),
        learner: model.kind,
        entries,
    }
}

/// Result of training and scoring at one capacity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar"))]
pub struct RoundOutcome<T> {
    pub round: usize,
    pub mae: T,
    pub rmse: T,
    pub ranking: ImportanceRanking<T>,
}

/// Produces the error and model at each capacity.
///
/// Boosting rounds are nested, so a ladtree is trained once at the largest
/// capacity (once per fold under leave-one-out) and each round reads off a
/// prefix. Other learners are retrained per round.
enum Rounds<'a, T> {
    Retrain {
        table: &'a RunTable<T>,
        objective: &'a str,
        spec: &'a LearnerSpec<T>,
        protocol: Protocol,
    },
    Prefix {
        table: &'a RunTable<T>,
        objective: &'a str,
        protocol: Protocol,
        full: Box<TreeModel<T>>,
        folds: Vec<TreeModel<T>>,
    },
}

impl<'a, T: Scalar> Rounds<'a, T> {
    fn new(
        table: &'a RunTable<T>,
        objective: &'a str,
        spec: &'a LearnerSpec<T>,
        max_rounds: usize,
        protocol: Protocol,
    ) -> Result<Self> {
        if spec.kind() != LearnerKind::Ladtree {
            return Ok(Rounds::Retrain {
                table,
                objective,
                spec,
                protocol,
            });
        }
        let capped = spec.with_capacity(max_rounds);
        let folds = match protocol {
            Protocol::LeaveOneOut => loo_fold_models(&capped, table, objective)?,
            Protocol::Training => Vec::new(),
        };
        Ok(Rounds::Prefix {
            table,
            objective,
            protocol,
            full: Box::new(capped.train(table, objective)?),
            folds,
        })
    }

    fn round(&self, round: usize) -> Result<(RoundOutcome<T>, TreeModel<T>)> {
        let (eval, model) = match self {
            Rounds::Retrain {
                table,
                objective,
                spec,
                protocol,
            } => {
                let capped = spec.with_capacity(round);
                let eval = evaluate(&capped, table, objective, *protocol)?;
                (eval, capped.train(table, objective)?)
            }
            Rounds::Prefix {
                table,
                objective,
                protocol,
                full,
                folds,
            } => {
                let model = boosting_prefix(full, round);
                let eval = match protocol {
                    Protocol::Training => evaluate_training(&model, table, objective)?,
                    Protocol::LeaveOneOut => {
                        let prefixes: Vec<TreeModel<T>> = folds.iter().map(|m| boosting_prefix(m, round)).collect();
                        loo_result(&prefixes, table, objective)?
                    }
                };
                (eval, model)
            }
        };
        let outcome = RoundOutcome {
            round,
            mae: eval.mae,
            rmse: eval.rmse,
            ranking: rank_variables(&model),
        };
        Ok((outcome, model))
    }

    /// The model to hand back for `round`, trained afresh when it was read off a prefix.
    fn final_model(&self, round: usize, model: TreeModel<T>) -> Result<TreeModel<T>> {
        match self {
            Rounds::Retrain { .. } => Ok(model),
            Rounds::Prefix {
                table, objective, full, ..
            } => full.parameters.with_capacity(round).train(table, objective),
        }
    }
}

/// Error and ranking for capacities `1..=max_rounds`.
pub fn capacity_sweep<T: Scalar>(
    table: &RunTable<T>,
    objective: &str,
    spec: &LearnerSpec<T>,
    max_rounds: usize,
    protocol: Protocol,
) -> Result<Vec<RoundOutcome<T>>> {
    spec.validate()?;
    let rounds = Rounds::new(table, objective, spec, max_rounds, protocol)?;
    (1..=max_rounds).map(|r| rounds.round(r).map(|(o, _)| o)).collect()
}

/// Outcome of threshold-driven selection for one objective.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar"))]
pub struct Selection<T> {
    pub objective: String,
    pub learner: LearnerKind,
    pub ranking: ImportanceRanking<T>,
    pub mae: T,
    pub rmse: T,
    pub rounds: usize,
    pub threshold_met: bool,
    pub history: Vec<RoundOutcome<T>>,
    /// Model trained on all runs at the final capacity.
    pub model: TreeModel<T>,
}

/// Grow the learner one split (or boosting iteration) at a time until both
/// errors are at or below their thresholds, or `max_rounds` is reached.
///
/// The variables reported are those used by the model at the stopping round.
/// When the thresholds are never met the last round is reported with
/// `threshold_met = false`. Growth also stops once the learner can no longer
/// add splits, since later rounds would repeat the same model.
pub fn select_variables<T: Scalar>(
    table: &RunTable<T>,
    objective: &str,
    spec: &LearnerSpec<T>,
    mae_threshold: T,
    rmse_threshold: T,
    max_rounds: usize,
    protocol: Protocol,
) -> Result<Selection<T>> {
    for (name, thr) in [("mae", mae_threshold), ("rmse", rmse_threshold)] {
        if !(thr > T::zero() && thr.is_finite()) {
            return Err(Error::Screening(format!("{name} threshold must be > 0, got {thr}")));
        }
    }
    if max_rounds == 0 {
        return Err(Error::Screening("max_rounds must be >= 1".into()));
    }
    spec.validate()?;
    table.class_codes(objective)?;
    let rounds = Rounds::new(table, objective, spec, max_rounds, protocol)?;
    let mut history = Vec::new();
    let mut last = None;
    let mut met = false;
    for round in 1..=max_rounds {
        let (outcome, model) = rounds.round(round)?;
        met = outcome.mae <= mae_threshold && outcome.rmse <= rmse_threshold;
        let saturated = model.n_splits() < round;
        log::debug!(
            "{objective}: round {round} mae={} rmse={} vars={}",
            outcome.mae,
            outcome.rmse,
            outcome.ranking.len()
        );
        history.push(outcome);
        last = Some(model);
        if met || saturated {
            break;
        }
    }
    let final_round = history.last().expect("at least one round").clone();
    let model = rounds.final_model(final_round.round, last.expect("at least one round"))?;
    Ok(Selection {
        objective: objective.to_string(),
        learner: spec.kind(),
        ranking: final_round.ranking,
        mae: final_round.mae,
        rmse: final_round.rmse,
        rounds: final_round.round,
        threshold_met: met,
        history,
        model,
    })
}

/// Keep only the variables named by at least one ranking.
pub fn reduce_dataset<T: Scalar>(table: &RunTable<T>, rankings: &[&ImportanceRanking<T>]) -> Result<RunTable<T>> {
    let keep: HashSet<String> = rankings
        .iter()
        .flat_map(|r| r.entries.iter().map(|e| e.variable.clone()))
        .collect();
    if keep.is_empty() {
        return Err(Error::Screening("no effective variables; lower thresholds".into()));
    }
    if let Some(missing) = keep.iter().find(|v| table.variable_index(v).is_none()) {
        return Err(Error::Screening(format!(
            "ranked variable '{missing}' is not in the table"
        )));
    }
    table.retain_variables(&keep)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar"))]
pub struct ObjectiveReport<T> {
    pub name: String,
    pub learner: LearnerKind,
    pub mae: T,
    pub rmse: T,
    pub effective_variables: Vec<String>,
    pub threshold_met: bool,
}

impl<T: Scalar> From<&Selection<T>> for ObjectiveReport<T> {
    fn from(s: &Selection<T>) -> Self {
        ObjectiveReport {
            name: s.objective.clone(),
            learner: s.learner,
            mae: s.mae,
            rmse: s.rmse,
            effective_variables: s.ranking.entries.iter().map(|e| e.variable.clone()).collect(),
            threshold_met: s.threshold_met,
        }
    }
}

/// Machine-readable screening summary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar"))]
pub struct ScreeningReport<T> {
    pub objectives: Vec<ObjectiveReport<T>>,
    /// Effective variables of any objective, in input column order.
    pub union: Vec<String>,
    pub original_count: usize,
    /// `100 * (1 - |union| / original_count)`
    pub reduction_percent: f64,
    pub duration_seconds: f64,
}

pub fn build_report<T: Scalar>(
    table: &RunTable<T>,
    objectives: Vec<ObjectiveReport<T>>,
    duration: Duration,
) -> Result<ScreeningReport<T>> {
    if objectives.is_empty() {
        return Err(Error::Screening("report needs at least one objective".into()));
    }
    let used: BTreeSet<&str> = objectives
        .iter()
        .flat_map(|o| o.effective_variables.iter().map(String::as_str))
        .collect();
    if let Some(missing) = used.iter().find(|v| table.variable_index(v).is_none()) {
        return Err(Error::Screening(format!(
            "effective variable '{missing}' is not in the table"
        )));
    }
    let union: Vec<String> = table
        .variables()
        .iter()
        .filter(|v| used.contains(v.name.as_str()))
        .map(|v| v.name.clone())
        .collect();
    let original_count = table.variables().len();
    let reduction_percent = 100.0 * (1.0 - union.len() as f64 / original_count as f64);
    Ok(ScreeningReport {
        objectives,
        union,
        original_count,
        reduction_percent,
        duration_seconds: duration.as_secs_f64(),
    })
}

impl<T: Scalar> ScreeningReport<T> {
    /// Fixed-width table: one row per objective, then the union summary.
    pub fn to_text(&self) -> String {
        let vars: Vec<String> = self
            .objectives
            .iter()
            .map(|o| o.effective_variables.join(","))
            .collect();
        let var_width = vars
            .iter()
            .map(String::len)
            .max()
            .unwrap_or(0)
            .max("Effective Variables".len());
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<12} {:>7} {:>7}  {:<var_width$}  Objective",
            "Classifier", "MAE", "RMSE", "Effective Variables"
        );
        for (o, v) in self.objectives.iter().zip(&vars) {
            let mark = if o.threshold_met { "" } else { " (thresholds not met)" };
            let _ = writeln!(
                out,
                "{:<12} {:>7.3} {:>7.3}  {:<var_width$}  {}{}",
                o.learner.name(),
                o.mae.to_f64().unwrap_or(f64::NAN),
                o.rmse.to_f64().unwrap_or(f64::NAN),
                v,
                o.name,
                mark
            );
        }
        let _ = writeln!(
            out,
            "Union: {} of {} variables ({:.1}% reduction)",
            self.union.len(),
            self.original_count,
            self.reduction_percent
        );
        let _ = writeln!(out, "Union variables: {}", self.union.join(","));
        out
    }
}
