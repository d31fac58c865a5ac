//! End-to-end screening: load, discretize, optionally compare learners,
//! select per objective, reduce, report, and write the artifacts.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{
    discretize_objective, load_arff_with_objectives, load_csv, write_csv, DiscretizationSpec, RunTable,
};
use crate::error::{Error, Result};
use crate::evaluation::{compare_learners, ComparisonEntry, Protocol};
use crate::scalar::Scalar;
use crate::screening::{build_report, reduce_dataset, select_variables, ObjectiveReport, ScreeningReport, Selection};
use crate::trees::{LadTreeParams, LearnerSpec};

fn default_learner<T: Scalar>() -> LearnerSpec<T> {
    LearnerSpec::Ladtree(LadTreeParams::default())
}

fn default_max_rounds() -> usize {
    20
}

/// Everything a pipeline run needs. Unknown keys are rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(deserialize = "T: Scalar"))]
pub struct PipelineConfig<T> {
    pub input: PathBuf,
    pub objectives: Vec<String>,
    /// Binning for objectives that are continuous in the input.
    #[serde(default)]
    pub discretization: BTreeMap<String, DiscretizationSpec<T>>,
    #[serde(default = "default_learner")]
    pub learner: LearnerSpec<T>,
    /// Extra learners to compare against each other before selection.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub compare: Vec<LearnerSpec<T>>,
    #[serde(default)]
    pub protocol: Protocol,
    pub mae: T,
    pub rmse: T,
    #[serde(default = "default_max_rounds")]
    pub max_rounds: usize,
    pub out: PathBuf,
    /// Zero the wall-clock duration so repeated reports are byte-identical.
    #[serde(default)]
    pub canonical: bool,
}

impl<T: Scalar> PipelineConfig<T> {
    pub fn from_json(value: serde_json::Value) -> Result<Self> {
        serde_json::from_value(value).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.objectives.is_empty() {
            return fail("at least one objective is required".into());
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(dup) = self.objectives.iter().find(|o| !seen.insert(o.as_str())) {
            return fail(format!("objective '{dup}' listed twice"));
        }
        if let Some(extra) = self.discretization.keys().find(|k| !self.objectives.contains(k)) {
            return fail(format!(
                "discretization given for '{extra}', which is not a listed objective"
            ));
        }
        for (name, thr) in [("mae", self.mae), ("rmse", self.rmse)] {
            if !(thr > T::zero() && thr.is_finite()) {
                return fail(format!("{name} threshold must be > 0"));
            }
        }
        if self.max_rounds == 0 {
            return fail("max_rounds must be >= 1".into());
        }
        if self.compare.len() == 1 {
            return fail("compare needs at least 2 learners (or none)".into());
        }
        self.learner
            .validate()
            .map_err(|e| Error::Config(format!("learner: {e}")))?;
        Ok(())
    }
}

/// Set `path` (dot-separated) inside a JSON object to `raw`, parsed as JSON
/// when possible and kept as a string otherwise.
pub fn apply_override(config: &mut serde_json::Value, path: &str, raw: &str) -> Result<()> {
    let value = serde_json::from_str(raw).unwrap_or_else(|_| serde_json::Value::String(raw.to_string()));
    let mut cursor = config;
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(Error::Config(format!("malformed override key '{path}'")));
    }
    for key in &keys[..keys.len() - 1] {
        let map = cursor
            .as_object_mut()
            .ok_or_else(|| Error::Config(format!("'{path}': '{key}' is not inside an object")))?;
        cursor = map
            .entry(key.to_string())
            .or_insert_with(|| serde_json::Value::Object(Default::default()));
    }
    let map = cursor
        .as_object_mut()
        .ok_or_else(|| Error::Config(format!("'{path}' does not address an object field")))?;
    map.insert(keys[keys.len() - 1].to_string(), value);
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Validate,
    Load,
    Discretize,
    Compare,
    Select,
    Reduce,
    Report,
    Write,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Validate => "validate",
            Stage::Load => "load",
            Stage::Discretize => "discretize",
            Stage::Compare => "compare",
            Stage::Select => "select",
            Stage::Reduce => "reduce",
            Stage::Report => "report",
            Stage::Write => "write",
        })
    }
}

#[derive(Debug, thiserror::Error)]
#[error("{stage} stage failed: {source}")]
pub struct PipelineError {
    pub stage: Stage,
    #[source]
    pub source: Error,
}

trait AtStage<V> {
    fn at(self, stage: Stage) -> std::result::Result<V, PipelineError>;
}

impl<V> AtStage<V> for Result<V> {
    fn at(self, stage: Stage) -> std::result::Result<V, PipelineError> {
        self.map_err(|source| PipelineError { stage, source })
    }
}

#[derive(Clone, Debug)]
pub struct PipelineOutcome<T> {
    pub report: ScreeningReport<T>,
    pub reduced: RunTable<T>,
    pub selections: Vec<Selection<T>>,
    pub comparisons: BTreeMap<String, Vec<ComparisonEntry<T>>>,
    pub artifacts: Vec<PathBuf>,
}

/// Load a run table by file extension (`.arff`, anything else is CSV).
pub fn load_table<T: Scalar>(path: &Path, objectives: &[String]) -> Result<RunTable<T>> {
    let is_arff = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("arff"));
    let table = if is_arff {
        load_arff_with_objectives(path, objectives)?
    } else {
        load_csv(path, objectives)?
    };
    for o in objectives {
        table.objective(o)?;
    }
    Ok(table)
}

pub fn run_pipeline<T: Scalar>(config: &PipelineConfig<T>) -> std::result::Result<PipelineOutcome<T>, PipelineError> {
    let started = Instant::now();
    config.validate().at(Stage::Validate)?;

    let mut table: RunTable<T> = load_table(&config.input, &config.objectives).at(Stage::Load)?;

    for name in &config.objectives {
        let categorical = table.objective(name).at(Stage::Discretize)?.values.is_categorical();
        match (categorical, config.discretization.get(name)) {
            (false, Some(spec)) => table = discretize_objective(&table, name, spec).at(Stage::Discretize)?,
            (false, None) => {
                return Err(Error::Discretization(format!(
                    "objective '{name}' is continuous; give it a discretization spec"
                )))
                .at(Stage::Discretize)
            }
            (true, Some(_)) => {
                return Err(Error::Discretization(format!(
                    "objective '{name}' is already categorical"
                )))
                .at(Stage::Discretize)
            }
            (true, None) => {}
        }
    }

    let mut comparisons = BTreeMap::new();
    if !config.compare.is_empty() {
        for name in &config.objectives {
            let ranked = compare_learners(&table, name, &config.compare, config.protocol).at(Stage::Compare)?;
            comparisons.insert(name.clone(), ranked);
        }
    }

    let selections: Vec<Selection<T>> = config
        .objectives
        .par_iter()
        .map(|name| {
            select_variables(
                &table,
                name,
                &config.learner,
                config.mae,
                config.rmse,
                config.max_rounds,
                config.protocol,
            )
        })
        .collect::<Result<Vec<_>>>()
        .at(Stage::Select)?;

    let rankings: Vec<_> = selections.iter().map(|s| &s.ranking).collect();
    let reduced = reduce_dataset(&table, &rankings).at(Stage::Reduce)?;

    let duration = if config.canonical {
        Duration::ZERO
    } else {
        started.elapsed()
    };
    let report =
        build_report(&table, selections.iter().map(ObjectiveReport::from).collect(), duration).at(Stage::Report)?;

    let artifacts = write_artifacts(&config.out, &report, &reduced, &selections, &comparisons).at(Stage::Write)?;
    Ok(PipelineOutcome {
        report,
        reduced,
        selections,
        comparisons,
        artifacts,
    })
}

/// Write every artifact, removing whatever was written if any write fails.
fn write_artifacts<T: Scalar>(
    out: &Path,
    report: &ScreeningReport<T>,
    reduced: &RunTable<T>,
    selections: &[Selection<T>],
    comparisons: &BTreeMap<String, Vec<ComparisonEntry<T>>>,
) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let mut created_dirs = Vec::new();
    let result = (|| -> Result<()> {
        let models = out.join("models");
        for dir in [out, models.as_path()] {
            if !dir.exists() {
                fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
                created_dirs.push(dir.to_path_buf());
            }
        }
        let put = |path: PathBuf, text: String, written: &mut Vec<PathBuf>| -> Result<()> {
            fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
            written.push(path);
            Ok(())
        };
        put(out.join("report.json"), to_json(report)? + "\n", &mut written)?;
        let reduced_path = out.join("reduced.csv");
        write_csv(reduced, &reduced_path)?;
        written.push(reduced_path);
        for s in selections {
            put(
                models.join(format!("{}.json", file_stem(&s.objective))),
                s.model.to_json()? + "\n",
                &mut written,
            )?;
        }
        if !comparisons.is_empty() {
            put(out.join("comparison.json"), to_json(comparisons)? + "\n", &mut written)?;
        }
        Ok(())
    })();
    match result {
        Ok(()) => Ok(written),
        Err(e) => {
            for path in written.iter().rev() {
                let _ = fs::remove_file(path);
            }
            for dir in created_dirs.iter().rev() {
                let _ = fs::remove_dir(dir);
            }
            Err(e)
        }
    }
}

fn to_json<V: Serialize>(value: &V) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)?)
}

/// Objective names may contain characters that are awkward in file names.
fn file_stem(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}
