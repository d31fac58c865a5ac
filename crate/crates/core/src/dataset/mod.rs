//! Run tables: simulation input variables plus objective outcomes.
//!
//! A [`RunTable`] is immutable once built. Every transformation
//! (discretization, row or column selection) returns a new table, so one
//! table can be shared by concurrent trainings without coordination.

mod arff;
mod csv_io;
mod discretize;

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub use arff::{load_arff, load_arff_with_objectives, parse_arff, to_arff_string, write_arff};
pub use csv_io::{load_csv, parse_csv, to_csv_string, write_csv};
pub use discretize::{default_labels, discretize_objective, DiscretizationRecord, DiscretizationSpec};

/// One class of a discretized objective.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassLabel {
    pub name: String,
    pub index: usize,
}

/// Named continuous input column.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Variable<T> {
    pub name: String,
    pub values: Vec<T>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum ObjectiveValues<T> {
    Continuous(Vec<T>),
    Categorical { alphabet: Vec<String>, codes: Vec<usize> },
}

impl<T> ObjectiveValues<T> {
    pub fn len(&self) -> usize {
        match self {
            ObjectiveValues::Continuous(v) => v.len(),
            ObjectiveValues::Categorical { codes, .. } => codes.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_categorical(&self) -> bool {
        matches!(self, ObjectiveValues::Categorical { .. })
    }
}

/// Named outcome column, continuous or already classified.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Objective<T> {
    pub name: String,
    pub values: ObjectiveValues<T>,
}

impl<T> Objective<T> {
    pub fn continuous(name: impl Into<String>, values: Vec<T>) -> Self {
        Objective {
            name: name.into(),
            values: ObjectiveValues::Continuous(values),
        }
    }

    pub fn categorical(name: impl Into<String>, alphabet: Vec<String>, codes: Vec<usize>) -> Self {
        Objective {
            name: name.into(),
            values: ObjectiveValues::Categorical { alphabet, codes },
        }
    }

    /// Class alphabet as labels, or `None` for continuous objectives.
    pub fn class_labels(&self) -> Option<Vec<ClassLabel>> {
        match &self.values {
            ObjectiveValues::Categorical { alphabet, .. } => Some(
                alphabet
                    .iter()
                    .enumerate()
                    .map(|(index, name)| ClassLabel {
                        name: name.clone(),
                        index,
                    })
                    .collect(),
            ),
            ObjectiveValues::Continuous(_) => None,
        }
    }
}

/// Position of a column in the file it came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ColumnSlot {
    Variable(usize),
    Objective(usize),
}

/// Matrix of simulation runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunTable<T> {
    relation: String,
    variables: Vec<Variable<T>>,
    objectives: Vec<Objective<T>>,
    layout: Vec<ColumnSlot>,
    n_runs: usize,
    discretizations: BTreeMap<String, DiscretizationRecord<T>>,
}

pub(crate) const DEFAULT_RELATION: &str = "runs";

impl<T: Scalar> RunTable<T> {
    /// Table with the variables laid out before the objectives.
    pub fn new(variables: Vec<Variable<T>>, objectives: Vec<Objective<T>>) -> Result<Self> {
        let layout = (0..variables.len())
            .map(ColumnSlot::Variable)
            .chain((0..objectives.len()).map(ColumnSlot::Objective))
            .collect();
        Self::with_layout(DEFAULT_RELATION, variables, objectives, layout)
    }

    pub fn with_layout(
        relation: impl Into<String>,
        variables: Vec<Variable<T>>,
        objectives: Vec<Objective<T>>,
        layout: Vec<ColumnSlot>,
    ) -> Result<Self> {
        let n_runs = variables
            .first()
            .map(|v| v.values.len())
            .or_else(|| objectives.first().map(|o| o.values.len()))
            .unwrap_or(0);
        let table = RunTable {
            relation: relation.into(),
            variables,
            objectives,
            layout,
            n_runs,
            discretizations: BTreeMap::new(),
        };
        table.validate()?;
        Ok(table)
    }

    fn validate(&self) -> Result<()> {
        if self.n_runs < 2 {
            return Err(Error::InvalidTable(format!(
                "at least 2 runs required, found {}",
                self.n_runs
            )));
        }
        let mut seen = HashSet::new();
        for v in &self.variables {
            if !seen.insert(v.name.as_str()) {
                return Err(Error::InvalidTable(format!("duplicate column '{}'", v.name)));
            }
            if v.values.len() != self.n_runs {
                return Err(Error::InvalidTable(format!(
                    "variable '{}' has {} entries, expected {}",
                    v.name,
                    v.values.len(),
                    self.n_runs
                )));
            }
            if let Some(pos) = v.values.iter().position(|x| !x.is_finite()) {
                return Err(Error::InvalidTable(format!(
                    "variable '{}' has a non-finite value in run {}",
                    v.name, pos
                )));
            }
        }
        for o in &self.objectives {
            if !seen.insert(o.name.as_str()) {
                return Err(Error::InvalidTable(format!("duplicate column '{}'", o.name)));
            }
            if o.values.len() != self.n_runs {
                return Err(Error::InvalidTable(format!(
                    "objective '{}' has {} entries, expected {}",
                    o.name,
                    o.values.len(),
                    self.n_runs
                )));
            }
            match &o.values {
                ObjectiveValues::Continuous(values) => {
                    if values.iter().any(|x| !x.is_finite()) {
                        return Err(Error::InvalidTable(format!(
                            "objective '{}' has a non-finite value",
                            o.name
                        )));
                    }
                }
                ObjectiveValues::Categorical { alphabet, codes } => {
                    if alphabet.len() < 2 {
                        return Err(Error::InvalidTable(format!(
                            "objective '{}' needs at least 2 classes, found {}",
                            o.name,
                            alphabet.len()
                        )));
                    }
                    let distinct: HashSet<_> = alphabet.iter().collect();
                    if distinct.len() != alphabet.len() {
                        return Err(Error::InvalidTable(format!(
                            "objective '{}' has duplicate class labels",
                            o.name
                        )));
                    }
                    if codes.iter().any(|&c| c >= alphabet.len()) {
                        return Err(Error::InvalidTable(format!(
                            "objective '{}' has a class code outside its alphabet",
                            o.name
                        )));
                    }
                }
            }
        }
        let mut slots = self.layout.clone();
        slots.sort_by_key(|s| match *s {
            ColumnSlot::Variable(i) => (0, i),
            ColumnSlot::Objective(i) => (1, i),
        });
        let expected: Vec<_> = (0..self.variables.len())
            .map(ColumnSlot::Variable)
            .chain((0..self.objectives.len()).map(ColumnSlot::Objective))
            .collect();
        if slots != expected {
            return Err(Error::InvalidTable(
                "column layout does not cover every column once".into(),
            ));
        }
        Ok(())
    }

    pub fn relation(&self) -> &str {
        &self.relation
    }

    pub fn n_runs(&self) -> usize {
        self.n_runs
    }

    pub fn variables(&self) -> &[Variable<T>] {
        &self.variables
    }

    pub fn objectives(&self) -> &[Objective<T>] {
        &self.objectives
    }

    pub fn layout(&self) -> &[ColumnSlot] {
        &self.layout
    }

    pub fn variable_names(&self) -> Vec<String> {
        self.variables.iter().map(|v| v.name.clone()).collect()
    }

    pub fn objective_names(&self) -> Vec<String> {
        self.objectives.iter().map(|o| o.name.clone()).collect()
    }

    pub fn variable_index(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }

    pub fn objective(&self, name: &str) -> Result<&Objective<T>> {
        self.objectives
            .iter()
            .find(|o| o.name == name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }

    /// Class alphabet and per-run class codes of a categorical objective.
    pub fn class_codes(&self, objective: &str) -> Result<(&[String], &[usize])> {
        match &self.objective(objective)?.values {
            ObjectiveValues::Categorical { alphabet, codes } => Ok((alphabet, codes)),
            ObjectiveValues::Continuous(_) => Err(Error::InvalidTable(format!(
                "objective '{objective}' is continuous; discretize it first"
            ))),
        }
    }

    /// Discretization applied to `objective`, if any.
    pub fn discretization(&self, objective: &str) -> Option<&DiscretizationRecord<T>> {
        self.discretizations.get(objective)
    }

    pub fn discretizations(&self) -> &BTreeMap<String, DiscretizationRecord<T>> {
        &self.discretizations
    }

    /// Variable values of run `i`, in variable order.
    pub fn row(&self, i: usize) -> Vec<T> {
        self.variables.iter().map(|v| v.values[i]).collect()
    }

    /// Sub-table of the given runs. Class alphabets are kept whole, so a
    /// class absent from the selection still has a slot.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        if let Some(&bad) = rows.iter().find(|&&r| r >= self.n_runs) {
            return Err(Error::InvalidTable(format!("run {bad} out of range")));
        }
        let variables = self
            .variables
            .iter()
            .map(|v| Variable {
                name: v.name.clone(),
                values: rows.iter().map(|&r| v.values[r]).collect(),
            })
            .collect();
        let objectives = self
            .objectives
            .iter()
            .map(|o| Objective {
                name: o.name.clone(),
                values: match &o.values {
                    ObjectiveValues::Continuous(v) => ObjectiveValues::Continuous(rows.iter().map(|&r| v[r]).collect()),
                    ObjectiveValues::Categorical { alphabet, codes } => ObjectiveValues::Categorical {
                        alphabet: alphabet.clone(),
                        codes: rows.iter().map(|&r| codes[r]).collect(),
                    },
                },
            })
            .collect();
        let mut table = Self::with_layout(self.relation.clone(), variables, objectives, self.layout.clone())?;
        table.discretizations = self.discretizations.clone();
        Ok(table)
    }

    /// Keep only the named variables (plus every objective), preserving the
    /// original column order.
    pub fn retain_variables(&self, keep: &HashSet<String>) -> Result<Self> {
        let mut remap = vec![None; self.variables.len()];
        let mut variables = Vec::new();
        for (i, v) in self.variables.iter().enumerate() {
            if keep.contains(&v.name) {
                remap[i] = Some(variables.len());
                variables.push(v.clone());
            }
        }
        let layout = self
            .layout
            .iter()
            .filter_map(|slot| match *slot {
                ColumnSlot::Variable(i) => remap[i].map(ColumnSlot::Variable),
                obj => Some(obj),
            })
            .collect();
        let mut table = Self::with_layout(self.relation.clone(), variables, self.objectives.clone(), layout)?;
        table.discretizations = self.discretizations.clone();
        Ok(table)
    }

    /// Copy of the table with an extra variable appended after the last column.
    pub fn with_variable(&self, variable: Variable<T>) -> Result<Self> {
        let mut variables = self.variables.clone();
        let mut layout = self.layout.clone();
        layout.push(ColumnSlot::Variable(variables.len()));
        variables.push(variable);
        let mut table = Self::with_layout(self.relation.clone(), variables, self.objectives.clone(), layout)?;
        table.discretizations = self.discretizations.clone();
        Ok(table)
    }

    /// Copy of the table with a variable's values passed through `f`.
    pub fn map_variable(&self, name: &str, f: impl Fn(T) -> T) -> Result<Self> {
        let idx = self
            .variable_index(name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))?;
        let mut table = self.clone();
        for x in &mut table.variables[idx].values {
            *x = f(*x);
        }
        table.validate()?;
        Ok(table)
    }

    pub(crate) fn replace_objective(
        &self,
        objective: Objective<T>,
        record: Option<DiscretizationRecord<T>>,
    ) -> Result<Self> {
        let pos = self
            .objectives
            .iter()
            .position(|o| o.name == objective.name)
            .ok_or_else(|| Error::UnknownColumn(objective.name.clone()))?;
        let mut table = self.clone();
        if let Some(record) = record {
            table.discretizations.insert(objective.name.clone(), record);
        }
        table.objectives[pos] = objective;
        table.validate()?;
        Ok(table)
    }
}
