//! Tree-family learners and the models they produce.
//!
//! Four learners share one model type:
//!
//! * `sdr`: top-down regression-style tree split on standard deviation
//!   reduction, with class indices as the numeric target.
//! * `info-gain`: top-down tree split on gain ratio.
//! * `best-first`: tree grown by always expanding the leaf with the largest
//!   weighted Gini reduction.
//! * `ladtree`: alternating decision tree grown by multiclass LogitBoost.
//!
//! None of the learners prunes. Every split test reads "go left iff
//! `value < threshold`", with thresholds at midpoints between consecutive
//! distinct observed values.

mod grow;
mod ladtree;
mod learner;
mod split;

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub use grow::{train_best_first_tree, train_info_gain_tree, train_sdr_tree};
pub(crate) use ladtree::boosting_prefix;
pub use ladtree::train_ladtree;
pub use learner::{BestFirstParams, InfoGainParams, LadTreeParams, LearnerSpec, SdrParams};
pub use split::{best_split, Criterion, ScoredSplit, Target};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LearnerKind {
    Sdr,
    InfoGain,
    BestFirst,
    Ladtree,
}

impl LearnerKind {
    pub fn name(self) -> &'static str {
        match self {
            LearnerKind::Sdr => "sdr",
            LearnerKind::InfoGain => "info-gain",
            LearnerKind::BestFirst => "best-first",
            LearnerKind::Ladtree => "ladtree",
        }
    }
}

impl fmt::Display for LearnerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for LearnerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sdr" => Ok(LearnerKind::Sdr),
            "info-gain" => Ok(LearnerKind::InfoGain),
            "best-first" => Ok(LearnerKind::BestFirst),
            "ladtree" => Ok(LearnerKind::Ladtree),
            other => Err(Error::Config(format!(
                "unknown learner '{other}' (expected sdr, info-gain, best-first or ladtree)"
            ))),
        }
    }
}

/// Binary test on one variable: left branch iff `value < threshold`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitTest<T> {
    pub variable: String,
    pub variable_index: usize,
    pub threshold: T,
}

impl<T: Scalar> SplitTest<T> {
    pub fn goes_left(&self, value: T) -> bool {
        value < self.threshold
    }
}

/// Node of a trained model. Node 0 is the root.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Node<T> {
    /// Internal node of a plain tree; `children = [left, right]`.
    Split {
        id: usize,
        test: SplitTest<T>,
        children: [usize; 2],
    },
    /// Terminal node of a plain tree.
    Leaf {
        id: usize,
        /// Training rows per class (empty for a continuous target).
        counts: Vec<usize>,
        /// Unsmoothed class frequencies.
        distribution: Vec<T>,
        /// Mean numeric target of the rows (class index for coded targets).
        mean: T,
        n: usize,
    },
    /// Alternating-tree prediction node; `children` are splitter ids.
    Prediction {
        id: usize,
        scores: Vec<T>,
        children: Vec<usize>,
    },
    /// Alternating-tree splitter; `children = [left, right]` prediction nodes.
    Splitter {
        id: usize,
        test: SplitTest<T>,
        children: [usize; 2],
    },
}

impl<T> Node<T> {
    pub fn id(&self) -> usize {
        match self {
            Node::Split { id, .. }
            | Node::Leaf { id, .. }
            | Node::Prediction { id, .. }
            | Node::Splitter { id, .. } => *id,
        }
    }

    pub fn test(&self) -> Option<&SplitTest<T>> {
        match self {
            Node::Split { test, .. } | Node::Splitter { test, .. } => Some(test),
            _ => None,
        }
    }
}

/// One split performed during training.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GainRecord<T> {
    /// 0-based position in the sequence of splits.
    pub order: usize,
    /// Node that was split (trees) or the prediction node the splitter hangs from (ladtree).
    pub node: usize,
    pub depth: usize,
    /// Boosting iteration, 1-based (ladtree only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iteration: Option<usize>,
    pub variable: String,
    pub variable_index: usize,
    pub threshold: T,
    pub gain: T,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar"))]
pub struct TrainingMeta<T> {
    pub n_train: usize,
    /// How a categorical target was turned into numbers, when it was.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_coding: Option<String>,
    /// Mean multiclass log-loss before boosting and after each iteration.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub training_loss: Vec<T>,
    /// Boosting steps that were shortened because the full step raised the loss.
    #[serde(default)]
    pub step_halvings: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stopped_early: Option<String>,
}

/// Trained classifier (or regression tree, for `sdr` on a continuous objective).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar"))]
pub struct TreeModel<T> {
    pub kind: LearnerKind,
    pub objective: String,
    pub class_alphabet: Vec<String>,
    pub variables: Vec<String>,
    pub parameters: LearnerSpec<T>,
    pub nodes: Vec<Node<T>>,
    pub gain_log: Vec<GainRecord<T>>,
    pub meta: TrainingMeta<T>,
}

impl<T: Scalar> TreeModel<T> {
    pub fn n_classes(&self) -> usize {
        self.class_alphabet.len()
    }

    pub fn is_regression(&self) -> bool {
        self.class_alphabet.is_empty()
    }

    pub fn n_splits(&self) -> usize {
        self.nodes.iter().filter(|n| n.test().is_some()).count()
    }

    /// Longest root-to-leaf path, counted in split tests.
    pub fn depth(&self) -> usize {
        fn walk<T>(nodes: &[Node<T>], id: usize) -> usize {
            match &nodes[id] {
                Node::Split { children, .. } | Node::Splitter { children, .. } => {
                    1 + children.iter().map(|&c| walk(nodes, c)).max().unwrap_or(0)
                }
                Node::Prediction { children, .. } => children.iter().map(|&c| walk(nodes, c)).max().unwrap_or(0),
                Node::Leaf { .. } => 0,
            }
        }
        if self.nodes.is_empty() {
            0
        } else {
            walk(&self.nodes, 0)
        }
    }

    /// Variable indices referenced by at least one split.
    pub fn referenced_variables(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = self
            .nodes
            .iter()
            .filter_map(|n| n.test().map(|t| t.variable_index))
            .collect();
        idx.sort_unstable();
        idx.dedup();
        idx
    }

    /// Class-probability vector for a run given in model variable order.
    ///
    /// Leaf frequencies get Laplace smoothing (+1 per class); alternating
    /// trees return the softmax of their summed scores.
    pub fn predict_row(&self, row: &[T]) -> Result<Vec<T>> {
        if self.is_regression() {
            return Err(Error::Prediction(
                "regression tree has no class distribution; use predict_value".into(),
            ));
        }
        self.check_row(row)?;
        match self.kind {
            LearnerKind::Ladtree => Ok(softmax(&self.scores_row(row))),
            _ => match &self.nodes[self.leaf_for(row)] {
                Node::Leaf { counts, n, .. } => Ok(laplace(counts, *n)),
                _ => unreachable!("leaf_for returns a leaf"),
            },
        }
    }

    /// Mean target of the reached leaf (plain trees only).
    pub fn predict_value(&self, row: &[T]) -> Result<T> {
        if self.kind == LearnerKind::Ladtree {
            return Err(Error::Prediction("alternating trees predict class scores only".into()));
        }
        self.check_row(row)?;
        match &self.nodes[self.leaf_for(row)] {
            Node::Leaf { mean, .. } => Ok(*mean),
            _ => unreachable!("leaf_for returns a leaf"),
        }
    }

    /// Class-probability vector for a run given by variable name. Only the
    /// variables the model's splits reference need to be present.
    pub fn predict_class_distribution(&self, run: &BTreeMap<String, T>) -> Result<Vec<T>> {
        let mut row = vec![T::zero(); self.variables.len()];
        for idx in self.referenced_variables() {
            let name = &self.variables[idx];
            row[idx] = *run
                .get(name)
                .ok_or_else(|| Error::Prediction(format!("run is missing variable '{name}'")))?;
        }
        self.predict_row(&row)
    }

    /// Summed per-class scores of every reachable prediction node.
    pub fn scores_row(&self, row: &[T]) -> Vec<T> {
        let mut acc = vec![T::zero(); self.n_classes()];
        if self.nodes.is_empty() {
            return acc;
        }
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            match &self.nodes[id] {
                Node::Prediction { scores, children, .. } => {
                    for (a, &s) in acc.iter_mut().zip(scores) {
                        *a = *a + s;
                    }
                    stack.extend(children.iter().rev());
                }
                Node::Splitter { test, children, .. } => {
                    let v = row[test.variable_index];
                    stack.push(if test.goes_left(v) { children[0] } else { children[1] });
                }
                _ => {}
            }
        }
        acc
    }

    fn leaf_for(&self, row: &[T]) -> usize {
        let mut id = 0;
        loop {
            match &self.nodes[id] {
                Node::Split { test, children, .. } => {
                    id = if test.goes_left(row[test.variable_index]) {
                        children[0]
                    } else {
                        children[1]
                    };
                }
                _ => return id,
            }
        }
    }

    fn check_row(&self, row: &[T]) -> Result<()> {
        if row.len() != self.variables.len() {
            return Err(Error::Prediction(format!(
                "run has {} values, model expects {}",
                row.len(),
                self.variables.len()
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

pub(crate) fn laplace<T: Scalar>(counts: &[usize], n: usize) -> Vec<T> {
    let denom = T::from_count(n + counts.len());
    counts.iter().map(|&c| T::from_count(c + 1) / denom).collect()
}

pub(crate) fn softmax<T: Scalar>(scores: &[T]) -> Vec<T> {
    let max = scores.iter().copied().fold(T::neg_infinity(), T::max);
    let exps: Vec<T> = scores.iter().map(|&s| (s - max).exp()).collect();
    let total: T = exps.iter().copied().sum();
    exps.into_iter().map(|e| e / total).collect()
}
