use serde::{Deserialize, Serialize};

use super::grow::require_runs;
use super::{train_best_first_tree, train_info_gain_tree, train_ladtree, train_sdr_tree, LearnerKind, TreeModel};
use crate::dataset::RunTable;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, bound(deserialize = "T: Scalar"))]
pub struct SdrParams<T> {
    /// Stop when a node's target sd drops below this fraction of the root's.
    pub sd_fraction: T,
    /// Stop when a node holds fewer rows than this.
    pub min_instances: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_splits: Option<usize>,
}

impl<T: Scalar> Default for SdrParams<T> {
    fn default() -> Self {
        SdrParams {
            sd_fraction: T::lit(0.05),
            min_instances: 4,
            max_splits: None,
        }
    }
}

impl<T: Scalar> SdrParams<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.sd_fraction >= T::zero() && self.sd_fraction.is_finite()) {
            return Err(Error::Training("sd_fraction must be a finite value >= 0".into()));
        }
        if self.min_instances == 0 {
            return Err(Error::Training("min_instances must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InfoGainParams {
    /// Smallest admissible child.
    pub min_leaf: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_splits: Option<usize>,
}

impl Default for InfoGainParams {
    fn default() -> Self {
        InfoGainParams {
            min_leaf: 2,
            max_splits: None,
        }
    }
}

impl InfoGainParams {
    pub fn validate(&self) -> Result<()> {
        if self.min_leaf == 0 {
            return Err(Error::Training("min_leaf must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BestFirstParams {
    pub max_expansions: usize,
}

impl Default for BestFirstParams {
    fn default() -> Self {
        BestFirstParams { max_expansions: 8 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, bound(deserialize = "T: Scalar"))]
pub struct LadTreeParams<T> {
    /// Boosting iterations; each adds one splitter node.
    pub iterations: usize,
    /// Working responses are clipped to `[-z_clip, z_clip]`.
    pub z_clip: T,
    /// Lower bound on the weight used to form working responses.
    pub weight_floor: T,
}

impl<T: Scalar> Default for LadTreeParams<T> {
    fn default() -> Self {
        LadTreeParams {
            iterations: 10,
            z_clip: T::lit(4.0),
            weight_floor: T::lit(1e-12),
        }
    }
}

impl<T: Scalar> LadTreeParams<T> {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::Training("ladtree iterations must be >= 1".into()));
        }
        if !(self.z_clip > T::zero() && self.z_clip.is_finite()) {
            return Err(Error::Training("z_clip must be > 0".into()));
        }
        if !(self.weight_floor > T::zero() && self.weight_floor.is_finite()) {
            return Err(Error::Training("weight_floor must be > 0".into()));
        }
        Ok(())
    }
}

/// A learner kind together with its hyperparameters.
///
/// JSON form: `{"kind": "ladtree", "iterations": 10, ...}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", bound(deserialize = "T: Scalar"))]
pub enum LearnerSpec<T> {
    Sdr(SdrParams<T>),
    InfoGain(InfoGainParams),
    BestFirst(BestFirstParams),
    Ladtree(LadTreeParams<T>),
}

impl<T: Scalar> LearnerSpec<T> {
    /// Defaults for `kind`.
    pub fn default_for(kind: LearnerKind) -> Self {
        match kind {
            LearnerKind::Sdr => LearnerSpec::Sdr(SdrParams::default()),
            LearnerKind::InfoGain => LearnerSpec::InfoGain(InfoGainParams::default()),
            LearnerKind::BestFirst => LearnerSpec::BestFirst(BestFirstParams::default()),
            LearnerKind::Ladtree => LearnerSpec::Ladtree(LadTreeParams::default()),
        }
    }

    pub fn kind(&self) -> LearnerKind {
        match self {
            LearnerSpec::Sdr(_) => LearnerKind::Sdr,
            LearnerSpec::InfoGain(_) => LearnerKind::InfoGain,
            LearnerSpec::BestFirst(_) => LearnerKind::BestFirst,
            LearnerSpec::Ladtree(_) => LearnerKind::Ladtree,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            LearnerSpec::Sdr(p) => p.validate(),
            LearnerSpec::InfoGain(p) => p.validate(),
            LearnerSpec::BestFirst(_) => Ok(()),
            LearnerSpec::Ladtree(p) => p.validate(),
        }
    }

    pub fn train(&self, table: &RunTable<T>, objective: &str) -> Result<TreeModel<T>> {
        require_runs(table)?;
        match self {
            LearnerSpec::Sdr(p) => train_sdr_tree(table, objective, p),
            LearnerSpec::InfoGain(p) => train_info_gain_tree(table, objective, p),
            LearnerSpec::BestFirst(p) => train_best_first_tree(table, objective, p),
            LearnerSpec::Ladtree(p) => train_ladtree(table, objective, p),
        }
    }

    /// Same learner limited to `rounds` splits (boosting iterations for ladtree).
    pub fn with_capacity(&self, rounds: usize) -> Self {
        match self {
            LearnerSpec::Sdr(p) => LearnerSpec::Sdr(SdrParams {
                max_splits: Some(rounds),
                ..p.clone()
            }),
            LearnerSpec::InfoGain(p) => LearnerSpec::InfoGain(InfoGainParams {
                max_splits: Some(rounds),
                ..p.clone()
            }),
            LearnerSpec::BestFirst(_) => LearnerSpec::BestFirst(BestFirstParams { max_expansions: rounds }),
            LearnerSpec::Ladtree(p) => LearnerSpec::Ladtree(LadTreeParams {
                iterations: rounds,
                ..p.clone()
            }),
        }
    }
}
