//! Alternating decision trees grown by multiclass LogitBoost.
//!
//! Each boosting iteration adds one splitter under an existing prediction
//! node, chosen to best fit the per-class working responses by weighted
//! least squares. The two new prediction nodes carry centered per-class
//! scores; a run's class scores are the sum over every prediction node it
//! reaches.

use super::learner::{LadTreeParams, LearnerSpec};
use super::{GainRecord, LearnerKind, Node, SplitTest, TrainingMeta, TreeModel};
use crate::dataset::RunTable;
use crate::error::{Error, Result};
use crate::scalar::{improves, is_positive, midpoint, Scalar};

const MAX_HALVINGS: usize = 40;

#[derive(Clone, Copy)]
struct Candidate<T> {
    node: usize,
    variable: usize,
    threshold: T,
    gain: T,
}

impl<T: Scalar> Candidate<T> {
    fn beats(&self, other: &Candidate<T>) -> bool {
        if improves(self.gain, other.gain) {
            return true;
        }
        if improves(other.gain, self.gain) {
            return false;
        }
        (self.variable, self.threshold, self.node) < (other.variable, other.threshold, other.node)
    }
}

/// Per-class weighted sums `(Σ w·z, Σ w)`.
#[derive(Clone)]
struct Moments<T> {
    wz: Vec<T>,
    w: Vec<T>,
}

impl<T: Scalar> Moments<T> {
    fn zero(k: usize) -> Self {
        Moments {
            wz: vec![T::zero(); k],
            w: vec![T::zero(); k],
        }
    }

    fn add(&mut self, wz: &[T], w: &[T]) {
        for j in 0..self.w.len() {
            self.wz[j] = self.wz[j] + wz[j];
            self.w[j] = self.w[j] + w[j];
        }
    }

    /// Weighted squared error removed by fitting each class its weighted mean.
    fn fit_gain(&self) -> T {
        self.wz
            .iter()
            .zip(&self.w)
            .filter(|(_, &w)| w > T::zero())
            .map(|(&s, &w)| s * s / w)
            .sum()
    }

    /// `fit_gain` of `self - part`, without building it.
    fn complement_gain(&self, part: &Moments<T>) -> T {
        let mut gain = T::zero();
        for j in 0..self.w.len() {
            let w = self.w[j] - part.w[j];
            if w > T::zero() {
                let s = self.wz[j] - part.wz[j];
                gain = gain + s * s / w;
            }
        }
        gain
    }

    /// Centered per-class scores, scaled by `(k - 1) / k`.
    fn scores(&self) -> Vec<T> {
        let k = T::from_count(self.w.len());
        let means: Vec<T> = self
            .wz
            .iter()
            .zip(&self.w)
            .map(|(&s, &w)| if w > T::zero() { s / w } else { T::zero() })
            .collect();
        let centre = means.iter().copied().sum::<T>() / k;
        let factor = (k - T::one()) / k;
        means.into_iter().map(|m| factor * (m - centre)).collect()
    }
}

fn log_loss<T: Scalar>(f: &[Vec<T>], codes: &[usize]) -> T {
    let total: T = f
        .iter()
        .zip(codes)
        .map(|(row, &y)| {
            let max = row.iter().copied().fold(T::neg_infinity(), T::max);
            let lse = max + row.iter().map(|&s| (s - max).exp()).sum::<T>().ln();
            lse - row[y]
        })
        .sum();
    total / T::from_count(codes.len())
}

/// Train an alternating decision tree by multiclass LogitBoost.
///
/// Stops early when no splitter has positive weighted-least-squares gain.
/// If a full boosting step would raise the training log-loss, the step is
/// halved until it does not (counted in `meta.step_halvings`).
pub fn train_ladtree<T: Scalar>(
    table: &RunTable<T>,
    objective: &str,
    params: &LadTreeParams<T>,
) -> Result<TreeModel<T>> {
    params.validate()?;
    let (alphabet, codes) = table.class_codes(objective)?;
    let k = alphabet.len();
    if k < 2 {
        return Err(Error::Training("ladtree needs at least 2 classes".into()));
    }
    let n = table.n_runs();
    let columns: Vec<&[T]> = table.variables().iter().map(|v| v.values.as_slice()).collect();
    let names = table.variable_names();
    let sorted: Vec<Vec<usize>> = columns
        .iter()
        .map(|col| {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.sort_by(|&a, &b| col[a].partial_cmp(&col[b]).expect("finite variable values"));
            idx
        })
        .collect();

    let mut nodes: Vec<Node<T>> = vec![Node::Prediction {
        id: 0,
        scores: vec![T::zero(); k],
        children: Vec::new(),
    }];
    // membership masks and depths, indexed by node id (prediction nodes only)
    let mut members: Vec<Option<Vec<bool>>> = vec![Some(vec![true; n])];
    let mut depth: Vec<usize> = vec![0];
    let mut f: Vec<Vec<T>> = vec![vec![T::zero(); k]; n];
    let mut loss = log_loss(&f, codes);
    let mut meta = TrainingMeta {
        n_train: n,
        training_loss: vec![loss],
        ..TrainingMeta::default()
    };
    let mut gain_log = Vec::new();

    for iteration in 1..=params.iterations {
        let (w, wz) = working_responses(&f, codes, params);

        let mut best: Option<Candidate<T>> = None;
        for (node, mask) in members.iter().enumerate() {
            let Some(mask) = mask else { continue };
            let mut total = Moments::zero(k);
            for i in (0..n).filter(|&i| mask[i]) {
                total.add(&wz[i], &w[i]);
            }
            for (var, order) in sorted.iter().enumerate() {
                let col = columns[var];
                let rows: Vec<usize> = order.iter().copied().filter(|&i| mask[i]).collect();
                let mut left = Moments::zero(k);
                for pos in 0..rows.len().saturating_sub(1) {
                    left.add(&wz[rows[pos]], &w[rows[pos]]);
                    let (lo, hi) = (col[rows[pos]], col[rows[pos + 1]]);
                    if lo == hi {
                        continue;
                    }
                    let gain = left.fit_gain() + total.complement_gain(&left);
                    if !is_positive(gain) {
                        continue;
                    }
                    let cand = Candidate {
                        node,
                        variable: var,
                        threshold: midpoint(lo, hi),
                        gain,
                    };
                    if best.as_ref().is_none_or(|b| cand.beats(b)) {
                        best = Some(cand);
                    }
                }
            }
        }
        let Some(best) = best else {
            meta.stopped_early = Some(format!(
                "iteration {iteration}: no splitter reduces the weighted squared error"
            ));
            break;
        };

        let parent_mask = members[best.node].clone().expect("prediction node");
        let col = columns[best.variable];
        let left_mask: Vec<bool> = (0..n).map(|i| parent_mask[i] && col[i] < best.threshold).collect();
        let right_mask: Vec<bool> = (0..n).map(|i| parent_mask[i] && col[i] >= best.threshold).collect();
        let mut left_m = Moments::zero(k);
        let mut right_m = Moments::zero(k);
        for i in 0..n {
            if left_mask[i] {
                left_m.add(&wz[i], &w[i]);
            } else if right_mask[i] {
                right_m.add(&wz[i], &w[i]);
            }
        }
        let full_left = left_m.scores();
        let full_right = right_m.scores();

        let mut scale = T::one();
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let trial = stepped(&f, &left_mask, &right_mask, &full_left, &full_right, scale);
            let trial_loss = log_loss(&trial, codes);
            if trial_loss <= loss {
                accepted = Some((trial, trial_loss));
                break;
            }
            scale = scale / T::lit(2.0);
            meta.step_halvings += 1;
        }
        let Some((next_f, next_loss)) = accepted else {
            meta.stopped_early = Some(format!("iteration {iteration}: no step lowers the training loss"));
            break;
        };
        f = next_f;
        loss = next_loss;
        meta.training_loss.push(loss);

        let splitter_id = nodes.len();
        let (l_id, r_id) = (splitter_id + 1, splitter_id + 2);
        let test = SplitTest {
            variable: names[best.variable].clone(),
            variable_index: best.variable,
            threshold: best.threshold,
        };
        gain_log.push(GainRecord {
            order: gain_log.len(),
            node: best.node,
            depth: depth[best.node],
            iteration: Some(iteration),
            variable: test.variable.clone(),
            variable_index: best.variable,
            threshold: best.threshold,
            gain: best.gain,
        });
        if let Node::Prediction { children, .. } = &mut nodes[best.node] {
            children.push(splitter_id);
        }
        nodes.push(Node::Splitter {
            id: splitter_id,
            test,
            children: [l_id, r_id],
        });
        for (id, values) in [(l_id, &full_left), (r_id, &full_right)] {
            nodes.push(Node::Prediction {
                id,
                scores: values.iter().map(|&v| v * scale).collect(),
                children: Vec::new(),
            });
        }
        members.push(None);
        members.push(Some(left_mask));
        members.push(Some(right_mask));
        let d = depth[best.node] + 1;
        depth.extend([d, d, d]);
    }

    Ok(TreeModel {
        kind: LearnerKind::Ladtree,
        objective: objective.to_string(),
        class_alphabet: alphabet.to_vec(),
        variables: names,
        parameters: LearnerSpec::Ladtree(params.clone()),
        nodes,
        gain_log,
        meta,
    })
}

/// The model as it stood after its first `iterations` boosting steps.
///
/// Boosting is deterministic, so the nodes, gain log and loss trace equal
/// those of a fresh run with `iterations` steps; `meta.step_halvings` still
/// counts the whole run.
pub(crate) fn boosting_prefix<T: Scalar>(model: &TreeModel<T>, iterations: usize) -> TreeModel<T> {
    let completed = model.gain_log.len();
    let mut out = model.clone();
    if let LearnerSpec::Ladtree(p) = &mut out.parameters {
        p.iterations = iterations;
    }
    if iterations > completed {
        return out;
    }
    let limit = 1 + 3 * iterations;
    out.nodes.truncate(limit);
    for node in &mut out.nodes {
        if let Node::Prediction { children, .. } = node {
            children.retain(|&c| c < limit);
        }
    }
    out.gain_log.truncate(iterations);
    out.meta.training_loss.truncate(iterations + 1);
    out.meta.stopped_early = None;
    out
}

/// Per-instance weights `p(1-p)` and weighted working responses `w·z`.
#[allow(clippy::type_complexity)]
fn working_responses<T: Scalar>(
    f: &[Vec<T>],
    codes: &[usize],
    params: &LadTreeParams<T>,
) -> (Vec<Vec<T>>, Vec<Vec<T>>) {
    let mut weights = Vec::with_capacity(f.len());
    let mut weighted = Vec::with_capacity(f.len());
    for (row, &y) in f.iter().zip(codes) {
        let p = super::softmax(row);
        let mut w_row = Vec::with_capacity(p.len());
        let mut wz_row = Vec::with_capacity(p.len());
        for (j, &pj) in p.iter().enumerate() {
            let yj = if j == y { T::one() } else { T::zero() };
            let w = pj * (T::one() - pj);
            let z = ((yj - pj) / w.max(params.weight_floor))
                .max(-params.z_clip)
                .min(params.z_clip);
            w_row.push(w);
            wz_row.push(w * z);
        }
        weights.push(w_row);
        weighted.push(wz_row);
    }
    (weights, weighted)
}

fn stepped<T: Scalar>(
    f: &[Vec<T>],
    left: &[bool],
    right: &[bool],
    left_scores: &[T],
    right_scores: &[T],
    scale: T,
) -> Vec<Vec<T>> {
    f.iter()
        .enumerate()
        .map(|(i, row)| {
            let delta = if left[i] {
                Some(left_scores)
            } else if right[i] {
                Some(right_scores)
            } else {
                None
            };
            match delta {
                Some(d) => row.iter().zip(d).map(|(&a, &b)| a + scale * b).collect(),
                None => row.clone(),
            }
        })
        .collect()
}
