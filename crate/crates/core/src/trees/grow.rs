use std::collections::VecDeque;

use super::learner::{BestFirstParams, InfoGainParams, LearnerSpec, SdrParams};
use super::split::{sample_sd, search, Candidate, Criterion, Target};
use super::{GainRecord, LearnerKind, Node, SplitTest, TrainingMeta, TreeModel};
use crate::dataset::RunTable;
use crate::error::{Error, Result};
use crate::scalar::{improves, Scalar};

/// Borrowed training view shared by the plain-tree growers.
struct Problem<'a, T> {
    columns: Vec<&'a [T]>,
    names: Vec<String>,
    target: Target<'a, T>,
    k: usize,
}

impl<'a, T: Scalar> Problem<'a, T> {
    fn new(table: &'a RunTable<T>, objective: &str) -> Result<Self> {
        let target = Target::from_objective(table, objective)?;
        let k = match target {
            Target::Classes { k, .. } => k,
            Target::Continuous(_) => 0,
        };
        Ok(Problem {
            columns: table.variables().iter().map(|v| v.values.as_slice()).collect(),
            names: table.variable_names(),
            target,
            k,
        })
    }

    fn leaf(&self, id: usize, rows: &[usize]) -> Node<T> {
        let mut counts = vec![0usize; self.k];
        if let Target::Classes { codes, .. } = self.target {
            for &r in rows {
                counts[codes[r]] += 1;
            }
        }
        let n = rows.len();
        let nf = T::from_count(n.max(1));
        let distribution = counts.iter().map(|&c| T::from_count(c) / nf).collect();
        let mean = rows.iter().map(|&r| self.target.numeric(r)).sum::<T>() / nf;
        Node::Leaf {
            id,
            counts,
            distribution,
            mean,
            n,
        }
    }

    fn test(&self, c: &Candidate<T>) -> SplitTest<T> {
        SplitTest {
            variable: self.names[c.variable].clone(),
            variable_index: c.variable,
            threshold: c.threshold,
        }
    }

    fn partition(&self, rows: &[usize], c: &Candidate<T>) -> (Vec<usize>, Vec<usize>) {
        rows.iter().partition(|&&r| self.columns[c.variable][r] < c.threshold)
    }

    fn sd(&self, rows: &[usize]) -> T {
        let n = rows.len();
        if n < 2 {
            return T::zero();
        }
        let mean = rows.iter().map(|&r| self.target.numeric(r)).sum::<T>() / T::from_count(n);
        let (s, ss) = rows.iter().fold((T::zero(), T::zero()), |(s, ss), &r| {
            let d = self.target.numeric(r) - mean;
            (s + d, ss + d * d)
        });
        sample_sd(n, s, ss)
    }

    fn is_pure(&self, rows: &[usize]) -> bool {
        match self.target {
            Target::Classes { codes, .. } => rows.windows(2).all(|w| codes[w[0]] == codes[w[1]]),
            Target::Continuous(v) => rows.windows(2).all(|w| v[w[0]] == v[w[1]]),
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn model(
        self,
        table: &RunTable<T>,
        kind: LearnerKind,
        objective: &str,
        parameters: LearnerSpec<T>,
        nodes: Vec<Node<T>>,
        gain_log: Vec<GainRecord<T>>,
        target_coding: Option<String>,
    ) -> TreeModel<T> {
        let class_alphabet = table
            .objective(objective)
            .ok()
            .and_then(|o| o.class_labels())
            .map(|labels| labels.into_iter().map(|l| l.name).collect())
            .unwrap_or_default();
        TreeModel {
            kind,
            objective: objective.to_string(),
            class_alphabet,
            variables: self.names,
            parameters,
            nodes,
            gain_log,
            meta: TrainingMeta {
                n_train: table.n_runs(),
                target_coding,
                ..TrainingMeta::default()
            },
        }
    }
}

/// Level-order growth: each queued node either becomes a leaf or is split.
/// The result of unlimited growth does not depend on the visiting order;
/// `max_splits` truncates it breadth-first.
fn grow_level_order<T: Scalar>(
    problem: &Problem<'_, T>,
    n_runs: usize,
    max_splits: Option<usize>,
    find: impl Fn(&[usize]) -> Option<Candidate<T>>,
) -> (Vec<Node<T>>, Vec<GainRecord<T>>) {
    let root: Vec<usize> = (0..n_runs).collect();
    let mut nodes = vec![problem.leaf(0, &root)];
    let mut log = Vec::new();
    let mut queue = VecDeque::from([(0usize, root, 0usize)]);
    while let Some((id, rows, depth)) = queue.pop_front() {
        if max_splits.is_some_and(|m| log.len() >= m) {
            break;
        }
        let Some(cand) = find(&rows) else { continue };
        let (left, right) = problem.partition(&rows, &cand);
        let (l_id, r_id) = (nodes.len(), nodes.len() + 1);
        nodes.push(problem.leaf(l_id, &left));
        nodes.push(problem.leaf(r_id, &right));
        let test = problem.test(&cand);
        log.push(GainRecord {
            order: log.len(),
            node: id,
            depth,
            iteration: None,
            variable: test.variable.clone(),
            variable_index: test.variable_index,
            threshold: test.threshold,
            gain: cand.gain,
        });
        nodes[id] = Node::Split {
            id,
            test,
            children: [l_id, r_id],
        };
        queue.push_back((l_id, left, depth + 1));
        queue.push_back((r_id, right, depth + 1));
    }
    (nodes, log)
}

/// Tree split on standard deviation reduction.
///
/// A node stays a leaf when its target sd falls below
/// `sd_fraction * sd(root)`, when it holds fewer than `min_instances` rows,
/// or when no split reduces the sd. Categorical targets are coded to class
/// indices for the sd computation.
pub fn train_sdr_tree<T: Scalar>(table: &RunTable<T>, objective: &str, params: &SdrParams<T>) -> Result<TreeModel<T>> {
    params.validate()?;
    let problem = Problem::new(table, objective)?;
    let root: Vec<usize> = (0..table.n_runs()).collect();
    let floor = params.sd_fraction * problem.sd(&root);
    let (nodes, log) = grow_level_order(&problem, table.n_runs(), params.max_splits, |rows| {
        if rows.len() < params.min_instances || problem.sd(rows) < floor {
            return None;
        }
        search(&problem.columns, rows, &problem.target, Criterion::Sdr, 1)
    });
    let coding = matches!(problem.target, Target::Classes { .. }).then(|| "class-index".to_string());
    Ok(problem.model(
        table,
        LearnerKind::Sdr,
        objective,
        LearnerSpec::Sdr(params.clone()),
        nodes,
        log,
        coding,
    ))
}

/// Tree split on gain ratio. Each child must keep at least `min_leaf` rows.
pub fn train_info_gain_tree<T: Scalar>(
    table: &RunTable<T>,
    objective: &str,
    params: &InfoGainParams,
) -> Result<TreeModel<T>> {
    params.validate()?;
    table.class_codes(objective)?;
    let problem = Problem::new(table, objective)?;
    let (nodes, log) = grow_level_order(&problem, table.n_runs(), params.max_splits, |rows| {
        if problem.is_pure(rows) || rows.len() < 2 * params.min_leaf {
            return None;
        }
        search(
            &problem.columns,
            rows,
            &problem.target,
            Criterion::InfoGainRatio,
            params.min_leaf,
        )
    });
    Ok(problem.model(
        table,
        LearnerKind::InfoGain,
        objective,
        LearnerSpec::InfoGain(params.clone()),
        nodes,
        log,
        None,
    ))
}

struct FrontierEntry<T> {
    id: usize,
    rows: Vec<usize>,
    depth: usize,
    split: Candidate<T>,
    /// Gini reduction weighted by the node's share of the training rows.
    priority: T,
}

impl<T: Scalar> FrontierEntry<T> {
    fn beats(&self, other: &FrontierEntry<T>) -> bool {
        if improves(self.priority, other.priority) {
            return true;
        }
        if improves(other.priority, self.priority) {
            return false;
        }
        (self.split.variable, self.split.threshold, self.id) < (other.split.variable, other.split.threshold, other.id)
    }
}

/// Tree grown by repeatedly expanding the frontier leaf with the largest
/// weighted Gini reduction, up to `max_expansions` splits.
pub fn train_best_first_tree<T: Scalar>(
    table: &RunTable<T>,
    objective: &str,
    params: &BestFirstParams,
) -> Result<TreeModel<T>> {
    table.class_codes(objective)?;
    let problem = Problem::new(table, objective)?;
    let total = T::from_count(table.n_runs());
    let entry = |id: usize, rows: Vec<usize>, depth: usize| {
        search(&problem.columns, &rows, &problem.target, Criterion::Gini, 1).map(|split| FrontierEntry {
            id,
            depth,
            priority: split.gain * T::from_count(rows.len()) / total,
            split,
            rows,
        })
    };

    let root: Vec<usize> = (0..table.n_runs()).collect();
    let mut nodes = vec![problem.leaf(0, &root)];
    let mut log: Vec<GainRecord<T>> = Vec::new();
    let mut frontier: Vec<FrontierEntry<T>> = entry(0, root, 0).into_iter().collect();
    while log.len() < params.max_expansions && !frontier.is_empty() {
        let mut pick = 0;
        for i in 1..frontier.len() {
            if frontier[i].beats(&frontier[pick]) {
                pick = i;
            }
        }
        let e = frontier.remove(pick);
        let (left, right) = problem.partition(&e.rows, &e.split);
        let (l_id, r_id) = (nodes.len(), nodes.len() + 1);
        nodes.push(problem.leaf(l_id, &left));
        nodes.push(problem.leaf(r_id, &right));
        let test = problem.test(&e.split);
        log.push(GainRecord {
            order: log.len(),
            node: e.id,
            depth: e.depth,
            iteration: None,
            variable: test.variable.clone(),
            variable_index: test.variable_index,
            threshold: test.threshold,
            gain: e.priority,
        });
        nodes[e.id] = Node::Split {
            id: e.id,
            test,
            children: [l_id, r_id],
        };
        frontier.extend(entry(l_id, left, e.depth + 1));
        frontier.extend(entry(r_id, right, e.depth + 1));
    }
    Ok(problem.model(
        table,
        LearnerKind::BestFirst,
        objective,
        LearnerSpec::BestFirst(params.clone()),
        nodes,
        log,
        None,
    ))
}

pub(crate) fn require_runs<T: Scalar>(table: &RunTable<T>) -> Result<()> {
    if table.n_runs() < 2 {
        return Err(Error::Training("at least 2 runs required".into()));
    }
    Ok(())
}
