mod common;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

use varsieve::dataset::{
    discretize_objective, parse_csv, to_csv_string, DiscretizationSpec, Objective, ObjectiveValues, RunTable, Variable,
};
use varsieve::evaluation::{compare_learners, evaluate, evaluate_loo, instance_error, Protocol};
use varsieve::screening::{build_report, rank_variables, reduce_dataset, ObjectiveReport};
use varsieve::synthbench::{generate, oracle_best_split, recovery_score, Family, PlantedSpec};
use varsieve::trees::{
    best_split, BestFirstParams, Criterion, InfoGainParams, LadTreeParams, LearnerKind, LearnerSpec, Node, SdrParams,
    Target, TreeModel,
};

const KINDS: [LearnerKind; 4] = [
    LearnerKind::Sdr,
    LearnerKind::InfoGain,
    LearnerKind::BestFirst,
    LearnerKind::Ladtree,
];

fn small_table(seed: u64, n: usize, n_vars: usize, k: usize) -> RunTable<f64> {
    common::classified_table(&mut common::rng(seed), n, n_vars, k)
}

fn root_test(model: &TreeModel<f64>) -> Option<(usize, f64)> {
    match model.nodes.first()? {
        Node::Split { test, .. } => Some((test.variable_index, test.threshold)),
        _ => None,
    }
}

fn sample_sd(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (values.len() - 1) as f64).sqrt()
}

/// Rows of the training table that reach each node.
fn node_rows(model: &TreeModel<f64>, table: &RunTable<f64>) -> Vec<Vec<usize>> {
    let mut reach = vec![Vec::new(); model.nodes.len()];
    for r in 0..table.n_runs() {
        let row = table.row(r);
        let mut id = 0;
        loop {
            reach[id].push(r);
            match &model.nodes[id] {
                Node::Split { test, children, .. } => {
                    id = if test.goes_left(row[test.variable_index]) {
                        children[0]
                    } else {
                        children[1]
                    };
                }
                _ => break,
            }
        }
    }
    reach
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn best_split_agrees_with_oracle(seed in any::<u64>(), n in 1usize..=12, n_vars in 1usize..=6, k in 2usize..=4) {
        let table = small_table(seed, 12, n_vars, k);
        let (_, codes) = table.class_codes("O1").unwrap();
        let mut rng = common::rng(seed ^ 0x5eed);
        let mut rows: Vec<usize> = (0..12).collect();
        rows.shuffle(&mut rng);
        rows.truncate(n);
        let continuous: Vec<f64> = (0..12).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let targets = [Target::Classes { codes, k }, Target::Continuous(continuous.as_slice())];
        for criterion in Criterion::ALL {
            for target in &targets {
                if matches!(target, Target::Continuous(_)) && criterion != Criterion::Sdr {
                    continue;
                }
                let fast = best_split(&table, &rows, target, criterion).unwrap();
                let slow = oracle_best_split(&table, &rows, target, criterion).unwrap();
                match (fast, slow) {
                    (None, None) => {}
                    (Some(f), Some(o)) => {
                        prop_assert_eq!(f.split.variable_index, o.variable_index);
                        prop_assert_eq!(f.split.threshold, o.threshold);
                        prop_assert!((f.gain - o.gain).abs() <= 1e-12);
                        prop_assert!(f.gain > 0.0);
                    }
                    (f, o) => prop_assert!(false, "trees {:?} vs oracle {:?}", f, o),
                }
            }
        }
    }

    #[test]
    fn first_split_of_each_tree_learner_is_oracle_optimal(seed in any::<u64>(), n in 2usize..=12, n_vars in 1usize..=6, k in 2usize..=4) {
        let table = small_table(seed, n, n_vars, k);
        let (_, codes) = table.class_codes("O1").unwrap();
        let rows: Vec<usize> = (0..n).collect();
        let target = Target::Classes { codes, k };
        let cases = [
            (LearnerSpec::InfoGain(InfoGainParams { min_leaf: 1, max_splits: None }), Criterion::InfoGainRatio),
            (LearnerSpec::BestFirst(BestFirstParams::default()), Criterion::Gini),
            (LearnerSpec::Sdr(SdrParams { min_instances: 2, ..SdrParams::default() }), Criterion::Sdr),
        ];
        for (spec, criterion) in cases {
            let model = spec.train(&table, "O1").unwrap();
            let oracle = oracle_best_split(&table, &rows, &target, criterion).unwrap();
            prop_assert_eq!(root_test(&model), oracle.map(|o| (o.variable_index, o.threshold)), "{}", spec.kind());
        }
    }

    #[test]
    fn sdr_reduction_is_never_negative(seed in any::<u64>(), n in 2usize..=30, n_vars in 1usize..=5, k in 2usize..=5) {
        let table = small_table(seed, n, n_vars, k);
        let (_, codes) = table.class_codes("O1").unwrap();
        let y: Vec<f64> = codes.iter().map(|&c| c as f64).collect();
        let spec = LearnerSpec::Sdr(SdrParams { sd_fraction: 0.0, min_instances: 2, max_splits: None });
        let model = spec.train(&table, "O1").unwrap();
        prop_assert_eq!(model.gain_log.len(), model.n_splits());
        let reach = node_rows(&model, &table);
        for node in &model.nodes {
            if let Node::Split { id, children, .. } = node {
                let sd = |rows: &[usize]| sample_sd(&rows.iter().map(|&r| y[r]).collect::<Vec<_>>());
                let parent = &reach[*id];
                let weighted: f64 = children
                    .iter()
                    .map(|&c| reach[c].len() as f64 / parent.len() as f64 * sd(&reach[c]))
                    .sum();
                prop_assert!(sd(parent) - weighted >= -1e-12, "node {} parent {} children {}", id, sd(parent), weighted);
            }
        }
        prop_assert!(model.gain_log.iter().all(|g| g.gain >= 0.0));
    }

    #[test]
    fn logitboost_loss_never_rises(seed in any::<u64>(), n in 2usize..=25, n_vars in 1usize..=5, k in 2usize..=5, iterations in 1usize..=20) {
        let table = small_table(seed, n, n_vars, k);
        let spec = LearnerSpec::Ladtree(LadTreeParams { iterations, ..LadTreeParams::default() });
        let model = spec.train(&table, "O1").unwrap();
        let trace = &model.meta.training_loss;
        prop_assert_eq!(trace.len(), model.gain_log.len() + 1);
        for w in trace.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-9, "{} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn predictions_are_positive_distributions(seed in any::<u64>(), n in 2usize..=15, n_vars in 1usize..=4, k in 2usize..=5) {
        let table = small_table(seed, n, n_vars, k);
        let probe = small_table(seed.wrapping_add(1), 6, n_vars, k);
        for kind in KINDS {
            let model = LearnerSpec::<f64>::default_for(kind).train(&table, "O1").unwrap();
            for r in 0..probe.n_runs() {
                let p = model.predict_row(&probe.row(r)).unwrap();
                prop_assert_eq!(p.len(), k);
                prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
                prop_assert!(p.iter().all(|&x| x > 0.0), "{}: {:?}", kind, p);
            }
        }
    }

    #[test]
    fn training_is_bit_identical_and_survives_json(seed in any::<u64>(), n in 2usize..=15, n_vars in 1usize..=4, k in 2usize..=4) {
        let table = small_table(seed, n, n_vars, k);
        for kind in KINDS {
            let spec = LearnerSpec::<f64>::default_for(kind);
            let a = spec.train(&table, "O1").unwrap();
            let b = spec.train(&table, "O1").unwrap();
            prop_assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
            prop_assert_eq!(TreeModel::from_json(&a.to_json().unwrap()).unwrap(), a);
        }
    }

    #[test]
    fn increasing_maps_keep_the_structure(seed in any::<u64>(), n in 2usize..=14, n_vars in 1usize..=4, k in 2usize..=3, which in 0usize..4, map in 0usize..3) {
        let table = small_table(seed, n, n_vars, k);
        let name = format!("v{}", which % n_vars + 1);
        let f = |x: f64| match map {
            0 => 3.0 * x - 7.0,
            1 => (x / 5.0).exp(),
            _ => x.powi(3) + x,
        };
        let moved = table.map_variable(&name, f).unwrap();
        for kind in KINDS {
            let spec = LearnerSpec::<f64>::default_for(kind);
            let a = spec.train(&table, "O1").unwrap();
            let b = spec.train(&moved, "O1").unwrap();
            prop_assert_eq!(a.nodes.len(), b.nodes.len());
            for (x, y) in a.nodes.iter().zip(&b.nodes) {
                prop_assert_eq!(x.test().map(|t| &t.variable), y.test().map(|t| &t.variable));
            }
            let (ra, rb) = (rank_variables(&a), rank_variables(&b));
            prop_assert_eq!(ra.variables(), rb.variables());
        }
    }

    #[test]
    fn squared_error_dominates_absolute(seed in any::<u64>(), k in 2usize..=10) {
        let mut rng = common::rng(seed);
        let raw: Vec<f64> = (0..k).map(|_| rng.gen_range(1e-6..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let p: Vec<f64> = raw.iter().map(|x| x / total).collect();
        let c = rng.gen_range(0..k);
        let (abs_mean, sq_mean) = instance_error(&p, c).unwrap();
        prop_assert!(sq_mean >= abs_mean * abs_mean / k as f64);
        prop_assert!(abs_mean <= 2.0 * (k as f64 - 1.0) / k as f64 + 1e-12);
        prop_assert!(abs_mean >= 0.0 && sq_mean >= 0.0);
    }

    #[test]
    fn evaluation_invariants(seed in any::<u64>(), n in 3usize..=10, n_vars in 1usize..=3, k in 2usize..=4) {
        let table = small_table(seed, n, n_vars, k);
        for kind in KINDS {
            let spec = LearnerSpec::<f64>::default_for(kind);
            for protocol in [Protocol::Training, Protocol::LeaveOneOut] {
                let r = evaluate(&spec, &table, "O1", protocol).unwrap();
                prop_assert!(r.mae >= 0.0 && r.rmse >= 0.0);
                prop_assert!(r.mae <= 2.0 * (k as f64 - 1.0) / k as f64);
                prop_assert_eq!(r.confusion.iter().flatten().sum::<usize>(), n);
            }
            let a = evaluate_loo(&spec, &table, "O1").unwrap();
            let b = evaluate_loo(&spec, &table, "O1").unwrap();
            prop_assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        }
    }

    #[test]
    fn comparison_is_a_total_order(seed in any::<u64>(), n in 3usize..=10, n_vars in 1usize..=3, k in 2usize..=3, shuffle in any::<u64>()) {
        let table = small_table(seed, n, n_vars, k);
        let mut specs: Vec<LearnerSpec<f64>> = KINDS.iter().map(|&kind| LearnerSpec::default_for(kind)).collect();
        specs.push(LearnerSpec::Ladtree(LadTreeParams { iterations: 0, ..LadTreeParams::default() }));
        let ranked = compare_learners(&table, "O1", &specs, Protocol::Training).unwrap();
        specs.shuffle(&mut common::rng(shuffle));
        let reshuffled = compare_learners(&table, "O1", &specs, Protocol::Training).unwrap();
        prop_assert_eq!(ranked.iter().map(|e| e.rank).collect::<Vec<_>>(), (1..=5).collect::<Vec<_>>());
        prop_assert_eq!(ranked.iter().filter(|e| e.winner).count(), 1);
        prop_assert!(ranked.last().unwrap().error.is_some());
        let scored: Vec<_> = ranked.iter().filter_map(|e| e.result.as_ref().map(|r| (r.rmse, r.mae, e.kind.name()))).collect();
        for w in scored.windows(2) {
            prop_assert!(w[0] < w[1], "{:?} !< {:?}", w[0], w[1]);
        }
        let order = |v: &[varsieve::evaluation::ComparisonEntry<f64>]| v.iter().map(|e| e.spec.clone()).collect::<Vec<_>>();
        prop_assert_eq!(order(&ranked), order(&reshuffled));
    }

    #[test]
    fn screening_invariants(seed in any::<u64>(), n in 4usize..=14, n_vars in 1usize..=5, k in 2usize..=3) {
        let table = small_table(seed, n, n_vars, k);
        let with_const = table.with_variable(Variable { name: "flat".into(), values: vec![-1.5; n] }).unwrap();
        let twin_of = seed as usize % n_vars;
        let with_twin = table
            .with_variable(Variable { name: "twin".into(), values: table.variables()[twin_of].values.clone() })
            .unwrap();
        for kind in KINDS {
            let spec = LearnerSpec::<f64>::default_for(kind);
            let model = spec.train(&table, "O1").unwrap();
            let ranking = rank_variables(&model);
            prop_assert!(ranking.entries.iter().all(|e| e.score >= 0.0));
            let mut used = model.referenced_variables();
            used.sort_unstable();
            let mut listed: Vec<usize> = ranking.entries.iter().map(|e| e.variable_index).collect();
            listed.sort_unstable();
            prop_assert_eq!(used, listed);

            prop_assert_eq!(&rank_variables(&spec.train(&with_const, "O1").unwrap()), &ranking);
            let twin_ranking = rank_variables(&spec.train(&with_twin, "O1").unwrap());
            let originals: Vec<&str> = twin_ranking.variables().into_iter().filter(|v| *v != "twin").collect();
            prop_assert_eq!(originals, ranking.variables());

            if !ranking.is_empty() {
                let once = reduce_dataset(&table, &[&ranking]).unwrap();
                prop_assert_eq!(&reduce_dataset(&once, &[&ranking]).unwrap(), &once);
                let report = ObjectiveReport {
                    name: "O1".into(),
                    learner: kind,
                    mae: 0.0,
                    rmse: 0.0,
                    effective_variables: ranking.variables().iter().map(|s| s.to_string()).collect(),
                    threshold_met: true,
                };
                let report = build_report(&table, vec![report], std::time::Duration::ZERO).unwrap();
                prop_assert!((0.0..=100.0).contains(&report.reduction_percent));
                prop_assert_eq!(report.union.len(), once.variables().len());
            }
        }
    }

    #[test]
    fn discretization_preserves_order(values in prop::collection::vec(-100.0f64..100.0, 2..30), k in 2usize..=5, cuts in prop::collection::btree_set(-90i32..90, 1..5)) {
        let table = RunTable::new(
            vec![Variable { name: "x".into(), values: vec![0.0; values.len()] }],
            vec![Objective::continuous("y", values.clone())],
        ).unwrap();
        let specs = [
            DiscretizationSpec::EqualWidth { k, labels: None },
            DiscretizationSpec::EqualFrequency { k, labels: None },
            DiscretizationSpec::ExplicitThresholds { thresholds: cuts.iter().map(|&c| c as f64).collect(), labels: None },
        ];
        for spec in specs {
            let Ok(out) = discretize_objective(&table, "y", &spec) else { continue };
            let ObjectiveValues::Categorical { codes, .. } = &out.objective("y").unwrap().values else {
                panic!("discretized objective is categorical");
            };
            for i in 0..values.len() {
                for j in 0..values.len() {
                    if values[i] < values[j] {
                        prop_assert!(codes[i] <= codes[j], "{:?}", spec);
                    }
                }
            }
        }
    }

    #[test]
    fn equal_frequency_with_k_equal_n_is_a_bijection(values in prop::collection::btree_set(-1000i32..1000, 2..20)) {
        let values: Vec<f64> = values.into_iter().rev().map(|v| v as f64 / 7.0).collect();
        let n = values.len();
        let table = RunTable::new(
            vec![Variable { name: "x".into(), values: vec![1.0; n] }],
            vec![Objective::continuous("y", values)],
        ).unwrap();
        let out = discretize_objective(&table, "y", &DiscretizationSpec::EqualFrequency { k: n, labels: None }).unwrap();
        let (_, codes) = out.class_codes("y").unwrap();
        let mut seen = codes.to_vec();
        seen.sort_unstable();
        prop_assert_eq!(seen, (0..n).collect::<Vec<_>>());
    }

    #[test]
    fn csv_round_trip_is_identity(seed in any::<u64>(), n in 2usize..=12, n_vars in 1usize..=5, k in 2usize..=4) {
        let table = small_table(seed, n.max(k), n_vars, k);
        let (_, codes) = table.class_codes("O1").unwrap();
        // every class must occur for the alphabet to survive a CSV trip
        prop_assume!((0..k).all(|c| codes.contains(&c)));
        let text = to_csv_string(&table).unwrap();
        let loaded: RunTable<f64> = parse_csv(text.as_bytes(), &["O1".to_string()]).unwrap();
        prop_assert_eq!(&loaded, &table);
        prop_assert_eq!(to_csv_string(&loaded).unwrap(), text);
    }

    #[test]
    fn generation_is_reproducible(seed in any::<u64>(), n_vars in 2usize..=10, family in 0usize..3, noise in 0.0f64..0.45) {
        let family = [Family::Linear, Family::Xor, Family::Radial][family];
        let k = if family == Family::Xor { 2 } else { 3 };
        let spec = PlantedSpec { n_vars, effective: vec![1, n_vars], family, noise_rate: noise, k, seed };
        let a = generate::<f64>(&spec, 30).unwrap();
        let b = generate::<f64>(&spec, 30).unwrap();
        prop_assert_eq!(to_csv_string(&a.table).unwrap(), to_csv_string(&b.table).unwrap());
        prop_assert_eq!(a.flipped.len(), (noise * 30.0).round() as usize);
        prop_assert!(a.table.variables().iter().flat_map(|v| &v.values).all(|&x| (0.0..1.0).contains(&x)));
    }
}

#[test]
fn uniform_predictor_closed_forms() {
    for k in 2..=10usize {
        let p = vec![1.0 / k as f64; k];
        let kf = k as f64;
        for c in 0..k {
            let (a, s) = instance_error(&p, c).unwrap();
            assert!((a - 2.0 * (kf - 1.0) / (kf * kf)).abs() <= 1e-12, "k={k}");
            assert!((s.sqrt() - ((kf - 1.0) / (kf * kf)).sqrt()).abs() <= 1e-12, "k={k}");
        }
    }
}

fn mean_recovery(noise_rate: f64, seeds: u64) -> f64 {
    let total: f64 = (0..seeds)
        .map(|seed| {
            let spec = PlantedSpec {
                n_vars: 20,
                effective: vec![3, 8, 12, 17],
                family: Family::Linear,
                noise_rate,
                k: 2,
                seed,
            };
            let planted = generate::<f64>(&spec, 100).unwrap();
            let model = LearnerSpec::default_for(LearnerKind::Ladtree)
                .train(&planted.table, "O1")
                .unwrap();
            recovery_score(&rank_variables(&model), &planted.truth).unwrap()
        })
        .sum();
    total / seeds as f64
}

#[test]
fn recovery_degrades_with_noise() {
    let means: Vec<f64> = [0.0, 0.1, 0.2].iter().map(|&r| mean_recovery(r, 30)).collect();
    let inversions: Vec<f64> = means.windows(2).map(|w| w[1] - w[0]).filter(|&d| d > 0.0).collect();
    assert!(
        inversions.len() <= 1 && inversions.iter().all(|&d| d <= 0.02),
        "mean recovery by noise level: {means:?}"
    );
}

#[test]
fn irrelevant_variables_are_screened_out() {
    // 4 effective variables out of 42 with 5% label noise; 200 runs is 50 per effective variable
    let need = (0.85f64 * 4.0).ceil();
    let hits = (0..50u64)
        .filter(|&seed| {
            let spec = PlantedSpec {
                n_vars: 42,
                effective: vec![2, 9, 13, 19],
                family: Family::Linear,
                noise_rate: 0.05,
                k: 2,
                seed,
            };
            let planted = generate::<f64>(&spec, 200).unwrap();
            let model = LearnerSpec::default_for(LearnerKind::Ladtree)
                .train(&planted.table, "O1")
                .unwrap();
            recovery_score(&rank_variables(&model), &planted.truth).unwrap() * 4.0 >= need
        })
        .count();
    assert!(hits >= 45, "{hits}/50 seeds recovered at least {need} of 4");
}
