#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use varsieve::dataset::{default_labels, Objective, RunTable, Variable};

pub fn rng(seed: u64) -> Xoshiro256PlusPlus {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}

/// Values from a coarse grid (so ties and repeats occur) or continuous.
pub fn column(rng: &mut Xoshiro256PlusPlus, n: usize) -> Vec<f64> {
    if rng.gen_bool(0.5) {
        (0..n).map(|_| rng.gen_range(0..5) as f64).collect()
    } else {
        (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect()
    }
}

/// Random table with one categorical objective `O1` over `k` classes.
pub fn classified_table(rng: &mut Xoshiro256PlusPlus, n: usize, n_vars: usize, k: usize) -> RunTable<f64> {
    let variables = (0..n_vars)
        .map(|j| Variable {
            name: format!("v{}", j + 1),
            values: column(rng, n),
        })
        .collect();
    let codes = (0..n).map(|_| rng.gen_range(0..k)).collect();
    RunTable::new(variables, vec![Objective::categorical("O1", default_labels(k), codes)]).unwrap()
}

pub fn table_from(vars: Vec<Vec<f64>>, codes: Vec<usize>, k: usize) -> RunTable<f64> {
    RunTable::new(
        vars.into_iter()
            .enumerate()
            .map(|(j, values)| Variable {
                name: format!("v{}", j + 1),
                values,
            })
            .collect(),
        vec![Objective::categorical("O1", default_labels(k), codes)],
    )
    .unwrap()
}
