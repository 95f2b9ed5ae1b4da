#![allow(dead_code)]

use fgm_core::flamelet::{
    stoichiometric_mixture_fraction, BoundaryConditions, Grid, DEFAULT_CLUSTERING,
    DEFAULT_GRID_POINTS,
};
use fgm_core::library::{tabulate, Dataset, TabulateOptions, REFERENCE_CHIS};
use fgm_core::mech::bundled_methane;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::OnceLock;

/// The seven-flamelet reference table, flattened.
pub fn reference_dataset() -> &'static Dataset {
    static DS: OnceLock<Dataset> = OnceLock::new();
    DS.get_or_init(|| {
        let mech = bundled_methane();
        let bc = BoundaryConditions::methane_air(&mech).unwrap();
        let z_st = stoichiometric_mixture_fraction(&mech, &bc).unwrap();
        let grid = Grid::clustered(DEFAULT_GRID_POINTS, z_st, DEFAULT_CLUSTERING).unwrap();
        tabulate(
            &mech,
            &bc,
            &grid,
            &REFERENCE_CHIS,
            &TabulateOptions::default(),
        )
        .unwrap()
        .flatten()
    })
}

/// Smooth two-input, three-target toy table.
pub fn toy_dataset(n: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ds = Dataset::new(
        vec!["a".into(), "b".into()],
        vec!["u".into(), "v".into(), "w".into()],
    );
    for _ in 0..n {
        let (a, b): (f64, f64) = (rng.gen_range(0.0..1.0), rng.gen_range(0.0..30.0));
        ds.push(
            vec![a, b],
            vec![
                300.0 + 1500.0 * (-(a - 0.3).powi(2) * 8.0).exp(),
                a * b * 0.01,
                (3.0 * a).sin() + 0.1 * b,
            ],
        );
    }
    ds
}
