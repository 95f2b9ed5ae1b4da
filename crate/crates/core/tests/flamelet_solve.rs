use fgm_core::flamelet::*;
use fgm_core::library::REFERENCE_CHIS;
use fgm_core::mech::{bundled_methane, parse_mechanism, Mechanism, BUNDLED_METHANE};
use std::f64::consts::PI;

fn setup() -> (Mechanism, BoundaryConditions, f64) {
    let m = bundled_methane();
    let bc = BoundaryConditions::methane_air(&m).unwrap();
    let z_st = stoichiometric_mixture_fraction(&m, &bc).unwrap();
    (m, bc, z_st)
}

fn solve(
    m: &Mechanism,
    bc: &BoundaryConditions,
    grid: &Grid,
    chi: f64,
    z_st: f64,
) -> FlameletSolution {
    let profile = ChiProfile::new(chi, z_st, ChiShape::Erfc).unwrap();
    let guess = initial_guess(m, bc, grid, GuessMode::BurkeSchumann).unwrap();
    solve_steady(m, &profile, bc, grid, &guess, &SolverOptions::default()).unwrap()
}

fn frozen_mechanism() -> Mechanism {
    let head = BUNDLED_METHANE.split("REACTIONS").next().unwrap();
    parse_mechanism(&format!("{head}REACTIONS\nEND\n")).unwrap()
}

fn check_invariants(s: &FlameletSolution, bc: &BoundaryConditions) {
    let n = s.grid.len();
    assert_eq!(s.temperature[0], bc.t_ox);
    assert_eq!(s.temperature[n - 1], bc.t_fuel);
    assert_eq!(s.mass_fractions[0], bc.y_ox);
    assert_eq!(s.mass_fractions[n - 1], bc.y_fuel);
    for y in &s.mass_fractions {
        assert!((y.iter().sum::<f64>() - 1.0).abs() <= 1e-8);
        assert!(y.iter().all(|&v| v >= 0.0));
    }
}

/// Relative max-norm difference of a coarse profile against a fine one
/// interpolated linearly onto the coarse nodes.
fn profile_difference(coarse: &FlameletSolution, fine: &FlameletSolution) -> f64 {
    let zf = fine.grid.points();
    let mut err: f64 = 0.0;
    for (i, &z) in coarse.grid.points().iter().enumerate() {
        let j = zf.partition_point(|&v| v < z).clamp(1, zf.len() - 1);
        let w = (z - zf[j - 1]) / (zf[j] - zf[j - 1]);
        let t = fine.temperature[j - 1] + w * (fine.temperature[j] - fine.temperature[j - 1]);
        err = err.max((coarse.temperature[i] - t).abs());
    }
    err / fine.max_temperature()
}

#[test]
fn manufactured_temperature_is_second_order() {
    let m = frozen_mechanism();
    let mut bc = BoundaryConditions::methane_air(&bundled_methane()).unwrap();
    bc.y_fuel = bc.y_ox.clone();
    bc.t_fuel = 300.0;
    let chi = 3.0;
    let t_exact = |z: f64| 300.0 + 1000.0 * (PI * z).sin();
    let max_error = |n: usize| -> f64 {
        let grid = Grid::uniform(n).unwrap();
        let profile = ChiProfile::new(chi, 0.5, ChiShape::Constant).unwrap();
        let p = FlameletProblem::new(&m, &profile, &bc, &grid).unwrap();
        let state = FlameletState {
            temperature: grid.points().iter().map(|&z| t_exact(z)).collect(),
            mass_fractions: vec![bc.y_ox.clone(); n],
        };
        let f = p.residual(&p.pack(&state)).unwrap();
        let nb = p.block_size();
        let mut err: f64 = 0.0;
        for j in 0..p.n_interior() {
            let z = grid.points()[j + 1];
            let rho = m.density(bc.pressure, t_exact(z), &bc.y_ox);
            let exact = -rho * chi * 1000.0 * PI * PI * (PI * z).sin() / 2.0;
            err = err.max((f[j * nb] - exact).abs());
            // species stay uniform, so their residuals vanish identically
            assert!(f[j * nb + 1..(j + 1) * nb].iter().all(|&v| v.abs() < 1e-12));
        }
        err
    };
    let coarse = max_error(11);
    let fine = max_error(21);
    assert!(coarse / fine >= 3.5, "ratio {}", coarse / fine);
}

#[test]
fn linear_temperature_has_zero_residual_without_chemistry() {
    let m = frozen_mechanism();
    let bc = BoundaryConditions::methane_air(&bundled_methane()).unwrap();
    let grid = Grid::clustered(17, 0.3, 3.0).unwrap();
    let profile = ChiProfile::new(1.0, 0.3, ChiShape::Constant).unwrap();
    let guess = initial_guess(&m, &bc, &grid, GuessMode::Linear).unwrap();
    let p = FlameletProblem::new(&m, &profile, &bc, &grid).unwrap();
    let f = p.residual(&p.pack(&guess)).unwrap();
    assert!(f.iter().all(|v| v.abs() < 1e-9), "{f:?}");
}

#[test]
fn frozen_chemistry_relaxes_to_linear_profiles() {
    let m = frozen_mechanism();
    let bc = BoundaryConditions::methane_air(&bundled_methane()).unwrap();
    let grid = Grid::uniform(21).unwrap();
    let z_st = stoichiometric_mixture_fraction(&m, &bc).unwrap();
    let profile = ChiProfile::new(2.0, z_st, ChiShape::Constant).unwrap();
    let guess = initial_guess(&m, &bc, &grid, GuessMode::BurkeSchumann).unwrap();
    let opts = SolverOptions {
        residual_tol: 1e-12,
        ..SolverOptions::default()
    };
    let s = solve_steady(&m, &profile, &bc, &grid, &guess, &opts).unwrap();
    assert!(s.converged);
    check_invariants(&s, &bc);
    for (i, &z) in grid.points().iter().enumerate() {
        let d = (s.temperature[i] - (bc.t_ox + z * (bc.t_fuel - bc.t_ox))).abs();
        assert!(d < 1e-6, "node {i}: {d}");
        for k in 0..m.n_species() {
            let lin = bc.y_ox[k] + z * (bc.y_fuel[k] - bc.y_ox[k]);
            assert!((s.mass_fractions[i][k] - lin).abs() < 1e-8);
        }
    }
}

#[test]
fn low_strain_flame_peaks_near_stoichiometry() {
    let (m, bc, z_st) = setup();
    let grid = Grid::clustered(DEFAULT_GRID_POINTS, z_st, DEFAULT_CLUSTERING).unwrap();
    let s = solve(&m, &bc, &grid, 0.01, z_st);
    assert!(s.converged);
    check_invariants(&s, &bc);
    assert!(s.max_temperature() > 1500.0);
    let zp = s.z_at_max_temperature();
    assert!((0.05..=0.15).contains(&zp), "peak at {zp}");
}

#[test]
fn coarse_and_fine_grids_agree() {
    let (m, bc, z_st) = setup();
    let coarse = Grid::clustered(30, z_st, DEFAULT_CLUSTERING).unwrap();
    let fine = Grid::clustered(120, z_st, DEFAULT_CLUSTERING).unwrap();
    for chi in [0.01, 5.0] {
        let a = solve(&m, &bc, &coarse, chi, z_st);
        let b = solve(&m, &bc, &fine, chi, z_st);
        assert!(a.converged && b.converged);
        let d = profile_difference(&a, &b);
        assert!(d < 0.02, "chi {chi}: {d}");
    }
}

#[test]
fn peak_temperature_falls_with_strain() {
    let (m, bc, z_st) = setup();
    let grid = Grid::clustered(DEFAULT_GRID_POINTS, z_st, DEFAULT_CLUSTERING).unwrap();
    let peaks: Vec<f64> = REFERENCE_CHIS
        .iter()
        .map(|&chi| {
            let s = solve(&m, &bc, &grid, chi, z_st);
            assert!(s.converged, "chi {chi}");
            check_invariants(&s, &bc);
            s.max_temperature()
        })
        .collect();
    assert!(peaks.windows(2).all(|w| w[1] <= w[0] + 1.0), "{peaks:?}");
    assert!(peaks[6] > 1500.0, "{peaks:?}");
}

#[test]
fn strain_far_beyond_quenching_extinguishes() {
    let (m, bc, z_st) = setup();
    let grid = Grid::clustered(DEFAULT_GRID_POINTS, z_st, DEFAULT_CLUSTERING).unwrap();
    let s = solve(&m, &bc, &grid, 1000.0, z_st);
    assert!(s.converged);
    check_invariants(&s, &bc);
    assert!(s.max_temperature() < bc.t_fuel.max(bc.t_ox) + 50.0);
}

#[test]
fn quenching_lies_between_ignited_and_extinct_anchors() {
    let (m, bc, z_st) = setup();
    let grid = Grid::clustered(DEFAULT_GRID_POINTS, z_st, DEFAULT_CLUSTERING).unwrap();
    assert!(solve(&m, &bc, &grid, 40.0, z_st).max_temperature() > 1500.0);
    assert!(solve(&m, &bc, &grid, 50.0, z_st).max_temperature() < 400.0);
}

#[test]
fn solves_are_bit_reproducible() {
    let (m, bc, z_st) = setup();
    let grid = Grid::clustered(DEFAULT_GRID_POINTS, z_st, DEFAULT_CLUSTERING).unwrap();
    let a = solve(&m, &bc, &grid, 10.0, z_st);
    let b = solve(&m, &bc, &grid, 10.0, z_st);
    let bits = |s: &FlameletSolution| -> Vec<u64> {
        s.temperature
            .iter()
            .chain(s.mass_fractions.iter().flatten())
            .map(|v| v.to_bits())
            .collect()
    };
    assert_eq!(bits(&a), bits(&b));
    assert_eq!(a.steps, b.steps);
}

#[test]
fn residual_rejects_wrong_length() {
    let (m, bc, z_st) = setup();
    let grid = Grid::uniform(9).unwrap();
    let profile = ChiProfile::new(1.0, z_st, ChiShape::Erfc).unwrap();
    assert!(matches!(
        residual(&m, &profile, &bc, &grid, &[300.0; 3]),
        Err(FlameletError::InvalidInput(_))
    ));
}
