//! Flamelet libraries across scalar dissipation rates, their flattening into
//! regression datasets, table lookup, and the library-count study.

mod container;
mod dataset;

pub use container::{read_library, write_library, LIBRARY_MAGIC};
pub use dataset::{format_float, read_csv, write_csv, Dataset};

use crate::flamelet::{
    initial_guess, stoichiometric_mixture_fraction, BoundaryConditions, ChiProfile, ChiShape,
    FlameletError, FlameletSolution, Grid, GuessMode, SolverOptions,
};
use crate::mech::Mechanism;
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LibraryError {
    #[error("flamelet at chi = {chi} 1/s did not converge (residual {residual_norm:e})")]
    NotConverged { chi: f64, residual_norm: f64 },
    #[error("mechanism mismatch: {0}")]
    MechanismMismatch(String),
    #[error("{what} = {value} outside the library range [{min}, {max}]")]
    OutOfRange {
        what: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },
    #[error("pool of {pool} entries cannot supply a subset of {requested}")]
    InsufficientPool { pool: usize, requested: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("parse error at line {row}, column {col}: {msg}")]
    Parse { row: usize, col: usize, msg: String },
    #[error("corrupt library file: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Flamelet(#[from] FlameletError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = LibraryError> = std::result::Result<T, E>;

/// Solutions at increasing `χ_st`, all on one grid for one mechanism.
#[derive(Debug, Clone, PartialEq)]
pub struct FlameletLibrary {
    pub mechanism_fingerprint: String,
    pub species: Vec<String>,
    pub bc: BoundaryConditions,
    pub grid: Grid,
    pub chi_shape: ChiShape,
    pub z_st: f64,
    pub entries: Vec<FlameletSolution>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TabulateOptions {
    pub solver: SolverOptions,
    pub chi_shape: ChiShape,
    /// keep unconverged entries instead of failing
    pub allow_unconverged: bool,
}

impl Default for TabulateOptions {
    fn default() -> Self {
        Self {
            solver: SolverOptions::default(),
            chi_shape: ChiShape::Erfc,
            allow_unconverged: false,
        }
    }
}

/// The seven dissipation rates (1/s) of the reference study.
pub const REFERENCE_CHIS: [f64; 7] = [0.01, 5.5, 10.0, 14.5, 20.5, 25.0, 29.5];

/// `n` log-spaced values in `[lo, hi]`, endpoints exact.
pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..n)
                .map(|i| match i {
                    0 => lo,
                    i if i == n - 1 => hi,
                    _ => (a + (b - a) * i as f64 / (n - 1) as f64).exp(),
                })
                .collect()
        }
    }
}

/// Solve one flamelet at `chi` from a Burke–Schumann start.
pub fn solve_at(
    mech: &Mechanism,
    bc: &BoundaryConditions,
    grid: &Grid,
    chi: f64,
    opts: &TabulateOptions,
) -> Result<FlameletSolution> {
    let z_st = stoichiometric_mixture_fraction(mech, bc)?;
    let profile = ChiProfile::new(chi, z_st, opts.chi_shape)?;
    let guess = initial_guess(mech, bc, grid, GuessMode::BurkeSchumann)?;
    Ok(crate::flamelet::solve_steady(
        mech,
        &profile,
        bc,
        grid,
        &guess,
        &opts.solver,
    )?)
}

fn check_chis(chis: &[f64]) -> Result<()> {
    if chis.is_empty() {
        return Err(LibraryError::InvalidInput("empty chi list".into()));
    }
    if chis.iter().any(|c| !(*c > 0.0 && c.is_finite())) {
        return Err(LibraryError::InvalidInput(
            "chi values must be positive".into(),
        ));
    }
    if chis.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(LibraryError::InvalidInput(
            "chi values must be strictly increasing".into(),
        ));
    }
    Ok(())
}

/// One steady solve per `χ`, run in parallel; every solve starts from the
/// same Burke–Schumann guess so entries are independent of each other.
pub fn tabulate(
    mech: &Mechanism,
    bc: &BoundaryConditions,
    grid: &Grid,
    chis: &[f64],
    opts: &TabulateOptions,
) -> Result<FlameletLibrary> {
    check_chis(chis)?;
    if bc.y_fuel.len() != mech.n_species() || bc.y_ox.len() != mech.n_species() {
        return Err(LibraryError::MechanismMismatch(format!(
            "boundary compositions have {} entries, mechanism has {} species",
            bc.y_fuel.len(),
            mech.n_species()
        )));
    }
    let z_st = stoichiometric_mixture_fraction(mech, bc)?;
    let solved: Vec<Result<FlameletSolution>> = chis
        .par_iter()
        .map(|&chi| solve_at(mech, bc, grid, chi, opts))
        .collect();
    let mut entries = Vec::with_capacity(chis.len());
    for (res, &chi) in solved.into_iter().zip(chis) {
        let sol = res?;
        if !sol.converged && !opts.allow_unconverged {
            return Err(LibraryError::NotConverged {
                chi,
                residual_norm: sol.residual_norm,
            });
        }
        entries.push(sol);
    }
    Ok(FlameletLibrary {
        mechanism_fingerprint: mech.fingerprint(),
        species: mech.species_names(),
        bc: bc.clone(),
        grid: grid.clone(),
        chi_shape: opts.chi_shape,
        z_st,
        entries,
    })
}

impl FlameletLibrary {
    pub fn chis(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.chi_st).collect()
    }

    pub fn check_mechanism(&self, mech: &Mechanism) -> Result<()> {
        if mech.fingerprint() != self.mechanism_fingerprint {
            return Err(LibraryError::MechanismMismatch(
                "library was built with a different mechanism".into(),
            ));
        }
        Ok(())
    }

    /// Target column names: `T` then species.
    pub fn target_names(&self) -> Vec<String> {
        std::iter::once("T".to_string())
            .chain(self.species.iter().cloned())
            .collect()
    }

    /// Rows ordered by ascending `χ`, then ascending `Z`.
    pub fn flatten(&self) -> Dataset {
        let mut ds = Dataset::new(vec!["Z".into(), "chi".into()], self.target_names());
        for e in &self.entries {
            for (i, &z) in e.grid.points().iter().enumerate() {
                let mut t = Vec::with_capacity(1 + self.species.len());
                t.push(e.temperature[i]);
                t.extend_from_slice(&e.mass_fractions[i]);
                ds.push(vec![z, e.chi_st], t);
            }
        }
        ds
    }

    /// Bilinear interpolation: linear in `Z` on the shared grid, linear in
    /// `χ` between the bracketing entries. Returns `(T, Y)`.
    pub fn lookup(&self, z: f64, chi: f64) -> Result<(f64, Vec<f64>)> {
        let chis = self.chis();
        let (lo, hi) = (chis[0], chis[chis.len() - 1]);
        if !(chi >= lo && chi <= hi) {
            return Err(LibraryError::OutOfRange {
                what: "chi",
                value: chi,
                min: lo,
                max: hi,
            });
        }
        if !(0.0..=1.0).contains(&z) {
            return Err(LibraryError::OutOfRange {
                what: "Z",
                value: z,
                min: 0.0,
                max: 1.0,
            });
        }
        let (j, wc) = bracket(&chis, chi);
        let zs = self.grid.points();
        let (i, wz) = bracket(zs, z);
        let node = |e: &FlameletSolution, i: usize| -> Vec<f64> {
            std::iter::once(e.temperature[i])
                .chain(e.mass_fractions[i].iter().copied())
                .collect()
        };
        let along_z = |e: &FlameletSolution| -> Vec<f64> {
            let a = node(e, i);
            if wz == 0.0 {
                return a;
            }
            let b = node(e, i + 1);
            a.iter().zip(&b).map(|(x, y)| x + wz * (y - x)).collect()
        };
        let a = along_z(&self.entries[j]);
        let v = if wc == 0.0 {
            a
        } else {
            let b = along_z(&self.entries[j + 1]);
            a.iter().zip(&b).map(|(x, y)| x + wc * (y - x)).collect()
        };
        Ok((v[0], v[1..].to_vec()))
    }

    /// Library made of the entries at the given indices (in index order).
    pub fn subset(&self, indices: &[usize]) -> FlameletLibrary {
        FlameletLibrary {
            entries: indices.iter().map(|&i| self.entries[i].clone()).collect(),
            ..self.clone_meta()
        }
    }

    fn clone_meta(&self) -> FlameletLibrary {
        FlameletLibrary {
            mechanism_fingerprint: self.mechanism_fingerprint.clone(),
            species: self.species.clone(),
            bc: self.bc.clone(),
            grid: self.grid.clone(),
            chi_shape: self.chi_shape,
            z_st: self.z_st,
            entries: Vec::new(),
        }
    }
}

/// Segment index `i` and weight `w` with `x = (1−w) p[i] + w p[i+1]`;
/// `w == 0` exactly on a node.
fn bracket(points: &[f64], x: f64) -> (usize, f64) {
    let n = points.len();
    if let Ok(i) = points.binary_search_by(|p| p.total_cmp(&x)) {
        return (i, 0.0);
    }
    let i = points.partition_point(|&p| p < x).clamp(1, n - 1) - 1;
    (i, (x - points[i]) / (points[i + 1] - points[i]))
}

/// Even-index selection of `k` out of `n` sorted entries (endpoints kept).
pub fn even_indices(n: usize, k: usize) -> Vec<usize> {
    match k {
        0 => Vec::new(),
        1 => vec![0],
        _ => (0..k)
            .map(|i| ((i * (n - 1)) as f64 / (k - 1) as f64).round() as usize)
            .collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorSummary {
    pub max: f64,
    pub min: f64,
    pub mean: f64,
}

impl ErrorSummary {
    fn from_values(v: &[f64]) -> ErrorSummary {
        let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = v.iter().copied().fold(f64::INFINITY, f64::min);
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        ErrorSummary { max, min, mean }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubsetRow {
    pub count: usize,
    pub selected_chis: Vec<f64>,
    pub eval_chis: Vec<f64>,
    pub temperature: ErrorSummary,
    /// `None` when the mechanism has no CO2
    pub co2: Option<ErrorSummary>,
}

/// Percent error with a floor on the reference magnitude.
pub fn percent_error(pred: f64, reference: f64) -> f64 {
    100.0 * (pred - reference).abs() / reference.abs().max(1e-10)
}

/// For each `k`, look up a `k`-entry subset of `pool` at the midpoints
/// between its selected `χ` values and compare against full solves there.
/// Errors are taken over interior grid nodes (boundary values are pinned).
pub fn subset_study(
    mech: &Mechanism,
    pool: &FlameletLibrary,
    counts: &[usize],
    opts: &TabulateOptions,
) -> Result<Vec<SubsetRow>> {
    pool.check_mechanism(mech)?;
    let n = pool.entries.len();
    for &k in counts {
        if k < 2 || k > n {
            return Err(LibraryError::InsufficientPool {
                pool: n,
                requested: k,
            });
        }
    }
    let pool_chis = pool.chis();
    let plans: Vec<(usize, Vec<f64>, Vec<f64>)> = counts
        .iter()
        .map(|&k| {
            let sel: Vec<f64> = even_indices(n, k).iter().map(|&i| pool_chis[i]).collect();
            let eval: Vec<f64> = sel.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
            (k, sel, eval)
        })
        .collect();
    let mut all_eval: Vec<f64> = plans.iter().flat_map(|p| p.2.iter().copied()).collect();
    all_eval.sort_by(f64::total_cmp);
    all_eval.dedup();
    let refs: Vec<FlameletSolution> = all_eval
        .par_iter()
        .map(|&chi| solve_at(mech, &pool.bc, &pool.grid, chi, opts))
        .collect::<Result<Vec<_>>>()?;
    for (r, &chi) in refs.iter().zip(&all_eval) {
        if !r.converged && !opts.allow_unconverged {
            return Err(LibraryError::NotConverged {
                chi,
                residual_norm: r.residual_norm,
            });
        }
    }
    let co2 = pool.species.iter().position(|s| s == "CO2");
    let zs = pool.grid.points();
    let mut rows = Vec::with_capacity(plans.len());
    for (k, sel, eval) in plans {
        let indices = even_indices(n, k);
        let lib = pool.subset(&indices);
        let (mut et, mut ec) = (Vec::new(), Vec::new());
        for &chi in &eval {
            let r = &refs[all_eval
                .binary_search_by(|c| c.total_cmp(&chi))
                .expect("solved")];
            for i in 1..zs.len() - 1 {
                let (t, y) = lib.lookup(zs[i], chi)?;
                et.push(percent_error(t, r.temperature[i]));
                if let Some(k) = co2 {
                    ec.push(percent_error(y[k], r.mass_fractions[i][k]));
                }
            }
        }
        rows.push(SubsetRow {
            count: k,
            selected_chis: sel,
            eval_chis: eval,
            temperature: ErrorSummary::from_values(&et),
            co2: co2.map(|_| ErrorSummary::from_values(&ec)),
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn even_selection_keeps_endpoints() {
        assert_eq!(even_indices(27, 3), vec![0, 13, 26]);
        assert_eq!(even_indices(5, 5), vec![0, 1, 2, 3, 4]);
        let s = even_indices(27, 22);
        assert_eq!(s.len(), 22);
        assert!(s.windows(2).all(|w| w[1] > w[0]));
        assert_eq!((s[0], s[21]), (0, 26));
    }

    #[test]
    fn log_spacing() {
        let v = log_spaced(0.01, 29.5, 27);
        assert_eq!(v.len(), 27);
        assert_eq!((v[0], v[26]), (0.01, 29.5));
        assert!(v.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn bracket_on_and_between_nodes() {
        let p = [0.0, 0.5, 1.0];
        assert_eq!(bracket(&p, 0.5), (1, 0.0));
        assert_eq!(bracket(&p, 1.0), (2, 0.0));
        assert_eq!(bracket(&p, 0.25), (0, 0.5));
        assert_eq!(bracket(&p, 0.75), (1, 0.5));
    }

    #[test]
    fn percent_error_floor() {
        assert_eq!(percent_error(1.0, 2.0), 50.0);
        assert_eq!(percent_error(1e-12, 0.0), 100.0 * 1e-12 / 1e-10);
    }
}
