//! Steady laminar flamelets in mixture-fraction space.
//!
//! The unknowns at every interior grid node are the temperature and the mass
//! fractions of all species except a balance species (N2 when present,
//! otherwise the last declared species), which is recovered as one minus the
//! sum of the others. Unity Lewis numbers, adiabatic, constant pressure.

mod linalg;
mod solver;

pub use solver::{residual, solve_steady, FlameletProblem, SolverOptions};

use crate::mech::{MechError, Mechanism, ONE_ATM};
use statrs::function::erf::erfc_inv;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlameletError {
    #[error("mixture fraction {0} outside [0, 1]")]
    Domain(f64),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(
        "flamelet did not converge: residual {residual_norm:e} after {steps} pseudo-time steps"
    )]
    NotConverged { residual_norm: f64, steps: usize },
    #[error("singular Jacobian block at node {node}")]
    SingularJacobian { node: usize },
    #[error(transparent)]
    Mech(#[from] MechError),
}

pub type Result<T, E = FlameletError> = std::result::Result<T, E>;

fn invalid(msg: impl Into<String>) -> FlameletError {
    FlameletError::InvalidInput(msg.into())
}

/// Point clustering around an interior mixture fraction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Clustering {
    pub center: f64,
    /// sinh stretching parameter; larger means tighter clustering
    pub strength: f64,
}

/// Default sinh stretching for production grids.
pub const DEFAULT_CLUSTERING: f64 = 4.0;
pub const DEFAULT_GRID_POINTS: usize = 30;

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    z: Vec<f64>,
    clustering: Option<Clustering>,
}

impl Grid {
    pub fn uniform(n: usize) -> Result<Grid> {
        if n < 5 {
            return Err(invalid(format!("grid needs at least 5 points, got {n}")));
        }
        let z = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        Ok(Grid {
            z,
            clustering: None,
        })
    }

    /// Two-sided sinh stretching (Vinokur) that concentrates points around
    /// `center`; the node nearest to `center` is moved onto it exactly.
    pub fn clustered(n: usize, center: f64, strength: f64) -> Result<Grid> {
        if !(center > 0.0 && center < 1.0) {
            return Err(invalid(format!(
                "cluster center {center} must lie in (0, 1)"
            )));
        }
        if !(strength > 0.0 && strength.is_finite()) {
            return Err(invalid(format!(
                "cluster strength {strength} must be positive"
            )));
        }
        let mut g = Grid::uniform(n)?;
        let b = strength;
        let a =
            0.5 / b * ((1.0 + (b.exp() - 1.0) * center) / (1.0 + ((-b).exp() - 1.0) * center)).ln();
        let denom = (b * a).sinh();
        for (i, z) in g.z.iter_mut().enumerate().take(n - 1).skip(1) {
            let s = i as f64 / (n - 1) as f64;
            *z = center * (1.0 + (b * (s - a)).sinh() / denom);
        }
        let nearest = (1..n - 1)
            .min_by(|&i, &j| (g.z[i] - center).abs().total_cmp(&(g.z[j] - center).abs()))
            .expect("interior nodes exist");
        g.z[nearest] = center;
        g.clustering = Some(Clustering { center, strength });
        Grid::check(&g.z)?;
        Ok(g)
    }

    pub fn from_points(z: Vec<f64>) -> Result<Grid> {
        Grid::from_parts(z, None)
    }

    /// Explicit points with the clustering descriptor they were built from.
    pub fn from_parts(z: Vec<f64>, clustering: Option<Clustering>) -> Result<Grid> {
        Grid::check(&z)?;
        Ok(Grid { z, clustering })
    }

    fn check(z: &[f64]) -> Result<()> {
        if z.len() < 5 {
            return Err(invalid(format!(
                "grid needs at least 5 points, got {}",
                z.len()
            )));
        }
        if z[0] != 0.0 || z[z.len() - 1] != 1.0 {
            return Err(invalid("grid must start at 0 and end at 1"));
        }
        if z.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("grid points must be strictly increasing"));
        }
        Ok(())
    }

    pub fn points(&self) -> &[f64] {
        &self.z
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    pub fn clustering(&self) -> Option<Clustering> {
        self.clustering
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChiShape {
    /// Counterflow closure `χ_st exp(2[(erfc⁻¹(2 Z_st))² − (erfc⁻¹(2 Z))²])`.
    Erfc,
    Constant,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiProfile {
    pub chi_st: f64,
    pub z_st: f64,
    pub shape: ChiShape,
}

impl ChiProfile {
    pub fn new(chi_st: f64, z_st: f64, shape: ChiShape) -> Result<ChiProfile> {
        if !(chi_st > 0.0 && chi_st.is_finite()) {
            return Err(invalid(format!("chi_st must be positive, got {chi_st}")));
        }
        if !(z_st > 0.0 && z_st < 1.0) {
            return Err(invalid(format!("z_st must lie in (0, 1), got {z_st}")));
        }
        Ok(ChiProfile {
            chi_st,
            z_st,
            shape,
        })
    }

    pub fn chi(&self, z: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&z) {
            return Err(FlameletError::Domain(z));
        }
        Ok(match self.shape {
            ChiShape::Constant => self.chi_st,
            ChiShape::Erfc => {
                if z == 0.0 || z == 1.0 {
                    0.0
                } else {
                    let a = erfc_inv(2.0 * self.z_st);
                    let b = erfc_inv(2.0 * z);
                    self.chi_st * (2.0 * (a * a - b * b)).exp()
                }
            }
        })
    }
}

/// `χ(z)` for a profile.
pub fn chi_of_z(profile: &ChiProfile, z: f64) -> Result<f64> {
    profile.chi(z)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryConditions {
    /// Z = 1
    pub t_fuel: f64,
    /// Z = 0
    pub t_ox: f64,
    pub y_fuel: Vec<f64>,
    pub y_ox: Vec<f64>,
    /// Pa
    pub pressure: f64,
}

impl BoundaryConditions {
    /// Pure methane at 300.15 K against air (21/79 O2/N2 by volume) at
    /// 300 K, 1 atm.
    pub fn methane_air(mech: &Mechanism) -> Result<BoundaryConditions> {
        let idx = |n: &str| {
            mech.species_index(n)
                .ok_or_else(|| invalid(format!("mechanism has no {n}")))
        };
        let (ch4, o2, n2) = (idx("CH4")?, idx("O2")?, idx("N2")?);
        let mut y_fuel = vec![0.0; mech.n_species()];
        y_fuel[ch4] = 1.0;
        let w = mech.molar_masses();
        let (m_o2, m_n2) = (0.21 * w[o2], 0.79 * w[n2]);
        let mut y_ox = vec![0.0; mech.n_species()];
        y_ox[o2] = m_o2 / (m_o2 + m_n2);
        y_ox[n2] = 1.0 - y_ox[o2];
        Ok(BoundaryConditions {
            t_fuel: 300.15,
            t_ox: 300.0,
            y_fuel,
            y_ox,
            pressure: ONE_ATM,
        })
    }

    pub fn validate(&self, mech: &Mechanism) -> Result<()> {
        let n = mech.n_species();
        for (label, y) in [("fuel", &self.y_fuel), ("oxidizer", &self.y_ox)] {
            if y.len() != n {
                return Err(invalid(format!(
                    "{label} composition has {} entries, mechanism has {n} species",
                    y.len()
                )));
            }
            if y.iter().any(|v| !(*v >= 0.0)) {
                return Err(invalid(format!("{label} composition has negative entries")));
            }
            let s: f64 = y.iter().sum();
            if (s - 1.0).abs() > 1e-9 {
                return Err(invalid(format!("{label} mass fractions sum to {s}")));
            }
        }
        for t in [self.t_fuel, self.t_ox] {
            if !(t > 0.0) {
                return Err(invalid(format!(
                    "boundary temperature {t} must be positive"
                )));
            }
            mech.check_temperature(t)?;
        }
        if !(self.pressure > 0.0) {
            return Err(invalid("pressure must be positive"));
        }
        Ok(())
    }
}

/// Stoichiometric mixture fraction from a Bilger-type coupling function
/// `β = 2 Z_C/W_C + Z_H/(2 W_H) − Z_O/W_O`, which vanishes at stoichiometry.
pub fn stoichiometric_mixture_fraction(mech: &Mechanism, bc: &BoundaryConditions) -> Result<f64> {
    let weights: Vec<(usize, f64)> = [("C", 2.0), ("H", 0.5), ("O", -1.0)]
        .iter()
        .filter_map(|&(s, f)| mech.element_index(s).map(|e| (e, f)))
        .collect();
    let beta = |y: &[f64]| -> f64 {
        let mut b = 0.0;
        for (k, yk) in y.iter().enumerate() {
            let moles = yk / mech.species[k].molar_mass;
            for &(e, f) in &weights {
                b += f * moles * f64::from(mech.composition[k][e]);
            }
        }
        b
    };
    let (bf, bo) = (beta(&bc.y_fuel), beta(&bc.y_ox));
    let z = -bo / (bf - bo);
    if !(z > 0.0 && z < 1.0) {
        return Err(invalid(format!(
            "boundary compositions do not bracket a stoichiometric point (Z_st = {z})"
        )));
    }
    Ok(z)
}

/// Index of the species closed by `1 − Σ others`.
pub fn balance_species(mech: &Mechanism) -> usize {
    mech.species_index("N2").unwrap_or(mech.n_species() - 1)
}

/// Full nodal profiles, boundaries included.
#[derive(Debug, Clone, PartialEq)]
pub struct FlameletState {
    pub temperature: Vec<f64>,
    /// `mass_fractions[node][species]`
    pub mass_fractions: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GuessMode {
    BurkeSchumann,
    Linear,
}

pub fn initial_guess(
    mech: &Mechanism,
    bc: &BoundaryConditions,
    grid: &Grid,
    mode: GuessMode,
) -> Result<FlameletState> {
    bc.validate(mech)?;
    let linear = linear_profiles(bc, grid);
    if mode == GuessMode::Linear {
        return Ok(linear);
    }
    let z_st = stoichiometric_mixture_fraction(mech, bc)?;
    let Some((t_ad, y_st)) = complete_combustion(mech, bc, z_st) else {
        return Ok(linear);
    };
    let n = grid.len();
    let mut temperature = Vec::with_capacity(n);
    let mut mass_fractions = Vec::with_capacity(n);
    for &z in grid.points() {
        let (w, (ta, ya), (tb, yb)) = if z <= z_st {
            (z / z_st, (bc.t_ox, &bc.y_ox), (t_ad, &y_st))
        } else {
            (
                (z - z_st) / (1.0 - z_st),
                (t_ad, &y_st),
                (bc.t_fuel, &bc.y_fuel),
            )
        };
        temperature.push(ta + w * (tb - ta));
        mass_fractions.push(
            ya.iter()
                .zip(yb.iter())
                .map(|(a, b)| a + w * (b - a))
                .collect(),
        );
    }
    // boundary values exactly
    temperature[0] = bc.t_ox;
    temperature[n - 1] = bc.t_fuel;
    mass_fractions[0] = bc.y_ox.clone();
    mass_fractions[n - 1] = bc.y_fuel.clone();
    let b = balance_species(mech);
    for y in mass_fractions.iter_mut().take(n - 1).skip(1) {
        close_balance(y, b);
    }
    Ok(FlameletState {
        temperature,
        mass_fractions,
    })
}

fn close_balance(y: &mut [f64], b: usize) {
    let others: f64 = y
        .iter()
        .enumerate()
        .filter(|(k, _)| *k != b)
        .map(|(_, v)| v)
        .sum();
    y[b] = 1.0 - others;
}

fn linear_profiles(bc: &BoundaryConditions, grid: &Grid) -> FlameletState {
    let temperature = grid
        .points()
        .iter()
        .map(|z| bc.t_ox + z * (bc.t_fuel - bc.t_ox))
        .collect();
    let mass_fractions = grid
        .points()
        .iter()
        .map(|z| {
            bc.y_ox
                .iter()
                .zip(&bc.y_fuel)
                .map(|(o, f)| o + z * (f - o))
                .collect()
        })
        .collect();
    FlameletState {
        temperature,
        mass_fractions,
    }
}

/// Complete combustion products of the mixture at `z` (all C to CO2, all H
/// to H2O, species without C/H/O carried through) and their adiabatic
/// temperature. `None` if the mechanism lacks CO2 or H2O where needed.
pub fn complete_combustion(
    mech: &Mechanism,
    bc: &BoundaryConditions,
    z: f64,
) -> Option<(f64, Vec<f64>)> {
    let ns = mech.n_species();
    let y_mix: Vec<f64> = (0..ns)
        .map(|k| z * bc.y_fuel[k] + (1.0 - z) * bc.y_ox[k])
        .collect();
    let h_mix = z * mech.enthalpy_mixture(bc.t_fuel, &bc.y_fuel).ok()?
        + (1.0 - z) * mech.enthalpy_mixture(bc.t_ox, &bc.y_ox).ok()?;
    let elem = |s: &str| mech.element_index(s);
    let reactive: Vec<usize> = ["C", "H", "O"].iter().filter_map(|s| elem(s)).collect();
    let moles = |e: Option<usize>| -> f64 {
        e.map_or(0.0, |e| {
            (0..ns)
                .map(|k| y_mix[k] / mech.species[k].molar_mass * f64::from(mech.composition[k][e]))
                .sum()
        })
    };
    let (n_c, n_h) = (moles(elem("C")), moles(elem("H")));
    let mut y = vec![0.0; ns];
    for k in 0..ns {
        if reactive.iter().all(|&e| mech.composition[k][e] == 0) {
            y[k] = y_mix[k];
        }
    }
    if n_c > 0.0 {
        let k = mech.species_index("CO2")?;
        y[k] += n_c * mech.species[k].molar_mass;
    }
    if n_h > 0.0 {
        let k = mech.species_index("H2O")?;
        y[k] += 0.5 * n_h * mech.species[k].molar_mass;
    }
    let s: f64 = y.iter().sum();
    y.iter_mut().for_each(|v| *v /= s);
    let (t_min, t_max) = mech.temperature_range();
    let mut t = 2000.0f64.clamp(t_min, t_max);
    for _ in 0..50 {
        let f = mech.enthalpy_mixture(t, &y).ok()? - h_mix;
        let dt = -f / mech.cp_mixture(t, &y).ok()?;
        t = (t + dt).clamp(t_min, t_max);
        if dt.abs() < 1e-10 * t {
            break;
        }
    }
    Some((t, y))
}

/// Converged (or best) flamelet on one grid at one `χ_st`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlameletSolution {
    pub grid: Grid,
    pub chi_st: f64,
    pub temperature: Vec<f64>,
    /// `mass_fractions[node][species]`
    pub mass_fractions: Vec<Vec<f64>>,
    pub density: Vec<f64>,
    pub converged: bool,
    pub residual_norm: f64,
    pub steps: usize,
}

impl FlameletSolution {
    pub fn max_temperature(&self) -> f64 {
        self.temperature
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Mixture fraction of the temperature peak.
    pub fn z_at_max_temperature(&self) -> f64 {
        let i = (0..self.temperature.len())
            .max_by(|&a, &b| self.temperature[a].total_cmp(&self.temperature[b]))
            .unwrap_or(0);
        self.grid.points()[i]
    }

    pub fn species_profile(&self, k: usize) -> Vec<f64> {
        self.mass_fractions.iter().map(|y| y[k]).collect()
    }

    /// `Err(NotConverged)` unless the solve met its tolerance.
    pub fn into_converged(self) -> Result<FlameletSolution> {
        if self.converged {
            Ok(self)
        } else {
            Err(FlameletError::NotConverged {
                residual_norm: self.residual_norm,
                steps: self.steps,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mech::bundled_methane;

    #[test]
    fn chi_profile_values() {
        let p = ChiProfile::new(5.0, 0.055, ChiShape::Erfc).unwrap();
        assert_eq!(p.chi(0.055).unwrap(), 5.0);
        assert_eq!(p.chi(0.0).unwrap(), 0.0);
        assert_eq!(p.chi(1.0).unwrap(), 0.0);
        assert!(p.chi(1e-9).unwrap() < 1e-6);
        assert!(p.chi(1.0 - 1e-9).unwrap() < 1e-6);
        assert!(p.chi(0.5).unwrap() > 0.0);
        let c = ChiProfile::new(5.0, 0.3, ChiShape::Constant).unwrap();
        for z in [0.0, 0.2, 0.9, 1.0] {
            assert_eq!(c.chi(z).unwrap(), 5.0);
        }
        assert_eq!(p.chi(1.5), Err(FlameletError::Domain(1.5)));
        assert!(ChiProfile::new(0.0, 0.5, ChiShape::Erfc).is_err());
    }

    #[test]
    fn erfc_profile_against_series() {
        // erfc⁻¹(1) = 0, so with z_st = 0.5 the profile at 0.5 is χ_st and
        // elsewhere exp(-2 erfc⁻¹(2z)²) < 1
        let p = ChiProfile::new(1.0, 0.5, ChiShape::Erfc).unwrap();
        // erfc(0.5) = 0.4795001221869535 -> z = 0.23975006109347674
        let z = 0.479_500_122_186_953_5 / 2.0;
        assert!((p.chi(z).unwrap() - (-0.5f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn grids() {
        let g = Grid::uniform(30).unwrap();
        assert_eq!(g.len(), 30);
        assert!(Grid::uniform(4).is_err());
        let c = Grid::clustered(30, 0.055, DEFAULT_CLUSTERING).unwrap();
        let z = c.points();
        assert_eq!((z[0], z[29]), (0.0, 1.0));
        assert!(z.contains(&0.055));
        assert!(z.windows(2).all(|w| w[1] > w[0]));
        let near = z.iter().filter(|&&v| v < 0.15).count();
        assert!(near > 5, "{near} points below 0.15");
        assert!(Grid::from_points(vec![0.0, 0.2, 0.2, 0.5, 1.0]).is_err());
    }

    #[test]
    fn stoichiometric_point_of_methane_air() {
        let m = bundled_methane();
        let bc = BoundaryConditions::methane_air(&m).unwrap();
        let z = stoichiometric_mixture_fraction(&m, &bc).unwrap();
        // s = 2 W_O2 / W_CH4 (mass of O2 per kg CH4); Z_st = 1/(1 + s/Y_O2)
        let w = m.molar_masses();
        let s = 2.0 * w[1] / w[0];
        let expect = 1.0 / (1.0 + s / bc.y_ox[1]);
        assert!((z - expect).abs() < 1e-12, "{z} vs {expect}");
        assert!((z - 0.055).abs() < 0.001);
    }

    #[test]
    fn linear_guess_interpolates() {
        let m = bundled_methane();
        let bc = BoundaryConditions::methane_air(&m).unwrap();
        let g = Grid::uniform(11).unwrap();
        let s = initial_guess(&m, &bc, &g, GuessMode::Linear).unwrap();
        assert!((s.temperature[5] - 300.075).abs() < 1e-12);
    }

    #[test]
    fn burke_schumann_guess_peaks_at_stoichiometry() {
        let m = bundled_methane();
        let bc = BoundaryConditions::methane_air(&m).unwrap();
        let z_st = stoichiometric_mixture_fraction(&m, &bc).unwrap();
        let g = Grid::clustered(30, z_st, DEFAULT_CLUSTERING).unwrap();
        let s = initial_guess(&m, &bc, &g, GuessMode::BurkeSchumann).unwrap();
        let imax = (0..30)
            .max_by(|&a, &b| s.temperature[a].total_cmp(&s.temperature[b]))
            .unwrap();
        assert_eq!(g.points()[imax], z_st);
        let t_peak = s.temperature[imax];
        assert!((t_peak - 2230.0).abs() < 0.15 * 2230.0, "{t_peak}");
        for y in &s.mass_fractions {
            assert!((y.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        assert_eq!(s.temperature[0], 300.0);
        assert_eq!(s.temperature[29], 300.15);
    }
}
