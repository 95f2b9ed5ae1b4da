//! Reaction mechanisms: species thermodynamics and global/elementary kinetics.
//!
//! All quantities are SI with kmol as the amount unit: temperatures in K,
//! molar masses in kg/kmol, concentrations in kmol/m³, activation energies in
//! J/kmol. Conversion from the file's declared units happens once, at parse
//! time. A [`Mechanism`] is immutable after construction and every
//! evaluation method is a pure function of its arguments.

mod kinetics;
mod parse;
mod thermo;

pub use parse::parse_mechanism;
pub use thermo::SpeciesThermo;

use thiserror::Error;

/// Universal gas constant, J/(kmol·K).
pub const GAS_CONSTANT: f64 = 8314.462618;
/// Standard pressure, Pa.
pub const ONE_ATM: f64 = 101_325.0;

/// The 7-species, 4-step methane/air mechanism shipped with the crate.
pub const BUNDLED_METHANE: &str = include_str!("../../data/methane-4step.mech");

/// Parse [`BUNDLED_METHANE`].
pub fn bundled_methane() -> Mechanism {
    parse_mechanism(BUNDLED_METHANE).expect("bundled mechanism is well formed")
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MechError {
    #[error("syntax error at line {line}, column {col}: expected {expected}")]
    Syntax {
        line: usize,
        col: usize,
        expected: String,
    },
    #[error("unknown species '{name}' at line {line}")]
    UnknownSpecies { name: String, line: usize },
    #[error("unknown element '{symbol}' at line {line}")]
    UnknownElement { symbol: String, line: usize },
    #[error("reaction #{reaction} does not conserve element {element}")]
    ElementImbalance { reaction: usize, element: String },
    #[error("species '{name}' declared more than once")]
    DuplicateSpecies { name: String },
    #[error("no thermodynamic data for species '{name}'")]
    MissingThermo { name: String },
    #[error("invalid thermodynamic data for '{name}': {reason}")]
    InvalidThermo { name: String, reason: String },
    #[error("temperature {t} K outside the mechanism range [{min}, {max}] K")]
    TemperatureOutOfRange { t: f64, min: f64, max: f64 },
    #[error("invalid state: {0}")]
    InvalidState(String),
}

pub type Result<T, E = MechError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub struct Element {
    pub symbol: String,
    /// kg/kmol
    pub atomic_weight: f64,
}

/// One reaction `Σ ν'_i X_i (<)=> Σ ν''_i X_i` with a modified-Arrhenius
/// forward rate constant `k = A T^b exp(-Ea / (R T))`.
#[derive(Debug, Clone, PartialEq)]
pub struct Reaction {
    /// `(species index, stoichiometric coefficient)` in order of appearance.
    pub reactants: Vec<(usize, u32)>,
    pub products: Vec<(usize, u32)>,
    /// Explicit forward orders overriding the reactant coefficients
    /// (irreversible reactions only).
    pub orders: Vec<(usize, f64)>,
    /// SI units: (m³/kmol)^(order-1) / s / K^b.
    pub arrhenius_a: f64,
    pub arrhenius_b: f64,
    /// J/kmol
    pub activation_energy: f64,
    pub reversible: bool,
}

impl Reaction {
    /// Forward order of each species appearing in the rate expression.
    pub fn forward_orders(&self) -> Vec<(usize, f64)> {
        let mut out: Vec<(usize, f64)> = self
            .reactants
            .iter()
            .map(|&(k, nu)| (k, f64::from(nu)))
            .collect();
        for &(k, order) in &self.orders {
            match out.iter_mut().find(|(j, _)| *j == k) {
                Some(entry) => entry.1 = order,
                None => out.push((k, order)),
            }
        }
        out
    }

    /// Sum of forward orders; sets the units of `arrhenius_a`.
    pub fn total_order(&self) -> f64 {
        self.forward_orders().iter().map(|(_, o)| o).sum()
    }

    /// Net stoichiometric coefficient `ν'' - ν'` of species `k`.
    pub fn net_coefficient(&self, k: usize) -> i64 {
        let p: i64 = self
            .products
            .iter()
            .filter(|(j, _)| *j == k)
            .map(|(_, n)| i64::from(*n))
            .sum();
        let r: i64 = self
            .reactants
            .iter()
            .filter(|(j, _)| *j == k)
            .map(|(_, n)| i64::from(*n))
            .sum();
        p - r
    }

    pub fn rate_constant(&self, t: f64) -> f64 {
        self.arrhenius_a
            * t.powf(self.arrhenius_b)
            * (-self.activation_energy / (GAS_CONSTANT * t)).exp()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mechanism {
    pub elements: Vec<Element>,
    pub species: Vec<SpeciesThermo>,
    pub reactions: Vec<Reaction>,
    /// `composition[species][element]` atom counts.
    pub composition: Vec<Vec<u32>>,
}

impl Mechanism {
    pub fn n_species(&self) -> usize {
        self.species.len()
    }

    pub fn species_index(&self, name: &str) -> Option<usize> {
        self.species
            .iter()
            .position(|s| s.name.eq_ignore_ascii_case(name))
    }

    pub fn element_index(&self, symbol: &str) -> Option<usize> {
        self.elements
            .iter()
            .position(|e| e.symbol.eq_ignore_ascii_case(symbol))
    }

    pub fn species_names(&self) -> Vec<String> {
        self.species.iter().map(|s| s.name.clone()).collect()
    }

    pub fn molar_masses(&self) -> Vec<f64> {
        self.species.iter().map(|s| s.molar_mass).collect()
    }

    /// `[min t_low, max t_high]` over all species.
    pub fn temperature_range(&self) -> (f64, f64) {
        let lo = self
            .species
            .iter()
            .map(|s| s.t_low)
            .fold(f64::INFINITY, f64::min);
        let hi = self
            .species
            .iter()
            .map(|s| s.t_high)
            .fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }

    pub(crate) fn check_temperature(&self, t: f64) -> Result<()> {
        let (min, max) = self.temperature_range();
        if !(t >= min && t <= max) {
            return Err(MechError::TemperatureOutOfRange { t, min, max });
        }
        Ok(())
    }

    fn check_mass_fractions(&self, y: &[f64]) -> Result<()> {
        if y.len() != self.n_species() {
            return Err(MechError::InvalidState(format!(
                "expected {} mass fractions, got {}",
                self.n_species(),
                y.len()
            )));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(MechError::InvalidState("non-finite mass fraction".into()));
        }
        Ok(())
    }

    /// Mass fraction of each element in each species, `[species][element]`.
    pub fn element_mass_fractions(&self) -> Vec<Vec<f64>> {
        self.composition
            .iter()
            .zip(&self.species)
            .map(|(counts, sp)| {
                counts
                    .iter()
                    .zip(&self.elements)
                    .map(|(&n, el)| f64::from(n) * el.atomic_weight / sp.molar_mass)
                    .collect()
            })
            .collect()
    }

    /// Mean molar mass of a mixture, kg/kmol.
    pub fn mean_molar_mass(&self, y: &[f64]) -> f64 {
        let inv: f64 = y
            .iter()
            .zip(&self.species)
            .map(|(yi, s)| yi / s.molar_mass)
            .sum();
        1.0 / inv
    }

    /// Ideal-gas density, kg/m³.
    pub fn density(&self, pressure: f64, t: f64, y: &[f64]) -> f64 {
        pressure * self.mean_molar_mass(y) / (GAS_CONSTANT * t)
    }

    /// Specific heat of species `k`, J/(kg·K).
    pub fn cp_species(&self, k: usize, t: f64) -> Result<f64> {
        self.check_temperature(t)?;
        let sp = &self.species[k];
        Ok(sp.cp_molar(t) / sp.molar_mass)
    }

    /// Mass-weighted mixture specific heat, J/(kg·K).
    pub fn cp_mixture(&self, t: f64, y: &[f64]) -> Result<f64> {
        self.check_temperature(t)?;
        self.check_mass_fractions(y)?;
        if y.iter().any(|&v| v < 0.0) {
            return Err(MechError::InvalidState("negative mass fraction".into()));
        }
        let sum: f64 = y.iter().sum();
        if (sum - 1.0).abs() > 1e-6 {
            return Err(MechError::InvalidState(format!(
                "mass fractions sum to {sum}"
            )));
        }
        Ok(self.cp_mixture_unchecked(t, y))
    }

    pub(crate) fn cp_mixture_unchecked(&self, t: f64, y: &[f64]) -> f64 {
        y.iter()
            .zip(&self.species)
            .map(|(yi, s)| yi * s.cp_molar(t) / s.molar_mass)
            .sum()
    }

    /// Absolute (formation-inclusive) enthalpy of species `k`, J/kg.
    pub fn enthalpy_species(&self, k: usize, t: f64) -> Result<f64> {
        self.check_temperature(t)?;
        let sp = &self.species[k];
        Ok(sp.h_molar(t) / sp.molar_mass)
    }

    /// Mixture enthalpy, J/kg.
    pub fn enthalpy_mixture(&self, t: f64, y: &[f64]) -> Result<f64> {
        self.check_temperature(t)?;
        self.check_mass_fractions(y)?;
        Ok(y.iter()
            .zip(&self.species)
            .map(|(yi, s)| yi * s.h_molar(t) / s.molar_mass)
            .sum())
    }

    /// Net mass production rate of every species, kg/(m³·s).
    pub fn production_rates(&self, t: f64, rho: f64, y: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.n_species()];
        self.production_rates_into(t, rho, y, &mut out)?;
        Ok(out)
    }

    /// Allocation-light form of [`Mechanism::production_rates`].
    pub fn production_rates_into(
        &self,
        t: f64,
        rho: f64,
        y: &[f64],
        out: &mut [f64],
    ) -> Result<()> {
        self.check_temperature(t)?;
        self.check_mass_fractions(y)?;
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(MechError::InvalidState(format!("density {rho}")));
        }
        kinetics::production_rates(self, t, rho, y, out);
        Ok(())
    }

    /// Rates of progress of each reaction, kmol/(m³·s).
    pub fn rates_of_progress(&self, t: f64, rho: f64, y: &[f64]) -> Result<Vec<f64>> {
        self.check_temperature(t)?;
        self.check_mass_fractions(y)?;
        Ok(kinetics::rates_of_progress(self, t, rho, y))
    }

    /// Equilibrium constant in concentration units for reaction `r`.
    pub fn equilibrium_constant(&self, r: usize, t: f64) -> Result<f64> {
        self.check_temperature(t)?;
        Ok(kinetics::equilibrium_constant(self, &self.reactions[r], t))
    }

    /// Canonical text form; parsing it yields an identical mechanism.
    pub fn to_text(&self) -> String {
        parse::serialize(self)
    }

    /// SHA-256 of the canonical text form.
    pub fn fingerprint(&self) -> String {
        crate::content_hash(self.to_text().as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_counts() {
        let m = bundled_methane();
        assert_eq!(m.n_species(), 7);
        assert_eq!(m.reactions.len(), 4);
        assert_eq!(
            m.species_names(),
            ["CH4", "O2", "CO2", "H2O", "CO", "H2", "N2"]
        );
    }

    #[test]
    fn cp_pure_o2_at_300k() {
        let m = bundled_methane();
        let o2 = m.species_index("O2").unwrap();
        let mut y = vec![0.0; 7];
        y[o2] = 1.0;
        let cp = m.cp_mixture(300.0, &y).unwrap();
        // 918.43 J/(kg K) from a hand evaluation of the low-range polynomial
        assert!((cp - 918.0).abs() / 918.0 < 0.01, "cp = {cp}");
        assert!((cp - 918.4346).abs() < 0.05, "cp = {cp}");
    }

    #[test]
    fn cp_single_species_and_mixture_bounds() {
        let m = bundled_methane();
        for k in 0..7 {
            let mut y = vec![0.0; 7];
            y[k] = 1.0;
            assert_eq!(
                m.cp_mixture(1200.0, &y).unwrap(),
                m.cp_species(k, 1200.0).unwrap()
            );
        }
        let (a, b) = (
            m.species_index("CH4").unwrap(),
            m.species_index("N2").unwrap(),
        );
        // equimolar: mass fractions proportional to molar masses
        let (wa, wb) = (m.species[a].molar_mass, m.species[b].molar_mass);
        let mut y = vec![0.0; 7];
        y[a] = wa / (wa + wb);
        y[b] = wb / (wa + wb);
        let cp = m.cp_mixture(800.0, &y).unwrap();
        let (ca, cb) = (
            m.cp_species(a, 800.0).unwrap(),
            m.cp_species(b, 800.0).unwrap(),
        );
        assert!(cp > ca.min(cb) && cp < ca.max(cb));
    }

    #[test]
    fn temperature_range_enforced() {
        let m = bundled_methane();
        let y = [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0];
        assert!(matches!(
            m.cp_mixture(100.0, &y),
            Err(MechError::TemperatureOutOfRange { .. })
        ));
        assert!(m.enthalpy_species(0, 6000.0).is_err());
        assert!(m.production_rates(10.0, 1.0, &y).is_err());
    }

    #[test]
    fn enthalpy_continuous_at_t_mid() {
        let m = bundled_methane();
        for sp in &m.species {
            let lo = sp.h_molar_branch(sp.t_mid, false);
            let hi = sp.h_molar_branch(sp.t_mid, true);
            let scale = lo.abs().max(hi.abs()).max(GAS_CONSTANT * sp.t_mid);
            assert!((lo - hi).abs() / scale < 0.01, "{}", sp.name);
        }
    }

    #[test]
    fn formation_enthalpy_of_n2_is_zero() {
        let m = bundled_methane();
        let k = m.species_index("N2").unwrap();
        let h = m.enthalpy_species(k, 298.15).unwrap() * m.species[k].molar_mass / 1000.0;
        // J/mol; 2 % of the N2 sensible enthalpy scale R*T
        assert!(h.abs() < 0.02 * 8.314 * 298.15, "h = {h} J/mol");
    }

    #[test]
    fn cp_is_derivative_of_enthalpy() {
        let m = bundled_methane();
        for k in 0..m.n_species() {
            for &t in &[350.0, 700.0, 1500.0, 2500.0] {
                let d = 1e-3;
                let dh = (m.enthalpy_species(k, t + d).unwrap()
                    - m.enthalpy_species(k, t - d).unwrap())
                    / (2.0 * d);
                let cp = m.cp_species(k, t).unwrap();
                assert!((dh - cp).abs() / cp < 1e-3, "{k} {t}: {dh} vs {cp}");
            }
        }
    }
}
