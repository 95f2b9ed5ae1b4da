use super::{Mechanism, Reaction, GAS_CONSTANT, ONE_ATM};

/// Below this concentration (kmol/m³) fractional orders under one switch to
/// a linear law, keeping the rate differentiable at zero.
pub const FRACTIONAL_ORDER_FLOOR: f64 = 1e-10;

#[inline]
fn conc_pow(c: f64, order: f64) -> f64 {
    if order == 1.0 {
        c
    } else if order.fract() == 0.0 && order.abs() < 16.0 {
        c.powi(order as i32)
    } else if order < 1.0 && c < FRACTIONAL_ORDER_FLOOR {
        c * FRACTIONAL_ORDER_FLOOR.powf(order - 1.0)
    } else {
        c.powf(order)
    }
}

/// `Kc` in (kmol/m³)^Δν from the standard-state Gibbs energy of reaction.
pub(super) fn equilibrium_constant(mech: &Mechanism, rxn: &Reaction, t: f64) -> f64 {
    let mut dg = 0.0;
    let mut dnu = 0.0;
    for &(k, nu) in &rxn.products {
        let nu = f64::from(nu);
        dg += nu * mech.species[k].g_over_rt(t);
        dnu += nu;
    }
    for &(k, nu) in &rxn.reactants {
        let nu = f64::from(nu);
        dg -= nu * mech.species[k].g_over_rt(t);
        dnu -= nu;
    }
    (-dg).exp() * (ONE_ATM / (GAS_CONSTANT * t)).powf(dnu)
}

fn concentrations(mech: &Mechanism, rho: f64, y: &[f64]) -> Vec<f64> {
    y.iter()
        .zip(&mech.species)
        .map(|(yi, s)| (rho * yi / s.molar_mass).max(0.0))
        .collect()
}

fn progress(mech: &Mechanism, rxn: &Reaction, t: f64, conc: &[f64]) -> f64 {
    let kf = rxn.rate_constant(t);
    let mut fwd = kf;
    if rxn.orders.is_empty() {
        for &(k, nu) in &rxn.reactants {
            fwd *= conc_pow(conc[k], f64::from(nu));
        }
    } else {
        for (k, order) in rxn.forward_orders() {
            fwd *= conc_pow(conc[k], order);
        }
    }
    if !rxn.reversible {
        return fwd;
    }
    let kr = kf / equilibrium_constant(mech, rxn, t);
    let mut rev = kr;
    for &(k, nu) in &rxn.products {
        rev *= conc_pow(conc[k], f64::from(nu));
    }
    fwd - rev
}

pub(super) fn rates_of_progress(mech: &Mechanism, t: f64, rho: f64, y: &[f64]) -> Vec<f64> {
    let conc = concentrations(mech, rho, y);
    mech.reactions
        .iter()
        .map(|r| progress(mech, r, t, &conc))
        .collect()
}

pub(super) fn production_rates(mech: &Mechanism, t: f64, rho: f64, y: &[f64], out: &mut [f64]) {
    out.iter_mut().for_each(|w| *w = 0.0);
    if mech.reactions.is_empty() {
        return;
    }
    let conc = concentrations(mech, rho, y);
    for rxn in &mech.reactions {
        let q = progress(mech, rxn, t, &conc);
        if q == 0.0 {
            continue;
        }
        for &(k, nu) in &rxn.reactants {
            out[k] -= f64::from(nu) * q;
        }
        for &(k, nu) in &rxn.products {
            out[k] += f64::from(nu) * q;
        }
    }
    for (w, s) in out.iter_mut().zip(&mech.species) {
        *w *= s.molar_mass;
    }
}
