use super::GAS_CONSTANT;

/// Two-range NASA-7 fit for one species.
///
/// `cp/R = a0 + a1 T + a2 T² + a3 T³ + a4 T⁴`,
/// `h/RT = a0 + a1 T/2 + a2 T²/3 + a3 T³/4 + a4 T⁴/5 + a5/T`,
/// `s/R = a0 ln T + a1 T + a2 T²/2 + a3 T³/3 + a4 T⁴/4 + a6`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeciesThermo {
    pub name: String,
    /// kg/kmol
    pub molar_mass: f64,
    pub t_low: f64,
    pub t_mid: f64,
    pub t_high: f64,
    pub coeffs_low: [f64; 7],
    pub coeffs_high: [f64; 7],
}

impl SpeciesThermo {
    #[inline]
    fn coeffs(&self, t: f64) -> &[f64; 7] {
        if t < self.t_mid {
            &self.coeffs_low
        } else {
            &self.coeffs_high
        }
    }

    fn branch(&self, high: bool) -> &[f64; 7] {
        if high {
            &self.coeffs_high
        } else {
            &self.coeffs_low
        }
    }

    /// J/(kmol·K)
    #[inline]
    pub fn cp_molar(&self, t: f64) -> f64 {
        GAS_CONSTANT * cp_over_r(self.coeffs(t), t)
    }

    /// J/kmol
    #[inline]
    pub fn h_molar(&self, t: f64) -> f64 {
        GAS_CONSTANT * t * h_over_rt(self.coeffs(t), t)
    }

    /// Standard-state entropy, J/(kmol·K).
    pub fn s_molar(&self, t: f64) -> f64 {
        GAS_CONSTANT * s_over_r(self.coeffs(t), t)
    }

    /// `g°/(R T)` at the standard pressure.
    #[inline]
    pub fn g_over_rt(&self, t: f64) -> f64 {
        let a = self.coeffs(t);
        h_over_rt(a, t) - s_over_r(a, t)
    }

    pub fn cp_molar_branch(&self, t: f64, high: bool) -> f64 {
        GAS_CONSTANT * cp_over_r(self.branch(high), t)
    }

    pub fn h_molar_branch(&self, t: f64, high: bool) -> f64 {
        GAS_CONSTANT * t * h_over_rt(self.branch(high), t)
    }
}

#[inline]
fn cp_over_r(a: &[f64; 7], t: f64) -> f64 {
    a[0] + t * (a[1] + t * (a[2] + t * (a[3] + t * a[4])))
}

#[inline]
fn h_over_rt(a: &[f64; 7], t: f64) -> f64 {
    a[0] + t * (a[1] / 2.0 + t * (a[2] / 3.0 + t * (a[3] / 4.0 + t * a[4] / 5.0))) + a[5] / t
}

#[inline]
fn s_over_r(a: &[f64; 7], t: f64) -> f64 {
    a[0] * t.ln() + t * (a[1] + t * (a[2] / 2.0 + t * (a[3] / 3.0 + t * a[4] / 4.0))) + a[6]
}
