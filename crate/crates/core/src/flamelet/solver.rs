//! Discretized flamelet residual and the pseudo-transient Newton solver.

use super::linalg::block_tridiag_solve;
use super::{
    balance_species, BoundaryConditions, ChiProfile, FlameletError, FlameletSolution,
    FlameletState, Grid, Result,
};
use crate::mech::Mechanism;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub max_pseudo_steps: usize,
    /// initial pseudo-time step, s
    pub dt0: f64,
    /// steady residual target relative to `max(initial residual, 1)`
    pub residual_tol: f64,
    pub max_newton_per_step: usize,
    pub dt_max: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_pseudo_steps: 3000,
            dt0: 1e-6,
            residual_tol: 1e-8,
            max_newton_per_step: 8,
            dt_max: 1e10,
        }
    }
}

const T_SCALE: f64 = 1000.0;
const NEWTON_TOL: f64 = 1e-9;
const DT_MIN: f64 = 1e-14;

/// Discrete steady flamelet equations on one grid.
///
/// Unknown vector layout: node-major over interior nodes `1..n-1`; within a
/// node the temperature comes first, then the mass fractions of every
/// species except the balance species, in declaration order.
pub struct FlameletProblem<'a> {
    mech: &'a Mechanism,
    bc: &'a BoundaryConditions,
    grid: &'a Grid,
    chi: Vec<f64>,
    balance: usize,
    /// species index of each mass-fraction unknown
    vars: Vec<usize>,
    /// second-difference weights `(w_minus, w_center, w_plus)` per node
    d2: Vec<[f64; 3]>,
}

#[derive(Debug, Clone, Copy)]
enum StepFailure {
    Evaluation,
    Diverged,
    Singular(usize),
}

struct Scratch {
    t: Vec<f64>,
    y: Vec<f64>,
    rho: Vec<f64>,
    wdot: Vec<f64>,
}

impl<'a> FlameletProblem<'a> {
    pub fn new(
        mech: &'a Mechanism,
        profile: &ChiProfile,
        bc: &'a BoundaryConditions,
        grid: &'a Grid,
    ) -> Result<Self> {
        bc.validate(mech)?;
        let z = grid.points();
        let chi = z
            .iter()
            .map(|&z| profile.chi(z))
            .collect::<Result<Vec<_>>>()?;
        let balance = balance_species(mech);
        let vars = (0..mech.n_species()).filter(|&k| k != balance).collect();
        let d2 = (0..z.len())
            .map(|i| {
                if i == 0 || i + 1 == z.len() {
                    return [0.0; 3];
                }
                let (hm, hp) = (z[i] - z[i - 1], z[i + 1] - z[i]);
                let wm = 2.0 / (hm * (hm + hp));
                let wp = 2.0 / (hp * (hm + hp));
                [wm, -(wm + wp), wp]
            })
            .collect();
        Ok(Self {
            mech,
            bc,
            grid,
            chi,
            balance,
            vars,
            d2,
        })
    }

    /// Unknowns per interior node.
    pub fn block_size(&self) -> usize {
        1 + self.vars.len()
    }

    pub fn n_interior(&self) -> usize {
        self.grid.len() - 2
    }

    pub fn n_unknowns(&self) -> usize {
        self.block_size() * self.n_interior()
    }

    pub fn pack(&self, state: &FlameletState) -> Vec<f64> {
        let nb = self.block_size();
        let mut x = vec![0.0; self.n_unknowns()];
        for j in 0..self.n_interior() {
            let i = j + 1;
            x[j * nb] = state.temperature[i];
            for (v, &k) in self.vars.iter().enumerate() {
                x[j * nb + 1 + v] = state.mass_fractions[i][k];
            }
        }
        x
    }

    pub fn unpack(&self, x: &[f64]) -> FlameletState {
        let mut s = self.scratch();
        self.fill_nodes(x, &mut s);
        let ns = self.mech.n_species();
        FlameletState {
            temperature: s.t,
            mass_fractions: s.y.chunks(ns).map(<[f64]>::to_vec).collect(),
        }
    }

    fn scratch(&self) -> Scratch {
        let (n, ns) = (self.grid.len(), self.mech.n_species());
        Scratch {
            t: vec![0.0; n],
            y: vec![0.0; n * ns],
            rho: vec![0.0; n],
            wdot: vec![0.0; ns],
        }
    }

    fn fill_nodes(&self, x: &[f64], s: &mut Scratch) {
        let (n, ns, nb) = (self.grid.len(), self.mech.n_species(), self.block_size());
        s.t[0] = self.bc.t_ox;
        s.t[n - 1] = self.bc.t_fuel;
        s.y[..ns].copy_from_slice(&self.bc.y_ox);
        s.y[(n - 1) * ns..].copy_from_slice(&self.bc.y_fuel);
        for j in 0..n - 2 {
            let i = j + 1;
            s.t[i] = x[j * nb];
            let y = &mut s.y[i * ns..(i + 1) * ns];
            let mut sum = 0.0;
            for (v, &k) in self.vars.iter().enumerate() {
                y[k] = x[j * nb + 1 + v];
                sum += y[k];
            }
            y[self.balance] = 1.0 - sum;
        }
    }

    /// Steady residual `F` into `out`; nodal densities are left in `s.rho`.
    fn eval(&self, x: &[f64], s: &mut Scratch, out: &mut [f64]) -> Result<()> {
        self.fill_nodes(x, s);
        let (n, ns, nb) = (self.grid.len(), self.mech.n_species(), self.block_size());
        let mech = self.mech;
        for i in 1..n - 1 {
            let t = s.t[i];
            let y = &s.y[i * ns..(i + 1) * ns];
            let rho = mech.density(self.bc.pressure, t, y);
            if !(rho > 0.0 && rho.is_finite()) {
                return Err(FlameletError::InvalidInput(format!(
                    "non-physical state at node {i}: density {rho}"
                )));
            }
            s.rho[i] = rho;
            mech.production_rates_into(t, rho, y, &mut s.wdot)?;
            let cp = mech.cp_mixture_unchecked(t, y);
            let mut q = 0.0;
            for (k, sp) in mech.species.iter().enumerate() {
                if s.wdot[k] != 0.0 {
                    q += sp.h_molar(t) / sp.molar_mass * s.wdot[k];
                }
            }
            let [wm, wc, wp] = self.d2[i];
            let diff = 0.5 * rho * self.chi[i];
            let row = &mut out[(i - 1) * nb..i * nb];
            row[0] = diff * (wm * s.t[i - 1] + wc * t + wp * s.t[i + 1]) - q / cp;
            for (v, &k) in self.vars.iter().enumerate() {
                let d2y = wm * s.y[(i - 1) * ns + k] + wc * y[k] + wp * s.y[(i + 1) * ns + k];
                row[1 + v] = diff * d2y + s.wdot[k];
            }
        }
        Ok(())
    }

    /// Steady residual of the packed interior unknowns.
    pub fn residual(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.n_unknowns()];
        let mut s = self.scratch();
        self.eval(x, &mut s, &mut out)?;
        Ok(out)
    }

    /// Scaled max-norm: species rows per unit density (1/s), the
    /// temperature row additionally per 1000 K.
    fn norm(&self, f: &[f64], rho: &[f64]) -> f64 {
        let nb = self.block_size();
        let mut r: f64 = 0.0;
        for (j, row) in f.chunks(nb).enumerate() {
            let d = rho[j + 1];
            r = r.max(row[0].abs() / (d * T_SCALE));
            for v in &row[1..] {
                r = r.max(v.abs() / d);
            }
        }
        r
    }

    /// Pseudo-transient residual `ρ (x − x_old)/Δτ − F(x)`.
    fn transient(
        &self,
        x: &[f64],
        x_old: &[f64],
        dt: f64,
        s: &mut Scratch,
        out: &mut [f64],
    ) -> Result<()> {
        self.eval(x, s, out)?;
        let nb = self.block_size();
        for (j, row) in out.chunks_mut(nb).enumerate() {
            let a = s.rho[j + 1] / dt;
            for (v, r) in row.iter_mut().enumerate() {
                let idx = j * nb + v;
                *r = a * (x[idx] - x_old[idx]) - *r;
            }
        }
        Ok(())
    }

    fn newton_step(
        &self,
        x_old: &[f64],
        dt: f64,
        max_iter: usize,
        s: &mut Scratch,
    ) -> Result<Vec<f64>, StepFailure> {
        let (m, nb) = (self.n_interior(), self.block_size());
        let bs = nb * nb;
        let (t_min, t_max) = self.mech.temperature_range();
        let mut x = x_old.to_vec();
        let mut g = vec![0.0; x.len()];
        let mut gp = vec![0.0; x.len()];
        let mut xp = vec![0.0; x.len()];
        let mut lower = vec![0.0; m * bs];
        let mut diag = vec![0.0; m * bs];
        let mut upper = vec![0.0; m * bs];
        let mut prev = f64::INFINITY;
        for _ in 0..max_iter {
            self.transient(&x, x_old, dt, s, &mut g)
                .map_err(|_| StepFailure::Evaluation)?;
            // finite-difference Jacobian, three-colour grouping of nodes
            for color in 0..3.min(m) {
                for v in 0..nb {
                    xp.copy_from_slice(&x);
                    let mut steps = vec![0.0; m];
                    for j in (color..m).step_by(3) {
                        let idx = j * nb + v;
                        let scale = if v == 0 { 300.0 } else { 1e-5 };
                        let h = 1.5e-8 * x[idx].abs().max(scale);
                        xp[idx] = x[idx] + h;
                        steps[j] = xp[idx] - x[idx];
                    }
                    self.transient(&xp, x_old, dt, s, &mut gp)
                        .map_err(|_| StepFailure::Evaluation)?;
                    for j in (color..m).step_by(3) {
                        let h = steps[j];
                        for i in j.saturating_sub(1)..(j + 2).min(m) {
                            let block = if i == j {
                                &mut diag
                            } else if i + 1 == j {
                                &mut upper
                            } else {
                                &mut lower
                            };
                            for r in 0..nb {
                                block[i * bs + r * nb + v] = (gp[i * nb + r] - g[i * nb + r]) / h;
                            }
                        }
                    }
                }
            }
            let mut delta: Vec<f64> = g.iter().map(|v| -v).collect();
            block_tridiag_solve(m, nb, &lower, &mut diag, &upper, &mut delta)
                .map_err(|j| StepFailure::Singular(j + 1))?;
            let mut size: f64 = 0.0;
            for (idx, d) in delta.iter().enumerate() {
                x[idx] += d;
                let scaled = if idx % nb == 0 {
                    d.abs() / T_SCALE
                } else {
                    d.abs()
                };
                size = size.max(scaled);
            }
            if !size.is_finite() || x.iter().step_by(nb).any(|&t| !(t >= t_min && t <= t_max)) {
                return Err(StepFailure::Evaluation);
            }
            if size < NEWTON_TOL {
                return Ok(x);
            }
            if size > prev {
                return Err(StepFailure::Diverged);
            }
            prev = size;
        }
        // accept a step whose last update was already small
        if prev < 1e-6 {
            Ok(x)
        } else {
            Err(StepFailure::Diverged)
        }
    }

    fn solution(
        &self,
        x: &[f64],
        chi_st: f64,
        converged: bool,
        residual_norm: f64,
        steps: usize,
    ) -> FlameletSolution {
        let mut state = self.unpack(x);
        let n = self.grid.len();
        for y in state.mass_fractions.iter_mut().take(n - 1).skip(1) {
            for v in y.iter_mut() {
                if *v < 0.0 {
                    *v = 0.0;
                }
            }
            let others: f64 = y
                .iter()
                .enumerate()
                .filter(|(k, _)| *k != self.balance)
                .map(|(_, v)| v)
                .sum();
            y[self.balance] = 1.0 - others;
        }
        let density = state
            .temperature
            .iter()
            .zip(&state.mass_fractions)
            .map(|(&t, y)| self.mech.density(self.bc.pressure, t, y))
            .collect();
        FlameletSolution {
            grid: self.grid.clone(),
            chi_st,
            temperature: state.temperature,
            mass_fractions: state.mass_fractions,
            density,
            converged,
            residual_norm,
            steps,
        }
    }

    /// Pseudo-transient continuation from `guess`.
    pub fn solve(
        &self,
        chi_st: f64,
        guess: &FlameletState,
        opts: &SolverOptions,
    ) -> Result<FlameletSolution> {
        if !(opts.residual_tol > 0.0 && opts.dt0 > 0.0) {
            return Err(FlameletError::InvalidInput(
                "residual_tol and dt0 must be positive".into(),
            ));
        }
        let mut s = self.scratch();
        let mut f = vec![0.0; self.n_unknowns()];
        let mut x = self.pack(guess);
        self.eval(&x, &mut s, &mut f)?;
        let r0 = self.norm(&f, &s.rho);
        let target = opts.residual_tol * r0.max(1.0);
        if r0 <= target {
            return Ok(self.solution(&x, chi_st, true, r0, 0));
        }
        let mut best = (x.clone(), r0);
        let mut dt = opts.dt0;
        let mut accepted = 0usize;
        for step in 1..=opts.max_pseudo_steps {
            match self.newton_step(&x, dt, opts.max_newton_per_step, &mut s) {
                Ok(xn) => {
                    x = xn;
                    accepted += 1;
                    dt = (dt * 1.5).min(opts.dt_max);
                    if self.eval(&x, &mut s, &mut f).is_err() {
                        continue;
                    }
                    let r = self.norm(&f, &s.rho);
                    if r < best.1 {
                        best = (x.clone(), r);
                    }
                    if r <= target {
                        return Ok(self.solution(&x, chi_st, true, r, step));
                    }
                }
                Err(failure) => {
                    dt *= 0.5;
                    if dt < DT_MIN {
                        if let (0, StepFailure::Singular(node)) = (accepted, failure) {
                            return Err(FlameletError::SingularJacobian { node });
                        }
                        break;
                    }
                }
            }
        }
        Ok(self.solution(&best.0, chi_st, false, best.1, opts.max_pseudo_steps))
    }
}

/// Steady residual of the interior unknowns `x` (see [`FlameletProblem`]).
pub fn residual(
    mech: &Mechanism,
    profile: &ChiProfile,
    bc: &BoundaryConditions,
    grid: &Grid,
    x: &[f64],
) -> Result<Vec<f64>> {
    let p = FlameletProblem::new(mech, profile, bc, grid)?;
    if x.len() != p.n_unknowns() {
        return Err(FlameletError::InvalidInput(format!(
            "expected {} unknowns, got {}",
            p.n_unknowns(),
            x.len()
        )));
    }
    p.residual(x)
}

/// Steady flamelet at `profile.chi_st` from the given initial state.
pub fn solve_steady(
    mech: &Mechanism,
    profile: &ChiProfile,
    bc: &BoundaryConditions,
    grid: &Grid,
    guess: &FlameletState,
    opts: &SolverOptions,
) -> Result<FlameletSolution> {
    let p = FlameletProblem::new(mech, profile, bc, grid)?;
    p.solve(profile.chi_st, guess, opts)
}
