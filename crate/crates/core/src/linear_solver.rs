//! Spectral solver for `u_t = u_xx + m u_x + p u + (k * u)(t - h)` on a periodic grid.
//!
//! Each Fourier mode obeys the scalar delay equation
//! `w' = (-ξ² + i m ξ + p) w + k̂(ξ) w(t - h)`, integrated independently with
//! [`crate::dde`]. The convolution is exact for the periodized kernel.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::characteristic::{halanay_root, CharParams, DecayPair, TangencySolution};
use crate::dde::{ModeCoeffs, ModeHistory, ModeState};
use crate::error::{invalid, Result};
use crate::grid::{integrate, Field, Grid, History, Spectral};
use crate::kernels::Kernel;

type C = Complex64;

/// Edge cells holding more than this fraction of the maximum trigger a warning.
pub const EDGE_THRESHOLD: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct LinearProblem {
    pub params: CharParams,
    pub kernel: Kernel,
    pub grid: Grid,
}

impl LinearProblem {
    pub fn new(params: CharParams, kernel: Kernel, grid: Grid) -> Result<Self> {
        if !(params.h > 0.0) {
            return Err(invalid("h", "the spectral solver needs a positive delay"));
        }
        kernel.validate()?;
        Ok(LinearProblem {
            params,
            kernel,
            grid,
        })
    }

    /// `(μ(ξ), κ(ξ))` for FFT bin `k`.
    pub fn mode_symbols(&self, k: usize) -> (C, C) {
        let xi = self.grid.wavenumber(k);
        let mu = C::new(-xi * xi + self.params.p, self.params.m * xi);
        (mu, self.kernel.fourier_transform(xi))
    }

    /// Halanay rate of mode `k`.
    pub fn mode_rate(&self, k: usize) -> f64 {
        let (mu, kappa) = self.mode_symbols(k);
        halanay_root(mu.re, kappa.norm(), self.params.h)
    }

    fn check_history(&self, history: &History) -> Result<()> {
        if history.snapshots.iter().any(|s| s.len() != self.grid.n()) {
            return Err(invalid("history", "snapshot length differs from the grid"));
        }
        if history.n_h() == 0 {
            return Err(invalid("history", "need at least two snapshots on [-h, 0]"));
        }
        Ok(())
    }

    pub fn dt(&self, history: &History) -> f64 {
        self.params.h / history.n_h() as f64
    }

    /// Integrates every mode and records mode values at `steps` (sorted step indices).
    pub fn solve_modes(&self, history: &History, steps: &[usize]) -> Result<Vec<Vec<C>>> {
        self.check_history(history)?;
        let n = self.grid.n();
        let dt = self.dt(history);
        let spectral = Spectral::new(n);
        let hist_hat: Vec<Vec<C>> = history
            .snapshots
            .iter()
            .map(|s| spectral.forward_real(s))
            .collect();
        let last = steps.iter().copied().max().unwrap_or(0);
        let per_mode: Vec<Vec<C>> = (0..n)
            .into_par_iter()
            .map(|k| {
                let (mu, kappa) = self.mode_symbols(k);
                let values: Vec<C> = hist_hat.iter().map(|s| s[k]).collect();
                let mh = ModeHistory::from_values(values, dt);
                let mut st = ModeState::new(ModeCoeffs::new(mu, kappa, dt), mh);
                let mut out = Vec::with_capacity(steps.len());
                let mut next = 0;
                for n_step in 0..=last {
                    while next < steps.len() && steps[next] == n_step {
                        out.push(st.value());
                        next += 1;
                    }
                    if n_step < last {
                        st.advance();
                    }
                }
                out
            })
            .collect();
        Ok(per_mode)
    }

    /// Physical-space snapshots at the step indices nearest to `times`.
    pub fn solve(&self, history: &History, times: &[f64]) -> Result<LinearSolution> {
        let dt = self.dt(history);
        let mut steps: Vec<usize> = times.iter().map(|t| (t / dt).round() as usize).collect();
        steps.sort_unstable();
        steps.dedup();
        let modes = self.solve_modes(history, &steps)?;
        let spectral = Spectral::new(self.grid.n());
        let mut edge_warnings = 0;
        let fields: Vec<Field> = steps
            .iter()
            .enumerate()
            .map(|(i, &s)| {
                let uhat: Vec<C> = modes.iter().map(|m| m[i]).collect();
                let f = Field {
                    time: s as f64 * dt,
                    values: spectral.inverse_real(&uhat),
                };
                if edge_mass_exceeded(&f) {
                    edge_warnings += 1;
                    log::warn!(
                        "solution reaches the periodic boundary at t = {:.4}; enlarge the domain",
                        f.time
                    );
                }
                f
            })
            .collect();
        Ok(LinearSolution {
            grid: self.grid,
            dt,
            fields,
            edge_warnings,
        })
    }
}

pub fn edge_mass_exceeded(f: &Field) -> bool {
    let max = f.max_abs();
    let n = f.values.len();
    max > 0.0 && (f.values[0].abs().max(f.values[n - 1].abs()) > EDGE_THRESHOLD * max)
}

#[derive(Debug, Clone)]
pub struct LinearSolution {
    pub grid: Grid,
    pub dt: f64,
    pub fields: Vec<Field>,
    /// Number of snapshots that tripped the edge-mass monitor.
    pub edge_warnings: usize,
}

impl LinearSolution {
    pub fn at_time(&self, t: f64) -> Option<&Field> {
        self.fields
            .iter()
            .find(|f| (f.time - t).abs() <= 0.5 * self.dt)
    }
}

/// One-shot form of [`LinearProblem::solve`].
pub fn solve_linear(
    params: &CharParams,
    kernel: &Kernel,
    grid: &Grid,
    history: &History,
    times: &[f64],
) -> Result<LinearSolution> {
    LinearProblem::new(*params, *kernel, *grid)?.solve(history, times)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiagnosticPoint {
    pub t: f64,
    pub value: f64,
}

/// `D(t) = √t e^{γ_m t} u(t, x) e^{-z_m x}`.
pub fn rescaled_mass_diagnostic(
    sol: &LinearSolution,
    tang: &TangencySolution,
    x_probe: f64,
) -> Vec<DiagnosticPoint> {
    sol.fields
        .iter()
        .filter(|f| f.time > 0.0)
        .map(|f| {
            let u = f.interpolate(&sol.grid, x_probe);
            DiagnosticPoint {
                t: f.time,
                value: f.time.sqrt() * (tang.gamma_m * f.time).exp() * u
                    * (-tang.z_m * x_probe).exp(),
            }
        })
        .collect()
}

/// Predicted limit `A / (2 √(π σ_m))` of [`rescaled_mass_diagnostic`].
pub fn rescaled_mass_limit(mass: f64, sigma_m: f64) -> f64 {
    mass / (2.0 * (std::f64::consts::PI * sigma_m).sqrt())
}

/// `S(t) = sup_x |u(t,x)| e^{-z₀ x} √t e^{γ₀ t}`.
pub fn universal_bound_diagnostic(sol: &LinearSolution, pair: &DecayPair) -> Vec<DiagnosticPoint> {
    sol.fields
        .iter()
        .filter(|f| f.time > 0.0)
        .map(|f| {
            let sup = f
                .values
                .iter()
                .zip(sol.grid.xs())
                .map(|(u, x)| u.abs() * (-pair.z0 * x).exp())
                .fold(0.0, f64::max);
            DiagnosticPoint {
                t: f.time,
                value: sup * f.time.sqrt() * (pair.gamma0 * f.time).exp(),
            }
        })
        .collect()
}

/// `∫ u₀` at `s = 0` by the trapezoid rule.
pub fn initial_mass(grid: &Grid, history: &History) -> f64 {
    integrate(grid, history.last())
}

/// `∫ e^{-z y} |u₀(y)| dy` at `s = 0`; finite on any grid, reported for the record.
pub fn tilted_initial_mass(grid: &Grid, history: &History, z: f64) -> f64 {
    let w: Vec<f64> = history
        .last()
        .iter()
        .zip(grid.xs())
        .map(|(u, x)| u.abs() * (-z * x).exp())
        .collect();
    integrate(grid, &w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::characteristic::halanay_envelope;
    use crate::dde::scalar_dde_solve;

    fn gaussian_history(grid: &Grid, n_h: usize, width: f64, center: f64) -> History {
        History::constant(
            grid.sample(|x| (-(x - center).powi(2) / (2.0 * width * width)).exp()),
            n_h,
        )
    }

    #[test]
    fn heat_equation() {
        let grid = Grid::new(60.0, 512).unwrap();
        let params = CharParams::new(0.0, 0.0, 1.0).unwrap();
        let kernel = Kernel::dirac(0.0, 0.0).unwrap();
        let hist = gaussian_history(&grid, 16, 1.0, 0.0);
        let sol = solve_linear(&params, &kernel, &grid, &hist, &[1.0]).unwrap();
        let f = sol.at_time(1.0).unwrap();
        let var = 1.0 + 2.0;
        let err = f
            .values
            .iter()
            .zip(grid.xs())
            .map(|(u, x)| (u - (-x * x / (2.0 * var)).exp() / var.sqrt()).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-6, "err = {err}");
    }

    #[test]
    fn balanced_local_equation_keeps_constants() {
        let grid = Grid::new(20.0, 256).unwrap();
        let q = 0.7;
        let params = CharParams::new(0.0, -q, 1.3).unwrap();
        let kernel = Kernel::dirac(0.0, q).unwrap();
        let hist = History::constant(vec![2.0; 256], 8);
        let sol = solve_linear(&params, &kernel, &grid, &hist, &[5.0, 10.0]).unwrap();
        for f in &sol.fields {
            assert!(f.values.iter().all(|v| (v - 2.0).abs() < 1e-12));
        }
    }

    #[test]
    fn mode_zero_is_scalar_dde_of_the_mean() {
        let grid = Grid::new(40.0, 256).unwrap();
        let params = CharParams::new(0.3, -0.5, 1.0).unwrap();
        let kernel = Kernel::gaussian(0.5, 1.0, 0.8).unwrap();
        let hist = History::from_fn(&grid, 1.0, 16, |s, x| (1.0 + 0.3 * s) * (-x * x / 4.0).exp());
        let problem = LinearProblem::new(params, kernel, grid).unwrap();
        let steps = [16usize, 64, 160];
        let modes = problem.solve_modes(&hist, &steps).unwrap();
        let mean0 = |s: f64| {
            let v = History::from_fn(&grid, 1.0, 16, |_, x| (1.0 + 0.3 * s) * (-x * x / 4.0).exp());
            C::new(v.last().iter().sum::<f64>(), 0.0)
        };
        let traj = scalar_dde_solve(
            C::new(params.p, 0.0),
            C::new(0.8, 0.0),
            1.0,
            mean0,
            10.0,
            1.0 / 16.0,
        )
        .unwrap();
        for (i, &s) in steps.iter().enumerate() {
            let a = modes[0][i];
            let b = traj[s].1;
            assert!((a - b).norm() < 1e-9 * b.norm(), "{a} vs {b}");
        }
    }

    #[test]
    fn linearity() {
        let grid = Grid::new(40.0, 256).unwrap();
        let params = CharParams::new(0.2, -0.4, 0.5).unwrap();
        let kernel = Kernel::laplace(1.5, 0.6).unwrap();
        let u = gaussian_history(&grid, 8, 1.0, -2.0);
        let v = gaussian_history(&grid, 8, 2.0, 3.0);
        let w = u.combine(2.0, &v, -0.5);
        let run = |h: &History| solve_linear(&params, &kernel, &grid, h, &[3.0]).unwrap().fields[0].clone();
        let (fu, fv, fw) = (run(&u), run(&v), run(&w));
        let scale = fw.max_abs();
        for i in 0..grid.n() {
            let lin = 2.0 * fu.values[i] - 0.5 * fv.values[i];
            assert!((fw.values[i] - lin).abs() < 1e-10 * scale);
        }
    }

    #[test]
    fn halanay_envelope_per_mode() {
        let grid = Grid::new(40.0, 256).unwrap();
        let params = CharParams::new(0.4, -0.2, 1.0).unwrap();
        let kernel = Kernel::gaussian(0.3, 0.8, 0.9).unwrap();
        let hist = gaussian_history(&grid, 16, 1.5, 0.0);
        let problem = LinearProblem::new(params, kernel, grid).unwrap();
        let steps: Vec<usize> = (1..=20).map(|i| i * 16).collect();
        let modes = problem.solve_modes(&hist, &steps).unwrap();
        let spectral = Spectral::new(grid.n());
        let h0 = spectral.forward_real(hist.last());
        for k in (0..grid.n()).step_by(7) {
            let tau = problem.mode_rate(k);
            let sup = h0[k].norm();
            for (i, &s) in steps.iter().enumerate() {
                let t = s as f64 / 16.0;
                let bound = halanay_envelope(sup, tau, params.h, t);
                assert!(modes[k][i].norm() <= bound * (1.0 + 1e-8) + 1e-12, "k={k} t={t} tau={tau} w={} bound={bound}", modes[k][i].norm());
            }
        }
    }
}
