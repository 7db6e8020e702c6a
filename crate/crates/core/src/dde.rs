//! Exponential one-step integrator for the scalar delay equation
//! `w'(t) = μ w(t) + κ w(t - h)`.
//!
//! The linear part is propagated exactly. The delayed term is replaced by the
//! cubic Hermite interpolant through the two stored nodes that bracket
//! `t - h`, and that interpolant is integrated exactly against `e^{μ(t_{n+1}-s)}`.
//! Because `dt = h / n_h`, delayed times always land on stored nodes.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::sample_derivative;

type C = Complex64;

/// `φ_j(z) = Σ_k z^k / (k + j)!` for `j = 0..=4`.
pub fn phi_functions(z: C) -> [C; 5] {
    let mut out = [C::new(0.0, 0.0); 5];
    if z.norm() < 1.0 {
        for (j, slot) in out.iter_mut().enumerate() {
            let mut term = C::new(1.0 / factorial(j), 0.0);
            let mut sum = term;
            for k in 1..30 {
                term *= z / (k + j) as f64;
                sum += term;
                if term.norm() < 1e-18 * sum.norm() {
                    break;
                }
            }
            *slot = sum;
        }
    } else {
        out[0] = z.exp();
        for j in 1..5 {
            out[j] = (out[j - 1] - 1.0 / factorial(j - 1)) / z;
        }
    }
    out
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Per-step coefficients for one `(μ, κ, dt)` triple.
#[derive(Debug, Clone, Copy)]
pub struct ModeCoeffs {
    pub mu: C,
    pub kappa: C,
    decay: C,
    c00: C,
    c10: C,
    c01: C,
    c11: C,
}

impl ModeCoeffs {
    pub fn new(mu: C, kappa: C, dt: f64) -> Self {
        let phi = phi_functions(mu * dt);
        let m0 = phi[1];
        let m1 = phi[2];
        let m2 = phi[3] * 2.0;
        let m3 = phi[4] * 6.0;
        let kd = kappa * dt;
        let kd2 = kd * dt;
        ModeCoeffs {
            mu,
            kappa,
            decay: phi[0],
            c00: kd * (m3 * 2.0 - m2 * 3.0 + m0),
            c10: kd2 * (m3 - m2 * 2.0 + m1),
            c01: kd * (m2 * 3.0 - m3 * 2.0),
            c11: kd2 * (m3 - m2),
        }
    }

    /// `w_{n+1}` from `w_n` and the delayed node pair `(y0, y0')`, `(y1, y1')`.
    #[inline]
    pub fn step(&self, w: C, y0: C, d0: C, y1: C, d1: C) -> C {
        self.decay * w + self.c00 * y0 + self.c10 * d0 + self.c01 * y1 + self.c11 * d1
    }
}

/// Mode-space initial history: values and time derivatives at the `n_h + 1`
/// nodes of `[-h, 0]`.
#[derive(Debug, Clone)]
pub struct ModeHistory {
    pub values: Vec<C>,
    pub derivs: Vec<C>,
}

impl ModeHistory {
    pub fn from_values(values: Vec<C>, dt: f64) -> Self {
        let derivs = sample_derivative(&values, dt);
        ModeHistory { values, derivs }
    }

    pub fn constant(v: C, n_h: usize) -> Self {
        ModeHistory {
            values: vec![v; n_h + 1],
            derivs: vec![C::new(0.0, 0.0); n_h + 1],
        }
    }

    pub fn n_h(&self) -> usize {
        self.values.len() - 1
    }

    pub fn sup_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }
}

/// Rolling state of one mode.
#[derive(Debug, Clone)]
pub struct ModeState {
    coeffs: ModeCoeffs,
    history: ModeHistory,
    // Ring of the last n_h + 1 solution nodes.
    ring_v: Vec<C>,
    ring_d: Vec<C>,
    step: usize,
}

impl ModeState {
    pub fn new(coeffs: ModeCoeffs, history: ModeHistory) -> Self {
        let n_h = history.n_h();
        let w0 = history.values[n_h];
        // Right derivative at t = 0 uses the equation, not the history.
        let d0 = coeffs.mu * w0 + coeffs.kappa * history.values[0];
        let mut ring_v = vec![C::new(0.0, 0.0); n_h + 1];
        let mut ring_d = ring_v.clone();
        ring_v[0] = w0;
        ring_d[0] = d0;
        ModeState {
            coeffs,
            history,
            ring_v,
            ring_d,
            step: 0,
        }
    }

    pub fn value(&self) -> C {
        self.ring_v[self.step % self.ring_v.len()]
    }

    pub fn steps_taken(&self) -> usize {
        self.step
    }

    pub fn advance(&mut self) {
        let n_h = self.history.n_h();
        let len = n_h + 1;
        let n = self.step;
        let w = self.ring_v[n % len];
        // Delayed interval is [n - n_h, n - n_h + 1] in solution indexing.
        let (y0, d0, y1, d1) = if n < n_h {
            let j = n;
            (
                self.history.values[j],
                self.history.derivs[j],
                self.history.values[j + 1],
                self.history.derivs[j + 1],
            )
        } else {
            let a = (n - n_h) % len;
            let b = (n - n_h + 1) % len;
            (self.ring_v[a], self.ring_d[a], self.ring_v[b], self.ring_d[b])
        };
        let next = self.coeffs.step(w, y0, d0, y1, d1);
        let slot = (n + 1) % len;
        self.ring_v[slot] = next;
        self.ring_d[slot] = self.coeffs.mu * next + self.coeffs.kappa * y1;
        self.step = n + 1;
    }
}

/// Number of steps `dt` takes to cover `h`, or an error if it does not divide it.
pub fn steps_per_delay(h: f64, dt: f64) -> Result<usize> {
    let r = h / dt;
    let n = r.round();
    if n < 1.0 || (r - n).abs() > 1e-9 * r.max(1.0) {
        return Err(Error::StepDoesNotDivideDelay { dt, h });
    }
    Ok(n as usize)
}

/// Integrates `w' = μw + κw(t-h)` on `[0, T]` and returns `(t_n, w_n)` at every step.
pub fn scalar_dde_solve<F>(
    mu: C,
    kappa: C,
    h: f64,
    history: F,
    t_end: f64,
    dt: f64,
) -> Result<Vec<(f64, C)>>
where
    F: Fn(f64) -> C,
{
    let n_h = steps_per_delay(h, dt)?;
    let dt = h / n_h as f64;
    let values: Vec<C> = (0..=n_h).map(|j| history(-h + j as f64 * dt)).collect();
    let hist = ModeHistory::from_values(values, dt);
    let mut state = ModeState::new(ModeCoeffs::new(mu, kappa, dt), hist);
    let steps = (t_end / dt).round() as usize;
    let mut out = Vec::with_capacity(steps + 1);
    out.push((0.0, state.value()));
    for n in 1..=steps {
        state.advance();
        out.push((n as f64 * dt, state.value()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::characteristic::halanay_root;

    fn c(re: f64) -> C {
        C::new(re, 0.0)
    }

    #[test]
    fn phi_branches_agree() {
        for z in [C::new(0.999, 0.0), C::new(-0.7, 0.7), C::new(0.0, 0.99)] {
            let a = phi_functions(z);
            let b = phi_functions(z * 1.002);
            for j in 0..5 {
                assert!((a[j] - b[j]).norm() < 1e-2 * a[j].norm());
            }
        }
        // Exact check across the branch switch.
        let z = C::new(1.5, 0.0);
        let p = phi_functions(z);
        assert!((p[1].re - (1.5f64.exp() - 1.0) / 1.5).abs() < 1e-14);
        let zs = C::new(0.5, 0.0);
        let ps = phi_functions(zs);
        assert!((ps[2].re - (0.5f64.exp() - 1.0 - 0.5) / 0.25).abs() < 1e-14);
    }

    #[test]
    fn no_delay_is_exponential() {
        let traj = scalar_dde_solve(c(-1.0), c(0.0), 1.0, |_| c(1.0), 10.0, 1.0 / 64.0).unwrap();
        let err = traj
            .iter()
            .map(|(t, w)| (w - c((-t).exp())).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-8, "err = {err}");
    }

    #[test]
    fn balanced_delay_is_constant() {
        for h in [0.3, 1.0, 2.5] {
            let traj = scalar_dde_solve(c(-1.0), c(1.0), h, |_| c(1.0), 20.0, h / 32.0).unwrap();
            for (_, w) in traj {
                assert!((w - c(1.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn halanay_envelope() {
        let tau = halanay_root(-2.0, 1.0, 1.0);
        let traj = scalar_dde_solve(c(-2.0), c(1.0), 1.0, |_| c(1.0), 30.0, 1.0 / 64.0).unwrap();
        for (t, w) in traj {
            let bound = (tau * t + tau.abs()).exp();
            assert!(w.norm() <= bound + 1e-8, "t={t}: {} > {bound}", w.norm());
        }
    }

    #[test]
    fn converges_at_fourth_order() {
        // Non-trivial history so the Hermite interpolation matters.
        let hist = |s: f64| C::new((2.0 * s).cos(), 0.3 * s);
        let mu = C::new(-0.4, 1.3);
        let kappa = C::new(0.6, -0.2);
        let run = |n_h: usize| {
            let t = scalar_dde_solve(mu, kappa, 1.0, hist, 4.0, 1.0 / n_h as f64).unwrap();
            t.last().unwrap().1
        };
        let a = run(16);
        let b = run(32);
        let r = run(256);
        let e1 = (a - r).norm();
        let e2 = (b - r).norm();
        assert!(e1 / e2 > 10.0, "ratio {}", e1 / e2);
    }

    #[test]
    fn step_must_divide_delay() {
        assert!(matches!(
            scalar_dde_solve(c(-1.0), c(0.0), 1.0, |_| c(1.0), 1.0, 0.3),
            Err(Error::StepDoesNotDivideDelay { .. })
        ));
    }
}
