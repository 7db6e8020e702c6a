//! Spectral solver for the non-local delayed equation
//! `u_t = u_xx + m u_x + p u + ∫ k₀(x - y) g(u(t - h, y)) dy`.
//!
//! The KPP case is `m = 0`, `p = -1`. The linear part is integrated exactly per
//! mode. The delayed forcing `k̂₀ · FFT[g(u(t - h))]` is known at the two nodes
//! bracketing each delayed step and is interpolated linearly (exponential Euler
//! with linear forcing). Without delay the forcing is implicit in time and the
//! scheme switches to second-order exponential Runge-Kutta.

use num_complex::Complex64;
use serde::Serialize;

use crate::birth::BirthFunction;
use crate::characteristic::CharParams;
use crate::dde::{phi_functions, steps_per_delay};
use crate::error::{invalid, Error, Result};
use crate::grid::{Field, Grid, History, Spectral};
use crate::kernels::Kernel;
use crate::linear_solver::edge_mass_exceeded;

type C = Complex64;

/// Pointwise reaction fed through the kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Reaction {
    Birth(BirthFunction),
    /// `g(u) = slope · u`, applied without clamping.
    Linear { slope: f64 },
}

impl Reaction {
    fn eval(&self, u: f64) -> f64 {
        match self {
            Reaction::Birth(g) => g.eval(u),
            Reaction::Linear { slope } => slope * u,
        }
    }

    pub fn gprime0(&self) -> f64 {
        match self {
            Reaction::Birth(g) => g.gprime0(),
            Reaction::Linear { slope } => *slope,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct KppProblem {
    pub params: CharParams,
    pub kernel0: Kernel,
    pub reaction: Reaction,
    pub grid: Grid,
    /// Birth arguments below this level produce no births. Zero by default;
    /// a floor just above round-off stops FFT noise ahead of a front from being
    /// amplified by the unstable zero state.
    pub floor: f64,
}

impl KppProblem {
    pub fn new(params: CharParams, kernel0: Kernel, reaction: Reaction, grid: Grid) -> Result<Self> {
        kernel0.validate()?;
        if let Reaction::Birth(g) = reaction {
            g.validate()?;
        }
        Ok(KppProblem {
            params,
            kernel0,
            reaction,
            grid,
            floor: 0.0,
        })
    }

    pub fn with_floor(self, floor: f64) -> Result<Self> {
        if !(floor >= 0.0 && floor.is_finite()) {
            return Err(invalid("floor", format!("must be finite and >= 0, got {floor}")));
        }
        Ok(KppProblem { floor, ..self })
    }

    /// `u_t = u_xx - u + k₀ * g(u(t - h))`.
    pub fn kpp(kernel0: Kernel, birth: BirthFunction, grid: Grid, h: f64) -> Result<Self> {
        Self::new(CharParams::new(0.0, -1.0, h)?, kernel0, Reaction::Birth(birth), grid)
    }

    /// The same problem with `g` replaced by its linearization at 0.
    pub fn linear_majorant(&self) -> Self {
        KppProblem {
            reaction: Reaction::Linear {
                slope: self.reaction.gprime0(),
            },
            floor: 0.0,
            ..*self
        }
    }
}

/// Time stepper exposing the solution after each step.
pub struct KppStepper {
    reaction: Reaction,
    floor: f64,
    grid: Grid,
    spectral: Spectral,
    dt: f64,
    n_h: usize,
    decay: Vec<C>,
    // Weights of the forcing at the older and newer delayed node.
    w_old: Vec<C>,
    w_new: Vec<C>,
    uhat: Vec<C>,
    u: Vec<f64>,
    // Spectra of g(u) at the last n_h + 2 nodes, indexed by (node + n_h) mod len.
    ring: Vec<Vec<C>>,
    step: usize,
    clamps: usize,
    edge_warned: bool,
}

impl KppStepper {
    /// `dt` must divide `h` into `history.n_h()` steps; with `h = 0` only the last
    /// snapshot of the history is used.
    pub fn new(problem: &KppProblem, history: &History, dt: f64) -> Result<Self> {
        let grid = problem.grid;
        let n = grid.n();
        if history.snapshots.iter().any(|s| s.len() != n) {
            return Err(invalid("history", "snapshot length differs from the grid"));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(invalid("dt", format!("must be > 0, got {dt}")));
        }
        let h = problem.params.h;
        let n_h = if h > 0.0 {
            let n_h = steps_per_delay(h, dt)?;
            if n_h != history.n_h() {
                return Err(invalid(
                    "history",
                    format!("expected {} snapshots on [-h, 0], got {}", n_h + 1, history.snapshots.len()),
                ));
            }
            n_h
        } else {
            0
        };
        let dt = if h > 0.0 { h / n_h as f64 } else { dt };
        let mut decay = Vec::with_capacity(n);
        let mut w_old = Vec::with_capacity(n);
        let mut w_new = Vec::with_capacity(n);
        for k in 0..n {
            let xi = grid.wavenumber(k);
            let lin = C::new(-xi * xi + problem.params.p, problem.params.m * xi);
            let khat = problem.kernel0.fourier_transform(xi);
            let phi = phi_functions(lin * dt);
            decay.push(phi[0]);
            if h > 0.0 {
                w_old.push(khat * (phi[1] - phi[2]) * dt);
                w_new.push(khat * phi[2] * dt);
            } else {
                w_old.push(khat * phi[1] * dt);
                w_new.push(khat * phi[2] * dt);
            }
        }
        let spectral = Spectral::new(n);
        let u = history.last().to_vec();
        let uhat = spectral.forward_real(&u);
        let mut st = KppStepper {
            reaction: problem.reaction,
            floor: problem.floor,
            grid,
            spectral,
            dt,
            n_h,
            decay,
            w_old,
            w_new,
            uhat,
            u,
            ring: vec![Vec::new(); n_h + 2],
            step: 0,
            clamps: 0,
            edge_warned: false,
        };
        if h > 0.0 {
            for (j, snap) in history.snapshots.iter().enumerate() {
                st.ring[j] = st.forcing(snap);
            }
        }
        Ok(st)
    }

    fn forcing(&mut self, u: &[f64]) -> Vec<C> {
        if matches!(self.reaction, Reaction::Birth(_)) {
            self.clamps += u.iter().filter(|&&v| v < 0.0).count();
        }
        let reaction = self.reaction;
        let floor = match reaction {
            Reaction::Birth(_) => self.floor,
            Reaction::Linear { .. } => f64::NEG_INFINITY,
        };
        let g: Vec<f64> = u
            .iter()
            .map(|&v| if v < floor { 0.0 } else { reaction.eval(v) })
            .collect();
        self.spectral.forward_real(&g)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn time(&self) -> f64 {
        self.step as f64 * self.dt
    }

    pub fn steps_taken(&self) -> usize {
        self.step
    }

    pub fn values(&self) -> &[f64] {
        &self.u
    }

    pub fn field(&self) -> Field {
        Field {
            time: self.time(),
            values: self.u.clone(),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Number of negative arguments clamped to 0 before applying `g`.
    pub fn clamps(&self) -> usize {
        self.clamps
    }

    pub fn step(&mut self) -> Result<()> {
        if self.n_h > 0 {
            self.step_delayed();
        } else {
            self.step_undelayed();
        }
        if self.u.iter().any(|v| !v.is_finite()) {
            return Err(Error::Blowup {
                last_healthy: self.time(),
            });
        }
        self.step += 1;
        if !self.edge_warned && edge_mass_exceeded(&Field { time: 0.0, values: self.u.clone() }) {
            self.edge_warned = true;
            log::warn!(
                "solution reaches the periodic boundary at t = {:.4}; enlarge the domain",
                self.time()
            );
        }
        Ok(())
    }

    pub fn advance_to(&mut self, t: f64) -> Result<()> {
        let target = (t / self.dt).round() as usize;
        while self.step < target {
            self.step()?;
        }
        Ok(())
    }

    fn step_delayed(&mut self) {
        let len = self.ring.len();
        // Nodes n - n_h and n - n_h + 1 live at ring slots n and n + 1.
        let old = self.step % len;
        let new = (self.step + 1) % len;
        for k in 0..self.uhat.len() {
            self.uhat[k] = self.decay[k] * self.uhat[k]
                + self.w_old[k] * self.ring[old][k]
                + self.w_new[k] * self.ring[new][k];
        }
        self.u = self.spectral.inverse_real(&self.uhat);
        let f = self.forcing(&self.u.clone());
        self.ring[(self.step + self.n_h + 1) % len] = f;
    }

    fn step_undelayed(&mut self) {
        let f0 = self.forcing(&self.u.clone());
        let a: Vec<C> = (0..self.uhat.len())
            .map(|k| self.decay[k] * self.uhat[k] + self.w_old[k] * f0[k])
            .collect();
        let ua = self.spectral.inverse_real(&a);
        let fa = self.forcing(&ua);
        for k in 0..self.uhat.len() {
            self.uhat[k] = a[k] + self.w_new[k] * (fa[k] - f0[k]);
        }
        self.u = self.spectral.inverse_real(&self.uhat);
    }
}

#[derive(Debug, Clone)]
pub struct KppSolution {
    pub grid: Grid,
    pub dt: f64,
    pub fields: Vec<Field>,
    pub clamps: usize,
}

/// Runs to the largest requested time and records snapshots at `times`.
pub fn solve_kpp(problem: &KppProblem, history: &History, dt: f64, times: &[f64]) -> Result<KppSolution> {
    let mut st = KppStepper::new(problem, history, dt)?;
    let mut sorted = times.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut fields = Vec::with_capacity(sorted.len());
    for t in sorted {
        st.advance_to(t)?;
        fields.push(st.field());
    }
    Ok(KppSolution {
        grid: problem.grid,
        dt: st.dt(),
        fields,
        clamps: st.clamps(),
    })
}

/// Outcome of running `u` against its linear majorant `v`.
#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub lambda: f64,
    /// `N` with `v₀ ≤ N e^{λx}` on the grid.
    pub n_const: f64,
    pub n_prime: f64,
    pub theta0: f64,
    pub theta: f64,
    /// `max (u - v)⁺` over the run.
    pub max_excess: f64,
    /// `max (w - N'θⁿe^{λx})⁺` over `w ∈ {u, v}`, ignoring values below `1e-12 max|w|`.
    pub max_envelope_violation: f64,
    pub steps: usize,
    pub clamps: usize,
}

/// Checks `0 ≤ u ≤ v ≤ N'θⁿ e^{λx}` on `[(n-1)h, nh]` along a simulation.
pub fn comparison_run(
    problem: &KppProblem,
    u0: &History,
    v0: &History,
    t_end: f64,
    lambda: f64,
) -> Result<ComparisonReport> {
    let h = problem.params.h;
    if !(h > 0.0) {
        return Err(invalid("h", "the comparison run needs a positive delay"));
    }
    let grid = problem.grid;
    let xs: Vec<f64> = grid.xs().collect();
    for (a, b) in u0.snapshots.iter().zip(&v0.snapshots) {
        if let Some(j) = (0..a.len()).find(|&j| a[j] < 0.0 || a[j] > b[j]) {
            return Err(Error::Ordering(format!(
                "need 0 <= u0 <= v0, violated at x = {} ({} vs {})",
                xs[j], a[j], b[j]
            )));
        }
    }
    let n_const = v0
        .snapshots
        .iter()
        .flat_map(|s| s.iter().zip(&xs).map(|(v, x)| v * (-lambda * x).exp()))
        .fold(0.0, f64::max);
    let q1 = problem.params.q1(lambda);
    let tilted_mass = problem.kernel0.laplace_transform(lambda)?;
    let gp = problem.reaction.gprime0();
    let theta0 = 1.0 + h * gp * (q1 * h).exp() * tilted_mass;
    let theta = theta0 * (q1 * h).exp();
    let n_prime = n_const * (2.0 * q1.abs() * h).exp() * theta0;

    let dt = h / u0.n_h() as f64;
    let mut su = KppStepper::new(problem, u0, dt)?;
    let mut sv = KppStepper::new(&problem.linear_majorant(), v0, dt)?;
    let mut max_excess: f64 = 0.0;
    let mut max_violation: f64 = 0.0;
    let target = (t_end / dt).round() as usize;
    while su.steps_taken() < target {
        su.step()?;
        sv.step()?;
        let t = su.time();
        let blocks = (t / h - 1e-9).ceil().max(0.0);
        let bound_scale = n_prime * theta.powf(blocks);
        let (u, v) = (su.values(), sv.values());
        let floor_u = 1e-12 * u.iter().fold(0.0, |a: f64, w| a.max(w.abs()));
        let floor_v = 1e-12 * v.iter().fold(0.0, |a: f64, w| a.max(w.abs()));
        for j in 0..u.len() {
            max_excess = max_excess.max(u[j] - v[j]);
            let b = bound_scale * (lambda * xs[j]).exp();
            max_violation = max_violation
                .max(u[j] - b.max(floor_u))
                .max(v[j] - b.max(floor_v));
        }
    }
    Ok(ComparisonReport {
        lambda,
        n_const,
        n_prime,
        theta0,
        theta,
        max_excess,
        max_envelope_violation: max_violation,
        steps: su.steps_taken(),
        clamps: su.clamps(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nicholson_problem(n: usize) -> KppProblem {
        let grid = Grid::new(100.0, n).unwrap();
        let kernel = Kernel::gaussian(0.0, 1.0, 1.0).unwrap();
        KppProblem::kpp(kernel, BirthFunction::nicholson(2.0, 1.0).unwrap(), grid, 1.0).unwrap()
    }

    #[test]
    fn equilibria_are_fixed() {
        let prob = nicholson_problem(256);
        let kappa = 2f64.ln();
        for level in [0.0, kappa] {
            let hist = History::constant(vec![level; 256], 32);
            let sol = solve_kpp(&prob, &hist, 1.0 / 32.0, &[50.0]).unwrap();
            let dev = sol.fields[0].values.iter().fold(0.0, |a: f64, v| a.max((v - level).abs()));
            assert!(dev < 1e-9, "level {level}: {dev}");
        }
    }

    #[test]
    fn linear_reaction_matches_linear_solver() {
        use crate::linear_solver::solve_linear;
        let grid = Grid::new(60.0, 256).unwrap();
        let kernel = Kernel::gaussian(0.3, 1.0, 1.0).unwrap();
        let params = CharParams::new(0.4, -1.0, 1.0).unwrap();
        let prob = KppProblem::new(params, kernel, Reaction::Linear { slope: 0.9 }, grid).unwrap();
        let hist = History::from_fn(&grid, 1.0, 64, |s, x| (-(x - s) * (x - s) / 4.0).exp());
        let a = solve_kpp(&prob, &hist, 1.0 / 64.0, &[3.0]).unwrap();
        let b = solve_linear(&params, &kernel.scaled(0.9).unwrap(), &grid, &hist, &[3.0]).unwrap();
        let diff = a.fields[0]
            .values
            .iter()
            .zip(&b.fields[0].values)
            .fold(0.0, |m: f64, (x, y)| m.max((x - y).abs()));
        assert!(diff < 1e-4 * b.fields[0].max_abs(), "{diff}");
    }

    #[test]
    fn second_order_in_time() {
        let grid = Grid::new(60.0, 256).unwrap();
        let kernel = Kernel::gaussian(0.0, 1.0, 1.0).unwrap();
        let prob = KppProblem::kpp(kernel, BirthFunction::nicholson(2.0, 1.0).unwrap(), grid, 1.0).unwrap();
        let run = |n_h: usize| {
            let hist = History::from_fn(&grid, 1.0, n_h, |_, x| 0.5 * (-x * x / 4.0).exp());
            solve_kpp(&prob, &hist, 1.0 / n_h as f64, &[4.0]).unwrap().fields[0].values.clone()
        };
        let (a, b, r) = (run(16), run(32), run(256));
        let err = |x: &[f64]| x.iter().zip(&r).fold(0.0, |m: f64, (p, q)| m.max((p - q).abs()));
        let ratio = err(&a) / err(&b);
        assert!(ratio > 3.0 && ratio < 5.0, "{ratio}");
    }

    #[test]
    fn undelayed_kpp_is_second_order() {
        let grid = Grid::new(60.0, 256).unwrap();
        let prob = KppProblem::kpp(
            Kernel::dirac(0.0, 1.0).unwrap(),
            BirthFunction::nicholson(3.0, 1.0).unwrap(),
            grid,
            0.0,
        )
        .unwrap();
        let hist = History::constant(grid.sample(|x| 0.5 * (-x * x).exp()), 0);
        let run = |dt: f64| solve_kpp(&prob, &hist, dt, &[2.0]).unwrap().fields[0].values.clone();
        let (a, b, r) = (run(0.02), run(0.01), run(0.000625));
        let err = |x: &[f64]| x.iter().zip(&r).fold(0.0, |m: f64, (p, q)| m.max((p - q).abs()));
        let ratio = err(&a) / err(&b);
        assert!(ratio > 3.0 && ratio < 5.0, "{ratio}");
    }

    #[test]
    fn comparison_holds() {
        let prob = {
            let grid = Grid::new(200.0, 1024).unwrap();
            let kernel = Kernel::gaussian(0.0, 1.0, 1.0).unwrap();
            KppProblem::kpp(kernel, BirthFunction::nicholson(2.0, 1.0).unwrap(), grid, 1.0).unwrap()
        };
        let hist = History::from_fn(&prob.grid, 1.0, 32, |_, x| (-x * x / 2.0).exp());
        let rep = comparison_run(&prob, &hist, &hist, 20.0, 0.5).unwrap();
        let kappa = 2f64.ln();
        assert!(rep.max_excess < 1e-8 * kappa, "{rep:?}");
        assert!(rep.max_envelope_violation <= 0.0, "{rep:?}");
    }

    #[test]
    fn linear_birth_equals_majorant() {
        let grid = Grid::new(100.0, 256).unwrap();
        let kernel = Kernel::gaussian(0.0, 1.0, 1.0).unwrap();
        let prob = KppProblem::new(
            CharParams::new(0.0, -1.0, 1.0).unwrap(),
            kernel,
            Reaction::Linear { slope: 1.5 },
            grid,
        )
        .unwrap();
        let hist = History::from_fn(&grid, 1.0, 16, |_, x| (-x * x).exp());
        let rep = comparison_run(&prob, &hist, &hist, 5.0, 0.5).unwrap();
        assert_eq!(rep.max_excess, 0.0);
    }

    #[test]
    fn ordering_is_checked() {
        let prob = nicholson_problem(256);
        let u0 = History::constant(vec![1.0; 256], 8);
        let v0 = History::constant(vec![0.5; 256], 8);
        assert!(matches!(
            comparison_run(&prob, &u0, &v0, 1.0, 0.5),
            Err(Error::Ordering(_))
        ));
    }
}
