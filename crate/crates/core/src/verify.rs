//! Fast invariant suite behind the `verify` subcommand.

use serde::Serialize;

use crate::birth::BirthFunction;
use crate::characteristic::{critical_speeds, halanay_root, tangency_solve, CharParams};
use crate::error::Result;
use crate::experiments::{compact_bump, cross_validation, critical_coefficients, CrossValidationConfig};
use crate::fundamental::SymbolTable;
use crate::grid::{Field, Grid, History};
use crate::kernels::Kernel;
use crate::level_set::level_set;
use crate::nonlinear_solver::{comparison_run, KppProblem, KppStepper};

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, run: impl FnOnce() -> Result<(bool, String)>) -> Check {
    match run() {
        Ok((passed, detail)) => Check { name, passed, detail },
        Err(e) => Check {
            name,
            passed: false,
            detail: format!("error: {e}"),
        },
    }
}

fn halanay() -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    let mut sign_ok = true;
    for i in 0..20 {
        for j in 0..10 {
            for &h in &[0.0, 0.1, 1.0, 5.0] {
                let re_mu = -5.0 + 0.5 * i as f64;
                let k = 0.6 * j as f64;
                let tau = halanay_root(re_mu, k, h);
                let r = (tau - re_mu - k * (-tau * h).exp()).abs() / (1.0 + tau.abs());
                worst = worst.max(r);
                let s = re_mu + k;
                sign_ok &= (s < 0.0 && tau < 0.0) || (s > 0.0 && tau > 0.0) || (s == 0.0 && tau == 0.0);
            }
        }
    }
    Ok((worst < 1e-12 && sign_ok, format!("max relative residual {worst:e}, sign laws {sign_ok}")))
}

fn dirac_speeds() -> Result<(bool, String)> {
    let k = Kernel::dirac(0.0, 1.0)?;
    let s0 = critical_speeds(&k, 2.0, 0.0)?;
    let s1 = critical_speeds(&k, 2.0, 1.0)?;
    let r = 2f64.ln().sqrt();
    let err = [
        (s0.c_plus - 2.0).abs(),
        (s0.lambda_plus - 1.0).abs(),
        (s1.c_plus - r).abs(),
        (s1.lambda_plus - r).abs(),
        (s1.c_minus + r).abs(),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    Ok((err < 1e-10, format!("max error {err:e}")))
}

fn birth_hypotheses() -> Result<(bool, String)> {
    let gs = [
        BirthFunction::nicholson(2.0, 1.0)?,
        BirthFunction::nicholson(10.0, 1.0)?.monotone_envelope(),
        BirthFunction::mackey_glass(2.0, 1.0, 8.0)?,
        BirthFunction::linear_cap(2.0, 1.0)?,
    ];
    let ok = gs.iter().all(|g| {
        let k = g.kappa();
        (g.eval(k) - k).abs() < 1e-12 * k
            && g.gprime0() > 1.0
            && (0..=400).all(|i| {
                let u = 4.0 * k * i as f64 / 400.0;
                g.eval(u) <= g.gprime0() * u + 1e-14
            })
    });
    Ok((ok, format!("{} birth functions", gs.len())))
}

fn tangency() -> Result<(bool, String)> {
    let k = Kernel::gaussian(0.0, 1.0, 1.0)?;
    let (m, p) = critical_coefficients(&k, 0.1)?;
    let t = tangency_solve(&CharParams::new(m, p, 1.0)?, &k)?;
    let err = t.gamma_m.abs().max((t.z_m - 0.1).abs());
    let res = t.residual_value.abs().max(t.residual_slope.abs());
    Ok((err < 1e-9 && res < 1e-10, format!("|γ_m|, |z_m - 0.1| <= {err:e}, residuals {res:e}")))
}

fn fundamental_symbol() -> Result<(bool, String)> {
    let table = SymbolTable::with_defaults(
        CharParams::new(0.0, -1.0, 1.0)?,
        Kernel::gaussian(0.0, 1.5, 0.8)?,
    )?;
    let r = table.max_residual();
    Ok((r < 1e-12, format!("max symbol residual {r:e}")))
}

fn solvers_agree() -> Result<(bool, String)> {
    let r = cross_validation(&CrossValidationConfig::desk())?;
    Ok((r.verdict.passed(), format!("relative L∞ difference {:e}", r.relative_error)))
}

fn comparison() -> Result<(bool, String)> {
    let grid = Grid::new(100.0, 512)?;
    let g = BirthFunction::nicholson(2.0, 1.0)?;
    let prob = KppProblem::kpp(Kernel::gaussian(0.0, 1.0, 1.0)?, g, grid, 1.0)?;
    let hist = History::from_fn(&grid, 1.0, 16, |_, x| (-x * x / 2.0).exp());
    let rep = comparison_run(&prob, &hist, &hist, 5.0, 0.5)?;
    let ok = rep.max_excess < 1e-8 * g.kappa() && rep.max_envelope_violation <= 0.0;
    Ok((
        ok,
        format!("excess {:e}, envelope violation {:e}", rep.max_excess, rep.max_envelope_violation),
    ))
}

fn equilibria() -> Result<(bool, String)> {
    let grid = Grid::new(50.0, 256)?;
    let g = BirthFunction::nicholson(2.0, 1.0)?;
    let prob = KppProblem::kpp(Kernel::gaussian(0.0, 1.0, 1.0)?, g, grid, 1.0)?;
    let mut worst: f64 = 0.0;
    for level in [0.0, g.kappa()] {
        let mut st = KppStepper::new(&prob, &History::constant(vec![level; 256], 16), 1.0 / 16.0)?;
        st.advance_to(5.0)?;
        worst = st.values().iter().fold(worst, |a, v| a.max((v - level).abs()));
    }
    Ok((worst < 1e-9, format!("max drift {worst:e}")))
}

fn level_sets() -> Result<(bool, String)> {
    let grid = Grid::new(40.0, 512)?;
    let f = Field {
        time: 0.0,
        values: compact_bump(&grid, 0.0, 5.0, 1.0),
    };
    let c = level_set(&grid, &f, 0.5);
    let (a, b) = (c.m_minus.unwrap_or(f64::NAN), c.m_plus.unwrap_or(f64::NAN));
    let ok = (a + b).abs() < grid.dx() && (a + 2.5).abs() < 0.01;
    Ok((ok, format!("crossings {a}, {b}")))
}

/// Runs every check; the solver comparison dominates the run time.
pub fn run_suite() -> Vec<Check> {
    vec![
        check("halanay_roots", halanay),
        check("dirac_speed_anchors", dirac_speeds),
        check("birth_hypotheses", birth_hypotheses),
        check("tangency_construction", tangency),
        check("fundamental_symbol", fundamental_symbol),
        check("spectral_vs_fd", solvers_agree),
        check("comparison_principle", comparison),
        check("equilibria_fixed", equilibria),
        check("level_set_symmetry", level_sets),
    ]
}

#[cfg(test)]
mod tests {
    #[test]
    fn suite_passes() {
        for c in super::run_suite() {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }
}
