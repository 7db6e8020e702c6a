//! Fourier-defined fundamental solution of the linear delayed equation.
//!
//! `Γ(t, x) = ∫ e^{i(x + mt)y} e^{(ρ(y) + γ)t} dy`, where `ρ(y)` is the real root
//! of `ρ = -y² + p + S(y) e^{-hρ}` with `S(y) = k̂(y) e^{-imhy}`. Substituting a
//! single mode `e^{i(x + mt)y + ρt}` into the equation gives exactly this symbol.
//! The construction needs `S` real and nonnegative and `|S(y)| e^{hy²}` bounded.
//!
//! Γ carries no `1/(2π)`: `∫Γ dx = 2π e^{(ρ(0) + γ)t}`, and the identity
//! operator is `(2π)^{-1} Γ * ψ`.

use num_complex::Complex64;
use serde::Serialize;

use crate::characteristic::{halanay_root, CharParams};
use crate::error::{Error, Result};
use crate::grid::{Grid, Spectral};
use crate::kernels::Kernel;

type C = Complex64;

/// Relative weight the outermost frequencies may carry before the z-grid is too short.
pub const TAIL_LIMIT: f64 = 1e-12;

/// Symbol `S(y) = k̂(y) e^{-imhy}` entering the ρ-equation.
pub fn symbol(params: &CharParams, kernel: &Kernel, y: f64) -> C {
    kernel.fourier_transform(y) * C::from_polar(1.0, -params.m * params.h * y)
}

fn check_symbol(s: C, y: f64) -> Result<()> {
    if s.im.abs() > 1e-10 * s.norm().max(f64::MIN_POSITIVE) {
        return Err(Error::GateFailed {
            z: y,
            reason: format!("symbol is not real (imaginary part {:e})", s.im),
        });
    }
    if s.re < 0.0 {
        return Err(Error::GateFailed {
            z: y,
            reason: format!("symbol is negative ({:e})", s.re),
        });
    }
    Ok(())
}

/// `ρ(y)` at a single frequency; fails if the symbol there is not real and nonnegative.
pub fn rho_solve(params: &CharParams, kernel: &Kernel, y: f64) -> Result<f64> {
    let s = symbol(params, kernel, y);
    check_symbol(s, y)?;
    Ok(rho_from_log(params, y, kernel.ln_fourier_modulus(y)))
}

/// Root of the ρ-equation from `ln S(y)`.
///
/// Writing `ρ = -y² + p + r` gives `r = A e^{-hr}` with `A = S e^{h(y² - p)}`,
/// which stays O(1) exactly where `S` itself underflows.
fn rho_from_log(params: &CharParams, y: f64, ln_s: f64) -> f64 {
    let base = -y * y + params.p;
    let a = (ln_s - params.h * base).exp();
    if a.is_finite() {
        base + halanay_root(0.0, a, params.h)
    } else {
        halanay_root(base, ln_s.exp(), params.h)
    }
}

/// `ρ` tabulated on the frequency grid dual to a periodic x-grid.
#[derive(Debug, Clone)]
pub struct SymbolTable {
    pub params: CharParams,
    pub kernel: Kernel,
    /// x-grid; its FFT wavenumbers are the y-nodes.
    pub grid: Grid,
    pub ys: Vec<f64>,
    pub rho: Vec<f64>,
    /// `ln S(y)`.
    pub ln_symbol: Vec<f64>,
}

impl SymbolTable {
    pub const DEFAULT_HALF_WIDTH: f64 = 40.0;
    pub const DEFAULT_POINTS: usize = 4096;

    pub fn with_defaults(params: CharParams, kernel: Kernel) -> Result<Self> {
        Self::new(params, kernel, Self::DEFAULT_HALF_WIDTH, Self::DEFAULT_POINTS)
    }

    /// Tabulates `ρ` on `n` frequencies spanning `[-half_width, half_width)`.
    ///
    /// Runs the applicability gate: `S` real and nonnegative everywhere, and
    /// `|S| e^{hy²}` on the outer half of the band no larger than on the inner half.
    pub fn new(params: CharParams, kernel: Kernel, half_width: f64, n: usize) -> Result<Self> {
        kernel.validate()?;
        let period = std::f64::consts::PI * n as f64 / half_width;
        let grid = Grid::new(period, n)?;
        let ys = grid.wavenumbers();
        let symbols: Vec<C> = ys.iter().map(|&y| symbol(&params, &kernel, y)).collect();
        for (&y, &s) in ys.iter().zip(&symbols) {
            check_symbol(s, y)?;
        }
        let ln_symbol: Vec<f64> = ys.iter().map(|&y| kernel.ln_fourier_modulus(y)).collect();
        decay_gate(&params, &ys, &ln_symbol, half_width)?;
        let rho = ys
            .iter()
            .zip(&ln_symbol)
            .map(|(&y, &ls)| rho_from_log(&params, y, ls))
            .collect();
        Ok(SymbolTable {
            params,
            kernel,
            grid,
            ys,
            rho,
            ln_symbol,
        })
    }

    pub fn dy(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.grid.length()
    }

    /// Largest `|ρ - (-y² + p + S e^{-hρ})|` over the table.
    pub fn max_residual(&self) -> f64 {
        let h = self.params.h;
        self.ys
            .iter()
            .zip(&self.rho)
            .zip(&self.ln_symbol)
            .map(|((&y, &r), &ls)| (r - (-y * y + self.params.p + (ls - h * r).exp())).abs())
            .fold(0.0, f64::max)
    }

    /// `ρ(0)`, the rate of the zero mode.
    pub fn rho0(&self) -> f64 {
        self.rho[0]
    }

    /// Mode coefficients `e^{iymt} e^{(ρ + γ)t}` in FFT order.
    pub fn coefficients(&self, t: f64, gamma_shift: f64) -> Vec<C> {
        let m = self.params.m;
        self.ys
            .iter()
            .zip(&self.rho)
            .map(|(&y, &r)| C::from_polar(((r + gamma_shift) * t).exp(), y * m * t))
            .collect()
    }

    fn check_tail(&self, coeffs: &[C], t: f64) -> Result<()> {
        let peak = coeffs.iter().fold(0.0, |a: f64, c| a.max(c.norm()));
        let n = coeffs.len();
        // The two bins nearest |y| = half_width.
        let edge = coeffs[n / 2].norm().max(coeffs[n / 2 - 1].norm()).max(coeffs[n / 2 + 1].norm());
        let tail = if peak > 0.0 { edge / peak } else { 0.0 };
        if tail > TAIL_LIMIT {
            return Err(Error::GridExtension {
                tail,
                limit: TAIL_LIMIT,
                t,
            });
        }
        Ok(())
    }
}

fn decay_gate(params: &CharParams, ys: &[f64], ln_symbol: &[f64], half_width: f64) -> Result<()> {
    // Compared in logs: ln|S| + hy².
    let mut inner = f64::NEG_INFINITY;
    let mut outer = (f64::NEG_INFINITY, 0.0);
    for (&y, &ls) in ys.iter().zip(ln_symbol) {
        if ls == f64::NEG_INFINITY {
            continue;
        }
        let w = ls + params.h * y * y;
        if y.abs() <= 0.5 * half_width {
            inner = inner.max(w);
        } else if w > outer.0 {
            outer = (w, y);
        }
    }
    if outer.0 > inner + 1e-9_f64.ln_1p() {
        return Err(Error::GateFailed {
            z: outer.1,
            reason: format!(
                "|symbol| e^(h y^2) grows: {:.3e} on the outer band vs {:.3e} on the inner band",
                outer.0.exp(),
                inner.exp()
            ),
        });
    }
    Ok(())
}

/// Γ sampled on the table's x-grid (natural order, `x_j = -P/2 + j dx`).
#[derive(Debug, Clone, Serialize)]
pub struct GammaSlice {
    pub t: f64,
    pub xs: Vec<f64>,
    pub values: Vec<f64>,
    /// Largest `|Im Γ|` relative to `max |Γ|`.
    pub imag_ratio: f64,
}

fn synthesize(table: &SymbolTable, coeffs: &[C]) -> Vec<C> {
    let n = coeffs.len();
    // x_0 = -P/2 contributes e^{-iπk} = (-1)^k.
    let alternated: Vec<C> = coeffs
        .iter()
        .enumerate()
        .map(|(k, &c)| if k % 2 == 0 { c } else { -c })
        .collect();
    let scale = table.dy() * n as f64;
    Spectral::new(n)
        .inverse_complex(&alternated)
        .into_iter()
        .map(|v| v * scale)
        .collect()
}

/// Γ(t, ·) on the whole x-grid.
pub fn gamma_h_grid(table: &SymbolTable, t: f64, gamma_shift: f64) -> Result<GammaSlice> {
    let coeffs = table.coefficients(t, gamma_shift);
    table.check_tail(&coeffs, t)?;
    let vals = synthesize(table, &coeffs);
    let peak = vals.iter().fold(0.0, |a: f64, v| a.max(v.norm()));
    let imag = vals.iter().fold(0.0, |a: f64, v| a.max(v.im.abs()));
    Ok(GammaSlice {
        t,
        xs: table.grid.xs().collect(),
        values: vals.iter().map(|v| v.re).collect(),
        imag_ratio: if peak > 0.0 { imag / peak } else { 0.0 },
    })
}

/// Γ(t, x) at a single point by the trapezoid rule over the y-grid.
pub fn gamma_h_eval(table: &SymbolTable, t: f64, x: f64, gamma_shift: f64) -> Result<f64> {
    let coeffs = table.coefficients(t, gamma_shift);
    table.check_tail(&coeffs, t)?;
    let sum: C = coeffs
        .iter()
        .zip(&table.ys)
        .map(|(c, &y)| c * C::from_polar(1.0, x * y))
        .sum();
    Ok(sum.re * table.dy())
}

/// `sup_x |(2π)^{-1}(Γ(t) * ψ)(x) - ψ(x)| / sup|ψ|`, maximized over the given profiles.
///
/// Each profile is sampled on `table.grid`.
pub fn approx_identity_error(
    table: &SymbolTable,
    t: f64,
    profiles: &[Vec<f64>],
    gamma_shift: f64,
) -> Result<f64> {
    let coeffs = table.coefficients(t, gamma_shift);
    table.check_tail(&coeffs, t)?;
    let spectral = Spectral::new(table.grid.n());
    let mut worst: f64 = 0.0;
    for psi in profiles {
        let mut hat = spectral.forward_real(psi);
        hat.iter_mut().zip(&coeffs).for_each(|(a, c)| *a *= c);
        let smoothed = spectral.inverse_real(&hat);
        let scale = psi.iter().fold(0.0, |a: f64, v| a.max(v.abs()));
        let err = smoothed
            .iter()
            .zip(psi)
            .fold(0.0, |a: f64, (s, p)| a.max((s - p).abs()));
        if scale > 0.0 {
            worst = worst.max(err / scale);
        }
    }
    Ok(worst)
}

/// Default central-difference step for [`pde_residual`].
pub fn default_residual_step(h: f64) -> f64 {
    h / 256.0
}

/// Residual of the linear equation for Γ at time `t > h`, relative to `max |Γ(t)|`.
///
/// The time derivative is a central difference with step `dt`; space derivatives
/// and the convolution are exact in mode space.
pub fn pde_residual(table: &SymbolTable, t: f64, dt: f64) -> Result<f64> {
    let h = table.params.h;
    if !(t > h) {
        return Err(Error::HistoryRequired { t, h });
    }
    let now = table.coefficients(t, 0.0);
    table.check_tail(&now, t)?;
    let ahead = table.coefficients(t + dt, 0.0);
    let behind = table.coefficients(t - dt, 0.0);
    let delayed = table.coefficients(t - h, 0.0);
    let (m, p) = (table.params.m, table.params.p);
    let res: Vec<C> = (0..now.len())
        .map(|k| {
            let y = table.ys[k];
            let khat = table.kernel.fourier_transform(y);
            let dcdt = (ahead[k] - behind[k]) / (2.0 * dt);
            dcdt - C::new(-y * y + p, m * y) * now[k] - khat * delayed[k]
        })
        .collect();
    let r = synthesize(table, &res);
    let g = synthesize(table, &now);
    let peak = g.iter().fold(0.0, |a: f64, v| a.max(v.norm()));
    let worst = r.iter().fold(0.0, |a: f64, v| a.max(v.norm()));
    Ok(worst / peak)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn gaussian_case() -> SymbolTable {
        let params = CharParams::new(0.0, -1.0, 1.0).unwrap();
        let kernel = Kernel::gaussian(0.0, 2f64.sqrt(), 0.8).unwrap();
        SymbolTable::with_defaults(params, kernel).unwrap()
    }

    fn heat_case() -> SymbolTable {
        let params = CharParams::new(0.0, 0.0, 1.0).unwrap();
        let kernel = Kernel::gaussian(0.0, 1.0, 0.0).unwrap();
        SymbolTable::with_defaults(params, kernel).unwrap()
    }

    #[test]
    fn crossing_case_has_zero_rate() {
        let params = CharParams::new(0.0, -0.7, 1.0).unwrap();
        let kernel = Kernel::gaussian(0.0, 2.0, 0.7).unwrap();
        assert_eq!(rho_solve(&params, &kernel, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn table_satisfies_symbol_equation() {
        let t = gaussian_case();
        assert!(t.max_residual() < 1e-12, "{}", t.max_residual());
    }

    #[test]
    fn gate_accepts_wide_gaussian_rejects_dirac_and_narrow() {
        let params = CharParams::new(0.0, -1.0, 1.0).unwrap();
        assert!(SymbolTable::with_defaults(params, Kernel::gaussian(0.0, 1.5, 1.0).unwrap()).is_ok());
        for k in [Kernel::dirac(0.0, 1.0).unwrap(), Kernel::gaussian(0.0, 1.3, 1.0).unwrap()] {
            assert!(matches!(
                SymbolTable::with_defaults(params, k),
                Err(Error::GateFailed { .. })
            ));
        }
    }

    #[test]
    fn drift_needs_matching_kernel_shift() {
        let params = CharParams::new(0.5, -1.0, 1.0).unwrap();
        let bad = Kernel::gaussian(0.0, 2.0, 1.0).unwrap();
        assert!(SymbolTable::with_defaults(params, bad).is_err());
        let good = Kernel::gaussian(-0.5, 2.0, 1.0).unwrap();
        assert!(SymbolTable::with_defaults(params, good).is_ok());
    }

    #[test]
    fn heat_reduction() {
        let table = heat_case();
        let t = 1.0;
        let g = gamma_h_grid(&table, t, 0.0).unwrap();
        let exact = |x: f64| (PI / t).sqrt() * (-x * x / (4.0 * t)).exp();
        let peak = exact(0.0);
        let err = g
            .xs
            .iter()
            .zip(&g.values)
            .fold(0.0, |a: f64, (&x, &v)| a.max((v - exact(x)).abs()));
        assert!(err / peak < 1e-10, "{}", err / peak);
        let point = gamma_h_eval(&table, t, 0.7, 0.0).unwrap();
        assert!((point - exact(0.7)).abs() < 1e-10 * peak);
    }

    #[test]
    fn mass_identity() {
        let table = gaussian_case();
        for t in [0.3, 1.0, 2.5] {
            let g = gamma_h_grid(&table, t, 0.2).unwrap();
            let mass: f64 = g.values.iter().sum::<f64>() * table.grid.dx();
            let expected = 2.0 * PI * ((table.rho0() + 0.2) * t).exp();
            assert!((mass - expected).abs() < 1e-10 * expected);
        }
    }

    #[test]
    fn identity_errors_shrink() {
        let table = gaussian_case();
        let psi = vec![table.grid.sample(|x| (-x * x / 8.0).exp())];
        let gamma = -table.rho0();
        let errs: Vec<f64> = [0.5, 0.1, 0.02]
            .iter()
            .map(|&t| approx_identity_error(&table, t, &psi, gamma).unwrap())
            .collect();
        assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
    }

    #[test]
    fn identity_is_shift_equivariant() {
        let table = gaussian_case();
        let g = -table.rho0();
        let a = vec![table.grid.sample(|x| (-x * x / 8.0).exp())];
        let shift = 64.0 * table.grid.dx();
        let b = vec![table.grid.sample(|x| (-(x - shift) * (x - shift) / 8.0).exp())];
        let ea = approx_identity_error(&table, 0.1, &a, g).unwrap();
        let eb = approx_identity_error(&table, 0.1, &b, g).unwrap();
        assert!((ea - eb).abs() < 1e-12);
        let one = vec![vec![1.0; table.grid.n()]];
        assert!(approx_identity_error(&table, 0.1, &one, g).unwrap() < 1e-13);
    }

    #[test]
    fn residual_small_and_second_order() {
        let table = gaussian_case();
        let h = table.params.h;
        let r1 = pde_residual(&table, 2.0 * h, default_residual_step(h)).unwrap();
        assert!(r1 < 1e-5, "{r1}");
        let r2 = pde_residual(&table, 2.0 * h, 0.5 * default_residual_step(h)).unwrap();
        assert!((r1 / r2 - 4.0).abs() < 0.2, "{}", r1 / r2);
        assert!(matches!(
            pde_residual(&table, 0.5 * h, 1e-3),
            Err(Error::HistoryRequired { .. })
        ));
    }

    #[test]
    fn heat_residual_tiny_with_fine_step() {
        let table = heat_case();
        let r = pde_residual(&table, 2.0, 1.0 / 4096.0).unwrap();
        assert!(r < 1e-8, "{r}");
    }

    #[test]
    fn short_grid_is_reported() {
        let params = CharParams::new(0.0, -1.0, 1.0).unwrap();
        let kernel = Kernel::gaussian(0.0, 2.0, 1.0).unwrap();
        let table = SymbolTable::new(params, kernel, 4.0, 256).unwrap();
        assert!(matches!(
            gamma_h_grid(&table, 0.1, 0.0),
            Err(Error::GridExtension { .. })
        ));
    }
}
