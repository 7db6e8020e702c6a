//! Transcendental equations of the delayed linear equation
//! `u_t = u_xx + m u_x + p u + k * u(t - h)`.
//!
//! Throughout, `q1(z) = -z² - m z - p` and `q2(z)` is the bilateral Laplace
//! transform of the kernel.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::kernels::Kernel;
use crate::roots::{bracketed_increasing, increasing_root};

const ROOT_TOL: f64 = 1e-13;

/// Coefficients `(m, p, h)` of the linear equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharParams {
    pub m: f64,
    pub p: f64,
    pub h: f64,
}

impl CharParams {
    pub fn new(m: f64, p: f64, h: f64) -> Result<Self> {
        if !(h.is_finite() && h >= 0.0) {
            return Err(invalid("h", format!("delay must be >= 0, got {h}")));
        }
        if !m.is_finite() || !p.is_finite() {
            return Err(invalid("m/p", "must be finite"));
        }
        Ok(CharParams { m, p, h })
    }

    pub fn q1(&self, z: f64) -> f64 {
        -z * z - self.m * z - self.p
    }

    pub fn q1_prime(&self, z: f64) -> f64 {
        -2.0 * z - self.m
    }
}

/// Unique real root of `τ = re_mu + k_abs e^{-τh}`.
///
/// `τ - re_mu - k_abs e^{-hτ}` is strictly increasing in `τ`, so the root is
/// bracketed and polished by safeguarded Newton. Returns exactly `0.0` when
/// `re_mu + k_abs == 0`.
pub fn halanay_root(re_mu: f64, k_abs: f64, h: f64) -> f64 {
    if h == 0.0 || k_abs == 0.0 {
        return re_mu + k_abs;
    }
    increasing_root(
        |tau| {
            let e = k_abs * (-h * tau).exp();
            (tau - re_mu - e, 1.0 + h * e)
        },
        ROOT_TOL,
    )
}

/// [`halanay_root`] from `ln k_abs`, for coefficients whose `e^{-hτ}` overflows.
///
/// Solves for `r = τ - re_mu > 0`, which satisfies `ln r + h r = ln A` with
/// `ln A = ln k_abs - h re_mu`.
pub fn halanay_root_ln(re_mu: f64, ln_k: f64, h: f64) -> f64 {
    if ln_k == f64::NEG_INFINITY {
        return re_mu;
    }
    if h == 0.0 {
        return re_mu + ln_k.exp();
    }
    let ln_a = ln_k - h * re_mu;
    let f = |r: f64| (r.ln() + h * r - ln_a, 1.0 / r + h);
    // f is -inf at 0 and increasing; bracket the root above.
    let mut hi = 1.0;
    while f(hi).0 < 0.0 {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    re_mu + bracketed_increasing(&f, &mut lo, &mut hi, ROOT_TOL)
}

/// Bound on `|w(t)|` for `w' = μw + κw(t-h)` given `sup_{[-h,0]} |w|` and the
/// Halanay rate `tau`.
///
/// The prefactor is `e^{max(0, τh)}`: for `τ > 0` the exponential must still
/// dominate the history at `s = -h`.
pub fn halanay_envelope(sup_history: f64, tau: f64, h: f64, t: f64) -> f64 {
    sup_history * ((tau * h).max(0.0) + tau * t).exp()
}

/// Decay pair `(γ₀, z₀)` with `-γ₀ + q1(z₀) = q2(z₀) e^{γ₀ h}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayPair {
    pub gamma0: f64,
    pub z0: f64,
    /// `q2(z₀)`, the tilted kernel's mass.
    pub khat0: f64,
    /// `q1(z₀)`.
    pub q1: f64,
}

impl DecayPair {
    pub fn residual(&self, h: f64) -> f64 {
        -self.gamma0 + self.q1 - self.khat0 * (self.gamma0 * h).exp()
    }
}

pub fn gamma_zero(params: &CharParams, kernel: &Kernel, z0: f64) -> Result<DecayPair> {
    let khat0 = kernel.laplace_transform(z0)?;
    let q1 = params.q1(z0);
    let gamma0 = -halanay_root(-q1, khat0, params.h);
    Ok(DecayPair {
        gamma0,
        z0,
        khat0,
        q1,
    })
}

/// `γ(z)`: the unique `γ` with `q1(z) - γ = e^{hγ} q2(z)`.
pub fn gamma_of_z(params: &CharParams, kernel: &Kernel, z: f64) -> Result<f64> {
    let q2 = kernel.laplace_transform(z)?;
    Ok(-halanay_root(-params.q1(z), q2, params.h))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TangencySolution {
    pub gamma_m: f64,
    pub z_m: f64,
    pub sigma_m: f64,
    pub k_star: f64,
    pub khat0: f64,
    /// `q1(z_m) - γ_m - e^{hγ_m} q2(z_m)`.
    pub residual_value: f64,
    /// `q1'(z_m) - e^{hγ_m} q2'(z_m)`.
    pub residual_slope: f64,
}

/// Variance coefficient from the tangency data.
pub fn sigma_formula(gamma: f64, k_star: f64, khat0: f64, h: f64) -> f64 {
    let e = (gamma * h).exp();
    (2.0 + k_star * e) / (2.0 * (1.0 + h * e * khat0))
}

struct Slope {
    gamma: f64,
    residual: f64,
    derivative: f64,
}

fn tangency_slope(params: &CharParams, kernel: &Kernel, z: f64) -> Result<Slope> {
    let [q2, q2p, q2pp] = kernel.laplace_derivs(z)?;
    let h = params.h;
    let gamma = -halanay_root(-params.q1(z), q2, h);
    let e = (h * gamma).exp();
    let residual = params.q1_prime(z) - e * q2p;
    let gamma_p = residual / (1.0 + h * e * q2);
    let derivative = -2.0 - h * gamma_p * e * q2p - e * q2pp;
    Ok(Slope {
        gamma,
        residual,
        derivative,
    })
}

/// Point where `q1 - γ` and `e^{hγ} q2` touch.
///
/// `γ(z)` is maximized over the transform domain; its derivative has the sign
/// of `q1'(z) - e^{hγ(z)} q2'(z)`, which is decreasing through the maximizer.
pub fn tangency_solve(params: &CharParams, kernel: &Kernel) -> Result<TangencySolution> {
    let dom = kernel.domain();
    let r = |z: f64| -> Result<f64> { Ok(tangency_slope(params, kernel, z)?.residual) };
    let r0 = r(0.0)?;
    let (mut lo, mut hi) = if r0 == 0.0 {
        (0.0, 0.0)
    } else {
        let dir = r0.signum();
        let limit = if dir > 0.0 { dom.b } else { dom.a };
        let mut prev = 0.0;
        let mut found = None;
        for k in 0..200 {
            let step = 0.25 * 2f64.powi(k);
            let z = if limit.is_finite() {
                // Approach a finite abscissa geometrically.
                limit * (1.0 - 0.5f64.powi(k + 1))
            } else {
                dir * step
            };
            let v = match r(z) {
                Ok(v) if v.is_finite() => v,
                _ => break,
            };
            if v.signum() != dir || v == 0.0 {
                found = Some((prev, z));
                break;
            }
            prev = z;
        }
        let Some((a, b)) = found else {
            // R is monotone, so it keeps one sign across the whole domain.
            return Err(Error::NoTangency {
                sign_low: dir,
                sign_high: dir,
            });
        };
        if a < b {
            (a, b)
        } else {
            (b, a)
        }
    };
    let z_m = if lo == hi {
        lo
    } else {
        // R is decreasing; hand the increasing -R to the bracketed solver.
        let f = |z: f64| match tangency_slope(params, kernel, z) {
            Ok(s) => (-s.residual, -s.derivative),
            Err(_) => (f64::NAN, f64::NAN),
        };
        bracketed_increasing(&f, &mut lo, &mut hi, 1e-14)
    };
    let s = tangency_slope(params, kernel, z_m)?;
    let [q2, q2p, q2pp] = kernel.laplace_derivs(z_m)?;
    let mut gamma_m = s.gamma;
    if gamma_m.abs() <= ROOT_TOL {
        gamma_m = 0.0;
    }
    let e = (params.h * gamma_m).exp();
    Ok(TangencySolution {
        gamma_m,
        z_m,
        sigma_m: sigma_formula(gamma_m, q2pp, q2, params.h),
        k_star: q2pp,
        khat0: q2,
        residual_value: params.q1(z_m) - gamma_m - e * q2,
        residual_slope: params.q1_prime(z_m) - e * q2p,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedPair {
    pub c_minus: f64,
    pub c_plus: f64,
    pub lambda_minus: f64,
    pub lambda_plus: f64,
    /// Largest of `|f2 - f1|` and `|f2' - f1'|` at both tangency points.
    pub residual: f64,
}

/// Speed problem: `f1(z) = -z² + c z + 1`, `f2(z) = g'(0) e^{-zch} q0(z)`.
#[derive(Debug, Clone, Copy)]
struct SpeedProblem<'a> {
    kernel0: &'a Kernel,
    gprime0: f64,
    h: f64,
}

impl SpeedProblem<'_> {
    /// `(Φ, Φ', Φ'', f2)` for `Φ = f2 - f1`.
    fn phi(&self, c: f64, z: f64) -> Result<(f64, f64, f64, f64)> {
        let [l, lp, lpp] = self.kernel0.laplace_derivs(z)?;
        let ch = c * self.h;
        let e = self.gprime0 * (-z * ch).exp();
        let f2 = e * l;
        let f2p = e * (lp - ch * l);
        let f2pp = e * (lpp - 2.0 * ch * lp + ch * ch * l);
        let f1 = -z * z + c * z + 1.0;
        let f1p = -2.0 * z + c;
        Ok((f2 - f1, f2p - f1p, f2pp + 2.0, f2))
    }

    /// Minimizer of the convex `Φ_c` over `z > 0` (`side = 1`) or `z < 0` (`side = -1`).
    fn minimizer(&self, c: f64, side: f64) -> Result<f64> {
        let dom = self.kernel0.domain();
        let limit = if side > 0.0 { dom.b } else { dom.a };
        let slope = |z: f64| self.phi(c, z).map(|v| side * v.1);
        // side·Φ' is increasing in side·z.
        if slope(0.0)? >= 0.0 {
            return Ok(0.0);
        }
        let mut prev = 0.0;
        let mut hi = None;
        for k in 0..200 {
            let z = if limit.is_finite() {
                limit * (1.0 - 0.5f64.powi(k + 1))
            } else {
                side * 0.25 * 2f64.powi(k)
            };
            match slope(z) {
                Ok(v) if v >= 0.0 || !v.is_finite() => {
                    hi = Some(z);
                    break;
                }
                Ok(_) => prev = z,
                Err(_) => break,
            }
        }
        let Some(edge) = hi else {
            return Err(invalid("kernel0", "speed function has no interior minimum"));
        };
        let f = |t: f64| match self.phi(c, side * t) {
            Ok(v) => (side * v.1, v.2),
            Err(_) => (f64::NAN, f64::NAN),
        };
        let (mut a, mut b) = (side * prev, side * edge);
        Ok(side * bracketed_increasing(&f, &mut a, &mut b, 1e-15))
    }

    /// `ψ(c) = min Φ_c` on one side and its derivative in `c`.
    fn psi(&self, c: f64, side: f64) -> Result<(f64, f64, f64)> {
        let z = self.minimizer(c, side)?;
        let (v, _, _, f2) = self.phi(c, z)?;
        Ok((v, -z * (1.0 + self.h * f2), z))
    }
}

const SPEED_RANGE: f64 = 1e3;

/// Critical speeds `c*±` and decay rates `λ*±`.
pub fn critical_speeds(kernel0: &Kernel, gprime0: f64, h: f64) -> Result<SpeedPair> {
    if !(gprime0 > 1.0) {
        return Err(invalid("gprime0", format!("must exceed 1, got {gprime0}")));
    }
    if !(h >= 0.0) {
        return Err(invalid("h", format!("must be >= 0, got {h}")));
    }
    let prob = SpeedProblem {
        kernel0,
        gprime0,
        h,
    };
    let (c_plus, lambda_plus) = speed_branch(&prob, 1.0)?;
    let (c_minus, lambda_minus) = speed_branch(&prob, -1.0)?;
    let mut residual: f64 = 0.0;
    for (c, l) in [(c_plus, lambda_plus), (c_minus, lambda_minus)] {
        let (v, d, _, _) = prob.phi(c, l)?;
        residual = residual.max(v.abs()).max(d.abs());
    }
    Ok(SpeedPair {
        c_minus,
        c_plus,
        lambda_minus,
        lambda_plus,
        residual,
    })
}

fn speed_branch(prob: &SpeedProblem<'_>, side: f64) -> Result<(f64, f64)> {
    let branch = if side > 0.0 { "plus" } else { "minus" };
    let not_bracketed = || Error::SpeedNotBracketed {
        branch,
        range: SPEED_RANGE,
    };
    // g(c) = side·ψ_side(c) is decreasing in side·c... work in t = side·c,
    // where ψ is decreasing in t on both branches.
    let psi_t = |t: f64| prob.psi(side * t, side);
    let mut lo = 0.0;
    let mut hi = 1.0;
    if psi_t(0.0)?.0 > 0.0 {
        while psi_t(hi)?.0 > 0.0 {
            lo = hi;
            hi *= 2.0;
            if hi > SPEED_RANGE {
                return Err(not_bracketed());
            }
        }
    } else {
        hi = 0.0;
        lo = -1.0;
        while psi_t(lo)?.0 <= 0.0 {
            hi = lo;
            lo *= 2.0;
            if lo < -SPEED_RANGE {
                return Err(not_bracketed());
            }
        }
    }
    // -ψ is increasing in t; dψ/dt = side · dψ/dc.
    let f = |t: f64| match psi_t(t) {
        Ok((v, dc, _)) => (-v, -side * dc),
        Err(_) => (f64::NAN, f64::NAN),
    };
    let t = bracketed_increasing(&f, &mut lo, &mut hi, 1e-15);
    let c = side * t;
    let z = prob.minimizer(c, side)?;
    Ok((c, z))
}

/// `l(z)`: root of `l = -z² + γ₀ - q1(z₀) + e^{hγ₀} |k̂_{z₀}(z)| e^{-hl}`.
pub fn implicit_l(params: &CharParams, pair: &DecayPair, kernel: &Kernel, z: f64) -> f64 {
    let (re_mu, k_abs) = implicit_l_coeffs(params, pair, kernel, z);
    let h = params.h;
    // τ ≥ re_mu, so e^{-hτ} is safe whenever e^{-h re_mu} is.
    if -h * re_mu < 700.0 && k_abs >= f64::MIN_POSITIVE {
        return halanay_root(re_mu, k_abs, h);
    }
    let ln_k = h * pair.gamma0 + kernel.ln_laplace_modulus(Complex64::new(pair.z0, z));
    halanay_root_ln(re_mu, ln_k, h)
}

fn implicit_l_coeffs(params: &CharParams, pair: &DecayPair, kernel: &Kernel, z: f64) -> (f64, f64) {
    let khat = kernel.laplace_complex(Complex64::new(pair.z0, z)).norm();
    let re_mu = -z * z + pair.gamma0 - pair.q1;
    (re_mu, (params.h * pair.gamma0).exp() * khat)
}

/// Lower and upper bounds sandwiching [`implicit_l`].
pub fn envelope_bounds(
    params: &CharParams,
    pair: &DecayPair,
    kernel: &Kernel,
    z: f64,
) -> (f64, f64) {
    let h = params.h;
    let khat = kernel.laplace_complex(Complex64::new(pair.z0, z)).norm();
    let eg = (h * pair.gamma0).exp();
    let eps = 1.0 / (1.0 + h * khat * eg);
    let upper = if h == 0.0 {
        -eps * z * z
    } else {
        -(h * eps * z * z).ln_1p() / h
    };
    let lower = -eps * z * z + eg * (khat - pair.khat0);
    (lower, upper)
}

/// `e^{l(z)t} / (q/z²)^{t/h}` for the local equation `u_t = u_xx - q u + q u(t-h)`.
pub fn local_tail_ratio(q: f64, h: f64, z: f64, t: f64) -> f64 {
    let l = halanay_root(-z * z - q, q, h);
    (l * t - (t / h) * (q / (z * z)).ln()).exp()
}

/// `Re[(L(s) + γ_m) / s²]` where `L(s)` solves the local symbol equation near 0.
pub fn local_expansion(
    tang: &TangencySolution,
    params: &CharParams,
    kernel: &Kernel,
    s: f64,
) -> Result<f64> {
    let h = params.h;
    let khat = kernel.laplace_complex(Complex64::new(tang.z_m, s));
    let lin = Complex64::new(-s * s - params.q1(tang.z_m), (2.0 * tang.z_m + params.m) * s);
    let g = |l: Complex64| lin + khat * (-h * l).exp();
    let omega = 1.0 / (1.0 + h * tang.khat0 * (h * tang.gamma_m).exp());
    let mut l = Complex64::new(-tang.gamma_m, 0.0);
    let mut prev_step = f64::INFINITY;
    for it in 0..500 {
        let next = l * (1.0 - omega) + g(l) * omega;
        let step = (next - l).norm();
        l = next;
        if step <= 1e-15 * (1.0 + l.norm()) {
            let v = (l + tang.gamma_m) / (s * s);
            return Ok(v.re);
        }
        if it > 2 && step > 1e-12 && prev_step.is_finite() && prev_step > 0.0 {
            let ratio = step / prev_step;
            if ratio > 0.9 {
                return Err(Error::NoContraction { s, ratio });
            }
        }
        prev_step = step;
    }
    Err(Error::NoContraction { s, ratio: 1.0 })
}

/// Richardson-extrapolated limit of [`local_expansion`] from the pair `(s, s/2)`.
pub fn local_expansion_limit(
    tang: &TangencySolution,
    params: &CharParams,
    kernel: &Kernel,
    s: f64,
) -> Result<f64> {
    let a = local_expansion(tang, params, kernel, s)?;
    let b = local_expansion(tang, params, kernel, 0.5 * s)?;
    Ok((4.0 * b - a) / 3.0)
}
