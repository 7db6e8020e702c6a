//! Scalar root finding for monotone maps.

/// Root of a strictly increasing function.
///
/// `f` returns `(value, derivative)`. The root is bracketed by a doubling
/// search from 0, then polished by Newton steps safeguarded with bisection.
/// Iteration stops once `|f| <= tol` or the bracket has collapsed to
/// neighbouring floats.
pub fn increasing_root<F>(f: F, tol: f64) -> f64
where
    F: Fn(f64) -> (f64, f64),
{
    let (f0, _) = f(0.0);
    if f0 == 0.0 {
        return 0.0;
    }
    let (mut lo, mut hi) = if f0 < 0.0 {
        let mut hi = 1.0;
        let mut lo = 0.0;
        while f(hi).0 < 0.0 {
            lo = hi;
            hi *= 2.0;
            if hi > 1e300 {
                return hi;
            }
        }
        (lo, hi)
    } else {
        let mut lo = -1.0;
        let mut hi = 0.0;
        while f(lo).0 > 0.0 {
            hi = lo;
            lo *= 2.0;
            if lo < -1e300 {
                return lo;
            }
        }
        (lo, hi)
    };
    bracketed_increasing(&f, &mut lo, &mut hi, tol)
}

/// Safeguarded Newton on an increasing function with `f(lo) <= 0 <= f(hi)`.
///
/// Falls back to bisection whenever the Newton step leaves the bracket or
/// would shrink it more slowly than halving.
pub fn bracketed_increasing<F>(f: &F, lo: &mut f64, hi: &mut f64, tol: f64) -> f64
where
    F: Fn(f64) -> (f64, f64),
{
    let mut x = 0.5 * (*lo + *hi);
    let mut best = (f64::INFINITY, x);
    let mut step_old = *hi - *lo;
    let mut step = step_old;
    for _ in 0..400 {
        let (v, d) = f(x);
        if v.abs() < best.0 {
            best = (v.abs(), x);
        }
        if v == 0.0 || v.abs() <= tol {
            return x;
        }
        if v < 0.0 {
            *lo = x;
        } else {
            *hi = x;
        }
        if *hi - *lo <= 2.0 * f64::EPSILON * lo.abs().max(hi.abs()) {
            break;
        }
        let newton = x - v / d;
        let usable = d > 0.0 && newton.is_finite() && newton > *lo && newton < *hi;
        if usable && (2.0 * v).abs() <= (step_old * d).abs() {
            step_old = step;
            step = (newton - x).abs();
            x = newton;
        } else {
            step_old = step;
            step = 0.5 * (*hi - *lo);
            x = *lo + step;
        }
    }
    best.1
}

/// Root of a strictly decreasing function, same contract as [`increasing_root`].
pub fn decreasing_root<F>(f: F, tol: f64) -> f64
where
    F: Fn(f64) -> (f64, f64),
{
    increasing_root(
        |x| {
            let (v, d) = f(x);
            (-v, -d)
        },
        tol,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_root() {
        let r = increasing_root(|x| (x * x * x - 10.0, 3.0 * x * x), 1e-14);
        assert!((r - 10f64.cbrt()).abs() < 1e-13);
    }

    #[test]
    fn negative_root() {
        let r = increasing_root(|x| (x + 1e5, 1.0), 1e-14);
        assert_eq!(r, -1e5);
    }

    #[test]
    fn exact_zero() {
        assert_eq!(increasing_root(|x| (x, 1.0), 1e-14), 0.0);
    }

    #[test]
    fn decreasing() {
        let r = decreasing_root(|x| (2.0 - x.exp(), -x.exp()), 1e-14);
        assert!((r - 2f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn stiff_exponential_converges() {
        // Newton alone creeps one unit per step from the left here.
        let r = increasing_root(|x| (x - (1536.8 - x).exp(), 1.0 + (1536.8 - x).exp()), 1e-12);
        assert!((r - (1536.8 - r.ln())).abs() < 1e-9, "{r}");
    }
}
