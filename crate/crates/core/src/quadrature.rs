//! Adaptive Gauss–Kronrod (7/15) quadrature.
//!
//! Only used to cross-check the closed-form kernel transforms, so the
//! implementation favours robustness over speed.

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

// Gauss weights for the odd-indexed Kronrod nodes (XGK[1], XGK[3], XGK[5], XGK[7]).
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_DEPTH: usize = 40;

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let r = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let dx = r * XGK[i];
        let s = f(c - dx) + f(c + dx);
        kronrod += WGK[i] * s;
        if i % 2 == 1 {
            gauss += WG[i / 2] * s;
        }
    }
    (kronrod * r, ((kronrod - gauss) * r).abs())
}

fn adapt<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: usize) -> QuadResult {
    let (value, error) = gk15(f, a, b);
    if !error.is_finite() || error <= tol.max(f64::EPSILON * value.abs()) || depth >= MAX_DEPTH || (b - a).abs() < 1e-300
    {
        return QuadResult { value, error };
    }
    let m = 0.5 * (a + b);
    let left = adapt(f, a, m, 0.5 * tol, depth + 1);
    let right = adapt(f, m, b, 0.5 * tol, depth + 1);
    QuadResult {
        value: left.value + right.value,
        error: left.error + right.error,
    }
}

/// Integrates `f` over the finite interval `[a, b]` to absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> QuadResult {
    adapt(&f, a, b, tol, 0)
}

/// Integrates `f` over the whole real line, splitting at `center`.
///
/// Each half-line is mapped onto `(0, 1)` with `x = center ± t / (1 - t)`.
pub fn integrate_real_line<F: Fn(f64) -> f64>(f: F, center: f64, tol: f64) -> QuadResult {
    let right = |t: f64| {
        let s = 1.0 - t;
        let v = f(center + t / s);
        if v == 0.0 {
            0.0
        } else {
            v / (s * s)
        }
    };
    let left = |t: f64| {
        let s = 1.0 - t;
        let v = f(center - t / s);
        if v == 0.0 {
            0.0
        } else {
            v / (s * s)
        }
    };
    let r = adapt(&right, 0.0, 1.0, 0.5 * tol, 0);
    let l = adapt(&left, 0.0, 1.0, 0.5 * tol, 0);
    QuadResult {
        value: r.value + l.value,
        error: r.error + l.error,
    }
}
