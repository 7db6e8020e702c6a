//! Periodic grids, physical-space fields and the FFT plumbing shared by the solvers.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Uniform periodic grid on `[-L/2, L/2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    length: f64,
    n: usize,
}

impl Grid {
    pub const MIN_POINTS: usize = 256;

    pub fn new(length: f64, n: usize) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(invalid("length", format!("must be > 0, got {length}")));
        }
        if n < Self::MIN_POINTS || !n.is_power_of_two() {
            return Err(invalid(
                "n_points",
                format!("must be a power of two >= {}, got {n}", Self::MIN_POINTS),
            ));
        }
        Ok(Grid { length, n })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dx(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn x(&self, j: usize) -> f64 {
        -0.5 * self.length + j as f64 * self.dx()
    }

    pub fn xs(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |j| self.x(j))
    }

    /// Angular wavenumber of FFT bin `k` (FFT ordering).
    pub fn wavenumber(&self, k: usize) -> f64 {
        let kk = if k < self.n / 2 {
            k as f64
        } else {
            k as f64 - self.n as f64
        };
        2.0 * std::f64::consts::PI * kk / self.length
    }

    pub fn wavenumbers(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.wavenumber(k)).collect()
    }

    /// Index of the node nearest to `x`, wrapped into the grid.
    pub fn nearest(&self, x: f64) -> usize {
        let j = ((x + 0.5 * self.length) / self.dx()).round() as i64;
        j.rem_euclid(self.n as i64) as usize
    }

    /// Same grid with twice the points.
    pub fn refined(&self) -> Self {
        Grid {
            length: self.length,
            n: 2 * self.n,
        }
    }

    pub fn sample<F: Fn(f64) -> f64>(&self, f: F) -> Vec<f64> {
        self.xs().map(f).collect()
    }
}

/// A physical-space snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub time: f64,
    pub values: Vec<f64>,
}

impl Field {
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Linear interpolation at `x` on the periodic grid.
    pub fn interpolate(&self, grid: &Grid, x: f64) -> f64 {
        let s = (x + 0.5 * grid.length()) / grid.dx();
        let j = s.floor();
        let f = s - j;
        let n = grid.n() as i64;
        let a = (j as i64).rem_euclid(n) as usize;
        let b = (j as i64 + 1).rem_euclid(n) as usize;
        (1.0 - f) * self.values[a] + f * self.values[b]
    }
}

/// Initial history on `[-h, 0]`, stored as snapshots at `s_j = -h + j h / n_h`.
#[derive(Debug, Clone, PartialEq)]
pub struct History {
    pub snapshots: Vec<Vec<f64>>,
}

impl History {
    /// History constant in time.
    pub fn constant(values: Vec<f64>, n_h: usize) -> Self {
        History {
            snapshots: vec![values; n_h + 1],
        }
    }

    pub fn from_fn<F>(grid: &Grid, h: f64, n_h: usize, f: F) -> Self
    where
        F: Fn(f64, f64) -> f64,
    {
        let snapshots = (0..=n_h)
            .map(|j| {
                let s = -h + h * j as f64 / n_h as f64;
                grid.xs().map(|x| f(s, x)).collect()
            })
            .collect();
        History { snapshots }
    }

    pub fn n_h(&self) -> usize {
        self.snapshots.len() - 1
    }

    /// Value at `s = 0`.
    pub fn last(&self) -> &[f64] {
        self.snapshots.last().expect("history has at least one snapshot")
    }

    pub fn scaled(&self, a: f64) -> Self {
        History {
            snapshots: self
                .snapshots
                .iter()
                .map(|s| s.iter().map(|v| a * v).collect())
                .collect(),
        }
    }

    /// `a * self + b * other`.
    pub fn combine(&self, a: f64, other: &History, b: f64) -> Self {
        History {
            snapshots: self
                .snapshots
                .iter()
                .zip(&other.snapshots)
                .map(|(x, y)| x.iter().zip(y).map(|(u, v)| a * u + b * v).collect())
                .collect(),
        }
    }
}

/// Forward/inverse FFT pair for one grid size.
#[derive(Clone)]
pub struct Spectral {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    n: usize,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral").field("n", &self.n).finish()
    }
}

impl Spectral {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Spectral {
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
            n,
        }
    }

    /// `û_k = Σ_j u_j e^{-2πi jk/N}` (no scaling).
    pub fn forward_real(&self, u: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = u.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward.process(&mut buf);
        buf
    }

    pub fn forward_in_place(&self, buf: &mut [Complex64]) {
        self.forward.process(buf);
    }

    /// Inverse of [`forward_real`](Self::forward_real), returning real parts.
    pub fn inverse_real(&self, uhat: &[Complex64]) -> Vec<f64> {
        let mut buf = uhat.to_vec();
        self.inverse.process(&mut buf);
        let s = 1.0 / self.n as f64;
        buf.iter().map(|c| c.re * s).collect()
    }

    pub fn inverse_complex(&self, uhat: &[Complex64]) -> Vec<Complex64> {
        let mut buf = uhat.to_vec();
        self.inverse.process(&mut buf);
        let s = 1.0 / self.n as f64;
        buf.iter_mut().for_each(|c| *c *= s);
        buf
    }
}

/// Time derivative of equally spaced samples by five-point stencils
/// (three-point when fewer than five samples exist).
pub fn sample_derivative(values: &[Complex64], dt: f64) -> Vec<Complex64> {
    let n = values.len();
    if n < 2 {
        return vec![Complex64::new(0.0, 0.0); n];
    }
    if n < 5 {
        return (0..n)
            .map(|i| {
                if i == 0 {
                    (values[1] - values[0]) / dt
                } else if i == n - 1 {
                    (values[n - 1] - values[n - 2]) / dt
                } else {
                    (values[i + 1] - values[i - 1]) / (2.0 * dt)
                }
            })
            .collect();
    }
    const STENCILS: [[f64; 5]; 5] = [
        [-25.0, 48.0, -36.0, 16.0, -3.0],
        [-3.0, -10.0, 18.0, -6.0, 1.0],
        [1.0, -8.0, 0.0, 8.0, -1.0],
        [-1.0, 6.0, -18.0, 10.0, 3.0],
        [3.0, -16.0, 36.0, -48.0, 25.0],
    ];
    (0..n)
        .map(|i| {
            let (start, row) = if i < 2 {
                (0, i)
            } else if i + 2 >= n {
                (n - 5, i + 5 - n)
            } else {
                (i - 2, 2)
            };
            let c = &STENCILS[row];
            (0..5).map(|k| values[start + k] * c[k]).sum::<Complex64>() / (12.0 * dt)
        })
        .collect()
}

/// Trapezoid (= rectangle on a periodic grid) integral.
pub fn integrate(grid: &Grid, values: &[f64]) -> f64 {
    values.iter().sum::<f64>() * grid.dx()
}
