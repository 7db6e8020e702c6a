//! Second-order finite-difference solver for the linear delayed equation.
//!
//! Independent of the spectral solver except for the FFT used to apply the
//! convolution: central differences for `u_xx`, second-order upwinding for
//! `m u_x`, classical RK4 in time, and cubic Hermite dense output of stored
//! states for the delayed term at the RK4 half steps.

use num_complex::Complex64;

use crate::characteristic::CharParams;
use crate::error::{invalid, Error, Result};
use crate::grid::{sample_derivative, Field, Grid, History, Spectral};
use crate::kernels::{Discretized, Kernel};

type C = Complex64;

/// Circular convolution with a sampled kernel, applied in Fourier space.
struct Convolution {
    spectral: Spectral,
    symbol: Vec<C>,
}

impl Convolution {
    fn new(kernel: &Kernel, grid: &Grid) -> Self {
        let n = grid.n();
        let spectral = Spectral::new(n);
        let symbol = match kernel.discretize(grid) {
            Discretized::Samples(s) => {
                // Sample j sits at x_j = (j - N/2) dx, hence the (-1)^k shift.
                let dx = grid.dx();
                spectral
                    .forward_real(&s)
                    .into_iter()
                    .enumerate()
                    .map(|(k, v)| if k % 2 == 0 { v * dx } else { -v * dx })
                    .collect()
            }
            Discretized::Shift { shift, mass } => (0..n)
                .map(|k| C::from_polar(mass, -grid.wavenumber(k) * shift))
                .collect(),
        };
        Convolution { spectral, symbol }
    }

    fn apply(&self, u: &[f64]) -> Vec<f64> {
        let mut hat = self.spectral.forward_real(u);
        hat.iter_mut().zip(&self.symbol).for_each(|(a, b)| *a *= b);
        self.spectral.inverse_real(&hat)
    }
}

struct Rhs<'a> {
    params: &'a CharParams,
    inv_dx2: f64,
    inv_2dx: f64,
}

impl Rhs<'_> {
    /// `u_xx + m u_x + p u + delayed`.
    fn eval(&self, u: &[f64], delayed: &[f64], out: &mut [f64]) {
        let n = u.len();
        let m = self.params.m;
        let p = self.params.p;
        for i in 0..n {
            let im1 = (i + n - 1) % n;
            let ip1 = (i + 1) % n;
            let lap = (u[ip1] - 2.0 * u[i] + u[im1]) * self.inv_dx2;
            let ux = if m >= 0.0 {
                let ip2 = (i + 2) % n;
                (-3.0 * u[i] + 4.0 * u[ip1] - u[ip2]) * self.inv_2dx
            } else {
                let im2 = (i + n - 2) % n;
                (3.0 * u[i] - 4.0 * u[im1] + u[im2]) * self.inv_2dx
            };
            out[i] = lap + m * ux + p * u[i] + delayed[i];
        }
    }
}

fn axpy(y: &[f64], a: f64, x: &[f64]) -> Vec<f64> {
    y.iter().zip(x).map(|(y, x)| y + a * x).collect()
}

fn hermite_mid(y0: &[f64], d0: &[f64], y1: &[f64], d1: &[f64], dt: f64) -> Vec<f64> {
    (0..y0.len())
        .map(|i| 0.5 * (y0[i] + y1[i]) + 0.125 * dt * (d0[i] - d1[i]))
        .collect()
}

/// Solution at `t_end` of the linear delayed equation by finite differences.
pub fn fd_solve_linear(
    params: &CharParams,
    kernel: &Kernel,
    grid: &Grid,
    history: &History,
    t_end: f64,
) -> Result<Field> {
    if !(params.h > 0.0) {
        return Err(invalid("h", "the finite-difference solver needs a positive delay"));
    }
    let n_h = history.n_h();
    if n_h == 0 {
        return Err(invalid("history", "need at least two snapshots on [-h, 0]"));
    }
    let n = grid.n();
    let dt = params.h / n_h as f64;
    let steps = (t_end / dt).round() as usize;
    let conv = Convolution::new(kernel, grid);
    let rhs = Rhs {
        params,
        inv_dx2: 1.0 / (grid.dx() * grid.dx()),
        inv_2dx: 0.5 / grid.dx(),
    };

    // Pointwise time derivative of the history.
    let mut hist_d = vec![vec![0.0; n]; n_h + 1];
    for i in 0..n {
        let series: Vec<C> = history.snapshots.iter().map(|s| C::new(s[i], 0.0)).collect();
        for (j, d) in sample_derivative(&series, dt).into_iter().enumerate() {
            hist_d[j][i] = d.re;
        }
    }

    let len = n_h + 1;
    let mut ring_v: Vec<Vec<f64>> = vec![Vec::new(); len];
    let mut ring_d: Vec<Vec<f64>> = vec![Vec::new(); len];
    let mut u = history.last().to_vec();
    let mut f0 = vec![0.0; n];
    let delayed0 = conv.apply(&history.snapshots[0]);
    rhs.eval(&u, &delayed0, &mut f0);
    ring_v[0] = u.clone();
    ring_d[0] = f0;

    let (mut k2, mut k3, mut k4) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    for step in 0..steps {
        let (y0, d0, y1, d1): (&[f64], &[f64], &[f64], &[f64]) = if step < n_h {
            (
                &history.snapshots[step],
                &hist_d[step],
                &history.snapshots[step + 1],
                &hist_d[step + 1],
            )
        } else {
            let a = (step - n_h) % len;
            let b = (step - n_h + 1) % len;
            (&ring_v[a], &ring_d[a], &ring_v[b], &ring_d[b])
        };
        let mid = conv.apply(&hermite_mid(y0, d0, y1, d1, dt));
        let right = conv.apply(y1);
        let k1 = ring_d[step % len].clone();
        rhs.eval(&axpy(&u, 0.5 * dt, &k1), &mid, &mut k2);
        rhs.eval(&axpy(&u, 0.5 * dt, &k2), &mid, &mut k3);
        rhs.eval(&axpy(&u, dt, &k3), &right, &mut k4);
        for i in 0..n {
            u[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if u.iter().any(|v| !v.is_finite()) {
            return Err(Error::Blowup {
                last_healthy: step as f64 * dt,
            });
        }
        let mut f = vec![0.0; n];
        rhs.eval(&u, &right, &mut f);
        let slot = (step + 1) % len;
        ring_v[slot] = u.clone();
        ring_d[slot] = f;
    }
    Ok(Field {
        time: steps as f64 * dt,
        values: u,
    })
}
