//! Dispersal kernels and their integral transforms.
//!
//! All transforms are closed form. The adaptive quadrature in
//! [`crate::quadrature`] is only used by tests and by the truncation
//! diagnostic of [`Kernel::discretize`].

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::Grid;
use crate::quadrature;

/// Shape of a kernel, independent of its total mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    /// Point mass at `shift`.
    Dirac { shift: f64 },
    Gaussian { mean: f64, stddev: f64 },
    /// Two-sided exponential `(rate/2) e^{-rate |x|}`.
    Laplace { rate: f64 },
    /// Constant density on `[-half_width, half_width]`.
    Uniform { half_width: f64 },
    /// Same density as `Gaussian`; kept separate so configs can state intent.
    ShiftedGaussian { mean: f64, stddev: f64 },
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Dirac { .. } => "dirac",
            Family::Gaussian { .. } => "gaussian",
            Family::Laplace { .. } => "laplace",
            Family::Uniform { .. } => "uniform",
            Family::ShiftedGaussian { .. } => "shifted_gaussian",
        }
    }
}

/// Open interval `(a, b)` on which the bilateral Laplace transform converges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformDomain {
    pub a: f64,
    pub b: f64,
}

impl TransformDomain {
    pub fn contains(&self, z: f64) -> bool {
        z > self.a && z < self.b
    }

    fn check(&self, z: f64) -> Result<()> {
        if z <= self.a {
            Err(Error::Domain {
                z,
                bound: self.a,
                side: "lower",
            })
        } else if z >= self.b {
            Err(Error::Domain {
                z,
                bound: self.b,
                side: "upper",
            })
        } else {
            Ok(())
        }
    }
}

/// A nonnegative kernel `mass * density`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Kernel {
    #[serde(flatten)]
    pub family: Family,
    pub mass: f64,
}

/// Result of sampling a kernel on a grid.
#[derive(Debug, Clone, PartialEq)]
pub enum Discretized {
    /// Values at the grid nodes, scaled so that `sum * dx == mass`.
    Samples(Vec<f64>),
    /// Convolution with a point mass: `(k * u)(x) = mass * u(x - shift)`.
    Shift { shift: f64, mass: f64 },
}

impl Kernel {
    pub fn new(family: Family, mass: f64) -> Result<Self> {
        let k = Kernel { family, mass };
        k.validate()?;
        Ok(k)
    }

    pub fn dirac(shift: f64, mass: f64) -> Result<Self> {
        Self::new(Family::Dirac { shift }, mass)
    }

    pub fn gaussian(mean: f64, stddev: f64, mass: f64) -> Result<Self> {
        Self::new(Family::Gaussian { mean, stddev }, mass)
    }

    pub fn shifted_gaussian(mean: f64, stddev: f64, mass: f64) -> Result<Self> {
        Self::new(Family::ShiftedGaussian { mean, stddev }, mass)
    }

    pub fn laplace(rate: f64, mass: f64) -> Result<Self> {
        Self::new(Family::Laplace { rate }, mass)
    }

    pub fn uniform(half_width: f64, mass: f64) -> Result<Self> {
        Self::new(Family::Uniform { half_width }, mass)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mass.is_finite() && self.mass >= 0.0) {
            return Err(invalid("mass", format!("must be finite and >= 0, got {}", self.mass)));
        }
        let positive = |name: &'static str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(invalid(name, format!("must be finite and > 0, got {v}")))
            }
        };
        let finite = |name: &'static str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(invalid(name, format!("must be finite, got {v}")))
            }
        };
        match self.family {
            Family::Dirac { shift } => finite("shift", shift),
            Family::Gaussian { mean, stddev } | Family::ShiftedGaussian { mean, stddev } => {
                finite("mean", mean)?;
                positive("stddev", stddev)
            }
            Family::Laplace { rate } => positive("rate", rate),
            Family::Uniform { half_width } => positive("half_width", half_width),
        }
    }

    pub fn domain(&self) -> TransformDomain {
        match self.family {
            Family::Laplace { rate } => TransformDomain { a: -rate, b: rate },
            _ => TransformDomain {
                a: f64::NEG_INFINITY,
                b: f64::INFINITY,
            },
        }
    }

    /// Center used to split quadrature and to report the kernel's location.
    pub fn mean(&self) -> f64 {
        match self.family {
            Family::Dirac { shift } => shift,
            Family::Gaussian { mean, .. } | Family::ShiftedGaussian { mean, .. } => mean,
            Family::Laplace { .. } | Family::Uniform { .. } => 0.0,
        }
    }

    /// Length scale over which the density decays; used for grid checks.
    pub fn decay_length(&self) -> f64 {
        match self.family {
            Family::Dirac { .. } => 0.0,
            Family::Gaussian { stddev, .. } | Family::ShiftedGaussian { stddev, .. } => stddev,
            Family::Laplace { rate } => 1.0 / rate,
            Family::Uniform { half_width } => half_width,
        }
    }

    pub fn eval_density(&self, x: f64) -> Result<f64> {
        let d = match self.family {
            Family::Dirac { .. } => {
                return Err(Error::NoDensity {
                    family: self.family.name(),
                })
            }
            Family::Gaussian { mean, stddev } | Family::ShiftedGaussian { mean, stddev } => {
                let u = (x - mean) / stddev;
                (-0.5 * u * u).exp() / (stddev * (2.0 * std::f64::consts::PI).sqrt())
            }
            Family::Laplace { rate } => 0.5 * rate * (-rate * x.abs()).exp(),
            Family::Uniform { half_width } => {
                if x.abs() <= half_width {
                    0.5 / half_width
                } else {
                    0.0
                }
            }
        };
        Ok(self.mass * d)
    }

    /// Bilateral Laplace transform and its first two derivatives at real `z`.
    pub fn laplace_derivs(&self, z: f64) -> Result<[f64; 3]> {
        self.domain().check(z)?;
        let m = self.mass;
        let v = match self.family {
            Family::Dirac { shift: c } => {
                let l = (-z * c).exp();
                [l, -c * l, c * c * l]
            }
            Family::Gaussian { mean, stddev } | Family::ShiftedGaussian { mean, stddev } => {
                let s2 = stddev * stddev;
                let l = (-z * mean + 0.5 * z * z * s2).exp();
                let d = -mean + z * s2;
                [l, l * d, l * (d * d + s2)]
            }
            Family::Laplace { rate } => {
                let b2 = rate * rate;
                let den = b2 - z * z;
                [
                    b2 / den,
                    2.0 * b2 * z / (den * den),
                    b2 * (2.0 * b2 + 6.0 * z * z) / (den * den * den),
                ]
            }
            Family::Uniform { half_width: w } => {
                let (f0, f1, f2) = sinhc_derivs(z * w);
                [f0, w * f1, w * w * f2]
            }
        };
        Ok([m * v[0], m * v[1], m * v[2]])
    }

    /// `∫ k(y) e^{-zy} dy`.
    pub fn laplace_transform(&self, z: f64) -> Result<f64> {
        Ok(self.laplace_derivs(z)?[0])
    }

    /// `∫ y k(y) e^{-zy} dy`, i.e. minus the derivative of the transform.
    pub fn tilted_first_moment(&self, z: f64) -> Result<f64> {
        Ok(-self.laplace_derivs(z)?[1])
    }

    /// `∫ y² k(y) e^{-zy} dy`.
    pub fn tilted_second_moment(&self, z: f64) -> Result<f64> {
        Ok(self.laplace_derivs(z)?[2])
    }

    /// Laplace transform continued to complex `z` with `Re z` in the domain.
    ///
    /// `laplace_complex(z0 + iξ)` is the Fourier transform of the tilted
    /// kernel `k(y) e^{-z0 y}` at `ξ`.
    pub fn laplace_complex(&self, z: Complex64) -> Complex64 {
        let v = match self.family {
            Family::Dirac { shift } => (-z * shift).exp(),
            Family::Gaussian { mean, stddev } | Family::ShiftedGaussian { mean, stddev } => {
                (-z * mean + 0.5 * z * z * stddev * stddev).exp()
            }
            Family::Laplace { rate } => {
                let b2 = rate * rate;
                Complex64::new(b2, 0.0) / (b2 - z * z)
            }
            Family::Uniform { half_width } => sinhc_complex(z * half_width),
        };
        v * self.mass
    }

    /// `ln |laplace_complex(z)|`, finite where the transform itself underflows.
    pub fn ln_laplace_modulus(&self, z: Complex64) -> f64 {
        let shape = match self.family {
            Family::Dirac { shift } => -shift * z.re,
            Family::Gaussian { mean, stddev } | Family::ShiftedGaussian { mean, stddev } => {
                -mean * z.re + 0.5 * stddev * stddev * (z * z).re
            }
            Family::Laplace { rate } => {
                let b2 = rate * rate;
                b2.ln() - (b2 - z * z).norm().ln()
            }
            Family::Uniform { half_width } => sinhc_complex(z * half_width).norm().ln(),
        };
        self.mass.ln() + shape
    }

    /// `k̂(ξ) = ∫ k(x) e^{-iξx} dx`.
    pub fn fourier_transform(&self, xi: f64) -> Complex64 {
        match self.family {
            // Real-valued closed forms, kept separate to avoid round-off in Im.
            Family::Laplace { rate } => {
                let b2 = rate * rate;
                Complex64::new(self.mass * b2 / (b2 + xi * xi), 0.0)
            }
            Family::Uniform { half_width } => {
                let u = xi * half_width;
                let s = if u.abs() < 1e-4 {
                    1.0 - u * u / 6.0 + u.powi(4) / 120.0
                } else {
                    u.sin() / u
                };
                Complex64::new(self.mass * s, 0.0)
            }
            _ => self.laplace_complex(Complex64::new(0.0, xi)),
        }
    }

    /// `ln |k̂(ξ)|`, exact far beyond the range where `k̂` itself underflows.
    pub fn ln_fourier_modulus(&self, xi: f64) -> f64 {
        let shape = match self.family {
            Family::Dirac { .. } => 0.0,
            Family::Gaussian { stddev, .. } | Family::ShiftedGaussian { stddev, .. } => {
                -0.5 * xi * xi * stddev * stddev
            }
            Family::Laplace { rate } => {
                let b2 = rate * rate;
                (b2 / (b2 + xi * xi)).ln()
            }
            Family::Uniform { .. } => (self.fourier_transform(xi).re / self.mass).abs().ln(),
        };
        self.mass.ln() + shape
    }

    /// Kernel `x ↦ k(x) e^{-z x}`.
    pub fn tilted(&self, z: f64) -> Result<Kernel> {
        let l = self.laplace_transform(z)?;
        match self.family {
            Family::Dirac { shift } => Kernel::new(Family::Dirac { shift }, l),
            Family::Gaussian { mean, stddev } => {
                Kernel::gaussian(mean - z * stddev * stddev, stddev, l)
            }
            Family::ShiftedGaussian { mean, stddev } => {
                Kernel::shifted_gaussian(mean - z * stddev * stddev, stddev, l)
            }
            _ => Err(self.not_closed("tilt")),
        }
    }

    /// Kernel `x ↦ k(x - by)`.
    pub fn shifted(&self, by: f64) -> Result<Kernel> {
        let family = match self.family {
            Family::Dirac { shift } => Family::Dirac { shift: shift + by },
            Family::Gaussian { mean, stddev } => Family::Gaussian {
                mean: mean + by,
                stddev,
            },
            Family::ShiftedGaussian { mean, stddev } => Family::ShiftedGaussian {
                mean: mean + by,
                stddev,
            },
            _ => return Err(self.not_closed("shift")),
        };
        Kernel::new(family, self.mass)
    }

    pub fn scaled(&self, factor: f64) -> Result<Kernel> {
        Kernel::new(self.family, self.mass * factor)
    }

    fn not_closed(&self, op: &str) -> Error {
        invalid(
            "family",
            format!("{op} of a {} kernel has no closed form", self.family.name()),
        )
    }

    /// Samples the kernel on `grid` for use in a discrete convolution.
    ///
    /// Sample `j` sits at `grid.x(j)`, so the convolution is taken with the
    /// grid origin at index `n/2`. Truncated tail mass above `1e-12` is
    /// logged as a warning.
    pub fn discretize(&self, grid: &Grid) -> Discretized {
        let dx = grid.dx();
        let half = 0.5 * grid.length();
        let mut samples: Vec<f64> = match self.family {
            Family::Dirac { shift } => {
                return Discretized::Shift {
                    shift,
                    mass: self.mass,
                }
            }
            // Cell averages; point samples of a box depend on where the edge lands.
            Family::Uniform { half_width: w } => (0..grid.n())
                .map(|j| {
                    let x = grid.x(j);
                    let lo = (x - 0.5 * dx).max(-w);
                    let hi = (x + 0.5 * dx).min(w);
                    (hi - lo).max(0.0) / (2.0 * w * dx)
                })
                .collect(),
            _ => (0..grid.n())
                .map(|j| self.eval_density(grid.x(j)).unwrap_or(0.0))
                .collect(),
        };
        if self.mass > 0.0 {
            let tail = self.tail_mass(half) / self.mass;
            if tail > 1e-12 {
                log::warn!(
                    "{} kernel truncated by the grid: tail mass fraction {tail:.3e}",
                    self.family.name()
                );
            }
            let sum: f64 = samples.iter().sum::<f64>() * dx;
            if sum > 0.0 {
                let scale = self.mass / sum;
                samples.iter_mut().for_each(|v| *v *= scale);
            }
        } else {
            samples.iter_mut().for_each(|v| *v = 0.0);
        }
        Discretized::Samples(samples)
    }

    /// Mass outside `[-half, half]`.
    fn tail_mass(&self, half: f64) -> f64 {
        match self.family {
            Family::Dirac { shift } => {
                if shift.abs() > half {
                    self.mass
                } else {
                    0.0
                }
            }
            Family::Laplace { rate } => self.mass * (-rate * half).exp(),
            Family::Uniform { half_width } => {
                self.mass * ((half_width - half).max(0.0) / half_width).min(1.0)
            }
            Family::Gaussian { .. } | Family::ShiftedGaussian { .. } => {
                let f = |x: f64| self.eval_density(x).unwrap_or(0.0);
                let right = quadrature::integrate_real_line(
                    |x| if x > half { f(x) } else { 0.0 },
                    half,
                    1e-16,
                );
                let left = quadrature::integrate_real_line(
                    |x| if x < -half { f(x) } else { 0.0 },
                    -half,
                    1e-16,
                );
                right.value + left.value
            }
        }
    }
}

/// `sinh(u)/u` and its first two derivatives.
fn sinhc_derivs(u: f64) -> (f64, f64, f64) {
    if u.abs() < 1.0 {
        // Power series avoids cancellation; terms fall off like 1/(2n+1)!.
        let u2 = u * u;
        let (mut f0, mut f1, mut f2) = (1.0, 0.0, 0.0);
        let mut fact = 1.0;
        let mut p = 1.0; // u^{2n-2}
        for n in 1..20 {
            let n2 = 2.0 * n as f64;
            fact *= n2 * (n2 + 1.0);
            f0 += p * u2 / fact;
            f1 += n2 * p * u / fact;
            f2 += n2 * (n2 - 1.0) * p / fact;
            p *= u2;
        }
        (f0, f1, f2)
    } else {
        let (s, c) = (u.sinh(), u.cosh());
        (
            s / u,
            (u * c - s) / (u * u),
            ((u * u + 2.0) * s - 2.0 * u * c) / (u * u * u),
        )
    }
}

fn sinhc_complex(u: Complex64) -> Complex64 {
    if u.norm() < 1e-3 {
        let u2 = u * u;
        Complex64::new(1.0, 0.0) + u2 / 6.0 + u2 * u2 / 120.0
    } else {
        u.sinh() / u
    }
}
