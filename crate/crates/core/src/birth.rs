//! Birth functions `g` of the delayed KPP equation and their monotone envelopes.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum BirthFamily {
    /// `p u e^{-au}`.
    Nicholson { p: f64, a: f64 },
    /// `p u / (1 + a u^q)`.
    MackeyGlass { p: f64, a: f64, q: f64 },
    /// `min(slope u, cap)`.
    LinearCap { slope: f64, cap: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BirthFunction {
    #[serde(flatten)]
    pub family: BirthFamily,
    /// Replace `g` by its running maximum `max_{[0,u]} g`.
    #[serde(default)]
    pub monotone: bool,
}

impl BirthFunction {
    pub fn new(family: BirthFamily) -> Result<Self> {
        let g = BirthFunction {
            family,
            monotone: false,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn nicholson(p: f64, a: f64) -> Result<Self> {
        Self::new(BirthFamily::Nicholson { p, a })
    }

    pub fn mackey_glass(p: f64, a: f64, q: f64) -> Result<Self> {
        Self::new(BirthFamily::MackeyGlass { p, a, q })
    }

    pub fn linear_cap(slope: f64, cap: f64) -> Result<Self> {
        Self::new(BirthFamily::LinearCap { slope, cap })
    }

    pub fn validate(&self) -> Result<()> {
        let above_one = |name: &'static str, v: f64| {
            if v.is_finite() && v > 1.0 {
                Ok(())
            } else {
                Err(invalid(name, format!("must exceed 1, got {v}")))
            }
        };
        let positive = |name: &'static str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(invalid(name, format!("must be > 0, got {v}")))
            }
        };
        match self.family {
            BirthFamily::Nicholson { p, a } => {
                above_one("p", p)?;
                positive("a", a)
            }
            BirthFamily::MackeyGlass { p, a, q } => {
                above_one("p", p)?;
                positive("a", a)?;
                above_one("q", q)
            }
            BirthFamily::LinearCap { slope, cap } => {
                above_one("slope", slope)?;
                positive("cap", cap)
            }
        }
    }

    fn raw(&self, u: f64) -> f64 {
        match self.family {
            BirthFamily::Nicholson { p, a } => p * u * (-a * u).exp(),
            BirthFamily::MackeyGlass { p, a, q } => p * u / (1.0 + a * u.powf(q)),
            BirthFamily::LinearCap { slope, cap } => (slope * u).min(cap),
        }
    }

    fn raw_prime(&self, u: f64) -> f64 {
        match self.family {
            BirthFamily::Nicholson { p, a } => p * (-a * u).exp() * (1.0 - a * u),
            BirthFamily::MackeyGlass { p, a, q } => {
                let s = a * u.powf(q);
                p * (1.0 + s - q * s) / ((1.0 + s) * (1.0 + s))
            }
            BirthFamily::LinearCap { slope, cap } => {
                if slope * u < cap {
                    slope
                } else {
                    0.0
                }
            }
        }
    }

    /// Location of the maximum of the raw `g`, if it has one.
    pub fn hump(&self) -> Option<f64> {
        match self.family {
            BirthFamily::Nicholson { a, .. } => Some(1.0 / a),
            BirthFamily::MackeyGlass { a, q, .. } => Some((1.0 / (a * (q - 1.0))).powf(1.0 / q)),
            BirthFamily::LinearCap { .. } => None,
        }
    }

    /// Positive fixed point of the raw `g`.
    fn raw_kappa(&self) -> f64 {
        match self.family {
            BirthFamily::Nicholson { p, a } => p.ln() / a,
            BirthFamily::MackeyGlass { p, a, q } => ((p - 1.0) / a).powf(1.0 / q),
            BirthFamily::LinearCap { cap, .. } => cap,
        }
    }

    /// Argument at which the envelope stops following `g`.
    fn plateau(&self) -> Option<f64> {
        if self.monotone {
            self.hump()
        } else {
            None
        }
    }

    /// `g(u)`; negative arguments are treated as 0.
    pub fn eval(&self, u: f64) -> f64 {
        let u = u.max(0.0);
        match self.plateau() {
            Some(top) if u > top => self.raw(top),
            _ => self.raw(u),
        }
    }

    pub fn derivative(&self, u: f64) -> f64 {
        let u = u.max(0.0);
        match self.plateau() {
            Some(top) if u > top => 0.0,
            _ => self.raw_prime(u),
        }
    }

    pub fn gprime0(&self) -> f64 {
        self.raw_prime(0.0)
    }

    /// Positive equilibrium `κ` with `g(κ) = κ`.
    pub fn kappa(&self) -> f64 {
        let k = self.raw_kappa();
        match self.plateau() {
            Some(top) if top < k => self.raw(top),
            _ => k,
        }
    }

    pub fn gprime_kappa(&self) -> f64 {
        self.derivative(self.kappa())
    }

    /// Running-maximum envelope `max_{[0,u]} g`.
    pub fn monotone_envelope(&self) -> BirthFunction {
        BirthFunction {
            family: self.family,
            monotone: true,
        }
    }
}
