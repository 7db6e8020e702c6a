//! JSON run configuration shared by the command-line subcommands.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::birth::BirthFunction;
use crate::characteristic::CharParams;
use crate::error::{Error, Result};
use crate::experiments::{
    AsymptoticsConfig, BridgeConfig, CrossValidationConfig, ExtinctionConfig, FundamentalConfig,
    McKeanConfig, SpreadingConfig,
};
use crate::grid::{Grid, History};
use crate::kernels::Kernel;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub length: f64,
    pub n_points: usize,
}

impl GridSpec {
    pub fn build(&self) -> Result<Grid> {
        Grid::new(self.length, self.n_points)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSpec {
    pub t_end: f64,
    /// Steps per delay interval.
    #[serde(default = "default_n_h")]
    pub n_h: usize,
    /// Time between written snapshots.
    #[serde(default = "default_stride")]
    pub stride: f64,
    /// Step used when the delay is zero.
    #[serde(default = "default_dt")]
    pub dt: f64,
}

fn default_n_h() -> usize {
    32
}

fn default_stride() -> f64 {
    1.0
}

fn default_dt() -> f64 {
    0.01
}

impl TimeSpec {
    /// Output times `stride, 2 stride, …` ending exactly at `t_end`.
    pub fn output_times(&self) -> Vec<f64> {
        let n = (self.t_end / self.stride).floor() as usize;
        let mut v: Vec<f64> = (1..=n).map(|i| i as f64 * self.stride).collect();
        if v.last().is_none_or(|&t| (t - self.t_end).abs() > 1e-9) {
            v.push(self.t_end);
        }
        v
    }

    pub fn step(&self, h: f64) -> f64 {
        if h > 0.0 {
            h / self.n_h as f64
        } else {
            self.dt
        }
    }
}

/// Initial profile, constant over the history interval unless `speed` is set,
/// in which case it is transported as `f(x - speed·s)` for `s ∈ [-h, 0]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSpec {
    Gaussian {
        center: f64,
        stddev: f64,
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default)]
        speed: f64,
    },
    Bump {
        center: f64,
        half_width: f64,
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default)]
        speed: f64,
    },
    Constant {
        value: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl InitialSpec {
    pub fn eval(&self, x: f64, s: f64) -> f64 {
        match *self {
            InitialSpec::Gaussian {
                center,
                stddev,
                amplitude,
                speed,
            } => amplitude * (-(x - speed * s - center).powi(2) / (2.0 * stddev * stddev)).exp(),
            InitialSpec::Bump {
                center,
                half_width,
                amplitude,
                speed,
            } => {
                let y = (x - speed * s - center) / half_width;
                if y.abs() < 1.0 {
                    amplitude * (0.5 * std::f64::consts::PI * y).cos().powi(2)
                } else {
                    0.0
                }
            }
            InitialSpec::Constant { value } => value,
        }
    }

    pub fn history(&self, grid: &Grid, h: f64, n_h: usize) -> History {
        History::from_fn(grid, h, n_h, |s, x| self.eval(x, s))
    }

    fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Config(format!("initial: {what}")));
        match *self {
            InitialSpec::Gaussian { stddev, .. } if !(stddev > 0.0) => bad("stddev must be > 0"),
            InitialSpec::Bump { half_width, .. } if !(half_width > 0.0) => bad("half_width must be > 0"),
            InitialSpec::Constant { value } if !value.is_finite() => bad("value must be finite"),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZRange {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl ZRange {
    pub fn values(&self) -> Vec<f64> {
        if self.points < 2 {
            return vec![self.min];
        }
        let step = (self.max - self.min) / (self.points - 1) as f64;
        (0..self.points).map(|i| self.min + i as f64 * step).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSpec {
    pub m: f64,
    pub p: f64,
    pub h: f64,
}

/// Everything a subcommand may need; each subcommand names the fields it requires.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub kernel: Option<Kernel>,
    pub birth: Option<BirthFunction>,
    pub params: Option<ParamsSpec>,
    /// Delay for the nonlinear problem when `params` is absent.
    pub h: Option<f64>,
    /// Overrides `birth.g'(0)` for the speed computation.
    pub gprime0: Option<f64>,
    pub grid: Option<GridSpec>,
    pub time: Option<TimeSpec>,
    pub initial: Option<InitialSpec>,
    pub z_range: Option<ZRange>,
    /// Level tracked by `simulate-kpp`; defaults to `κ/2`.
    pub beta: Option<f64>,
    /// Snapshot times of the fundamental solution.
    pub times: Option<Vec<f64>>,
    pub output_dir: Option<PathBuf>,

    pub mckean: Option<McKeanConfig>,
    pub extinction: Option<ExtinctionConfig>,
    pub spreading: Option<SpreadingConfig>,
    pub bridge: Option<BridgeConfig>,
    pub asymptotics: Option<AsymptoticsConfig>,
    pub fundamental: Option<FundamentalConfig>,
    pub cross_validation: Option<CrossValidationConfig>,
}

fn missing(field: &str) -> Error {
    Error::Config(format!("missing field `{field}`"))
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("malformed config: {e}")))?;
        let cfg: RunConfig = serde_json::from_value(value.clone()).map_err(|e| {
            // Re-parse one top-level entry at a time so the message names the field.
            let culprit = value.as_object().and_then(|obj| {
                obj.iter().find_map(|(k, v)| {
                    let single = serde_json::json!({ k.as_str(): v });
                    serde_json::from_value::<RunConfig>(single)
                        .err()
                        .map(|e| format!("field `{k}`: {e}"))
                })
            });
            Error::Config(format!("malformed config: {}", culprit.unwrap_or_else(|| e.to_string())))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Runs every module precondition that can be checked without solving.
    pub fn validate(&self) -> Result<()> {
        let tag = |field: &'static str| move |e: Error| Error::Config(format!("{field}: {e}"));
        if let Some(k) = &self.kernel {
            k.validate().map_err(tag("kernel"))?;
        }
        if let Some(g) = &self.birth {
            g.validate().map_err(tag("birth"))?;
        }
        if let Some(p) = &self.params {
            CharParams::new(p.m, p.p, p.h).map_err(tag("params"))?;
        }
        if let Some(h) = self.h {
            if !(h >= 0.0 && h.is_finite()) {
                return Err(Error::Config(format!("h: must be finite and >= 0, got {h}")));
            }
        }
        if let Some(g) = &self.grid {
            g.build().map_err(tag("grid"))?;
        }
        if let Some(t) = &self.time {
            if !(t.t_end > 0.0 && t.stride > 0.0 && t.n_h > 0 && t.dt > 0.0) {
                return Err(Error::Config(
                    "time: t_end, stride, dt must be > 0 and n_h >= 1".into(),
                ));
            }
        }
        if let Some(i) = &self.initial {
            i.validate()?;
        }
        if let Some(z) = &self.z_range {
            if !(z.max > z.min && z.points >= 2) {
                return Err(Error::Config("z_range: need max > min and points >= 2".into()));
            }
        }
        if let (Some(beta), Some(g)) = (self.beta, &self.birth) {
            if !(beta > 0.0 && beta < g.kappa()) {
                return Err(Error::Config(format!(
                    "beta: must lie in (0, kappa = {}), got {beta}",
                    g.kappa()
                )));
            }
        }
        Ok(())
    }

    pub fn kernel(&self) -> Result<Kernel> {
        self.kernel.ok_or_else(|| missing("kernel"))
    }

    pub fn birth(&self) -> Result<BirthFunction> {
        self.birth.ok_or_else(|| missing("birth"))
    }

    pub fn params(&self) -> Result<CharParams> {
        let p = self.params.ok_or_else(|| missing("params"))?;
        CharParams::new(p.m, p.p, p.h)
    }

    /// Delay from `h`, falling back to `params.h`.
    pub fn delay(&self) -> Result<f64> {
        self.h
            .or(self.params.map(|p| p.h))
            .ok_or_else(|| missing("h"))
    }

    pub fn gprime0(&self) -> Result<f64> {
        match (self.gprime0, &self.birth) {
            (Some(g), _) => Ok(g),
            (None, Some(b)) => Ok(b.gprime0()),
            _ => Err(missing("gprime0")),
        }
    }

    pub fn grid(&self) -> Result<Grid> {
        self.grid.ok_or_else(|| missing("grid"))?.build()
    }

    pub fn time(&self) -> Result<TimeSpec> {
        self.time.ok_or_else(|| missing("time"))
    }

    pub fn initial(&self) -> Result<InitialSpec> {
        self.initial.ok_or_else(|| missing("initial"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_full_config() {
        let cfg = RunConfig::from_json(
            r#"{
                "kernel": {"family": "dirac", "shift": 0.0, "mass": 1.0},
                "birth": {"family": "nicholson", "p": 2.0, "a": 1.0},
                "h": 1.0,
                "grid": {"length": 100.0, "n_points": 256},
                "time": {"t_end": 5.0, "n_h": 16},
                "initial": {"shape": "bump", "center": 0.0, "half_width": 2.0}
            }"#,
        )
        .unwrap();
        assert_eq!(cfg.delay().unwrap(), 1.0);
        assert_eq!(cfg.gprime0().unwrap(), 2.0);
        assert_eq!(cfg.time().unwrap().output_times().len(), 5);
    }

    #[test]
    fn errors_name_the_field() {
        let e = RunConfig::from_json(r#"{"grid": {"length": -1.0, "n_points": 8}}"#).unwrap_err();
        assert!(e.to_string().contains("grid"), "{e}");
        let e = RunConfig::from_json(r#"{"kernal": {}}"#).unwrap_err();
        assert!(e.to_string().contains("kernal"), "{e}");
        let e = RunConfig::default().kernel().unwrap_err();
        assert!(e.to_string().contains("kernel"));
        let e = RunConfig::from_json(
            r#"{"birth": {"family": "nicholson", "p": 2.0, "a": 1.0}, "beta": 5.0}"#,
        )
        .unwrap_err();
        assert!(e.to_string().contains("beta"), "{e}");
    }

    #[test]
    fn output_times_end_at_horizon() {
        let t = TimeSpec {
            t_end: 2.5,
            n_h: 8,
            stride: 1.0,
            dt: 0.01,
        };
        assert_eq!(t.output_times(), vec![1.0, 2.0, 2.5]);
    }
}
