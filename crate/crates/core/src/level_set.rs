//! Leftmost and rightmost crossings of a level by a sampled profile.

use serde::Serialize;

use crate::grid::{Field, Grid};

/// `m⁻` and `m⁺` of one snapshot; `None` when the level is not crossed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LevelCrossing {
    pub m_minus: Option<f64>,
    pub m_plus: Option<f64>,
}

impl LevelCrossing {
    pub fn attained(&self) -> bool {
        self.m_minus.is_some()
    }
}

fn crossing(grid: &Grid, u: &[f64], beta: f64, j: usize) -> Option<f64> {
    let (a, b) = (u[j] - beta, u[j + 1] - beta);
    if a == 0.0 {
        return Some(grid.x(j));
    }
    if a * b < 0.0 || b == 0.0 {
        let s = a / (a - b);
        return Some(grid.x(j) + s * grid.dx());
    }
    None
}

/// Scans `u - β` for sign changes from the left and from the right and
/// interpolates linearly between the bracketing nodes.
pub fn level_set(grid: &Grid, field: &Field, beta: f64) -> LevelCrossing {
    let u = &field.values;
    let n = u.len();
    let m_minus = (0..n - 1).find_map(|j| crossing(grid, u, beta, j));
    let m_plus = (0..n - 1).rev().find_map(|j| crossing(grid, u, beta, j));
    LevelCrossing { m_minus, m_plus }
}

/// Level-set positions over time together with the drift diagnostics.
#[derive(Debug, Clone, Default, Serialize)]
pub struct LevelSetTrace {
    pub beta: f64,
    pub times: Vec<f64>,
    pub m_minus: Vec<Option<f64>>,
    pub m_plus: Vec<Option<f64>>,
}

impl LevelSetTrace {
    pub fn new(beta: f64) -> Self {
        LevelSetTrace {
            beta,
            ..Default::default()
        }
    }

    pub fn record(&mut self, grid: &Grid, field: &Field) {
        let c = level_set(grid, field, self.beta);
        self.times.push(field.time);
        self.m_minus.push(c.m_minus);
        self.m_plus.push(c.m_plus);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `M(t) = m⁻(t) + c t - log(t) / (2λ)` at attained times `t > 0`.
    pub fn drift_minus(&self, c: f64, lambda: f64) -> Vec<(f64, f64)> {
        drift(&self.times, &self.m_minus, c, lambda)
    }

    /// `M*(t) = m⁺(t) + c t - log(t) / (2λ)` at attained times `t > 0`.
    pub fn drift_plus(&self, c: f64, lambda: f64) -> Vec<(f64, f64)> {
        drift(&self.times, &self.m_plus, c, lambda)
    }
}

fn drift(times: &[f64], m: &[Option<f64>], c: f64, lambda: f64) -> Vec<(f64, f64)> {
    times
        .iter()
        .zip(m)
        .filter(|(&t, _)| t > 0.0)
        .filter_map(|(&t, m)| m.map(|m| (t, m + c * t - t.ln() / (2.0 * lambda))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolates_step() {
        let grid = Grid::new(20.0, 256).unwrap();
        let f = Field {
            time: 0.0,
            values: grid.sample(|x| 1.0 / (1.0 + (-(x - 0.013)).exp())),
        };
        let c = level_set(&grid, &f, 0.5);
        let m = c.m_minus.unwrap();
        assert!((f.interpolate(&grid, m) - 0.5).abs() < 1e-6);
        assert!((m - 0.013).abs() < 1e-3);
    }

    #[test]
    fn constant_is_not_attained() {
        let grid = Grid::new(20.0, 256).unwrap();
        let f = Field {
            time: 1.0,
            values: vec![0.7; 256],
        };
        let c = level_set(&grid, &f, 0.35);
        assert!(!c.attained() && c.m_plus.is_none());
    }

    #[test]
    fn symmetric_bump() {
        let grid = Grid::new(20.0, 256).unwrap();
        let f = Field {
            time: 0.0,
            values: grid.sample(|x| (-x * x / 3.0).exp()),
        };
        let c = level_set(&grid, &f, 0.3);
        assert!((c.m_plus.unwrap() + c.m_minus.unwrap()).abs() < grid.dx());
    }

    #[test]
    fn drift_skips_missing() {
        let mut tr = LevelSetTrace::new(0.5);
        tr.times = vec![0.0, 1.0, 2.0];
        tr.m_minus = vec![Some(0.0), None, Some(-1.0)];
        let d = tr.drift_minus(0.5, 1.0);
        assert_eq!(d.len(), 1);
        assert!((d[0].1 - (-1.0 + 1.0 - 2f64.ln() / 2.0)).abs() < 1e-15);
    }
}
