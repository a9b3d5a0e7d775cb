use serde::{Deserialize, Serialize};

use crate::error::{HvlError, Result};

/// Radial mesh description.
///
/// The default mesh is uniform in `x = ln r + r / r_switch`: geometric
/// spacing well inside `r_switch`, uniform spacing well outside, with a
/// smooth transition so that a single uniform-step Numerov recursion covers
/// the whole range. `r_max = None` lets the solver pick the outer edge from
/// the decay of the state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub r_min: f64,
    pub r_switch: f64,
    pub r_max: Option<f64>,
    pub points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            r_min: 1e-6,
            r_switch: 1.0,
            r_max: None,
            points: 8001,
        }
    }
}

impl GridSpec {
    /// Same mesh with the step halved.
    pub fn refined(&self) -> GridSpec {
        GridSpec {
            points: 2 * (self.points - 1) + 1,
            ..*self
        }
    }

    pub fn with_r_max(&self, r_max: f64) -> GridSpec {
        GridSpec {
            r_max: Some(r_max),
            ..*self
        }
    }

    pub fn build(&self, r_max: f64) -> Result<Grid> {
        Grid::log_linear(self.r_min, self.r_switch, r_max, self.points)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Mapping {
    /// `x = ln r + r / r_switch`.
    LogLinear { r_switch: f64 },
    /// `x = r`.
    Uniform,
}

/// A mesh `r_i = r(x_i)` with `x_i` uniformly spaced.
///
/// Along with the radii it stores `dr/dx` and the Liouville shift that
/// turns `u'' + L u = 0` into `w'' + (dr/dx)^2 (L + shift) w = 0` for
/// `u = sqrt(dr/dx) w`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    mapping: Mapping,
    x0: f64,
    dx: f64,
    r: Vec<f64>,
    jacobian: Vec<f64>,
    shift: Vec<f64>,
}

fn odd(points: usize) -> usize {
    if points.is_multiple_of(2) {
        points + 1
    } else {
        points
    }
}

impl Grid {
    pub fn log_linear(r_min: f64, r_switch: f64, r_max: f64, points: usize) -> Result<Grid> {
        if !(r_min > 0.0 && r_switch > 0.0 && r_max > r_min) || !r_max.is_finite() {
            return Err(HvlError::Domain(format!(
                "grid needs 0 < r_min < r_max and r_switch > 0, got r_min={r_min}, r_switch={r_switch}, r_max={r_max}"
            )));
        }
        if points < 5 {
            return Err(HvlError::Domain(format!(
                "grid needs at least 5 points, got {points}"
            )));
        }
        let n = odd(points);
        let s = r_switch;
        let to_x = |r: f64| r.ln() + r / s;
        let x0 = to_x(r_min);
        let x1 = to_x(r_max);
        let dx = (x1 - x0) / (n - 1) as f64;
        let mut r = Vec::with_capacity(n);
        let mut y = r_min.ln();
        for i in 0..n {
            let x = x0 + dx * i as f64;
            // Newton on y = ln r: y + e^y / s = x
            for _ in 0..100 {
                let e = y.exp() / s;
                let step = (y + e - x) / (1.0 + e);
                y -= step;
                if step.abs() < 1e-15 * y.abs().max(1.0) {
                    break;
                }
            }
            r.push(y.exp());
        }
        r[0] = r_min;
        r[n - 1] = r_max;
        let mut jacobian = Vec::with_capacity(n);
        let mut shift = Vec::with_capacity(n);
        for &ri in &r {
            let xp = 1.0 / ri + 1.0 / s;
            let xpp = -1.0 / (ri * ri);
            let xppp = 2.0 / (ri * ri * ri);
            let schwarzian = xppp / xp - 1.5 * (xpp / xp) * (xpp / xp);
            jacobian.push(1.0 / xp);
            shift.push(-0.5 * schwarzian);
        }
        let grid = Grid {
            mapping: Mapping::LogLinear { r_switch },
            x0,
            dx,
            r,
            jacobian,
            shift,
        };
        grid.check_increasing()?;
        Ok(grid)
    }

    pub fn uniform(r_min: f64, r_max: f64, points: usize) -> Result<Grid> {
        if !(r_min > 0.0 && r_max > r_min) || !r_max.is_finite() || points < 5 {
            return Err(HvlError::Domain(format!(
                "uniform grid needs 0 < r_min < r_max and >= 5 points, got [{r_min}, {r_max}] x {points}"
            )));
        }
        let n = odd(points);
        let dx = (r_max - r_min) / (n - 1) as f64;
        let r: Vec<f64> = (0..n).map(|i| r_min + dx * i as f64).collect();
        Ok(Grid {
            mapping: Mapping::Uniform,
            x0: r_min,
            dx,
            jacobian: vec![1.0; n],
            shift: vec![0.0; n],
            r,
        })
    }

    fn check_increasing(&self) -> Result<()> {
        if self.r.windows(2).all(|w| w[1] > w[0]) {
            Ok(())
        } else {
            Err(HvlError::Domain("grid is not strictly increasing".into()))
        }
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    pub fn mapping(&self) -> Mapping {
        self.mapping
    }

    pub fn step(&self) -> f64 {
        self.dx
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x0 + self.dx * i as f64
    }

    pub fn radii(&self) -> &[f64] {
        &self.r
    }

    pub fn r(&self, i: usize) -> f64 {
        self.r[i]
    }

    pub fn r_min(&self) -> f64 {
        self.r[0]
    }

    pub fn r_max(&self) -> f64 {
        self.r[self.r.len() - 1]
    }

    /// `dr/dx` at point `i`.
    pub fn jacobian(&self, i: usize) -> f64 {
        self.jacobian[i]
    }

    pub(crate) fn shift(&self, i: usize) -> f64 {
        self.shift[i]
    }

    /// Index of the grid point closest to `r`.
    pub fn index_of(&self, r: f64) -> usize {
        match self.r.binary_search_by(|p| p.total_cmp(&r)) {
            Ok(i) => i,
            Err(0) => 0,
            Err(i) if i >= self.r.len() => self.r.len() - 1,
            Err(i) => {
                if (self.r[i] - r).abs() < (r - self.r[i - 1]).abs() {
                    i
                } else {
                    i - 1
                }
            }
        }
    }

    /// Simpson's rule in `x` for `integral g(r) dr`, given `g` sampled on the grid.
    pub fn integrate(&self, samples: &[f64]) -> f64 {
        debug_assert_eq!(samples.len(), self.len());
        let n = self.len();
        let mut acc = 0.0;
        for i in 0..n {
            let w = if i == 0 || i == n - 1 {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            acc += w * samples[i] * self.jacobian[i];
        }
        acc * self.dx / 3.0
    }
}
