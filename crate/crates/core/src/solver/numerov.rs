use serde::{Deserialize, Serialize};

use super::grid::Grid;
use crate::error::{HvlError, Result};
use crate::model::EffectiveCoefficient;

const BIG: f64 = 1e100;
const SMALL: f64 = 1e-100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    Outward,
    Inward,
}

/// Result of a Numerov sweep. The true solution is `u * exp(log_scale)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Integration {
    pub u: Vec<f64>,
    pub log_scale: f64,
    pub nodes: usize,
}

/// Numerov corrections `c_i = dx^2 Q_i / 12` for `w'' + Q w = 0` on the mapped grid.
/// The Numerov factor is `F_i = 1 + c_i`.
pub(crate) fn factors(grid: &Grid, l_of_r: impl Fn(usize, f64) -> f64) -> Result<Vec<f64>> {
    let h2 = grid.step() * grid.step() / 12.0;
    let mut c = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let r = grid.r(i);
        let j = grid.jacobian(i);
        let q = j * j * (l_of_r(i, r) + grid.shift(i));
        if !q.is_finite() {
            return Err(HvlError::NonFinite { r });
        }
        c.push(h2 * q);
    }
    Ok(c)
}

// Summed form: y = F w and its increment d are carried separately so that
// rounding in y does not leak into the slope.
fn sweep(c: &[f64], w: &mut [f64], order: &[usize]) -> (f64, usize) {
    let (i0, i1) = (order[0], order[1]);
    let mut log_scale = 0.0;
    let mut nodes = 0;
    let mut sign = w[i1].signum();
    if w[i0] != 0.0 && w[i0].signum() != sign {
        nodes += 1;
    }
    let mut y = (1.0 + c[i1]) * w[i1];
    let mut d = y - (1.0 + c[i0]) * w[i0];
    for k in 1..order.len() - 1 {
        let i = order[k];
        let j = order[k + 1];
        d -= 12.0 * c[i] * w[i];
        y += d;
        let next = y / (1.0 + c[j]);
        w[j] = next;
        if next != 0.0 {
            if sign != 0.0 && next.signum() != sign {
                nodes += 1;
            }
            sign = next.signum();
        }
        if next.abs() > BIG {
            for &t in &order[..=k + 1] {
                w[t] *= SMALL;
            }
            y *= SMALL;
            d *= SMALL;
            log_scale -= SMALL.ln();
        }
    }
    (log_scale, nodes)
}

/// Outward sweep from `w[0], w[1]` up to index `last` (inclusive).
pub(crate) fn sweep_outward(c: &[f64], w: &mut [f64], last: usize) -> (f64, usize) {
    let order: Vec<usize> = (0..=last).collect();
    sweep(c, w, &order)
}

/// Inward sweep from `w[n-1], w[n-2]` down to index `first` (inclusive).
pub(crate) fn sweep_inward(c: &[f64], w: &mut [f64], first: usize) -> (f64, usize) {
    let order: Vec<usize> = (first..w.len()).rev().collect();
    sweep(c, w, &order)
}

/// Integrates `u'' + L u = 0` across the whole grid.
///
/// `seed` holds `u` at the first two points in the direction of travel:
/// indices `(0, 1)` outward, `(n-1, n-2)` inward.
pub fn numerov_integrate(
    coeff: &EffectiveCoefficient,
    grid: &Grid,
    direction: Direction,
    seed: (f64, f64),
) -> Result<Integration> {
    if !seed.0.is_finite() || !seed.1.is_finite() || (seed.0 == 0.0 && seed.1 == 0.0) {
        return Err(HvlError::Domain(format!(
            "seed values must be finite and not both zero, got {seed:?}"
        )));
    }
    let f = factors(grid, |_, r| coeff.l_full(r))?;
    let n = grid.len();
    let mut w = vec![0.0; n];
    let (log_scale, nodes) = match direction {
        Direction::Outward => {
            w[0] = seed.0 / grid.jacobian(0).sqrt();
            w[1] = seed.1 / grid.jacobian(1).sqrt();
            sweep_outward(&f, &mut w, n - 1)
        }
        Direction::Inward => {
            w[n - 1] = seed.0 / grid.jacobian(n - 1).sqrt();
            w[n - 2] = seed.1 / grid.jacobian(n - 2).sqrt();
            sweep_inward(&f, &mut w, 0)
        }
    };
    let u: Vec<f64> = w
        .iter()
        .enumerate()
        .map(|(i, wi)| wi * grid.jacobian(i).sqrt())
        .collect();
    if let Some(i) = u.iter().position(|v| !v.is_finite()) {
        return Err(HvlError::NonFinite { r: grid.r(i) });
    }
    Ok(Integration {
        u,
        log_scale,
        nodes,
    })
}
