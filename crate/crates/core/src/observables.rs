//! Expectation values and the small-r coefficients of solved states.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{HvlError, Result};
use crate::model::EffectiveCoefficient;
use crate::series::PowerLogSeries;
use crate::solver::{BoundaryCondition, Eigenstate, Grid};

/// Below this `P` the two singular branches are fitted through the logarithmic basis.
pub const LOG_BASIS_THRESHOLD: f64 = 0.02;
pub const FIT_RESIDUAL_LIMIT: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FitKind {
    Regular { s: u32 },
    Singular { p: f64 },
    SingularLog,
    StandardOnly { p: f64 },
}

/// Least-squares fit of `R` near the origin.
///
/// For regular states `a_st` holds `a_s` and `a_add` is zero. For
/// `SingularLog` states `a_st` multiplies `r^{-1/2}` and `a_add` multiplies
/// `r^{-1/2} ln r`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OriginFit {
    pub kind: FitKind,
    pub a_st: f64,
    pub a_add: f64,
    pub window: (f64, f64),
    pub residual: f64,
    pub accepted: bool,
    pub warnings: Vec<String>,
    /// `R` near the origin as fitted, restricted to the branches the boundary condition keeps.
    #[serde(skip)]
    pub radial_series: PowerLogSeries,
}

impl OriginFit {
    pub fn a_s(&self) -> Option<f64> {
        match self.kind {
            FitKind::Regular { .. } => Some(self.a_st),
            _ => None,
        }
    }
}

fn kind_of(bc: &BoundaryCondition) -> FitKind {
    match *bc {
        BoundaryCondition::Regular { s } => FitKind::Regular { s },
        BoundaryCondition::Singular { p, .. } => FitKind::Singular { p },
        BoundaryCondition::SingularLog { .. } => FitKind::SingularLog,
        BoundaryCondition::StandardOnly { p } => FitKind::StandardOnly { p },
    }
}

/// Relative least squares `R_i ~ sum_k c_k phi_k(r_i)`.
fn lstsq(rs: &[f64], values: &[f64], basis: &[&dyn Fn(f64) -> f64]) -> Result<(Vec<f64>, f64)> {
    let rows: Vec<usize> = (0..rs.len()).filter(|&i| values[i] != 0.0).collect();
    let k = basis.len();
    if rows.len() < k + 2 {
        return Err(HvlError::Fit(format!(
            "only {} usable points in the fit window",
            rows.len()
        )));
    }
    let mut a = DMatrix::<f64>::zeros(rows.len(), k);
    let b = DVector::<f64>::from_element(rows.len(), 1.0);
    for (row, &i) in rows.iter().enumerate() {
        for (col, phi) in basis.iter().enumerate() {
            a[(row, col)] = phi(rs[i]) / values[i];
        }
    }
    let mut norms = vec![0.0; k];
    for (col, n) in norms.iter_mut().enumerate() {
        *n = a.column(col).norm();
        if *n == 0.0 || !n.is_finite() {
            return Err(HvlError::Fit("degenerate fit basis".into()));
        }
        a.column_mut(col).scale_mut(1.0 / *n);
    }
    let svd = a.clone().svd(true, true);
    let x = svd
        .solve(&b, 1e-14)
        .map_err(|e| HvlError::Fit(e.to_string()))?;
    let resid = (&a * &x - &b).norm() / (rows.len() as f64).sqrt();
    let coeffs = (0..k).map(|c| x[c] / norms[c]).collect();
    Ok((coeffs, resid))
}

/// Origin fit from sampled `R`, with the default window `[2 r_min, 100 r_min]`.
pub fn fit_origin_samples(
    coeff: &EffectiveCoefficient,
    bc: &BoundaryCondition,
    grid: &Grid,
    radial: &[f64],
) -> Result<OriginFit> {
    let r_min = grid.r_min();
    let kappa0 = coeff.origin_strength();
    let scale = if kappa0 != 0.0 { kappa0.abs() } else { 1.0 };
    let mut warnings = Vec::new();
    let lo = 2.0 * r_min;
    let mut hi = 100.0 * r_min;
    while (hi * hi * coeff.a(hi) - kappa0).abs() >= 0.05 * scale {
        hi *= 0.5;
        if hi < 8.0 * r_min {
            warnings.push("small-r asymptotics not reached inside the default fit window".into());
            hi = 8.0 * r_min;
            break;
        }
    }
    let mut fit = fit_on_window(coeff, bc, grid, radial, (lo, hi))?;
    fit.warnings.splice(0..0, warnings);
    if !fit.warnings.is_empty() {
        fit.accepted = false;
    }
    if fit.residual >= FIT_RESIDUAL_LIMIT {
        fit.accepted = false;
        fit.warnings.push(format!(
            "origin fit residual {:.3e} above {FIT_RESIDUAL_LIMIT:e}",
            fit.residual
        ));
    }
    Ok(fit)
}

/// Origin fit on an explicit window.
pub fn fit_on_window(
    coeff: &EffectiveCoefficient,
    bc: &BoundaryCondition,
    grid: &Grid,
    radial: &[f64],
    window: (f64, f64),
) -> Result<OriginFit> {
    let idx: Vec<usize> = (0..grid.len())
        .filter(|&i| grid.r(i) >= window.0 && grid.r(i) <= window.1)
        .collect();
    let rs: Vec<f64> = idx.iter().map(|&i| grid.r(i)).collect();
    let vs: Vec<f64> = idx.iter().map(|&i| radial[i]).collect();
    let c1 = coeff.inverse_r_coefficient();
    let mut warnings = Vec::new();
    let kind = kind_of(bc);
    let (a_st, a_add, residual, series) = match kind {
        FitKind::Regular { s } => {
            let s = s as f64;
            let (c, res) = lstsq(&rs, &vs, &[&|r: f64| r.powf(s), &|r: f64| r.powf(s + 1.0)])?;
            let series = PowerLogSeries::new()
                .with(c[0], s, 0)
                .with(c[1], s + 1.0, 0);
            (c[0], 0.0, res, series)
        }
        FitKind::StandardOnly { p } => {
            let e = -0.5 + p;
            let (c, res) = lstsq(&rs, &vs, &[&|r: f64| r.powf(e), &|r: f64| r.powf(e + 1.0)])?;
            let series = PowerLogSeries::new()
                .with(c[0], e, 0)
                .with(c[1], e + 1.0, 0);
            (c[0], 0.0, res, series)
        }
        FitKind::SingularLog => {
            let (c, res) = lstsq(
                &rs,
                &vs,
                &[&|r: f64| r.powf(-0.5), &|r: f64| r.powf(-0.5) * r.ln()],
            )?;
            let mut series = PowerLogSeries::new();
            let tau = bc.tau().unwrap_or(0.0);
            if tau.is_finite() {
                series.push(c[0], -0.5, 0);
            }
            if tau != 0.0 {
                series.push(c[1], -0.5, 1);
            }
            (c[0], c[1], res, series)
        }
        FitKind::Singular { p } => {
            let (rp, rm) = (0.5 + p, 0.5 - p);
            let (dp, dm) = (-c1 / (2.0 * rp), -c1 / (2.0 * rm));
            let (a_st, a_add, res) = if p < LOG_BASIS_THRESHOLD {
                warnings.push(format!(
                    "P = {p:.4} too close to 0 for a two-power fit; fitted through the logarithmic basis"
                ));
                let (c, res) = lstsq(
                    &rs,
                    &vs,
                    &[&|r: f64| r.powf(-0.5), &|r: f64| r.powf(-0.5) * r.ln()],
                )?;
                (0.5 * (c[0] + c[1] / p), 0.5 * (c[0] - c[1] / p), res)
            } else {
                let (c, res) = lstsq(
                    &rs,
                    &vs,
                    &[&|r: f64| r.powf(rp - 1.0) * (1.0 + dp * r), &|r: f64| {
                        r.powf(rm - 1.0) * (1.0 + dm * r)
                    }],
                )?;
                (c[0], c[1], res)
            };
            let tau = bc.tau().unwrap_or(0.0);
            let mut series = PowerLogSeries::new();
            if tau.is_finite() {
                series.push(a_st, rp - 1.0, 0);
                series.push(a_st * dp, rp, 0);
            }
            if tau != 0.0 {
                series.push(a_add, rm - 1.0, 0);
                series.push(a_add * dm, rm, 0);
            }
            (a_st, a_add, res, series)
        }
    };
    let accepted = residual < FIT_RESIDUAL_LIMIT && warnings.is_empty();
    Ok(OriginFit {
        kind,
        a_st,
        a_add,
        window,
        residual,
        accepted,
        warnings,
        radial_series: series,
    })
}

pub fn fit_origin(state: &Eigenstate) -> OriginFit {
    state.origin.clone()
}

/// Refit of a state on a different window.
pub fn refit_origin(state: &Eigenstate, window: (f64, f64)) -> Result<OriginFit> {
    fit_on_window(
        &state.coefficient()?,
        &state.bc,
        &state.grid,
        &state.radial,
        window,
    )
}

/// A function averaged against `R^2 r^2`, with its small-r power if known.
#[derive(Clone)]
pub struct Weight {
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    exponent: Option<f64>,
}

impl fmt::Debug for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Weight")
            .field("exponent", &self.exponent)
            .finish()
    }
}

impl Weight {
    pub fn new(f: impl Fn(f64) -> f64 + Send + Sync + 'static, exponent: Option<f64>) -> Self {
        Weight {
            f: Arc::new(f),
            exponent,
        }
    }

    /// `r^q`.
    pub fn power(q: f64) -> Self {
        if q == 0.0 {
            return Weight::new(|_| 1.0, Some(0.0));
        }
        Weight::new(move |r: f64| r.powf(q), Some(q))
    }

    pub fn exponent(&self) -> Option<f64> {
        self.exponent
    }

    pub fn eval(&self, r: f64) -> f64 {
        (self.f)(r)
    }
}

/// Smallest small-r exponent of `R` kept by the boundary condition.
pub fn radial_exponent(bc: &BoundaryCondition) -> f64 {
    match *bc {
        BoundaryCondition::Regular { s } => s as f64,
        BoundaryCondition::StandardOnly { p } => -0.5 + p,
        BoundaryCondition::Singular { p, tau } => {
            if tau == 0.0 {
                -0.5 + p
            } else {
                -0.5 - p
            }
        }
        BoundaryCondition::SingularLog { .. } => -0.5,
    }
}

/// `integral f R^2 r^2 dr` over `[0, r_max]`.
pub fn expectation(state: &Eigenstate, weight: &Weight) -> Result<f64> {
    let grid = &state.grid;
    let r0 = grid.r_min();
    let exponent = match weight.exponent {
        Some(p) => p,
        None if state.bc.is_regular() => {
            let (f0, f1) = (weight.eval(r0), weight.eval(2.0 * r0));
            if f0 == 0.0 || f1 == 0.0 || f0.signum() != f1.signum() {
                0.0
            } else {
                (f1 / f0).ln() / 2f64.ln()
            }
        }
        None => {
            return Err(HvlError::Precondition(
                "averages over singular states need the small-r exponent of the weight".into(),
            ))
        }
    };
    let lead = exponent + 2.0 * radial_exponent(&state.bc) + 2.0;
    if lead <= -1.0 {
        return Err(HvlError::Divergence(format!(
            "weight ~ r^{exponent} against R^2 r^2 ~ r^{} is not integrable at the origin",
            lead - exponent
        )));
    }
    let samples: Vec<f64> = grid
        .radii()
        .iter()
        .zip(&state.radial)
        .map(|(&r, &rad)| {
            let u = r * rad;
            if u == 0.0 {
                0.0
            } else {
                weight.eval(r) * u * u
            }
        })
        .collect();
    let body = grid.integrate(&samples);
    let u_series = state.origin.radial_series.shifted(1.0);
    let c = weight.eval(r0) / r0.powf(exponent);
    let tail = if c == 0.0 {
        0.0
    } else {
        c * u_series
            .product(&u_series)
            .shifted(exponent)
            .integral_from_zero(r0)?
    };
    let total = body + tail;
    if !total.is_finite() {
        return Err(HvlError::Divergence("average is not finite".into()));
    }
    Ok(total)
}

/// `R^{(l)}(0) = l! a_l` for a regular state.
pub fn derivative_at_origin(state: &Eigenstate) -> Result<f64> {
    let s = match state.origin.kind {
        FitKind::Regular { s } => s,
        _ => {
            return Err(HvlError::Domain(
                "derivative at the origin is undefined for a singular state".into(),
            ))
        }
    };
    if !state.origin.accepted {
        return Err(HvlError::Fit(format!(
            "origin fit not accepted: {}",
            state.origin.warnings.join("; ")
        )));
    }
    let fact: f64 = (1..=s).map(|k| k as f64).product();
    Ok(fact * state.origin.a_st)
}
