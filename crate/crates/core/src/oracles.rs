//! Closed-form reference states.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{HvlError, Result};
use crate::model::{build_effective_coefficient, EquationKind, PotentialSpec, RadialProblem};
use crate::solver::{decay_radius, BoundaryCondition, Diagnostics, Eigenstate, GridSpec};
use crate::specfun::{bessel_k, gamma};

#[derive(Debug, Clone, Copy, PartialEq)]
enum Form {
    /// `N x^l e^{-x/2} L_{n-l-1}^{2l+1}(x)`, `x = c r`.
    Hydrogen { n: u32, c: f64 },
    /// `N r^l e^{-beta r^2/2} L_{nr}^{l+1/2}(beta r^2)`.
    Oscillator { nr: u32, beta: f64 },
    /// `N r^{-1/2} K_P(kappa r)`.
    BesselK { p: f64, kappa: f64 },
}

/// A closed-form bound state: problem, eigenvalue and `R` with its derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedForm {
    pub provenance: &'static str,
    pub problem: RadialProblem,
    pub bc: BoundaryCondition,
    pub eigenvalue: f64,
    pub nodes: usize,
    norm: f64,
    form: Form,
}

/// An oracle sampled on a solver grid.
#[derive(Debug, Clone)]
pub struct OracleState {
    pub provenance: &'static str,
    pub closed: ClosedForm,
    pub state: Eigenstate,
}

fn factorial(k: u32) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// `L_k^{(a)}(x)`; zero for negative `k`.
fn laguerre(k: i64, a: f64, x: f64) -> f64 {
    if k < 0 {
        return 0.0;
    }
    let (mut l0, mut l1) = (1.0, 1.0 + a - x);
    if k == 0 {
        return l0;
    }
    for j in 1..k {
        let j = j as f64;
        let l2 = ((2.0 * j + 1.0 + a - x) * l1 - (j + a) * l0) / (j + 1.0);
        l0 = l1;
        l1 = l2;
    }
    l1
}

/// `x^k` with `0 * x^{-1}` read as zero.
fn mono(coef: f64, x: f64, k: i64) -> f64 {
    if coef == 0.0 {
        0.0
    } else {
        coef * x.powi(k as i32)
    }
}

pub fn hydrogen(n: u32, l: u32, mass: f64, alpha: f64) -> Result<ClosedForm> {
    if n == 0 || l >= n || !(mass > 0.0) || !(alpha > 0.0) {
        return Err(HvlError::Domain(format!(
            "hydrogen oracle needs n >= 1, l < n, m > 0, alpha > 0; got n={n}, l={l}, m={mass}, alpha={alpha}"
        )));
    }
    let c = 2.0 * mass * alpha / n as f64;
    let k = n - l - 1;
    let norm = (c.powi(3) * factorial(k) / (2.0 * n as f64 * factorial(n + l))).sqrt();
    Ok(ClosedForm {
        provenance: "hydrogen-laguerre",
        problem: RadialProblem::schroedinger(mass, PotentialSpec::coulomb(alpha), l),
        bc: BoundaryCondition::Regular { s: l },
        eigenvalue: -mass * alpha * alpha / (2.0 * (n * n) as f64),
        nodes: k as usize,
        norm,
        form: Form::Hydrogen { n, c },
    })
}

pub fn oscillator(nr: u32, l: u32, mass: f64, omega: f64) -> Result<ClosedForm> {
    if !(mass > 0.0) || !(omega > 0.0) {
        return Err(HvlError::Domain(format!(
            "oscillator oracle needs m > 0, omega > 0; got m={mass}, omega={omega}"
        )));
    }
    let beta = mass * omega;
    let lf = l as f64;
    let norm = (2.0 * beta.powf(lf + 1.5) * factorial(nr) / gamma(nr as f64 + lf + 1.5)?).sqrt();
    Ok(ClosedForm {
        provenance: "oscillator-laguerre",
        problem: RadialProblem::schroedinger(
            mass,
            PotentialSpec::power_law(0.5 * mass * omega * omega, 2.0),
            l,
        ),
        bc: BoundaryCondition::Regular { s: l },
        eigenvalue: omega * (2.0 * nr as f64 + lf + 1.5),
        nodes: nr as usize,
        norm,
        form: Form::Oscillator { nr, beta },
    })
}

fn check_p(p: f64) -> Result<()> {
    if p > 0.0 && p < 0.5 {
        Ok(())
    } else {
        Err(HvlError::Domain(format!("P must lie in (0, 1/2), got {p}")))
    }
}

/// `tau = a_add / a_st` of `r^{-1/2} K_P(kappa r)`.
pub fn bessel_k_tau(p: f64, kappa: f64) -> Result<f64> {
    check_p(p)?;
    Ok(-(0.5 * kappa).powf(-2.0 * p) * gamma(1.0 + p)? / gamma(1.0 - p)?)
}

fn bessel_k_norm(p: f64, kappa: f64) -> f64 {
    (2.0 * kappa * kappa * (PI * p).sin() / (PI * p)).sqrt()
}

/// Schroedinger inverse-square state `R = N r^{-1/2} K_P(kappa r)`, `E = -kappa^2/2m`, `l = 0`.
pub fn inverse_square(p: f64, kappa: f64, mass: f64) -> Result<ClosedForm> {
    check_p(p)?;
    if !(kappa > 0.0) || !(mass > 0.0) {
        return Err(HvlError::Domain("kappa and m must be positive".into()));
    }
    let v0 = (0.25 - p * p) / (2.0 * mass);
    let problem = RadialProblem::schroedinger(mass, PotentialSpec::inverse_square(v0), 0);
    Ok(ClosedForm {
        provenance: "inverse-square-bessel-k",
        bc: BoundaryCondition::for_problem(&problem, bessel_k_tau(p, kappa)?)?,
        problem,
        eigenvalue: -kappa * kappa / (2.0 * mass),
        nodes: 0,
        norm: bessel_k_norm(p, kappa),
        form: Form::BesselK { p, kappa },
    })
}

/// Coulomb strength giving `P` for the two-body Klein-Gordon equation at `l = 0`.
pub fn massless_alpha(p: f64) -> f64 {
    2.0 * (0.25 - p * p).sqrt()
}

/// Two-body Klein-Gordon Coulomb state with `M = 0`: `R ~ sqrt(m/r) K_P(m r)`, `l = 0`.
pub fn massless_kg(p: f64, mass: f64, repulsive: bool) -> Result<ClosedForm> {
    check_p(p)?;
    if !(mass > 0.0) {
        return Err(HvlError::Domain("m must be positive".into()));
    }
    let alpha = massless_alpha(p);
    let potential = if repulsive {
        PotentialSpec::coulomb_repulsive(alpha)
    } else {
        PotentialSpec::coulomb(alpha)
    };
    let problem = RadialProblem::new(EquationKind::KleinGordonTwoBody { mass }, potential, 0);
    Ok(ClosedForm {
        provenance: "massless-kg-bessel-k",
        bc: BoundaryCondition::for_problem(&problem, bessel_k_tau(p, mass)?)?,
        problem,
        eigenvalue: 0.0,
        nodes: 0,
        norm: bessel_k_norm(p, mass),
        form: Form::BesselK { p, kappa: mass },
    })
}

impl ClosedForm {
    /// `(R, R', R'')` at `r`.
    pub fn values(&self, r: f64) -> Result<(f64, f64, f64)> {
        let l = self.problem.l as i64;
        let n = self.norm;
        Ok(match self.form {
            Form::Hydrogen { n: nn, c } => {
                let k = nn as i64 - l - 1;
                let a = 2.0 * l as f64 + 1.0;
                let x = c * r;
                let (lg, lg1, lg2) = (
                    laguerre(k, a, x),
                    -laguerre(k - 1, a + 1.0, x),
                    laguerre(k - 2, a + 2.0, x),
                );
                let lf = l as f64;
                let p0 = mono(1.0, x, l) * lg;
                let p1 = mono(lf, x, l - 1) * lg + mono(1.0, x, l) * lg1;
                let p2 = mono(lf * (lf - 1.0), x, l - 2) * lg
                    + mono(2.0 * lf, x, l - 1) * lg1
                    + mono(1.0, x, l) * lg2;
                let e = (-0.5 * x).exp();
                (
                    n * p0 * e,
                    n * c * (p1 - 0.5 * p0) * e,
                    n * c * c * (p2 - p1 + 0.25 * p0) * e,
                )
            }
            Form::Oscillator { nr, beta } => {
                let k = nr as i64;
                let a = l as f64 + 0.5;
                let y = beta * r * r;
                let lf = l as f64;
                let (a0, a1, a2) = (
                    mono(1.0, r, l),
                    mono(lf, r, l - 1),
                    mono(lf * (lf - 1.0), r, l - 2),
                );
                let g = (-0.5 * y).exp();
                let (b0, b1, b2) = (g, -beta * r * g, (beta * beta * r * r - beta) * g);
                let (d1, d2) = (-laguerre(k - 1, a + 1.0, y), laguerre(k - 2, a + 2.0, y));
                let c0 = laguerre(k, a, y);
                let c1 = d1 * 2.0 * beta * r;
                let c2 = d2 * 4.0 * beta * beta * r * r + d1 * 2.0 * beta;
                (
                    n * a0 * b0 * c0,
                    n * (a1 * b0 * c0 + a0 * b1 * c0 + a0 * b0 * c1),
                    n * (a2 * b0 * c0
                        + a0 * b2 * c0
                        + a0 * b0 * c2
                        + 2.0 * (a1 * b1 * c0 + a1 * b0 * c1 + a0 * b1 * c1)),
                )
            }
            Form::BesselK { p, kappa } => {
                let z = kappa * r;
                let k = bessel_k(p, z)?;
                let kp = -bessel_k(1.0 - p, z)? - p / z * k;
                let kpp = -kp / z + (1.0 + p * p / (z * z)) * k;
                let s = r.powf(-0.5);
                (
                    n * s * k,
                    n * (-0.5 * s / r * k + s * kappa * kp),
                    n * (0.75 * s / (r * r) * k - s / r * kappa * kp + s * kappa * kappa * kpp),
                )
            }
        })
    }

    /// Analytic `(a_st, a_add)`; for regular states `(a_l, 0)`.
    pub fn origin_coefficients(&self) -> Result<(f64, f64)> {
        let l = self.problem.l;
        Ok(match self.form {
            Form::Hydrogen { n, c } => {
                let k = (n - l - 1) as i64;
                (
                    self.norm * c.powi(l as i32) * laguerre(k, 2.0 * l as f64 + 1.0, 0.0),
                    0.0,
                )
            }
            Form::Oscillator { nr, .. } => {
                (self.norm * laguerre(nr as i64, l as f64 + 0.5, 0.0), 0.0)
            }
            Form::BesselK { p, kappa } => {
                let pre = self.norm * PI / (2.0 * (PI * p).sin());
                let a_st = -pre * (0.5 * kappa).powf(p) / gamma(1.0 + p)?;
                let a_add = pre * (0.5 * kappa).powf(-p) / gamma(1.0 - p)?;
                (a_st, a_add)
            }
        })
    }

    /// Samples the state on a grid built from `spec`, with `r_max` placed by the decay rule
    /// unless `spec` fixes it.
    pub fn state_on(&self, spec: &GridSpec, decay: f64) -> Result<OracleState> {
        let r_max = match spec.r_max {
            Some(r) => r,
            None => decay_radius(&self.problem, self.eigenvalue, decay)?,
        };
        let grid = Arc::new(spec.build(r_max)?);
        let radial = grid
            .radii()
            .iter()
            .map(|&r| self.values(r).map(|v| v.0))
            .collect::<Result<Vec<_>>>()?;
        let state = Eigenstate::from_radial(
            self.problem.clone(),
            self.bc,
            self.eigenvalue,
            grid,
            radial,
            Diagnostics::default(),
        )?;
        Ok(OracleState {
            provenance: self.provenance,
            closed: self.clone(),
            state,
        })
    }

    pub fn state(&self) -> Result<OracleState> {
        self.state_on(
            &GridSpec::default(),
            crate::solver::SolverOptions::default().decay,
        )
    }

    /// Largest `|R'' + 2R'/r + L R|` over the interior of `radii`, relative to `max |L R|`.
    pub fn ode_residual(&self, radii: &[f64]) -> Result<f64> {
        let coeff = build_effective_coefficient(&self.problem, self.eigenvalue)?;
        let mut worst: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for &r in &radii[1..radii.len() - 1] {
            let (v, d1, d2) = self.values(r)?;
            let lr = coeff.l_full(r) * v;
            worst = worst.max((d2 + 2.0 * d1 / r + lr).abs());
            scale = scale.max(lr.abs());
        }
        Ok(worst / scale)
    }
}

pub fn hydrogen_state(n: u32, l: u32, mass: f64, alpha: f64) -> Result<OracleState> {
    hydrogen(n, l, mass, alpha)?.state()
}

pub fn oscillator_state(nr: u32, l: u32, mass: f64, omega: f64) -> Result<OracleState> {
    oscillator(nr, l, mass, omega)?.state()
}

pub fn inverse_square_state(p: f64, kappa: f64, mass: f64) -> Result<OracleState> {
    inverse_square(p, kappa, mass)?.state()
}

pub fn massless_kg_state(p: f64, mass: f64) -> Result<OracleState> {
    massless_kg(p, mass, false)?.state()
}
