//! Hypervirial and virial identities evaluated on solved states.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{HvlError, Result};
use crate::model::{a_regular_monomials, merge_monomials, EquationKind, Monomial, RadialProblem};
use crate::observables::{expectation, Weight};
use crate::series::PowerLogSeries;
use crate::solver::{BoundaryCondition, Eigenstate};

pub const VIRIAL: &str = "virial";
pub const KRAMERS: &str = "kramers";
pub const OSCILLATOR_RECURRENCE: &str = "oscillator-recurrence";
pub const HYPERVIRIAL_POWER: &str = "hypervirial-power";
pub const HYPERVIRIAL_GENERAL: &str = "hypervirial-general";
pub const ORIGIN_VALUE: &str = "origin-value";
pub const ORIGIN_DENSITY: &str = "origin-density";
pub const ORIGIN_DERIVATIVE: &str = "origin-derivative";
pub const ORIGIN_CENTRIFUGAL: &str = "origin-centrifugal";
pub const KG_VIRIAL: &str = "kg-virial";
pub const KG_MASSLESS: &str = "kg-massless";

/// Default pass threshold for each identity tag.
pub fn default_tolerance(tag: &str) -> f64 {
    match tag {
        VIRIAL | HYPERVIRIAL_GENERAL => 1e-6,
        KRAMERS | OSCILLATOR_RECURRENCE | HYPERVIRIAL_POWER => 1e-5,
        KG_VIRIAL | KG_MASSLESS | "fh-singular" => 1e-3,
        "fh-regular" => 1e-5,
        _ => 1e-4,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NamedTerm {
    pub name: String,
    pub value: f64,
}

fn term(name: &str, value: f64) -> NamedTerm {
    NamedTerm {
        name: name.into(),
        value,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityReport {
    pub identity: String,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub inputs: String,
    pub terms: Vec<NamedTerm>,
}

impl IdentityReport {
    pub fn new(identity: &str, lhs: f64, rhs: f64, terms: Vec<NamedTerm>, inputs: String) -> Self {
        let scale = terms.iter().map(|t| t.value.abs()).fold(0.0, f64::max);
        let denom = scale.max(lhs.abs()).max(rhs.abs());
        let residual = if denom == 0.0 {
            0.0
        } else {
            (lhs - rhs).abs() / denom
        };
        let tolerance = default_tolerance(identity);
        IdentityReport {
            identity: identity.into(),
            lhs,
            rhs,
            residual,
            tolerance,
            pass: residual <= tolerance,
            inputs,
            terms,
        }
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self.pass = self.residual <= tolerance;
        self
    }
}

/// One-line description of the state an identity was evaluated on.
pub fn describe(state: &Eigenstate) -> String {
    let bc = match state.bc {
        BoundaryCondition::Regular { s } => format!("regular s={s}"),
        BoundaryCondition::Singular { p, tau } => format!("singular P={p} tau={tau}"),
        BoundaryCondition::SingularLog { tau } => format!("singular-log tau={tau}"),
        BoundaryCondition::StandardOnly { p } => format!("standard-only P={p}"),
    };
    let terms: Vec<String> = state
        .problem
        .potential
        .monomials()
        .iter()
        .map(|m| format!("{}*r^{}", m.coeff, m.power))
        .collect();
    format!(
        "{} m={} l={} V={} E={:e} nodes={} bc={}",
        state.problem.equation.label(),
        state.problem.mass(),
        state.problem.l,
        if terms.is_empty() {
            "0".into()
        } else {
            terms.join("+")
        },
        state.eigenvalue,
        state.nodes,
        bc
    )
}

/// Test function `f` for the general hypervirial identity.
#[derive(Clone)]
pub struct ProbeFunction {
    pub label: String,
    /// `f ~ c r^exponent` near the origin.
    pub exponent: Option<f64>,
    eval: Arc<dyn Fn(f64) -> [f64; 4] + Send + Sync>,
}

impl fmt::Debug for ProbeFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProbeFunction")
            .field("label", &self.label)
            .field("exponent", &self.exponent)
            .finish()
    }
}

impl ProbeFunction {
    /// `eval(r)` returns `[f, f', f'', f''']`.
    pub fn new(
        label: impl Into<String>,
        exponent: Option<f64>,
        eval: impl Fn(f64) -> [f64; 4] + Send + Sync + 'static,
    ) -> Self {
        ProbeFunction {
            label: label.into(),
            exponent,
            eval: Arc::new(eval),
        }
    }

    pub fn power(q: f64) -> Self {
        ProbeFunction::new(format!("r^{q}"), Some(q), move |r| {
            if q == 0.0 {
                return [1.0, 0.0, 0.0, 0.0];
            }
            let f = r.powf(q);
            [
                f,
                q * f / r,
                q * (q - 1.0) * f / (r * r),
                q * (q - 1.0) * (q - 2.0) * f / (r * r * r),
            ]
        })
    }

    pub fn eval(&self, r: f64) -> [f64; 4] {
        (self.eval)(r)
    }

    /// Largest relative disagreement between the derivative callables and
    /// central differences of the next-lower one.
    pub fn derivative_mismatch(&self, points: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for &r in points {
            let h = 1e-4 * r;
            let (a, b, c) = (self.eval(r - h), self.eval(r + h), self.eval(r));
            for k in 1..4 {
                let num = (b[k - 1] - a[k - 1]) / (2.0 * h);
                let denom = num.abs().max(c[k].abs()).max(c[k - 1].abs() / r);
                if denom > 0.0 {
                    worst = worst.max((num - c[k]).abs() / denom);
                }
            }
        }
        worst
    }

    /// Checks the derivative callables and that the probe does not outgrow the state at `r_max`.
    pub fn check_admissible(&self, state: &Eigenstate) -> Result<()> {
        if self.exponent.is_none() {
            return Err(HvlError::Precondition(format!(
                "probe {} has no small-r exponent",
                self.label
            )));
        }
        let grid = &state.grid;
        let spots: Vec<f64> = [0.3, 1.0, 2.5]
            .iter()
            .map(|x| x * grid.r_max() / 10.0)
            .chain([1e3 * grid.r_min()])
            .collect();
        let mismatch = self.derivative_mismatch(&spots);
        if mismatch > 1e-6 {
            return Err(HvlError::Precondition(format!(
                "probe {} derivatives disagree with differences by {mismatch:.2e}",
                self.label
            )));
        }
        let n = grid.len() - 1;
        let r = grid.r(n);
        let [f, d1, d2, _] = self.eval(r);
        let peak = (0..grid.len())
            .map(|i| state.u(i).abs())
            .fold(0.0, f64::max);
        let edge = (f.abs() + (d1 * r).abs() + (d2 * r * r).abs()) * (state.u(n) / peak).powi(2);
        if !edge.is_finite() || edge > 1e-8 {
            return Err(HvlError::Precondition(format!(
                "probe {} is not negligible against the state at r_max",
                self.label
            )));
        }
        Ok(())
    }
}

fn average_monomials(state: &Eigenstate, terms: &[Monomial]) -> Result<f64> {
    if terms.is_empty() {
        return Ok(0.0);
    }
    let exponent = terms.iter().map(|t| t.power).fold(f64::INFINITY, f64::min);
    let ts = terms.to_vec();
    expectation(
        state,
        &Weight::new(move |r| ts.iter().map(|t| t.value(r)).sum(), Some(exponent)),
    )
}

/// Averages each monomial separately; returns the sum and the individual terms.
fn average_terms(
    state: &Eigenstate,
    terms: &[Monomial],
    name: &str,
) -> Result<(f64, Vec<NamedTerm>)> {
    let mut sum = 0.0;
    let mut out = Vec::new();
    for t in terms {
        let v = t.coeff * expectation(state, &Weight::power(t.power))?;
        sum += v;
        out.push(term(&format!("{name} r^{}", t.power), v));
    }
    Ok((sum, out))
}

fn map_monomials(terms: &[Monomial], f: impl Fn(&Monomial) -> Monomial) -> Vec<Monomial> {
    merge_monomials(terms.iter().map(f).collect())
}

/// `(a_st, a_add)` with the branch the boundary condition excludes set to zero.
pub fn branch_coefficients(state: &Eigenstate) -> (f64, f64) {
    let fit = &state.origin;
    match state.bc.tau() {
        Some(t) if t == 0.0 => (fit.a_st, 0.0),
        Some(t) if t.is_infinite() => (0.0, fit.a_add),
        _ => (fit.a_st, fit.a_add),
    }
}

fn kappa_eff(state: &Eigenstate) -> Result<f64> {
    let l = state.problem.l as f64;
    Ok(state.problem.origin_strength()? - l * (l + 1.0))
}

/// Coefficient of `<r^{q-3}>` in the power-law identity.
fn centrifugal_factor(kappa: f64, q: f64) -> f64 {
    (q - 1.0) * (2.0 * kappa + 0.5 * q * (q - 2.0))
}

fn negligible(c: f64, kappa: f64, q: f64) -> bool {
    c.abs() <= 1e-12 * (1.0 + kappa.abs() + q * q).powf(1.5)
}

fn same(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9
}

fn eigen_a_regular(state: &Eigenstate) -> Result<Vec<Monomial>> {
    a_regular_monomials(&state.problem, state.eigenvalue)
}

/// Power-law hypervirial identity for `f = r^q` with the delta-term boundary values.
pub fn hypervirial_power(state: &Eigenstate, q: f64) -> Result<IdentityReport> {
    let (a_st, a_add) = branch_coefficients(state);
    let lhs = match state.bc {
        BoundaryCondition::Regular { s } => {
            let s = s as f64;
            if q < -2.0 * s - 1e-9 {
                return Err(HvlError::Precondition(format!(
                    "q = {q} below -2s = {}",
                    -2.0 * s
                )));
            }
            if same(q, -2.0 * s) {
                (2.0 * s + 1.0).powi(2) * a_st * a_st
            } else {
                0.0
            }
        }
        BoundaryCondition::Singular { p, .. } => {
            if q < 1.0 - 2.0 * p - 1e-9 {
                return Err(HvlError::Precondition(format!(
                    "q = {q} below 1 - 2P = {}",
                    1.0 - 2.0 * p
                )));
            }
            let mut v = 0.0;
            if same(q, 1.0 - 2.0 * p) {
                v += (1.0 - q) * (0.5 + p - 0.5 * q) * a_st * a_st;
            }
            if same(q, 1.0 + 2.0 * p) {
                v += (1.0 - q) * (0.5 - p - 0.5 * q) * a_add * a_add;
            }
            if same(q, 1.0) {
                v += ((q - 1.0).powi(2) - 4.0 * p * p) * a_st * a_add;
            }
            v
        }
        BoundaryCondition::StandardOnly { p } => {
            if q < 1.0 - 2.0 * p - 1e-9 {
                return Err(HvlError::Precondition(format!(
                    "q = {q} below 1 - 2P = {}",
                    1.0 - 2.0 * p
                )));
            }
            if same(q, 1.0 - 2.0 * p) {
                4.0 * p * p * a_st * a_st
            } else {
                0.0
            }
        }
        BoundaryCondition::SingularLog { .. } => {
            if q < 1.0 - 1e-9 {
                return Err(HvlError::Precondition(format!("q = {q} below 1")));
            }
            if same(q, 1.0) {
                a_add * a_add
            } else {
                0.0
            }
        }
    };
    let areg = eigen_a_regular(state)?;
    let body = map_monomials(&areg, |t| Monomial {
        coeff: t.coeff * (2.0 * q + t.power),
        power: t.power + q - 1.0,
    });
    let (body_avg, body_terms) = average_terms(state, &body, "potential")?;
    let kappa = kappa_eff(state)?;
    let c = centrifugal_factor(kappa, q);
    let cent = if negligible(c, kappa, q) {
        0.0
    } else {
        c * expectation(state, &Weight::power(q - 3.0))?
    };
    let rhs = -body_avg - cent;
    let mut terms = vec![term("boundary", lhs), term("centrifugal", -cent)];
    terms.extend(body_terms.into_iter().map(|t| NamedTerm {
        value: -t.value,
        ..t
    }));
    Ok(IdentityReport::new(
        HYPERVIRIAL_POWER,
        lhs,
        rhs,
        terms,
        format!("{} q={q}", describe(state)),
    ))
}

/// `lim_{r->0}` of the hypervirial boundary bracket for `f ~ c r^q`, from the fitted small-r form of `R`.
///
/// `R''` is eliminated with the radial equation, `r^2 R'' = -2 r R' - r^2 L R^2 / R`.
pub fn boundary_limit(state: &Eigenstate, q: f64, c: f64) -> Result<f64> {
    let r = &state.origin.radial_series;
    let dr = r.derivative();
    let mut l_r2 = PowerLogSeries::new().with(kappa_eff(state)?, 0.0, 0);
    for t in eigen_a_regular(state)? {
        l_r2.push(t.coeff, t.power + 2.0, 0);
    }
    let rr = r.product(r);
    let r_dr = r.product(&dr).shifted(1.0);
    let dr2 = dr.product(&dr).shifted(2.0);
    // R^2 - r^2 R R'' + r^2 R'^2 = R^2 + 2 r R R' + r^2 L R^2 + r^2 R'^2
    let first = rr
        .clone()
        .plus(&r_dr.scaled(2.0))
        .plus(&l_r2.product(&rr))
        .plus(&dr2)
        .shifted(q)
        .scaled(c);
    // f' r R (r R' + R)
    let second = r_dr.plus(&rr).shifted(q).scaled(-c * q);
    let third = rr.shifted(q).scaled(0.5 * c * q * (q - 1.0));
    first
        .plus(&second)
        .plus(&third)
        .limit_at_zero(1e-9)
        .map_err(|e| match e {
            HvlError::Divergence(m) => HvlError::Precondition(format!(
                "probe ~ r^{q} leaves a divergent boundary term: {m}"
            )),
            other => other,
        })
}

/// General hypervirial identity for an arbitrary probe.
pub fn hypervirial_general(state: &Eigenstate, probe: &ProbeFunction) -> Result<IdentityReport> {
    probe.check_admissible(state)?;
    let q = probe.exponent.unwrap_or(0.0);
    let r0 = state.grid.r_min();
    let c = probe.eval(r0)[0] / r0.powf(q);
    let lhs = boundary_limit(state, q, c)?;
    let coeff = state.coefficient()?;
    let kappa = kappa_eff(state)?;
    let e_a = eigen_a_regular(state)?
        .iter()
        .map(|t| t.power)
        .fold(0.0, f64::min);
    let pf = probe.clone();
    let co = coeff.clone();
    let slope = expectation(
        state,
        &Weight::new(
            move |r| -2.0 * pf.eval(r)[1] * co.a_regular(r),
            Some(q - 1.0 + e_a),
        ),
    )?;
    let pf = probe.clone();
    let co = coeff.clone();
    let force = expectation(
        state,
        &Weight::new(
            move |r| -pf.eval(r)[0] * co.a_regular_prime(r),
            Some(q - 1.0 + e_a),
        ),
    )?;
    let potential = slope + force;
    let c3 = centrifugal_factor(kappa, q);
    let pf = probe.clone();
    let cent = expectation(
        state,
        &Weight::new(
            move |r| {
                let [f, d1, _, d3] = pf.eval(r);
                -2.0 * kappa * (d1 / (r * r) - f / (r * r * r)) - 0.5 * d3
            },
            Some(if negligible(c3, kappa, q) {
                q - 2.0
            } else {
                q - 3.0
            }),
        ),
    )?;
    let rhs = potential + cent;
    Ok(IdentityReport::new(
        HYPERVIRIAL_GENERAL,
        lhs,
        rhs,
        vec![
            term("boundary", lhs),
            term("slope", slope),
            term("force", force),
            term("centrifugal", cent),
        ],
        format!("{} f={}", describe(state), probe.label),
    ))
}

fn require_schroedinger(problem: &RadialProblem, what: &str) -> Result<f64> {
    match problem.equation {
        EquationKind::Schroedinger { mass } => Ok(mass),
        other => Err(HvlError::Precondition(format!(
            "{what} needs the Schroedinger equation, got {}",
            other.label()
        ))),
    }
}

/// `<2A + rA'>` boundary value at `q = 1`: the extra virial term before scaling.
fn virial_boundary(state: &Eigenstate) -> f64 {
    let (a_st, a_add) = branch_coefficients(state);
    match state.bc {
        BoundaryCondition::Singular { p, .. } => 4.0 * p * p * a_st * a_add,
        BoundaryCondition::SingularLog { .. } => -a_add * a_add,
        _ => 0.0,
    }
}

/// `E = <V + r V'/2> + b` for Schroedinger states.
///
/// `b = (P^2/m) a_st a_add` for two-branch states and `-a_add^2/(4m)` for the
/// logarithmic pair. `include_extra = false` drops `b`.
pub fn virial(state: &Eigenstate, include_extra: bool) -> Result<IdentityReport> {
    let mass = require_schroedinger(&state.problem, "virial")?;
    let v: Vec<Monomial> = state
        .problem
        .potential
        .monomials()
        .into_iter()
        .filter(|t| (t.power + 2.0).abs() > 1e-12)
        .collect();
    let w = map_monomials(&v, |t| Monomial {
        coeff: t.coeff * (1.0 + 0.5 * t.power),
        power: t.power,
    });
    let (avg, pieces) = average_terms(state, &w, "potential")?;
    let b = virial_boundary(state) / (4.0 * mass);
    let rhs = if include_extra { avg + b } else { avg };
    let mut terms = vec![term("energy", state.eigenvalue)];
    terms.extend(pieces);
    if include_extra {
        terms.push(term("extra", b));
    }
    Ok(IdentityReport::new(
        VIRIAL,
        state.eigenvalue,
        rhs,
        terms,
        describe(state),
    ))
}

/// The extra virial term `b` on its own.
pub fn virial_extra_term(state: &Eigenstate) -> Result<f64> {
    let mass = require_schroedinger(&state.problem, "virial")?;
    Ok(virial_boundary(state) / (4.0 * mass))
}

/// `<2A + rA'> = 4 P^2 a_st a_add` for two-body Klein-Gordon states.
pub fn kg_virial(state: &Eigenstate, include_extra: bool) -> Result<IdentityReport> {
    if !matches!(
        state.problem.equation,
        EquationKind::KleinGordonTwoBody { .. }
    ) {
        return Err(HvlError::Precondition(
            "kg-virial needs the two-body Klein-Gordon equation".into(),
        ));
    }
    let areg = eigen_a_regular(state)?;
    let w = map_monomials(&areg, |t| Monomial {
        coeff: t.coeff * (2.0 + t.power),
        power: t.power,
    });
    let (lhs, mut terms) = average_terms(state, &w, "average")?;
    let b = if include_extra {
        virial_boundary(state)
    } else {
        0.0
    };
    terms.push(term("extra", b));
    Ok(IdentityReport::new(
        KG_VIRIAL,
        lhs,
        b,
        terms,
        describe(state),
    ))
}

/// `-m^2 = 2 P^2 a_st a_add` for a massless two-body Coulomb state.
pub fn kg_massless(state: &Eigenstate) -> Result<IdentityReport> {
    let mass = match state.problem.equation {
        EquationKind::KleinGordonTwoBody { mass } => mass,
        _ => {
            return Err(HvlError::Precondition(
                "kg-massless needs the two-body Klein-Gordon equation".into(),
            ))
        }
    };
    let v = state.problem.potential.monomials();
    if v.len() != 1 || (v[0].power + 1.0).abs() > 1e-12 {
        return Err(HvlError::Precondition(
            "kg-massless needs a pure Coulomb potential".into(),
        ));
    }
    if state.eigenvalue.abs() > 1e-5 * mass {
        return Err(HvlError::Precondition(format!(
            "total mass {} is not zero",
            state.eigenvalue
        )));
    }
    let p = match state.bc {
        BoundaryCondition::Singular { p, .. } => p,
        _ => {
            return Err(HvlError::Precondition(
                "kg-massless needs a two-branch state".into(),
            ))
        }
    };
    let (a_st, a_add) = branch_coefficients(state);
    let rhs = 2.0 * p * p * a_st * a_add;
    let lhs = -mass * mass;
    Ok(IdentityReport::new(
        KG_MASSLESS,
        lhs,
        rhs,
        vec![term("mass-squared", lhs), term("boundary", rhs)],
        describe(state),
    ))
}

/// Relations between `R` at the origin and averages of `A'`.
pub fn origin_relations(state: &Eigenstate) -> Result<Vec<IdentityReport>> {
    let s = match state.bc {
        BoundaryCondition::Regular { s } => s,
        _ => {
            return Err(HvlError::Domain(
                "origin relations need a regular state".into(),
            ))
        }
    };
    if !state.origin.accepted {
        return Err(HvlError::Fit(format!(
            "origin fit not accepted: {}",
            state.origin.warnings.join("; ")
        )));
    }
    let a = state.origin.a_st;
    let areg = eigen_a_regular(state)?;
    let da = map_monomials(&areg, |t| Monomial {
        coeff: t.coeff * t.power,
        power: t.power - 1.0,
    });
    let minus_da = -average_monomials(state, &da)?;
    let digest = describe(state);
    let mut out = Vec::new();
    if s == 0 {
        out.push(IdentityReport::new(
            ORIGIN_VALUE,
            a * a,
            minus_da,
            vec![term("origin", a * a), term("force", minus_da)],
            digest.clone(),
        ));
        if let EquationKind::Schroedinger { mass } = state.problem.equation {
            let v = state.problem.potential.monomials();
            let dv = map_monomials(&v, |t| Monomial {
                coeff: t.coeff * t.power,
                power: t.power - 1.0,
            });
            let lhs = a * a / (4.0 * PI);
            let rhs = mass / (2.0 * PI) * average_monomials(state, &dv)?;
            out.push(IdentityReport::new(
                ORIGIN_DENSITY,
                lhs,
                rhs,
                vec![term("density", lhs), term("force", rhs)],
                digest,
            ));
        }
    } else {
        let l = s as f64;
        let fact: f64 = (1..=s).map(|k| k as f64).product();
        let deriv = fact * a;
        let w = map_monomials(&areg, |t| Monomial {
            coeff: t.coeff * (4.0 * l - t.power),
            power: t.power - 2.0 * l - 1.0,
        });
        let lhs = (2.0 * l + 1.0).powi(2) * deriv * deriv;
        let rhs = fact * fact * average_monomials(state, &w)?;
        out.push(IdentityReport::new(
            ORIGIN_DERIVATIVE,
            lhs,
            rhs,
            vec![term("derivative", lhs), term("average", rhs)],
            digest.clone(),
        ));
        let cub = 2.0 * l * (l + 1.0) * expectation(state, &Weight::power(-3.0))?;
        out.push(IdentityReport::new(
            ORIGIN_CENTRIFUGAL,
            cub,
            minus_da,
            vec![term("centrifugal", cub), term("force", minus_da)],
            digest,
        ));
    }
    Ok(out)
}

/// `c1 <r^{q-1}> + c2 <r^{q+n-1}> + c3 <r^{q-3}> = 0` for `V = v0 r^n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Recurrence {
    pub q: f64,
    pub n: f64,
    pub v0: f64,
    pub mass: f64,
    pub l: u32,
}

impl Recurrence {
    /// `[c1, c2, c3]` at energy `e`.
    pub fn coefficients(&self, e: f64) -> [f64; 3] {
        let (q, l) = (self.q, self.l as f64);
        [
            2.0 * e * q,
            -self.v0 * (2.0 * q + self.n),
            (q - 1.0) / self.mass * (q * (q - 2.0) / 4.0 - l * (l + 1.0)),
        ]
    }

    pub fn powers(&self) -> [f64; 3] {
        [self.q - 1.0, self.q + self.n - 1.0, self.q - 3.0]
    }

    pub fn evaluate(&self, state: &Eigenstate, tag: &str) -> Result<IdentityReport> {
        let c = self.coefficients(state.eigenvalue);
        let pw = self.powers();
        let mut terms = Vec::new();
        for k in 0..3 {
            let v = if c[k] == 0.0 {
                0.0
            } else {
                c[k] * expectation(state, &Weight::power(pw[k]))?
            };
            terms.push(term(&format!("r^{}", pw[k]), v));
        }
        let sum: f64 = terms.iter().map(|t| t.value).sum();
        Ok(IdentityReport::new(
            tag,
            sum,
            0.0,
            terms,
            format!("{} q={}", describe(state), self.q),
        ))
    }
}

/// Recurrence coefficients for a single power-law term.
pub fn recurrence_coefficients(problem: &RadialProblem, q: f64) -> Result<Recurrence> {
    let mass = require_schroedinger(problem, "recurrence")?;
    let v = problem.potential.monomials();
    if v.len() != 1 {
        return Err(HvlError::Precondition(
            "recurrence needs a single power-law term".into(),
        ));
    }
    let l = problem.l;
    if q < -2.0 * l as f64 - 1e-9 {
        return Err(HvlError::Precondition(format!("q = {q} below -2l")));
    }
    Ok(Recurrence {
        q,
        n: v[0].power,
        v0: v[0].coeff,
        mass,
        l,
    })
}

/// Coulomb moment recurrence at `q = s + 1`.
pub fn kramers(state: &Eigenstate, s: u32) -> Result<IdentityReport> {
    let rec = recurrence_coefficients(&state.problem, s as f64 + 1.0)?;
    if (rec.n + 1.0).abs() > 1e-12 {
        return Err(HvlError::Precondition(
            "kramers needs a Coulomb potential".into(),
        ));
    }
    rec.evaluate(state, KRAMERS)
}

/// Oscillator moment recurrence at `q = s + 1`.
pub fn oscillator_recurrence(state: &Eigenstate, s: u32) -> Result<IdentityReport> {
    let rec = recurrence_coefficients(&state.problem, s as f64 + 1.0)?;
    if (rec.n - 2.0).abs() > 1e-12 {
        return Err(HvlError::Precondition(
            "oscillator recurrence needs V ~ r^2".into(),
        ));
    }
    rec.evaluate(state, OSCILLATOR_RECURRENCE)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles;

    fn hydrogen(n: u32, l: u32) -> Eigenstate {
        oracles::hydrogen_state(n, l, 1.0, 1.0).unwrap().state
    }

    #[test]
    fn virial_hydrogen_and_oscillator() {
        let r = virial(&hydrogen(1, 0), true).unwrap();
        assert!(r.pass && (r.rhs + 0.5).abs() < 1e-8, "{r:?}");
        let osc = oracles::oscillator_state(0, 0, 1.0, 1.0).unwrap().state;
        let r = virial(&osc, true).unwrap();
        assert!((r.rhs - 1.5).abs() < 1e-8, "{r:?}");
    }

    #[test]
    fn general_probe_examples() {
        let h = hydrogen(1, 0);
        let r = hypervirial_general(&h, &ProbeFunction::power(1.0)).unwrap();
        assert!(r.residual < 1e-6, "{r:?}");
        let r = hypervirial_general(&h, &ProbeFunction::power(0.0)).unwrap();
        assert!(
            (r.lhs - 4.0).abs() < 1e-6 && (r.rhs - 4.0).abs() < 1e-6,
            "{r:?}"
        );
        let osc = oracles::oscillator_state(0, 0, 1.0, 1.0).unwrap().state;
        let r = hypervirial_general(&osc, &ProbeFunction::power(3.0)).unwrap();
        assert!(r.residual < 1e-6, "{r:?}");
        let mixed = ProbeFunction::new("r e^-r", Some(1.0), |r| {
            let e = (-r).exp();
            [r * e, (1.0 - r) * e, (r - 2.0) * e, (3.0 - r) * e]
        });
        let r = hypervirial_general(&h, &mixed).unwrap();
        assert!(r.residual < 1e-6, "{r:?}");
    }

    #[test]
    fn inadmissible_probes() {
        let h = hydrogen(1, 0);
        let bad = ProbeFunction::new("wrong", Some(1.0), |r| [r, 2.0, 0.0, 0.0]);
        assert!(matches!(
            hypervirial_general(&h, &bad),
            Err(HvlError::Precondition(_))
        ));
        let growing = ProbeFunction::new("e^3r", Some(0.0), |r| {
            let e = (3.0 * r).exp();
            [e, 3.0 * e, 9.0 * e, 27.0 * e]
        });
        assert!(matches!(
            hypervirial_general(&h, &growing),
            Err(HvlError::Precondition(_))
        ));
        assert!(matches!(
            hypervirial_general(&h, &ProbeFunction::power(-1.0)),
            Err(HvlError::Precondition(_))
        ));
    }

    #[test]
    fn power_identity_examples() {
        let r = hypervirial_power(&hydrogen(1, 0), 1.0).unwrap();
        assert!(r.residual < 1e-6, "{r:?}");
        let r = hypervirial_power(&hydrogen(2, 1), -2.0).unwrap();
        assert!(
            (r.lhs - 0.375).abs() < 1e-6 && (r.rhs - 0.375).abs() < 1e-6,
            "{r:?}"
        );
        assert!(r.residual < 1e-5);
        assert!(hypervirial_power(&hydrogen(2, 1), -2.5).is_err());
        let ks = oracles::inverse_square_state(0.2, 1.0, 1.0).unwrap().state;
        let r = hypervirial_power(&ks, 1.0).unwrap();
        assert!(r.residual < 1e-4, "{r:?}");
        assert!(hypervirial_power(&ks, 0.5).is_err());
    }

    #[test]
    fn general_matches_power() {
        for (state, qs) in [
            (hydrogen(2, 1), vec![-2.0, -1.0, 0.5, 2.0]),
            (hydrogen(3, 0), vec![0.0, 1.0, 3.0]),
            (
                oracles::inverse_square_state(0.3, 1.0, 1.0).unwrap().state,
                vec![1.0, 1.7, 2.5],
            ),
        ] {
            for q in qs {
                let a = hypervirial_power(&state, q).unwrap();
                let b = hypervirial_general(&state, &ProbeFunction::power(q)).unwrap();
                let scale = a.terms.iter().map(|t| t.value.abs()).fold(1e-300, f64::max);
                assert!((a.lhs - b.lhs).abs() <= 1e-10 * scale, "q={q} {a:?} {b:?}");
                assert!((a.rhs - b.rhs).abs() <= 1e-10 * scale, "q={q} {a:?} {b:?}");
            }
        }
    }

    #[test]
    fn singular_virial_closure() {
        let ks = oracles::inverse_square_state(0.2, 1.0, 1.0).unwrap().state;
        let r = virial(&ks, true).unwrap();
        assert_eq!(r.terms.len(), 2);
        assert!(r.residual < 1e-4, "{r:?}");
        let r = virial(&ks, false).unwrap();
        assert!(!r.pass);
    }

    #[test]
    fn origin_examples() {
        let out = origin_relations(&hydrogen(1, 0)).unwrap();
        let d = out.iter().find(|r| r.identity == ORIGIN_DENSITY).unwrap();
        assert!((d.lhs - 1.0 / PI).abs() < 1e-6 && d.pass, "{d:?}");
        let out = origin_relations(&hydrogen(2, 1)).unwrap();
        let c = out
            .iter()
            .find(|r| r.identity == ORIGIN_CENTRIFUGAL)
            .unwrap();
        assert!((c.lhs - 1.0 / 6.0).abs() < 1e-7 && c.pass, "{c:?}");
        let d = out
            .iter()
            .find(|r| r.identity == ORIGIN_DERIVATIVE)
            .unwrap();
        assert!((d.lhs - 0.375).abs() < 1e-5 && d.pass, "{d:?}");
        let osc = oracles::oscillator_state(0, 0, 1.0, 1.0).unwrap().state;
        for r in origin_relations(&osc).unwrap() {
            assert!(r.residual < 1e-5, "{r:?}");
        }
        let ks = oracles::inverse_square_state(0.2, 1.0, 1.0).unwrap().state;
        assert!(matches!(origin_relations(&ks), Err(HvlError::Domain(_))));
    }

    #[test]
    fn recurrences() {
        let h = hydrogen(1, 0);
        for s in 0..4 {
            let r = kramers(&h, s).unwrap();
            assert!(r.residual < 1e-6, "s={s} {r:?}");
        }
        let r = kramers(&h, 1).unwrap();
        assert!((r.terms[0].value + 3.0).abs() < 1e-7 && (r.terms[1].value - 3.0).abs() < 1e-7);
        let osc = oracles::oscillator_state(0, 0, 1.0, 1.0).unwrap().state;
        let r = oscillator_recurrence(&osc, 0).unwrap();
        assert!(
            (r.terms[0].value - 3.0).abs() < 1e-7 && r.residual < 1e-6,
            "{r:?}"
        );
        let rec = recurrence_coefficients(&h.problem, 2.0).unwrap();
        assert_eq!(rec.coefficients(-0.5), [-2.0, 3.0, 0.0]);
    }

    #[test]
    fn residual_uses_largest_term() {
        let r = IdentityReport::new(
            "x",
            1e-3,
            0.0,
            vec![term("a", 10.0), term("b", -10.0)],
            String::new(),
        );
        assert!((r.residual - 1e-4).abs() < 1e-15);
        let z = IdentityReport::new("x", 0.0, 0.0, vec![], String::new());
        assert_eq!(z.residual, 0.0);
        assert!(z.pass);
    }
}
