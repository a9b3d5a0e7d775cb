//! Bound states of the radial equation by two-sided Numerov shooting.

pub mod grid;
pub mod numerov;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use grid::{Grid, GridSpec, Mapping};
pub use numerov::{numerov_integrate, Direction, Integration};

use crate::error::{HvlError, Result};
use crate::model::{
    a_from_value, build_effective_coefficient, classify_singularity, EffectiveCoefficient,
    EquationKind, RadialProblem, SingularityClass,
};
use crate::observables::{expectation, fit_origin_samples, OriginFit, Weight};
use crate::series::PowerLogSeries;

/// Serde helpers for a real that may be infinite, written as `"inf"`.
pub mod tau_serde {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(x) => Ok(x),
            Raw::Text(t) => parse_tau(&t).map_err(serde::de::Error::custom),
        }
    }

    pub fn parse_tau(t: &str) -> Result<f64, String> {
        match t.trim().to_ascii_lowercase().as_str() {
            "inf" | "+inf" | "-inf" | "infinity" | "+infinity" | "-infinity" => Ok(f64::INFINITY),
            other => other
                .parse::<f64>()
                .map_err(|_| format!("expected a number or \"inf\", got {t:?}")),
        }
    }
}

/// Small-r condition imposed on `u = rR`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BoundaryCondition {
    /// `R ~ r^s`.
    Regular { s: u32 },
    /// `R ~ r^{-1/2+p} + tau r^{-1/2-p}`; infinite `tau` keeps only the second branch.
    Singular {
        p: f64,
        #[serde(with = "tau_serde")]
        tau: f64,
    },
    /// `R ~ r^{-1/2} (1 + tau ln r)`.
    SingularLog {
        #[serde(with = "tau_serde")]
        tau: f64,
    },
    /// `R ~ r^{-1/2+p}` with the other branch not square integrable.
    StandardOnly { p: f64 },
}

impl BoundaryCondition {
    /// Condition of the right kind for `problem`, carrying the self-adjoint parameter `tau`
    /// where the problem admits one.
    pub fn for_problem(problem: &RadialProblem, tau: f64) -> Result<Self> {
        Ok(match classify_singularity(problem)? {
            SingularityClass::Regular => BoundaryCondition::Regular { s: problem.l },
            SingularityClass::Singular { p } => BoundaryCondition::Singular {
                p,
                tau: clean_tau(tau)?,
            },
            SingularityClass::SingularLog => BoundaryCondition::SingularLog {
                tau: clean_tau(tau)?,
            },
            SingularityClass::StandardOnly { p } => BoundaryCondition::StandardOnly { p },
            SingularityClass::Supercritical { p_squared } => {
                return Err(HvlError::Supercritical { p_squared })
            }
        })
    }

    pub fn validate(&self, problem: &RadialProblem) -> Result<()> {
        let class = classify_singularity(problem)?;
        let ok = match (self, class) {
            (BoundaryCondition::Regular { s }, SingularityClass::Regular) => *s == problem.l,
            (BoundaryCondition::Singular { p, tau }, SingularityClass::Singular { p: q }) => {
                *p > 0.0 && *p < 0.5 && (p - q).abs() <= 1e-9 && !tau.is_nan()
            }
            (BoundaryCondition::SingularLog { tau }, SingularityClass::SingularLog) => {
                !tau.is_nan()
            }
            (BoundaryCondition::StandardOnly { p }, SingularityClass::StandardOnly { p: q }) => {
                (p - q).abs() <= 1e-9
            }
            (_, SingularityClass::Supercritical { p_squared }) => {
                return Err(HvlError::Supercritical { p_squared })
            }
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(HvlError::InvalidProblem(format!(
                "boundary condition {self:?} does not fit a problem classified as {class:?}"
            )))
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            BoundaryCondition::Regular { .. } => "regular",
            BoundaryCondition::Singular { .. } => "singular",
            BoundaryCondition::SingularLog { .. } => "singular-log",
            BoundaryCondition::StandardOnly { .. } => "standard-only",
        }
    }

    pub fn p(&self) -> Option<f64> {
        match self {
            BoundaryCondition::Regular { .. } => None,
            BoundaryCondition::Singular { p, .. } | BoundaryCondition::StandardOnly { p } => {
                Some(*p)
            }
            BoundaryCondition::SingularLog { .. } => Some(0.0),
        }
    }

    pub fn tau(&self) -> Option<f64> {
        match self {
            BoundaryCondition::Singular { tau, .. } | BoundaryCondition::SingularLog { tau } => {
                Some(*tau)
            }
            _ => None,
        }
    }

    pub fn with_tau(&self, tau: f64) -> Self {
        match *self {
            BoundaryCondition::Singular { p, .. } => BoundaryCondition::Singular { p, tau },
            BoundaryCondition::SingularLog { .. } => BoundaryCondition::SingularLog { tau },
            other => other,
        }
    }

    /// Whether the additional (second) branch is present.
    pub fn has_additional(&self) -> bool {
        matches!(self.tau(), Some(t) if t != 0.0)
    }

    pub fn is_regular(&self) -> bool {
        matches!(self, BoundaryCondition::Regular { .. })
    }

    /// Small-r form of `u = rR`, with the first-order correction from a `c1/r` term in `A`.
    pub fn u_series(&self, c1: f64) -> PowerLogSeries {
        let branch = |s: PowerLogSeries, coeff: f64, rho: f64| {
            s.with(coeff, rho, 0)
                .with(-coeff * c1 / (2.0 * rho), rho + 1.0, 0)
        };
        let s = PowerLogSeries::new();
        match *self {
            BoundaryCondition::Regular { s: l } => branch(s, 1.0, l as f64 + 1.0),
            BoundaryCondition::StandardOnly { p } => branch(s, 1.0, 0.5 + p),
            BoundaryCondition::Singular { p, tau } => {
                if tau.is_infinite() {
                    branch(s, 1.0, 0.5 - p)
                } else {
                    branch(branch(s, 1.0, 0.5 + p), tau, 0.5 - p)
                }
            }
            BoundaryCondition::SingularLog { tau } => {
                if tau.is_infinite() {
                    s.with(1.0, 0.5, 1)
                } else {
                    s.with(1.0, 0.5, 0).with(tau, 0.5, 1)
                }
            }
        }
    }
}

fn clean_tau(tau: f64) -> Result<f64> {
    if tau.is_nan() {
        Err(HvlError::InvalidProblem("tau is NaN".into()))
    } else if tau.is_infinite() {
        Ok(f64::INFINITY)
    } else {
        Ok(tau)
    }
}

/// `u` at the first two grid points from the leading small-r form.
pub fn origin_seed(bc: &BoundaryCondition, grid: &Grid) -> (f64, f64) {
    let s = bc.u_series(0.0);
    (s.eval(grid.r(0)), s.eval(grid.r(1)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    pub grid: GridSpec,
    /// Width at which node-count bisection stops, relative to `max(1, |E|)`.
    pub eigen_tolerance: f64,
    /// Largest accepted normalized matching residual.
    pub residual_tolerance: f64,
    pub max_iterations: usize,
    /// WKB decay exponent used to place `r_max`.
    pub decay: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            grid: GridSpec::default(),
            eigen_tolerance: 1e-10,
            residual_tolerance: 1e-8,
            max_iterations: 200,
            decay: 32.0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Diagnostics {
    pub match_radius: f64,
    pub match_residual: f64,
    pub iterations: usize,
    pub warnings: Vec<String>,
}

/// A normalized bound state sampled on a grid.
#[derive(Debug, Clone)]
pub struct Eigenstate {
    pub problem: RadialProblem,
    pub bc: BoundaryCondition,
    pub eigenvalue: f64,
    pub grid: Arc<Grid>,
    /// `R(r_i)`.
    pub radial: Vec<f64>,
    pub nodes: usize,
    pub norm_check: f64,
    pub origin: OriginFit,
    pub diagnostics: Diagnostics,
}

impl Eigenstate {
    /// Wraps sampled values of `R`; fits the origin behaviour and records the norm.
    pub fn from_radial(
        problem: RadialProblem,
        bc: BoundaryCondition,
        eigenvalue: f64,
        grid: Arc<Grid>,
        radial: Vec<f64>,
        diagnostics: Diagnostics,
    ) -> Result<Eigenstate> {
        if radial.len() != grid.len() {
            return Err(HvlError::Domain(format!(
                "{} samples for a grid of {} points",
                radial.len(),
                grid.len()
            )));
        }
        let nodes = count_nodes(&radial);
        let coeff = build_effective_coefficient(&problem, eigenvalue)?;
        let origin = fit_origin_samples(&coeff, &bc, &grid, &radial)?;
        let mut state = Eigenstate {
            problem,
            bc,
            eigenvalue,
            grid,
            radial,
            nodes,
            norm_check: f64::NAN,
            origin,
            diagnostics,
        };
        state
            .diagnostics
            .warnings
            .extend(state.origin.warnings.clone());
        state.norm_check = expectation(&state, &Weight::power(0.0))?;
        Ok(state)
    }

    pub fn l(&self) -> u32 {
        self.problem.l
    }

    pub fn coefficient(&self) -> Result<EffectiveCoefficient> {
        build_effective_coefficient(&self.problem, self.eigenvalue)
    }

    pub fn radii(&self) -> &[f64] {
        self.grid.radii()
    }

    /// `u = rR` at grid point `i`.
    pub fn u(&self, i: usize) -> f64 {
        self.grid.r(i) * self.radial[i]
    }

    pub fn max_abs_radial(&self) -> f64 {
        self.radial.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

fn count_nodes(values: &[f64]) -> usize {
    let mut nodes = 0;
    let mut sign = 0.0;
    let peak = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    // ignore sign flips of round-off sized values deep in the tail
    let floor = peak * 1e-300;
    for &v in values {
        if v.abs() <= floor {
            continue;
        }
        let s = v.signum();
        if sign != 0.0 && s != sign {
            nodes += 1;
        }
        sign = s;
    }
    nodes
}

/// Radius at which the WKB decay integral beyond the outermost turning point reaches `decay`.
pub fn decay_radius(problem: &RadialProblem, eigen: f64, decay: f64) -> Result<f64> {
    const R_FAR: f64 = 1e4;
    let c = build_effective_coefficient(problem, eigen)?;
    if c.l_full(R_FAR) >= 0.0 || !c.l_full(R_FAR).is_finite() {
        return Err(HvlError::NoEigenvalue {
            lo: eigen,
            hi: eigen,
            reason: "eigenparameter is not below the continuum threshold".into(),
        });
    }
    let mut r_turn = 1e-4;
    let mut r = 1e-4;
    while r < R_FAR {
        if c.l_full(r) > 0.0 {
            r_turn = r;
        }
        r *= 1.02;
    }
    let mut r = r_turn;
    let mut acc = 0.0;
    while acc < decay {
        let h = 0.01 * r.max(0.1);
        let k = (-c.l_full(r + 0.5 * h)).max(0.0).sqrt();
        acc += k * h;
        r += h;
        if r > R_FAR {
            return Err(HvlError::NoEigenvalue {
                lo: eigen,
                hi: eigen,
                reason: "state too weakly bound for the radial range".into(),
            });
        }
    }
    Ok(r)
}

struct Mismatch {
    g: f64,
    residual: f64,
}

/// Everything shooting needs that does not depend on the eigenparameter.
struct Shooter<'a> {
    problem: &'a RadialProblem,
    bc: BoundaryCondition,
    grid: &'a Grid,
    potential: Vec<f64>,
    centrifugal: Vec<f64>,
}

impl<'a> Shooter<'a> {
    fn new(problem: &'a RadialProblem, bc: BoundaryCondition, grid: &'a Grid) -> Self {
        let l = problem.l as f64;
        let potential = grid
            .radii()
            .iter()
            .map(|&r| problem.potential.value(r))
            .collect();
        let centrifugal = grid
            .radii()
            .iter()
            .map(|&r| l * (l + 1.0) / (r * r))
            .collect();
        Shooter {
            problem,
            bc,
            grid,
            potential,
            centrifugal,
        }
    }

    fn l_at(&self, e: f64, i: usize) -> f64 {
        a_from_value(&self.problem.equation, e, self.potential[i]) - self.centrifugal[i]
    }

    fn factors(&self, e: f64) -> Result<Vec<f64>> {
        numerov::factors(self.grid, |i, _| self.l_at(e, i))
    }

    fn series(&self, e: f64) -> Result<PowerLogSeries> {
        let c1 = build_effective_coefficient(self.problem, e)?.inverse_r_coefficient();
        let s = self.bc.u_series(c1);
        let lead = s.leading_power().unwrap_or(0.0);
        Ok(s.shifted(-lead))
    }

    fn outward_seed(&self, e: f64, w: &mut [f64]) -> Result<()> {
        let s = self.series(e)?;
        let g = self.grid;
        let lead = self.bc.u_series(0.0).leading_power().unwrap_or(0.0);
        // shifted series times (r/r0)^lead keeps the seed O(1)
        for i in 0..2 {
            let r = g.r(i);
            let u = s.eval(r) * (r / g.r(0)).powf(lead);
            w[i] = u / g.jacobian(i).sqrt();
        }
        if !(w[0].is_finite() && w[1].is_finite()) || (w[0] == 0.0 && w[1] == 0.0) {
            return Err(HvlError::NonFinite { r: g.r(0) });
        }
        Ok(())
    }

    fn inward_seed(&self, e: f64, w: &mut [f64]) {
        let n = w.len();
        let g = self.grid;
        let l1 = self.l_at(e, n - 1);
        let l2 = self.l_at(e, n - 2);
        let (u1, u2) = if l1 < 0.0 && l2 < 0.0 {
            let k1 = (-l1).sqrt();
            let k2 = (-l2).sqrt();
            let dr = g.r(n - 1) - g.r(n - 2);
            (1.0, (k1 / k2).sqrt() * (0.5 * (k1 + k2) * dr).exp())
        } else {
            (0.0, 1.0)
        };
        w[n - 1] = u1 / g.jacobian(n - 1).sqrt();
        w[n - 2] = u2 / g.jacobian(n - 2).sqrt();
    }

    fn node_count(&self, e: f64) -> Result<usize> {
        let f = self.factors(e)?;
        let mut w = vec![0.0; self.grid.len()];
        self.outward_seed(e, &mut w)?;
        let (_, nodes) = numerov::sweep_outward(&f, &mut w, self.grid.len() - 1);
        if w.iter().any(|v| !v.is_finite()) {
            return Err(HvlError::NonFinite {
                r: self.grid.r_max(),
            });
        }
        Ok(nodes)
    }

    fn match_index(&self, e: f64) -> usize {
        let n = self.grid.len();
        let fallback = || {
            let s = match self.grid.mapping() {
                Mapping::LogLinear { r_switch } => r_switch,
                Mapping::Uniform => 0.5 * (self.grid.r_min() + self.grid.r_max()),
            };
            self.grid.index_of(s).clamp(2, n - 3)
        };
        if self.l_at(e, n - 3) > 0.0 {
            return fallback();
        }
        match (2..n - 2).rev().find(|&i| self.l_at(e, i) > 0.0) {
            Some(i) => i.clamp(2, n - 3),
            None => fallback(),
        }
    }

    fn sweeps(&self, e: f64, m: usize) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        let n = self.grid.len();
        let f = self.factors(e)?;
        let mut wo = vec![0.0; n];
        self.outward_seed(e, &mut wo)?;
        numerov::sweep_outward(&f, &mut wo, m + 1);
        let mut wi = vec![0.0; n];
        self.inward_seed(e, &mut wi);
        numerov::sweep_inward(&f, &mut wi, m - 1);
        Ok((f, wo, wi))
    }

    fn mismatch(&self, e: f64, m: usize) -> Result<Mismatch> {
        let (f, wo, wi) = self.sweeps(e, m)?;
        let t1 = (1.0 + f[m - 1]) * wo[m - 1] / wo[m];
        let t2 = (1.0 + f[m + 1]) * wi[m + 1] / wi[m];
        let t3 = 2.0 - 10.0 * f[m];
        let d = t1 + t2 - t3;
        if !d.is_finite() {
            return Err(HvlError::NonFinite { r: self.grid.r(m) });
        }
        Ok(Mismatch {
            g: d / self.grid.step(),
            residual: d.abs() / (t1.abs() + t2.abs() + t3.abs()),
        })
    }

    /// Normalized `u` on the grid at eigenparameter `e`, glued at index `m`.
    fn assemble(&self, e: f64, m: usize) -> Result<Vec<f64>> {
        let (_, wo, wi) = self.sweeps(e, m)?;
        let g = self.grid;
        let ratio = wo[m] / wi[m];
        let mut u: Vec<f64> = (0..g.len())
            .map(|i| {
                let w = if i <= m { wo[i] } else { wi[i] * ratio };
                w * g.jacobian(i).sqrt()
            })
            .collect();
        let sq: Vec<f64> = u.iter().map(|v| v * v).collect();
        let body = g.integrate(&sq);
        let series = self.series(e)?;
        let lead = self.bc.u_series(0.0).leading_power().unwrap_or(0.0);
        // u = S * series(r) * r^lead near the origin
        let r0 = g.r(0);
        let scale = u[0] / (series.eval(r0) * r0.powf(lead));
        let tail_series = series.product(&series).shifted(2.0 * lead);
        let tail = scale * scale * tail_series.integral_from_zero(r0)?;
        let norm = (body + tail).sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(HvlError::NonFinite { r: g.r(m) });
        }
        for v in &mut u {
            *v /= norm;
        }
        Ok(u)
    }
}

/// Illinois false position on a sign-changing bracket.
fn illinois(
    mut a: f64,
    mut fa: f64,
    mut b: f64,
    mut fb: f64,
    tol: f64,
    max_iter: usize,
    mut g: impl FnMut(f64) -> Result<f64>,
) -> Result<(f64, usize)> {
    let mut it = 0;
    while it < max_iter {
        it += 1;
        if fb == 0.0 {
            return Ok((b, it));
        }
        let mut c = b - fb * (b - a) / (fb - fa);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        if !(c > lo && c < hi) {
            c = 0.5 * (a + b);
        }
        let fc = g(c)?;
        if fc * fb < 0.0 {
            a = b;
            fa = fb;
        } else {
            fa *= 0.5;
        }
        b = c;
        fb = fc;
        if (b - a).abs() <= tol {
            break;
        }
    }
    Ok((if fa.abs() < fb.abs() { a } else { b }, it))
}

/// Solves for the level with `nodes` radial nodes inside `bracket`.
pub fn solve_bound_state(
    problem: &RadialProblem,
    bc: &BoundaryCondition,
    nodes: usize,
    bracket: (f64, f64),
    opts: &SolverOptions,
) -> Result<Eigenstate> {
    if let SingularityClass::Supercritical { p_squared } = classify_singularity(problem)? {
        return Err(HvlError::Supercritical { p_squared });
    }
    bc.validate(problem)?;
    let (lo, hi) = ordered(bracket)?;
    if let Some(r_max) = opts.grid.r_max {
        let grid = Arc::new(opts.grid.build(r_max)?);
        return solve_on_grid(problem, bc, nodes, (lo, hi), grid, opts);
    }
    let probes = [hi, lo + 0.75 * (hi - lo), 0.5 * (lo + hi), lo];
    let r_first = probes
        .iter()
        .find_map(|&e| decay_radius(problem, e, opts.decay).ok())
        .ok_or_else(|| HvlError::NoEigenvalue {
            lo,
            hi,
            reason: "no energy in the bracket lies below the continuum threshold".into(),
        })?;
    let first = solve_on_grid(
        problem,
        bc,
        nodes,
        (lo, hi),
        Arc::new(opts.grid.build(r_first)?),
        opts,
    )?;
    let r_max = decay_radius(problem, first.eigenvalue, opts.decay)?;
    let grid = Arc::new(opts.grid.build(r_max)?);
    let e = first.eigenvalue;
    let pad = 1e-6 * e.abs().max(1.0);
    let narrow = ((e - pad).max(lo), (e + pad).min(hi));
    solve_on_grid(problem, bc, nodes, narrow, grid.clone(), opts)
        .or_else(|_| solve_on_grid(problem, bc, nodes, (lo, hi), grid, opts))
}

fn ordered(bracket: (f64, f64)) -> Result<(f64, f64)> {
    let (lo, hi) = if bracket.0 <= bracket.1 {
        bracket
    } else {
        (bracket.1, bracket.0)
    };
    if !(lo.is_finite() && hi.is_finite()) || lo == hi {
        return Err(HvlError::Domain(format!(
            "bad eigenvalue bracket {bracket:?}"
        )));
    }
    Ok((lo, hi))
}

/// As [`solve_bound_state`] on a fixed grid.
pub fn solve_on_grid(
    problem: &RadialProblem,
    bc: &BoundaryCondition,
    nodes: usize,
    bracket: (f64, f64),
    grid: Arc<Grid>,
    opts: &SolverOptions,
) -> Result<Eigenstate> {
    bc.validate(problem)?;
    let (mut lo, mut hi) = ordered(bracket)?;
    let shooter = Shooter::new(problem, *bc, &grid);
    let n_lo = shooter.node_count(lo)?;
    let n_hi = shooter.node_count(hi)?;
    if !(n_lo <= nodes && nodes < n_hi) {
        return Err(HvlError::NodeCount {
            requested: nodes,
            at_lo: n_lo,
            at_hi: n_hi,
        });
    }
    let width = opts.eigen_tolerance * lo.abs().max(hi.abs()).max(1.0);
    let mut iterations = 0;
    while hi - lo > width && iterations < opts.max_iterations {
        iterations += 1;
        let mid = 0.5 * (lo + hi);
        if shooter.node_count(mid)? <= nodes {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let n_lo = shooter.node_count(lo)?;
    if n_lo != nodes {
        return Err(HvlError::NodeCount {
            requested: nodes,
            at_lo: n_lo,
            at_hi: shooter.node_count(hi)?,
        });
    }
    let m = shooter.match_index(0.5 * (lo + hi));
    let (orig_lo, orig_hi) = ordered(bracket)?;
    let mut g_lo = shooter.mismatch(lo, m)?.g;
    let mut g_hi = shooter.mismatch(hi, m)?.g;
    let mut pad = hi - lo;
    while g_lo * g_hi > 0.0 {
        if lo <= orig_lo && hi >= orig_hi {
            return Err(HvlError::NoEigenvalue {
                lo: orig_lo,
                hi: orig_hi,
                reason: "matching mismatch does not change sign".into(),
            });
        }
        pad *= 4.0;
        lo = (lo - pad).max(orig_lo);
        hi = (hi + pad).min(orig_hi);
        g_lo = shooter.mismatch(lo, m)?.g;
        g_hi = shooter.mismatch(hi, m)?.g;
        iterations += 1;
    }
    let tol = 4.0 * f64::EPSILON * lo.abs().max(hi.abs()) + 1e-300;
    let (e, it) = illinois(lo, g_lo, hi, g_hi, tol, opts.max_iterations, |x| {
        shooter.mismatch(x, m).map(|mm| mm.g)
    })?;
    iterations += it;
    finish(
        &shooter,
        problem,
        bc,
        e,
        m,
        nodes,
        iterations,
        grid.clone(),
        opts,
        (orig_lo, orig_hi),
    )
}

#[allow(clippy::too_many_arguments)]
fn finish(
    shooter: &Shooter,
    problem: &RadialProblem,
    bc: &BoundaryCondition,
    e: f64,
    m: usize,
    nodes: usize,
    iterations: usize,
    grid: Arc<Grid>,
    opts: &SolverOptions,
    bracket: (f64, f64),
) -> Result<Eigenstate> {
    let mm = shooter.mismatch(e, m)?;
    if mm.residual > opts.residual_tolerance {
        return Err(HvlError::NoEigenvalue {
            lo: bracket.0,
            hi: bracket.1,
            reason: format!(
                "mismatch sign change is a pole, not a root (residual {:.3e})",
                mm.residual
            ),
        });
    }
    let u = shooter.assemble(e, m)?;
    let radial: Vec<f64> = u.iter().zip(grid.radii()).map(|(u, r)| u / r).collect();
    let diagnostics = Diagnostics {
        match_radius: grid.r(m),
        match_residual: mm.residual,
        iterations,
        warnings: Vec::new(),
    };
    let state = Eigenstate::from_radial(problem.clone(), *bc, e, grid, radial, diagnostics)?;
    if state.nodes != nodes {
        return Err(HvlError::NodeCount {
            requested: nodes,
            at_lo: state.nodes,
            at_hi: state.nodes,
        });
    }
    Ok(state)
}

/// Half-width of the total-mass window searched around zero, in units of the constituent mass.
pub const MASSLESS_WINDOW: f64 = 0.1;

/// Looks for a two-body Klein-Gordon level with total mass `M = 0` at fixed `tau`.
///
/// The mismatch is scanned on a symmetric window around `M = 0` and the
/// root closest to zero is returned.
pub fn solve_kg_massless(
    problem: &RadialProblem,
    bc: &BoundaryCondition,
    opts: &SolverOptions,
) -> Result<Eigenstate> {
    let mass = match problem.equation {
        EquationKind::KleinGordonTwoBody { mass } => mass,
        _ => {
            return Err(HvlError::InvalidProblem(
                "massless search needs the two-body Klein-Gordon equation".into(),
            ))
        }
    };
    match classify_singularity(problem)? {
        SingularityClass::Singular { .. } => {}
        SingularityClass::Supercritical { p_squared } => {
            return Err(HvlError::Supercritical { p_squared })
        }
        other => {
            return Err(HvlError::InvalidProblem(format!(
                "massless search needs 0 < P < 1/2, problem is {other:?}"
            )))
        }
    }
    bc.validate(problem)?;
    let r_max = match opts.grid.r_max {
        Some(r) => r,
        None => decay_radius(problem, 0.0, opts.decay)?,
    };
    let grid = Arc::new(opts.grid.build(r_max)?);
    let shooter = Shooter::new(problem, *bc, &grid);
    let m = shooter.match_index(0.0);
    let w = MASSLESS_WINDOW * mass;
    let samples = 40;
    let xs: Vec<f64> = (0..=samples)
        .map(|k| -w + 2.0 * w * k as f64 / samples as f64)
        .collect();
    let gs = xs
        .iter()
        .map(|&x| shooter.mismatch(x, m).map(|mm| mm.g))
        .collect::<Result<Vec<_>>>()?;
    let mut best: Option<f64> = None;
    let mut iterations = samples + 1;
    for k in 0..samples {
        if gs[k] == 0.0 || gs[k] * gs[k + 1] < 0.0 {
            let tol = 4.0 * f64::EPSILON * w;
            let (root, it) = illinois(
                xs[k],
                gs[k],
                xs[k + 1],
                gs[k + 1],
                tol,
                opts.max_iterations,
                |x| shooter.mismatch(x, m).map(|mm| mm.g),
            )?;
            iterations += it;
            if shooter.mismatch(root, m)?.residual <= opts.residual_tolerance
                && best.is_none_or(|b| root.abs() < b.abs())
            {
                best = Some(root);
            }
        }
    }
    let e = best.ok_or_else(|| HvlError::NoEigenvalue {
        lo: -w,
        hi: w,
        reason: "no total-mass root near zero".into(),
    })?;
    let nodes = {
        let u = shooter.assemble(e, m)?;
        count_nodes(&u)
    };
    finish(
        &shooter,
        problem,
        bc,
        e,
        m,
        nodes,
        iterations,
        grid.clone(),
        opts,
        (-w, w),
    )
}
