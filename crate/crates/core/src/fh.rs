//! Feynman-Hellmann checks: finite-difference `dE/dlambda` against the theorem.

use serde::{Deserialize, Serialize};

use crate::error::{HvlError, Result};
use crate::identities::{branch_coefficients, describe, IdentityReport, NamedTerm};
use crate::model::{
    classify_singularity, CoulombSign, EquationKind, Monomial, PotentialSpec, RadialProblem,
    SingularityClass,
};
use crate::observables::{expectation, Weight};
use crate::solver::{solve_on_grid, BoundaryCondition, Eigenstate, SolverOptions};

pub const FH_REGULAR: &str = "fh-regular";
pub const FH_SINGULAR: &str = "fh-singular";
pub const FH_KG: &str = "fh-kg";

/// A parameter of the problem the energy can be differentiated by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Parameter {
    Mass,
    /// `alpha` of a Coulomb term or `v0` of a power-law or inverse-square term.
    Coupling {
        term: usize,
    },
    /// `omega` of an `r^2` term read as `m omega^2 r^2 / 2`.
    Frequency {
        term: usize,
    },
    AngularMomentum,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParameterHandle {
    pub parameter: Parameter,
    pub value: f64,
    /// Whether changing the parameter moves the origin exponent `P`.
    pub affects_p: bool,
}

fn leaf_mut(spec: &mut PotentialSpec, index: usize) -> Option<&mut PotentialSpec> {
    fn walk<'a>(
        p: &'a mut PotentialSpec,
        index: usize,
        seen: &mut usize,
    ) -> Option<&'a mut PotentialSpec> {
        match p {
            PotentialSpec::Sum { terms } => {
                for t in terms.iter_mut() {
                    if let Some(found) = walk(t, index, seen) {
                        return Some(found);
                    }
                }
                None
            }
            leaf => {
                *seen += 1;
                if *seen - 1 == index {
                    Some(leaf)
                } else {
                    None
                }
            }
        }
    }
    walk(spec, index, &mut 0)
}

fn leaf(problem: &RadialProblem, term: usize) -> Result<&PotentialSpec> {
    problem
        .potential
        .leaves()
        .get(term)
        .copied()
        .ok_or_else(|| HvlError::Precondition(format!("potential has no term {term}")))
}

fn frequency_of(problem: &RadialProblem, term: usize) -> Result<f64> {
    match *leaf(problem, term)? {
        PotentialSpec::PowerLaw { v0, n } if n == 2.0 && v0 > 0.0 => {
            Ok((2.0 * v0 / problem.mass()).sqrt())
        }
        _ => Err(HvlError::Precondition(format!(
            "term {term} is not a confining r^2 term"
        ))),
    }
}

impl ParameterHandle {
    pub fn new(problem: &RadialProblem, parameter: Parameter) -> Result<Self> {
        let value = parameter_value(problem, parameter)?;
        let affects_p = match parameter {
            Parameter::AngularMomentum => true,
            _ => {
                let s0 = problem.origin_strength()?;
                let moved = with_parameter(problem, parameter, value * (1.0 + 1e-6) + 1e-9)?;
                let s1 = moved.origin_strength()?;
                (s1 - s0).abs() > 1e-12 * s0.abs().max(1e-300) && (s0 != 0.0 || s1 != 0.0)
            }
        };
        Ok(ParameterHandle {
            parameter,
            value,
            affects_p,
        })
    }
}

pub fn parameter_value(problem: &RadialProblem, parameter: Parameter) -> Result<f64> {
    match parameter {
        Parameter::Mass => Ok(problem.mass()),
        Parameter::AngularMomentum => Ok(problem.l as f64),
        Parameter::Coupling { term } => match *leaf(problem, term)? {
            PotentialSpec::Coulomb { alpha, .. } => Ok(alpha),
            PotentialSpec::PowerLaw { v0, .. } | PotentialSpec::InverseSquare { v0 } => Ok(v0),
            PotentialSpec::Sum { .. } => unreachable!(),
        },
        Parameter::Frequency { term } => frequency_of(problem, term),
    }
}

/// Copy of `problem` with the parameter set to `value`.
pub fn with_parameter(
    problem: &RadialProblem,
    parameter: Parameter,
    value: f64,
) -> Result<RadialProblem> {
    let mut out = problem.clone();
    match parameter {
        Parameter::Mass => out.equation = problem.equation.with_mass(value),
        Parameter::AngularMomentum => {
            if value < 0.0 || value.fract() != 0.0 {
                return Err(HvlError::Precondition(format!(
                    "angular momentum is an integer, got {value}"
                )));
            }
            out.l = value as u32;
        }
        Parameter::Coupling { term } => {
            match leaf_mut(&mut out.potential, term)
                .ok_or_else(|| HvlError::Precondition(format!("potential has no term {term}")))?
            {
                PotentialSpec::Coulomb { alpha, .. } => *alpha = value,
                PotentialSpec::PowerLaw { v0, .. } | PotentialSpec::InverseSquare { v0 } => {
                    *v0 = value
                }
                PotentialSpec::Sum { .. } => unreachable!(),
            }
        }
        Parameter::Frequency { term } => {
            frequency_of(problem, term)?;
            let m = problem.mass();
            if let Some(PotentialSpec::PowerLaw { v0, .. }) = leaf_mut(&mut out.potential, term) {
                *v0 = 0.5 * m * value * value;
            }
        }
    }
    Ok(out)
}

/// `dV/dlambda` as monomials; empty for the mass.
fn potential_derivative(problem: &RadialProblem, parameter: Parameter) -> Result<Vec<Monomial>> {
    Ok(match parameter {
        Parameter::Mass => Vec::new(),
        Parameter::AngularMomentum => {
            return Err(HvlError::Precondition(
                "angular momentum is discrete; dE/dl is not defined".into(),
            ))
        }
        Parameter::Coupling { term } => {
            let (coeff, power) = match *leaf(problem, term)? {
                PotentialSpec::Coulomb {
                    sign: CoulombSign::Attractive,
                    ..
                } => (-1.0, -1.0),
                PotentialSpec::Coulomb {
                    sign: CoulombSign::Repulsive,
                    ..
                } => (1.0, -1.0),
                PotentialSpec::PowerLaw { n, .. } => (1.0, n),
                PotentialSpec::InverseSquare { .. } => (-1.0, -2.0),
                PotentialSpec::Sum { .. } => unreachable!(),
            };
            vec![Monomial { coeff, power }]
        }
        Parameter::Frequency { term } => {
            let w = frequency_of(problem, term)?;
            vec![Monomial {
                coeff: problem.mass() * w,
                power: 2.0,
            }]
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FdOptions {
    /// Step relative to `|lambda|` (absolute when `lambda = 0`).
    pub h_rel: f64,
    /// Required relative agreement between the `h` and `h/2` estimates.
    pub agreement: f64,
}

impl Default for FdOptions {
    fn default() -> Self {
        FdOptions {
            h_rel: 1e-4,
            agreement: 1e-6,
        }
    }
}

/// Central-difference derivative with its Richardson diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct FdResult {
    /// Richardson-extrapolated `(4 D(h/2) - D(h)) / 3`.
    pub derivative: f64,
    pub d_h: f64,
    pub d_half: f64,
    pub h: f64,
    pub relative_gap: f64,
    /// States at `lambda - h` and `lambda + h`.
    #[serde(skip)]
    pub minus: Eigenstate,
    #[serde(skip)]
    pub plus: Eigenstate,
}

fn shifted_state(
    state: &Eigenstate,
    parameter: Parameter,
    value: f64,
    opts: &SolverOptions,
) -> Result<Eigenstate> {
    let problem = with_parameter(&state.problem, parameter, value)?;
    let bc = match state.bc {
        BoundaryCondition::Regular { .. } | BoundaryCondition::StandardOnly { .. } => {
            BoundaryCondition::for_problem(&problem, 0.0)?
        }
        BoundaryCondition::Singular { tau, .. } | BoundaryCondition::SingularLog { tau } => {
            BoundaryCondition::for_problem(&problem, tau)?
        }
    };
    if bc.label() != state.bc.label() {
        return Err(HvlError::FiniteDifference(format!(
            "origin class changes from {} to {} within the step",
            state.bc.label(),
            bc.label()
        )));
    }
    let e = state.eigenvalue;
    let mut w = 1e-2 * e.abs().max(1e-4);
    let mut last = None;
    for _ in 0..12 {
        match solve_on_grid(
            &problem,
            &bc,
            state.nodes,
            (e - w, e + w),
            state.grid.clone(),
            opts,
        ) {
            Ok(s) => return Ok(s),
            Err(err @ HvlError::NodeCount { .. }) | Err(err @ HvlError::NoEigenvalue { .. }) => {
                last = Some(err);
                w *= 4.0;
            }
            Err(err) => return Err(err),
        }
    }
    Err(HvlError::FiniteDifference(format!(
        "no level with {} nodes near E = {e} after the step: {}",
        state.nodes,
        last.map(|e| e.to_string()).unwrap_or_default()
    )))
}

/// `dE/dlambda` by central differences on the state's grid, with `tau` held fixed.
pub fn de_dlambda_numeric(
    state: &Eigenstate,
    parameter: Parameter,
    fd: &FdOptions,
    opts: &SolverOptions,
) -> Result<FdResult> {
    if parameter == Parameter::AngularMomentum {
        return Err(HvlError::Precondition(
            "angular momentum is discrete; dE/dl is not defined".into(),
        ));
    }
    let lambda = parameter_value(&state.problem, parameter)?;
    let h = if lambda != 0.0 {
        fd.h_rel * lambda.abs()
    } else {
        fd.h_rel
    };
    let at = |v: f64| shifted_state(state, parameter, v, opts);
    let minus = at(lambda - h)?;
    let plus = at(lambda + h)?;
    let minus_half = at(lambda - 0.5 * h)?;
    let plus_half = at(lambda + 0.5 * h)?;
    let d_h = (plus.eigenvalue - minus.eigenvalue) / (2.0 * h);
    let d_half = (plus_half.eigenvalue - minus_half.eigenvalue) / h;
    let floor = 1e-9 * state.eigenvalue.abs().max(1e-12) / lambda.abs().max(1.0);
    let relative_gap = (d_h - d_half).abs() / d_half.abs().max(floor);
    if relative_gap > fd.agreement {
        return Err(HvlError::FiniteDifference(format!(
            "estimates at h = {h:e} and h/2 differ by {relative_gap:.2e} (relative)"
        )));
    }
    Ok(FdResult {
        derivative: (4.0 * d_half - d_h) / 3.0,
        d_h,
        d_half,
        h,
        relative_gap,
        minus,
        plus,
    })
}

/// `[a_st d a_add - a_add d a_st]` and the boundary term built from it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryTerm {
    pub bracket: f64,
    /// `-2P * bracket` for two branches, `+bracket` for the logarithmic pair.
    pub b: f64,
}

/// Boundary term from the fitted origin coefficients of the states at `lambda -+ h`.
pub fn fh_boundary_correction(
    central: &Eigenstate,
    minus: &Eigenstate,
    plus: &Eigenstate,
    h: f64,
    handle: &ParameterHandle,
) -> Result<BoundaryTerm> {
    let p = match central.bc {
        BoundaryCondition::Singular { p, .. } => p,
        BoundaryCondition::SingularLog { .. } => 0.0,
        _ => {
            return Err(HvlError::Precondition(
                "boundary correction applies to states with two origin branches".into(),
            ))
        }
    };
    refuse_if_divergent(central, handle)?;
    let (a_st, a_add) = branch_coefficients(central);
    let (st_m, add_m) = branch_coefficients(minus);
    let (st_p, add_p) = branch_coefficients(plus);
    let bracket = boundary_bracket(
        a_st,
        a_add,
        (st_p - st_m) / (2.0 * h),
        (add_p - add_m) / (2.0 * h),
    );
    let b = if p == 0.0 {
        bracket
    } else {
        -2.0 * p * bracket
    };
    Ok(BoundaryTerm { bracket, b })
}

/// `a_st * d_add - a_add * d_st`.
pub fn boundary_bracket(a_st: f64, a_add: f64, d_st: f64, d_add: f64) -> f64 {
    a_st * d_add - a_add * d_st
}

/// Refuses parameters that move `P` on a state inside the self-adjoint window.
pub fn refuse_if_divergent(state: &Eigenstate, handle: &ParameterHandle) -> Result<()> {
    let singular = matches!(
        state.bc,
        BoundaryCondition::Singular { .. } | BoundaryCondition::SingularLog { .. }
    );
    if singular && handle.affects_p {
        return Err(HvlError::Refusal(format!(
            "{:?} changes the origin exponent P; dE/dlambda then carries a term ~ dP/dlambda ln r that diverges at the origin",
            handle.parameter
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct FhReport {
    pub report: IdentityReport,
    pub parameter: ParameterHandle,
    pub numeric: FdResult,
    pub average: f64,
    pub boundary: Option<BoundaryTerm>,
}

fn named(name: &str, value: f64) -> NamedTerm {
    NamedTerm {
        name: name.into(),
        value,
    }
}

fn average_of(state: &Eigenstate, terms: &[Monomial]) -> Result<f64> {
    let mut sum = 0.0;
    for t in terms {
        sum += t.coeff * expectation(state, &Weight::power(t.power))?;
    }
    Ok(sum)
}

fn potential_average(state: &Eigenstate) -> Result<f64> {
    average_of(state, &state.problem.potential.monomials())
}

/// `<dH/dlambda>` for a Schroedinger state.
fn hamiltonian_derivative(state: &Eigenstate, parameter: Parameter) -> Result<f64> {
    match parameter {
        Parameter::Mass => {
            let kinetic = state.eigenvalue - potential_average(state)?;
            Ok(-kinetic / state.problem.mass())
        }
        p => average_of(state, &potential_derivative(&state.problem, p)?),
    }
}

fn schroedinger_mass(state: &Eigenstate) -> Result<f64> {
    match state.problem.equation {
        EquationKind::Schroedinger { mass } => Ok(mass),
        other => Err(HvlError::Precondition(format!(
            "needs the Schroedinger equation, got {}",
            other.label()
        ))),
    }
}

/// `dE/dlambda = <dH/dlambda>` for states with a single origin branch.
pub fn fh_regular(
    state: &Eigenstate,
    parameter: Parameter,
    fd: &FdOptions,
    opts: &SolverOptions,
) -> Result<FhReport> {
    schroedinger_mass(state)?;
    let handle = ParameterHandle::new(&state.problem, parameter)?;
    refuse_if_divergent(state, &handle)?;
    if state.bc.has_additional() && state.bc.tau().is_some_and(f64::is_finite) {
        return Err(HvlError::Precondition(
            "state has both origin branches; use the singular check".into(),
        ));
    }
    let numeric = de_dlambda_numeric(state, parameter, fd, opts)?;
    let average = hamiltonian_derivative(state, parameter)?;
    let report = IdentityReport::new(
        FH_REGULAR,
        numeric.derivative,
        average,
        vec![
            named("numeric", numeric.derivative),
            named("average", average),
        ],
        format!("{} lambda={parameter:?} h={:e}", describe(state), numeric.h),
    );
    Ok(FhReport {
        report,
        parameter: handle,
        numeric,
        average,
        boundary: None,
    })
}

/// `dE/dlambda = <dH/dlambda> + b/(2m)` with `b` from [`fh_boundary_correction`].
pub fn fh_singular_schroedinger(
    state: &Eigenstate,
    parameter: Parameter,
    fd: &FdOptions,
    opts: &SolverOptions,
) -> Result<FhReport> {
    let mass = schroedinger_mass(state)?;
    let handle = ParameterHandle::new(&state.problem, parameter)?;
    refuse_if_divergent(state, &handle)?;
    if !matches!(
        state.bc,
        BoundaryCondition::Singular { .. } | BoundaryCondition::SingularLog { .. }
    ) {
        return fh_regular(state, parameter, fd, opts);
    }
    let numeric = de_dlambda_numeric(state, parameter, fd, opts)?;
    let boundary =
        fh_boundary_correction(state, &numeric.minus, &numeric.plus, numeric.h, &handle)?;
    let average = hamiltonian_derivative(state, parameter)?;
    let correction = boundary.b / (2.0 * mass);
    let report = IdentityReport::new(
        FH_SINGULAR,
        numeric.derivative,
        average + correction,
        vec![
            named("numeric", numeric.derivative),
            named("average", average),
            named("correction", correction),
        ],
        format!("{} lambda={parameter:?} h={:e}", describe(state), numeric.h),
    );
    Ok(FhReport {
        report,
        parameter: handle,
        numeric,
        average,
        boundary: Some(boundary),
    })
}

/// One-body Klein-Gordon form of the theorem.
pub fn fh_kg_onebody(
    state: &Eigenstate,
    parameter: Parameter,
    fd: &FdOptions,
    opts: &SolverOptions,
) -> Result<FhReport> {
    let mass = match state.problem.equation {
        EquationKind::KleinGordonOneBody { mass } => mass,
        other => {
            return Err(HvlError::Precondition(format!(
                "needs the one-body Klein-Gordon equation, got {}",
                other.label()
            )))
        }
    };
    let handle = ParameterHandle::new(&state.problem, parameter)?;
    refuse_if_divergent(state, &handle)?;
    let numeric = de_dlambda_numeric(state, parameter, fd, opts)?;
    let two_branch = matches!(
        state.bc,
        BoundaryCondition::Singular { .. } | BoundaryCondition::SingularLog { .. }
    );
    let boundary = if two_branch {
        Some(fh_boundary_correction(
            state,
            &numeric.minus,
            &numeric.plus,
            numeric.h,
            &handle,
        )?)
    } else {
        None
    };
    let e = state.eigenvalue;
    let v_avg = potential_average(state)?;
    let denom = e - v_avg;
    if denom.abs() < 1e-10 {
        return Err(HvlError::Domain(format!(
            "E - <V> = {denom:e} is too close to zero"
        )));
    }
    let b = boundary.map_or(0.0, |t| t.b);
    let (average, rhs) = match parameter {
        Parameter::Mass => (mass / denom, (mass + 0.5 * b) / denom),
        p => {
            let dv = potential_derivative(&state.problem, p)?;
            let mut weighted = Vec::new();
            for t in &dv {
                weighted.push(Monomial {
                    coeff: e * t.coeff,
                    power: t.power,
                });
                for v in state.problem.potential.monomials() {
                    weighted.push(Monomial {
                        coeff: -v.coeff * t.coeff,
                        power: v.power + t.power,
                    });
                }
            }
            let num = average_of(state, &crate::model::merge_monomials(weighted))?;
            (num / denom, (num + 0.5 * b) / denom)
        }
    };
    let report = IdentityReport::new(
        FH_KG,
        numeric.derivative,
        rhs,
        vec![
            named("numeric", numeric.derivative),
            named("average", average),
            named("correction", rhs - average),
        ],
        format!("{} lambda={parameter:?} h={:e}", describe(state), numeric.h),
    );
    Ok(FhReport {
        report,
        parameter: handle,
        numeric,
        average,
        boundary,
    })
}

/// Picks the check that fits the state's equation and origin class.
pub fn fh_check(
    state: &Eigenstate,
    parameter: Parameter,
    fd: &FdOptions,
    opts: &SolverOptions,
) -> Result<FhReport> {
    match state.problem.equation {
        EquationKind::KleinGordonOneBody { .. } => fh_kg_onebody(state, parameter, fd, opts),
        EquationKind::KleinGordonTwoBody { .. } => Err(HvlError::Precondition(
            "no Feynman-Hellmann check for the two-body Klein-Gordon equation".into(),
        )),
        EquationKind::Schroedinger { .. } => match classify_singularity(&state.problem)? {
            SingularityClass::Singular { .. } | SingularityClass::SingularLog => {
                fh_singular_schroedinger(state, parameter, fd, opts)
            }
            _ => fh_regular(state, parameter, fd, opts),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles;
    use crate::solver::solve_bound_state;

    fn opts() -> SolverOptions {
        SolverOptions::default()
    }

    #[test]
    fn handles_and_affects_p() {
        let h = RadialProblem::schroedinger(1.0, PotentialSpec::coulomb(1.0), 0);
        assert!(!ParameterHandle::new(&h, Parameter::Mass).unwrap().affects_p);
        assert!(
            !ParameterHandle::new(&h, Parameter::Coupling { term: 0 })
                .unwrap()
                .affects_p
        );
        assert!(
            ParameterHandle::new(&h, Parameter::AngularMomentum)
                .unwrap()
                .affects_p
        );
        let s = RadialProblem::schroedinger(
            1.0,
            PotentialSpec::Sum {
                terms: vec![
                    PotentialSpec::inverse_square(0.2),
                    PotentialSpec::power_law(0.1, 1.0),
                ],
            },
            0,
        );
        assert!(ParameterHandle::new(&s, Parameter::Mass).unwrap().affects_p);
        assert!(
            ParameterHandle::new(&s, Parameter::Coupling { term: 0 })
                .unwrap()
                .affects_p
        );
        assert!(
            !ParameterHandle::new(&s, Parameter::Coupling { term: 1 })
                .unwrap()
                .affects_p
        );
        let kg = RadialProblem::new(
            EquationKind::KleinGordonOneBody { mass: 1.0 },
            PotentialSpec::coulomb(0.3),
            0,
        );
        assert!(
            ParameterHandle::new(&kg, Parameter::Coupling { term: 0 })
                .unwrap()
                .affects_p
        );
        assert!(
            !ParameterHandle::new(&kg, Parameter::Mass)
                .unwrap()
                .affects_p
        );
        let moved = with_parameter(&s, Parameter::Coupling { term: 1 }, 0.5).unwrap();
        assert_eq!(moved.potential.monomials()[1].coeff, 0.5);
        assert!(ParameterHandle::new(&h, Parameter::Coupling { term: 3 }).is_err());
    }

    #[test]
    fn numeric_derivatives() {
        let h = oracles::hydrogen_state(1, 0, 1.0, 1.0).unwrap().state;
        let d = de_dlambda_numeric(
            &h,
            Parameter::Coupling { term: 0 },
            &FdOptions::default(),
            &opts(),
        )
        .unwrap();
        assert!((d.derivative + 1.0).abs() < 1e-6, "{d:?}");
        let d = de_dlambda_numeric(&h, Parameter::Mass, &FdOptions::default(), &opts()).unwrap();
        assert!((d.derivative + 0.5).abs() < 1e-6, "{d:?}");
        let osc = oracles::oscillator_state(0, 0, 1.0, 1.0).unwrap().state;
        let d = de_dlambda_numeric(
            &osc,
            Parameter::Frequency { term: 0 },
            &FdOptions::default(),
            &opts(),
        )
        .unwrap();
        assert!((d.derivative - 1.5).abs() < 1e-6, "{d:?}");
    }

    #[test]
    fn regular_reports() {
        let h = oracles::hydrogen_state(1, 0, 1.0, 1.0).unwrap().state;
        for p in [Parameter::Mass, Parameter::Coupling { term: 0 }] {
            let r = fh_regular(&h, p, &FdOptions::default(), &opts()).unwrap();
            assert!(r.report.residual < 1e-5, "{:?}", r.report);
        }
        let osc = oracles::oscillator_state(0, 0, 1.0, 1.0).unwrap().state;
        let r = fh_regular(
            &osc,
            Parameter::Frequency { term: 0 },
            &FdOptions::default(),
            &opts(),
        )
        .unwrap();
        assert!(
            (r.average - 1.5).abs() < 1e-7 && r.report.pass,
            "{:?}",
            r.report
        );
    }

    #[test]
    fn bracket_antisymmetry() {
        let (a, b, da, db) = (0.7, -1.3, 0.2, 0.45);
        assert_eq!(
            boundary_bracket(a, b, da, db),
            -boundary_bracket(b, a, db, da)
        );
    }

    #[test]
    fn refusals() {
        let ks = oracles::inverse_square_state(0.2, 1.0, 1.0).unwrap().state;
        for p in [
            Parameter::Coupling { term: 0 },
            Parameter::Mass,
            Parameter::AngularMomentum,
        ] {
            let e = fh_check(&ks, p, &FdOptions::default(), &opts()).unwrap_err();
            assert!(matches!(e, HvlError::Refusal(_)), "{p:?} {e:?}");
        }
    }

    #[test]
    fn kg_mass_derivative() {
        let problem = RadialProblem::new(
            EquationKind::KleinGordonOneBody { mass: 1.0 },
            PotentialSpec::coulomb(0.2),
            1,
        );
        let bc = BoundaryCondition::for_problem(&problem, 0.0).unwrap();
        let s = solve_bound_state(&problem, &bc, 0, (0.9, 0.999999), &opts()).unwrap();
        for p in [Parameter::Mass, Parameter::Coupling { term: 0 }] {
            let r = fh_kg_onebody(&s, p, &FdOptions::default(), &opts()).unwrap();
            assert!(r.report.residual < 1e-4, "{:?}", r.report);
        }
    }
}
