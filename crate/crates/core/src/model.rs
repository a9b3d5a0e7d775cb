//! Potentials, radial equations and the effective coefficient `A(r)`.
//!
//! Every radial problem handled here reduces to
//!
//! ```text
//! R'' + (2/r) R' + [A(r) - l(l+1)/r^2] R = 0
//! ```
//!
//! with natural units (hbar = c = 1). Potentials are finite sums of
//! monomials `c r^n`, which keeps values, derivatives and the small-r
//! expansion exact and lets singularity classification work from the
//! exponents instead of numerical limits.

use serde::{Deserialize, Serialize};

use crate::error::{HvlError, Result};

const POWER_EPS: f64 = 1e-12;

fn same_power(a: f64, b: f64) -> bool {
    (a - b).abs() <= POWER_EPS
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoulombSign {
    Attractive,
    Repulsive,
}

/// A central potential `V(r)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PotentialSpec {
    /// `V = -alpha/r` (attractive) or `+alpha/r` (repulsive).
    Coulomb {
        alpha: f64,
        sign: CoulombSign,
    },
    /// `V = v0 r^n`.
    PowerLaw {
        v0: f64,
        n: f64,
    },
    /// `V = -v0/r^2` with `v0 > 0`.
    InverseSquare {
        v0: f64,
    },
    Sum {
        terms: Vec<PotentialSpec>,
    },
}

/// One term `coeff * r^power` of a potential.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Monomial {
    pub coeff: f64,
    pub power: f64,
}

impl Monomial {
    pub fn value(&self, r: f64) -> f64 {
        if self.power == 0.0 {
            self.coeff
        } else {
            self.coeff * pow(r, self.power)
        }
    }

    pub fn derivative(&self, r: f64) -> f64 {
        if self.power == 0.0 {
            0.0
        } else {
            self.coeff * self.power * pow(r, self.power - 1.0)
        }
    }
}

fn pow(r: f64, p: f64) -> f64 {
    if p == p.trunc() && p.abs() <= 16.0 {
        r.powi(p as i32)
    } else {
        r.powf(p)
    }
}

impl PotentialSpec {
    pub fn coulomb(alpha: f64) -> Self {
        PotentialSpec::Coulomb {
            alpha,
            sign: CoulombSign::Attractive,
        }
    }

    pub fn coulomb_repulsive(alpha: f64) -> Self {
        PotentialSpec::Coulomb {
            alpha,
            sign: CoulombSign::Repulsive,
        }
    }

    pub fn power_law(v0: f64, n: f64) -> Self {
        PotentialSpec::PowerLaw { v0, n }
    }

    pub fn inverse_square(v0: f64) -> Self {
        PotentialSpec::InverseSquare { v0 }
    }

    pub fn zero() -> Self {
        PotentialSpec::Sum { terms: Vec::new() }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            PotentialSpec::Coulomb { alpha, .. } => {
                if !alpha.is_finite() || *alpha < 0.0 {
                    return Err(HvlError::InvalidPotential(format!(
                        "Coulomb alpha must be finite and non-negative, got {alpha}"
                    )));
                }
            }
            PotentialSpec::PowerLaw { v0, n } => {
                if !v0.is_finite() || !n.is_finite() {
                    return Err(HvlError::InvalidPotential(format!(
                        "power law needs finite v0 and n, got v0={v0}, n={n}"
                    )));
                }
                if *n < -2.0 - POWER_EPS {
                    return Err(HvlError::InvalidPotential(format!(
                        "power law r^{n} is more singular than r^-2"
                    )));
                }
            }
            PotentialSpec::InverseSquare { v0 } => {
                if !v0.is_finite() || *v0 <= 0.0 {
                    return Err(HvlError::InvalidPotential(format!(
                        "inverse-square strength must be positive, got {v0}"
                    )));
                }
            }
            PotentialSpec::Sum { terms } => {
                for t in terms {
                    t.validate()?;
                }
            }
        }
        Ok(())
    }

    /// Flattened list of leaf potentials (the terms a coupling handle can address).
    pub fn leaves(&self) -> Vec<&PotentialSpec> {
        let mut out = Vec::new();
        fn walk<'a>(p: &'a PotentialSpec, out: &mut Vec<&'a PotentialSpec>) {
            match p {
                PotentialSpec::Sum { terms } => terms.iter().for_each(|t| walk(t, out)),
                leaf => out.push(leaf),
            }
        }
        walk(self, &mut out);
        out
    }

    pub fn monomials(&self) -> Vec<Monomial> {
        self.leaves()
            .into_iter()
            .map(|leaf| match leaf {
                PotentialSpec::Coulomb { alpha, sign } => Monomial {
                    coeff: match sign {
                        CoulombSign::Attractive => -alpha,
                        CoulombSign::Repulsive => *alpha,
                    },
                    power: -1.0,
                },
                PotentialSpec::PowerLaw { v0, n } => Monomial {
                    coeff: *v0,
                    power: *n,
                },
                PotentialSpec::InverseSquare { v0 } => Monomial {
                    coeff: -v0,
                    power: -2.0,
                },
                PotentialSpec::Sum { .. } => unreachable!("leaves are never sums"),
            })
            .collect()
    }

    pub fn value(&self, r: f64) -> f64 {
        self.monomials().iter().map(|m| m.value(r)).sum()
    }

    pub fn derivative(&self, r: f64) -> f64 {
        self.monomials().iter().map(|m| m.derivative(r)).sum()
    }

    /// Splits the potential into its `r^-2`, `r^-1`, `r^0` coefficients and the rest.
    pub fn expansion(&self) -> Result<PotentialExpansion> {
        self.validate()?;
        let mut e = PotentialExpansion::default();
        for m in self.monomials() {
            if m.coeff == 0.0 {
                continue;
            }
            if same_power(m.power, -2.0) {
                e.inverse_square += m.coeff;
            } else if same_power(m.power, -1.0) {
                e.inverse_first += m.coeff;
            } else if same_power(m.power, 0.0) {
                e.constant += m.coeff;
            } else {
                e.rest.push(m);
            }
        }
        Ok(e)
    }
}

/// Small-r decomposition `V = s2/r^2 + s1/r + s0 + rest(r)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PotentialExpansion {
    pub inverse_square: f64,
    pub inverse_first: f64,
    pub constant: f64,
    pub rest: Vec<Monomial>,
}

impl PotentialExpansion {
    /// `V(r) - s2/r^2 - s1/r`.
    fn tail(&self, r: f64) -> f64 {
        self.constant + self.rest.iter().map(|m| m.value(r)).sum::<f64>()
    }

    fn tail_derivative(&self, r: f64) -> f64 {
        self.rest.iter().map(|m| m.derivative(r)).sum()
    }

    /// Leading small-r power of `V - s2/r^2 - s1/r`, if any term is present.
    fn tail_min_power(&self) -> Option<f64> {
        let mut p = if self.constant != 0.0 {
            Some(0.0)
        } else {
            None
        };
        for m in &self.rest {
            p = Some(p.map_or(m.power, |q: f64| q.min(m.power)));
        }
        p
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum EquationKind {
    Schroedinger {
        mass: f64,
    },
    KleinGordonOneBody {
        mass: f64,
    },
    /// Two particles of equal mass; the eigenparameter is the total mass `M`.
    KleinGordonTwoBody {
        mass: f64,
    },
}

impl EquationKind {
    pub fn mass(&self) -> f64 {
        match *self {
            EquationKind::Schroedinger { mass }
            | EquationKind::KleinGordonOneBody { mass }
            | EquationKind::KleinGordonTwoBody { mass } => mass,
        }
    }

    pub fn with_mass(&self, mass: f64) -> Self {
        match self {
            EquationKind::Schroedinger { .. } => EquationKind::Schroedinger { mass },
            EquationKind::KleinGordonOneBody { .. } => EquationKind::KleinGordonOneBody { mass },
            EquationKind::KleinGordonTwoBody { .. } => EquationKind::KleinGordonTwoBody { mass },
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            EquationKind::Schroedinger { .. } => "schroedinger",
            EquationKind::KleinGordonOneBody { .. } => "klein-gordon-one-body",
            EquationKind::KleinGordonTwoBody { .. } => "klein-gordon-two-body",
        }
    }

    pub fn eigen_role(&self) -> EigenRole {
        match self {
            EquationKind::KleinGordonTwoBody { .. } => EigenRole::TotalMass,
            _ => EigenRole::Energy,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EigenRole {
    Energy,
    TotalMass,
}

/// Origin behaviour of a problem, decided from `lim r^2 A(r)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "class", rename_all = "kebab-case")]
pub enum SingularityClass {
    Regular,
    /// `0 < P < 1/2`: both origin branches are admissible.
    Singular {
        p: f64,
    },
    /// `P = 0`: the branches are `r^-1/2` and `r^-1/2 ln r`.
    SingularLog,
    /// `P >= 1/2`: only the standard branch is square-integrable enough.
    StandardOnly {
        p: f64,
    },
    Supercritical {
        p_squared: f64,
    },
}

impl SingularityClass {
    pub fn p(&self) -> Option<f64> {
        match *self {
            SingularityClass::Singular { p } | SingularityClass::StandardOnly { p } => Some(p),
            SingularityClass::SingularLog => Some(0.0),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadialProblem {
    pub equation: EquationKind,
    pub potential: PotentialSpec,
    pub l: u32,
}

impl RadialProblem {
    pub fn new(equation: EquationKind, potential: PotentialSpec, l: u32) -> Self {
        RadialProblem {
            equation,
            potential,
            l,
        }
    }

    pub fn schroedinger(mass: f64, potential: PotentialSpec, l: u32) -> Self {
        Self::new(EquationKind::Schroedinger { mass }, potential, l)
    }

    pub fn mass(&self) -> f64 {
        self.equation.mass()
    }

    pub fn centrifugal(&self) -> f64 {
        let l = self.l as f64;
        l * (l + 1.0)
    }

    pub fn validate(&self) -> Result<PotentialExpansion> {
        let m = self.mass();
        if !(m.is_finite() && m > 0.0) {
            return Err(HvlError::InvalidProblem(format!(
                "mass must be positive, got {m}"
            )));
        }
        let e = self.potential.expansion()?;
        if !matches!(self.equation, EquationKind::Schroedinger { .. }) {
            if e.inverse_square != 0.0 {
                return Err(HvlError::InvalidPotential(
                    "Klein-Gordon problems cannot carry an r^-2 potential (V^2 would be r^-4)"
                        .into(),
                ));
            }
            if let Some(m) = e.rest.iter().find(|m| m.power < -1.0) {
                return Err(HvlError::InvalidPotential(format!(
                    "Klein-Gordon potential term r^{} is more singular than 1/r",
                    m.power
                )));
            }
        }
        Ok(e)
    }

    /// `lim_{r->0} r^2 A(r)`, from the potential's exponents.
    pub fn origin_strength(&self) -> Result<f64> {
        let e = self.validate()?;
        Ok(origin_strength(&self.equation, &e))
    }
}

fn origin_strength(eq: &EquationKind, e: &PotentialExpansion) -> f64 {
    match *eq {
        EquationKind::Schroedinger { mass } => -2.0 * mass * e.inverse_square,
        EquationKind::KleinGordonOneBody { .. } => e.inverse_first * e.inverse_first,
        EquationKind::KleinGordonTwoBody { .. } => 0.25 * e.inverse_first * e.inverse_first,
    }
}

const ZERO_STRENGTH: f64 = 1e-15;
const LOG_WINDOW: f64 = 1e-14;

pub fn classify_singularity(problem: &RadialProblem) -> Result<SingularityClass> {
    let strength = problem.origin_strength()?;
    if strength.abs() <= ZERO_STRENGTH {
        return Ok(SingularityClass::Regular);
    }
    let half = problem.l as f64 + 0.5;
    let p_squared = half * half - strength;
    if p_squared.abs() <= LOG_WINDOW {
        Ok(SingularityClass::SingularLog)
    } else if p_squared < 0.0 {
        Ok(SingularityClass::Supercritical { p_squared })
    } else {
        let p = p_squared.sqrt();
        if p < 0.5 {
            Ok(SingularityClass::Singular { p })
        } else {
            Ok(SingularityClass::StandardOnly { p })
        }
    }
}

/// Sorts by power, merges equal powers and drops zero coefficients.
pub fn merge_monomials(mut terms: Vec<Monomial>) -> Vec<Monomial> {
    terms.sort_by(|a, b| a.power.total_cmp(&b.power));
    let mut out: Vec<Monomial> = Vec::new();
    for t in terms {
        match out.last_mut() {
            Some(last) if same_power(last.power, t.power) => last.coeff += t.coeff,
            _ => out.push(t),
        }
    }
    out.retain(|m| m.coeff != 0.0);
    out
}

/// `A(r)` at a fixed eigenparameter as a sum of monomials.
pub fn a_monomials(problem: &RadialProblem, eigen: f64) -> Result<Vec<Monomial>> {
    problem.validate()?;
    let v = problem.potential.monomials();
    let mut out = Vec::new();
    let square = |out: &mut Vec<Monomial>, scale: f64| {
        for a in &v {
            for b in &v {
                out.push(Monomial {
                    coeff: scale * a.coeff * b.coeff,
                    power: a.power + b.power,
                });
            }
        }
    };
    match problem.equation {
        EquationKind::Schroedinger { mass } => {
            out.push(Monomial {
                coeff: 2.0 * mass * eigen,
                power: 0.0,
            });
            out.extend(v.iter().map(|t| Monomial {
                coeff: -2.0 * mass * t.coeff,
                power: t.power,
            }));
        }
        EquationKind::KleinGordonOneBody { mass } => {
            out.push(Monomial {
                coeff: eigen * eigen - mass * mass,
                power: 0.0,
            });
            out.extend(v.iter().map(|t| Monomial {
                coeff: -2.0 * eigen * t.coeff,
                power: t.power,
            }));
            square(&mut out, 1.0);
        }
        EquationKind::KleinGordonTwoBody { mass } => {
            out.push(Monomial {
                coeff: 0.25 * eigen * eigen - mass * mass,
                power: 0.0,
            });
            out.extend(v.iter().map(|t| Monomial {
                coeff: -0.5 * eigen * t.coeff,
                power: t.power,
            }));
            square(&mut out, 0.25);
        }
    }
    Ok(merge_monomials(out))
}

/// `A - kappa0/r^2` as monomials.
pub fn a_regular_monomials(problem: &RadialProblem, eigen: f64) -> Result<Vec<Monomial>> {
    let mut m = a_monomials(problem, eigen)?;
    m.retain(|t| !same_power(t.power, -2.0));
    Ok(m)
}

/// `A` as a function of the local potential value `v`.
pub fn a_from_value(equation: &EquationKind, eigen: f64, v: f64) -> f64 {
    match *equation {
        EquationKind::Schroedinger { mass } => 2.0 * mass * (eigen - v),
        EquationKind::KleinGordonOneBody { mass } => {
            let d = eigen - v;
            d * d - mass * mass
        }
        EquationKind::KleinGordonTwoBody { mass } => {
            0.25 * v * v - 0.5 * eigen * v + 0.25 * eigen * eigen - mass * mass
        }
    }
}

/// `A(r)` and `A'(r)` at a fixed eigenparameter.
///
/// Besides the full coefficient this exposes the split
/// `A = kappa0/r^2 + A_reg(r)`, with `A_reg` computed without the
/// cancellation that subtracting `kappa0/r^2` numerically would cost.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveCoefficient {
    equation: EquationKind,
    l: u32,
    eigen: f64,
    potential: PotentialSpec,
    expansion: PotentialExpansion,
    strength: f64,
}

pub fn build_effective_coefficient(
    problem: &RadialProblem,
    eigenparameter: f64,
) -> Result<EffectiveCoefficient> {
    let expansion = problem.validate()?;
    let strength = origin_strength(&problem.equation, &expansion);
    Ok(EffectiveCoefficient {
        equation: problem.equation,
        l: problem.l,
        eigen: eigenparameter,
        potential: problem.potential.clone(),
        expansion,
        strength,
    })
}

impl EffectiveCoefficient {
    pub fn eigenparameter(&self) -> f64 {
        self.eigen
    }

    pub fn equation(&self) -> EquationKind {
        self.equation
    }

    pub fn l(&self) -> u32 {
        self.l
    }

    pub fn potential(&self) -> &PotentialSpec {
        &self.potential
    }

    pub fn a(&self, r: f64) -> f64 {
        a_from_value(&self.equation, self.eigen, self.potential.value(r))
    }

    pub fn a_prime(&self, r: f64) -> f64 {
        let v = self.potential.value(r);
        let dv = self.potential.derivative(r);
        match self.equation {
            EquationKind::Schroedinger { mass } => -2.0 * mass * dv,
            EquationKind::KleinGordonOneBody { .. } => -2.0 * (self.eigen - v) * dv,
            EquationKind::KleinGordonTwoBody { .. } => 0.5 * (v - self.eigen) * dv,
        }
    }

    /// `L(r) = A(r) - l(l+1)/r^2`.
    pub fn l_full(&self, r: f64) -> f64 {
        let l = self.l as f64;
        self.a(r) - l * (l + 1.0) / (r * r)
    }

    /// `lim r^2 A(r)`.
    pub fn origin_strength(&self) -> f64 {
        self.strength
    }

    /// Coefficient of the exact `1/r` term of `A` at small r.
    pub fn inverse_r_coefficient(&self) -> f64 {
        let e = &self.expansion;
        match self.equation {
            EquationKind::Schroedinger { mass } => -2.0 * mass * e.inverse_first,
            EquationKind::KleinGordonOneBody { .. } => {
                -2.0 * e.inverse_first * (self.eigen - e.constant)
            }
            EquationKind::KleinGordonTwoBody { .. } => {
                0.5 * e.inverse_first * (e.constant - self.eigen)
            }
        }
    }

    /// `A(r) - kappa0/r^2`.
    pub fn a_regular(&self, r: f64) -> f64 {
        let e = &self.expansion;
        match self.equation {
            EquationKind::Schroedinger { mass } => {
                let v_reg = e.inverse_first / r + e.tail(r);
                2.0 * mass * (self.eigen - v_reg)
            }
            EquationKind::KleinGordonOneBody { mass } => {
                let d = self.eigen - e.tail(r);
                d * d - 2.0 * d * e.inverse_first / r - mass * mass
            }
            EquationKind::KleinGordonTwoBody { mass } => {
                let w = e.tail(r) - self.eigen;
                0.5 * e.inverse_first * w / r + 0.25 * w * w - mass * mass
            }
        }
    }

    pub fn a_regular_prime(&self, r: f64) -> f64 {
        let e = &self.expansion;
        let dw = e.tail_derivative(r);
        match self.equation {
            EquationKind::Schroedinger { mass } => {
                let dv = -e.inverse_first / (r * r) + dw;
                -2.0 * mass * dv
            }
            EquationKind::KleinGordonOneBody { .. } => {
                let d = self.eigen - e.tail(r);
                let s1 = e.inverse_first;
                -2.0 * d * dw + 2.0 * dw * s1 / r + 2.0 * d * s1 / (r * r)
            }
            EquationKind::KleinGordonTwoBody { .. } => {
                let w = e.tail(r) - self.eigen;
                let s1 = e.inverse_first;
                0.5 * s1 * dw / r - 0.5 * s1 * w / (r * r) + 0.5 * w * dw
            }
        }
    }

    /// Leading small-r power of `A_reg`, used for analytic tail integrals.
    pub fn regular_exponent(&self) -> f64 {
        let e = &self.expansion;
        let tail = e.tail_min_power();
        let mut p: f64 = 0.0;
        match self.equation {
            EquationKind::Schroedinger { .. } => {
                if e.inverse_first != 0.0 {
                    p = p.min(-1.0);
                }
                if let Some(t) = tail {
                    p = p.min(t);
                }
            }
            EquationKind::KleinGordonOneBody { .. } | EquationKind::KleinGordonTwoBody { .. } => {
                if let Some(t) = tail {
                    p = p.min(t).min(2.0 * t);
                }
                if e.inverse_first != 0.0 {
                    p = p.min(-1.0);
                    if let Some(t) = tail {
                        p = p.min(t - 1.0);
                    }
                }
            }
        }
        p
    }
}
