//! Run configuration: TOML (or JSON) with every key checked before any computation.

use std::path::{Path, PathBuf};

use hvl_core::fh::Parameter;
use hvl_core::model::{PotentialSpec, RadialProblem};
use hvl_core::solver::{tau_serde, BoundaryCondition, GridSpec, SolverOptions};
use serde::{Deserialize, Serialize};

use crate::report::Failure;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: Option<RadialProblem>,
    #[serde(default)]
    pub bc: BcConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub checks: Vec<CheckConfig>,
    pub fh: Option<FhConfig>,
    pub scan: Option<ScanConfig>,
    pub oracle: Option<OracleConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BcKind {
    Regular,
    Singular,
    SingularLog,
    StandardOnly,
}

impl BcKind {
    fn label(self) -> &'static str {
        match self {
            BcKind::Regular => "regular",
            BcKind::Singular => "singular",
            BcKind::SingularLog => "singular-log",
            BcKind::StandardOnly => "standard-only",
        }
    }
}

/// `kind` and `p` are optional and only checked against the problem's classification.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BcConfig {
    pub kind: Option<BcKind>,
    #[serde(with = "tau_serde", default)]
    pub tau: f64,
    pub p: Option<f64>,
}

impl Default for BcConfig {
    fn default() -> Self {
        BcConfig {
            kind: None,
            tau: 0.0,
            p: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub nodes: usize,
    pub bracket: Option<[f64; 2]>,
    /// Search for the `M = 0` two-body Klein-Gordon state instead of bracketing.
    pub massless: bool,
    pub points: usize,
    pub r_min: f64,
    pub r_switch: f64,
    pub r_max: Option<f64>,
    pub eigen_tolerance: f64,
    pub residual_tolerance: f64,
    pub max_iterations: usize,
    pub decay: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let o = SolverOptions::default();
        SolverConfig {
            nodes: 0,
            bracket: None,
            massless: false,
            points: o.grid.points,
            r_min: o.grid.r_min,
            r_switch: o.grid.r_switch,
            r_max: o.grid.r_max,
            eigen_tolerance: o.eigen_tolerance,
            residual_tolerance: o.residual_tolerance,
            max_iterations: o.max_iterations,
            decay: o.decay,
        }
    }
}

impl SolverConfig {
    pub fn options(&self) -> SolverOptions {
        SolverOptions {
            grid: GridSpec {
                r_min: self.r_min,
                r_switch: self.r_switch,
                r_max: self.r_max,
                points: self.points,
            },
            eigen_tolerance: self.eigen_tolerance,
            residual_tolerance: self.residual_tolerance,
            max_iterations: self.max_iterations,
            decay: self.decay,
        }
    }
}

pub const CHECK_TAGS: &[&str] = &[
    "virial",
    "kramers",
    "oscillator-recurrence",
    "hypervirial-power",
    "hypervirial-general",
    "origin",
    "kg-virial",
    "kg-massless",
];

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckConfig {
    pub tag: String,
    pub tolerance: Option<f64>,
    /// Moment orders for `kramers` and `oscillator-recurrence`.
    pub s: Option<Vec<u32>>,
    /// Probe powers for the hypervirial checks.
    pub q: Option<Vec<f64>>,
    pub include_extra: Option<bool>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FhConfig {
    pub parameter: Parameter,
    pub tolerance: Option<f64>,
    pub h_rel: Option<f64>,
    pub agreement: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScanParameter {
    Tau,
    Alpha,
    V0,
    M,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub parameter: ScanParameter,
    /// Potential term for `alpha` / `v0`; the first matching term when absent.
    pub term: Option<usize>,
    pub from: f64,
    pub to: f64,
    pub steps: usize,
}

impl ScanConfig {
    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.from];
        }
        let n = (self.steps - 1) as f64;
        (0..self.steps)
            .map(|i| self.from + (self.to - self.from) * i as f64 / n)
            .collect()
    }

    /// The leaf index that `alpha` / `v0` refers to.
    pub fn term_index(&self, problem: &RadialProblem) -> Result<usize, Failure> {
        let leaves = problem.potential.leaves();
        let fits = |p: &PotentialSpec| match self.parameter {
            ScanParameter::Alpha => matches!(p, PotentialSpec::Coulomb { .. }),
            _ => matches!(
                p,
                PotentialSpec::PowerLaw { .. } | PotentialSpec::InverseSquare { .. }
            ),
        };
        match self.term {
            Some(t) if t < leaves.len() && fits(leaves[t]) => Ok(t),
            Some(t) => Err(Failure::config(format!(
                "scan.term = {t} is not a {:?} term of the potential",
                self.parameter
            ))),
            None => leaves.iter().position(|p| fits(p)).ok_or_else(|| {
                Failure::config(format!(
                    "potential has no term to scan {:?} on",
                    self.parameter
                ))
            }),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum OracleConfig {
    Hydrogen {
        n: u32,
        l: u32,
        mass: f64,
        alpha: f64,
    },
    Oscillator {
        nr: u32,
        l: u32,
        mass: f64,
        omega: f64,
    },
    InverseSquare {
        p: f64,
        kappa: f64,
        mass: f64,
    },
    MasslessKg {
        p: f64,
        mass: f64,
        #[serde(default)]
        repulsive: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub format: Format,
    pub path: Option<PathBuf>,
}

fn is_json(path: &Path, text: &str) -> bool {
    match path.extension().and_then(|e| e.to_str()) {
        Some("json") => true,
        Some("toml") => false,
        _ => text.trim_start().starts_with('{'),
    }
}

pub fn load(path: &Path) -> Result<RunConfig, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::config(format!("cannot read {}: {e}", path.display())))?;
    let cfg: RunConfig = if is_json(path, &text) {
        serde_json::from_str(&text)
            .map_err(|e| Failure::config(format!("{}: {e}", path.display())))?
    } else {
        toml::from_str(&text).map_err(|e| Failure::config(format!("{}: {e}", path.display())))?
    };
    cfg.validate()?;
    Ok(cfg)
}

fn positive(name: &str, x: f64) -> Result<(), Failure> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(Failure::config(format!(
            "{name} must be positive and finite, got {x}"
        )))
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), Failure> {
        let s = &self.solver;
        if s.points < 16 {
            return Err(Failure::config(format!(
                "solver.points must be at least 16, got {}",
                s.points
            )));
        }
        positive("solver.r_min", s.r_min)?;
        positive("solver.r_switch", s.r_switch)?;
        positive("solver.eigen_tolerance", s.eigen_tolerance)?;
        positive("solver.residual_tolerance", s.residual_tolerance)?;
        positive("solver.decay", s.decay)?;
        if let Some(r) = s.r_max {
            positive("solver.r_max", r)?;
        }
        if let Some([lo, hi]) = s.bracket {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Failure::config(format!(
                    "solver.bracket must be [lo, hi] with lo < hi, got [{lo}, {hi}]"
                )));
            }
        }
        if self.bc.tau.is_nan() {
            return Err(Failure::config("bc.tau is not a number"));
        }
        if let Some(p) = &self.problem {
            p.validate().map_err(|e| Failure::config(e.to_string()))?;
        }
        for c in &self.checks {
            if !CHECK_TAGS.contains(&c.tag.as_str()) {
                return Err(Failure::config(format!(
                    "unknown check tag {:?}; expected one of {}",
                    c.tag,
                    CHECK_TAGS.join(", ")
                )));
            }
            if let Some(t) = c.tolerance {
                positive("checks.tolerance", t)?;
            }
        }
        if let Some(f) = &self.fh {
            for (name, v) in [
                ("fh.tolerance", f.tolerance),
                ("fh.h_rel", f.h_rel),
                ("fh.agreement", f.agreement),
            ] {
                if let Some(x) = v {
                    positive(name, x)?;
                }
            }
        }
        if let Some(sc) = &self.scan {
            if sc.steps == 0 {
                return Err(Failure::config("scan.steps must be at least 1"));
            }
            if !(sc.from.is_finite() && sc.to.is_finite()) {
                return Err(Failure::config("scan range must be finite"));
            }
        }
        Ok(())
    }

    pub fn problem(&self) -> Result<&RadialProblem, Failure> {
        self.problem
            .as_ref()
            .ok_or_else(|| Failure::config("config has no [problem] block"))
    }

    /// The boundary condition for `problem`, checked against `bc.kind` / `bc.p`.
    pub fn boundary_condition(
        &self,
        problem: &RadialProblem,
        tau: f64,
    ) -> Result<BoundaryCondition, Failure> {
        let bc = BoundaryCondition::for_problem(problem, tau).map_err(Failure::from_core)?;
        if let Some(kind) = self.bc.kind {
            if kind.label() != bc.label() {
                return Err(Failure::config(format!(
                    "bc.kind = {:?} but the problem is classified {:?}",
                    kind.label(),
                    bc.label()
                )));
            }
        }
        if let Some(p) = self.bc.p {
            match bc.p() {
                Some(q) if (p - q).abs() <= 1e-9 => {}
                other => {
                    return Err(Failure::config(format!(
                        "bc.p = {p} does not match the problem's P = {other:?}"
                    )))
                }
            }
        }
        Ok(bc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunConfig, Failure> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Failure::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    #[test]
    fn tau_accepts_infinity() {
        let cfg = parse("[bc]\ntau = \"inf\"\n").unwrap();
        assert_eq!(cfg.bc.tau, f64::INFINITY);
        assert_eq!(parse("").unwrap().bc.tau, 0.0);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(parse("[solver]\npoint = 100\n").is_err());
        assert!(parse("[bc]\nkind = \"weird\"\n").is_err());
    }

    #[test]
    fn validation() {
        assert!(parse("[solver]\npoints = 4\n").is_err());
        assert!(parse("[solver]\nbracket = [1.0, -1.0]\n").is_err());
        assert!(parse("[[checks]]\ntag = \"virial\"\ntolerance = 0.0\n").is_err());
        assert!(parse("[scan]\nparameter = \"tau\"\nfrom = 0.0\nto = 1.0\nsteps = 0\n").is_err());
    }

    #[test]
    fn scan_values() {
        let sc = ScanConfig {
            parameter: ScanParameter::Tau,
            term: None,
            from: 1.0,
            to: 0.0,
            steps: 5,
        };
        assert_eq!(sc.values(), vec![1.0, 0.75, 0.5, 0.25, 0.0]);
    }

    #[test]
    fn bc_kind_must_match_classification() {
        let cfg = parse(
            "[problem]\nl = 0\nequation = { kind = \"schroedinger\", mass = 1.0 }\n\
             potential = { kind = \"coulomb\", alpha = 1.0, sign = \"attractive\" }\n[bc]\nkind = \"singular\"\n",
        )
        .unwrap();
        let err = cfg
            .boundary_condition(cfg.problem().unwrap(), 0.0)
            .unwrap_err();
        assert_eq!(err.exit_code, crate::report::EXIT_CONFIG);
    }
}
