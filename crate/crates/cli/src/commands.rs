//! The five subcommands. Each returns the encoded report and its exit code.

use hvl_core::fh::{fh_check, with_parameter, FdOptions, FhReport, Parameter};
use hvl_core::identities::{
    self, hypervirial_general, hypervirial_power, kg_massless, kg_virial, kramers,
    origin_relations, oscillator_recurrence, virial, virial_extra_term, IdentityReport,
    ProbeFunction,
};
use hvl_core::model::{classify_singularity, RadialProblem, SingularityClass};
use hvl_core::observables::{expectation, OriginFit, Weight};
use hvl_core::oracles::{self, ClosedForm};
use hvl_core::solver::{
    solve_bound_state, solve_kg_massless, BoundaryCondition, Diagnostics, Eigenstate, SolverOptions,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Format, OracleConfig, RunConfig, ScanParameter};
use crate::report::{cell, fmt17, to_json, Failure, Table, EXIT_IDENTITY, EXIT_OK, SCHEMA};

/// Flags that override the config file.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub tolerance: Option<f64>,
    pub disable_extra_term: bool,
}

pub struct Output {
    pub bytes: Vec<u8>,
    pub exit_code: u8,
}

const SAMPLES: usize = 400;

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    schema: &'static str,
    command: &'a str,
    #[serde(flatten)]
    body: T,
}

fn envelope<T: Serialize>(command: &str, body: T) -> Vec<u8> {
    to_json(&Envelope {
        schema: SCHEMA,
        command,
        body,
    })
}

pub fn error_report(command: &str, failure: &Failure) -> Vec<u8> {
    #[derive(Serialize)]
    struct Body<'a> {
        error: &'a Failure,
    }
    envelope(command, Body { error: failure })
}

pub fn class_label(class: &SingularityClass) -> &'static str {
    match class {
        SingularityClass::Regular => "regular",
        SingularityClass::Singular { .. } => "singular",
        SingularityClass::SingularLog => "singular-log",
        SingularityClass::StandardOnly { .. } => "standard-only",
        SingularityClass::Supercritical { .. } => "supercritical",
    }
}

#[derive(Serialize)]
struct GridSummary {
    r_min: f64,
    r_max: f64,
    points: usize,
}

#[derive(Serialize)]
struct StateSummary<'a> {
    problem: &'a RadialProblem,
    bc: BoundaryCondition,
    eigenvalue: f64,
    nodes: usize,
    norm_check: f64,
    normalization: &'static str,
    origin_fit: &'a OriginFit,
    diagnostics: &'a Diagnostics,
    grid: GridSummary,
}

fn summary(state: &Eigenstate) -> StateSummary<'_> {
    StateSummary {
        problem: &state.problem,
        bc: state.bc,
        eigenvalue: state.eigenvalue,
        nodes: state.nodes,
        norm_check: state.norm_check,
        normalization: "integral R^2 r^2 dr = 1",
        origin_fit: &state.origin,
        diagnostics: &state.diagnostics,
        grid: GridSummary {
            r_min: state.grid.r_min(),
            r_max: state.grid.r_max(),
            points: state.grid.len(),
        },
    }
}

#[derive(Serialize)]
struct Samples {
    r: Vec<f64>,
    radial: Vec<f64>,
}

fn samples(state: &Eigenstate) -> Samples {
    let n = state.grid.len();
    let stride = (n / SAMPLES).max(1);
    let idx: Vec<usize> = (0..n)
        .step_by(stride)
        .chain(std::iter::once(n - 1))
        .collect();
    let mut idx = idx;
    idx.dedup();
    Samples {
        r: idx.iter().map(|&i| state.grid.r(i)).collect(),
        radial: idx.iter().map(|&i| state.radial[i]).collect(),
    }
}

fn samples_table(s: &Samples) -> Table {
    let mut t = Table::new(&["r", "R"]);
    for (r, v) in s.r.iter().zip(&s.radial) {
        t.rows.push(vec![fmt17(*r), fmt17(*v)]);
    }
    t
}

pub fn solve_state(
    cfg: &RunConfig,
    problem: &RadialProblem,
    bc: &BoundaryCondition,
) -> Result<Eigenstate, Failure> {
    let opts = cfg.solver.options();
    if cfg.solver.massless {
        return Ok(solve_kg_massless(problem, bc, &opts)?);
    }
    let [lo, hi] = cfg.solver.bracket.ok_or_else(|| {
        Failure::config("solver.bracket is required unless solver.massless = true")
    })?;
    Ok(solve_bound_state(
        problem,
        bc,
        cfg.solver.nodes,
        (lo, hi),
        &opts,
    )?)
}

fn configured_state(cfg: &RunConfig) -> Result<Eigenstate, Failure> {
    let problem = cfg.problem()?;
    let bc = cfg.boundary_condition(problem, cfg.bc.tau)?;
    solve_state(cfg, problem, &bc)
}

pub fn solve(cfg: &RunConfig, format: Format) -> Result<Output, Failure> {
    let state = configured_state(cfg)?;
    let s = samples(&state);
    let bytes = match format {
        Format::Json => {
            #[derive(Serialize)]
            struct Body<'a> {
                state: StateSummary<'a>,
                samples: &'a Samples,
            }
            envelope(
                "solve",
                Body {
                    state: summary(&state),
                    samples: &s,
                },
            )
        }
        Format::Csv => samples_table(&s).to_csv(),
    };
    Ok(Output {
        bytes,
        exit_code: EXIT_OK,
    })
}

/// A labelled identity report, e.g. `kramers:s=2`.
#[derive(Debug, Clone, Serialize)]
pub struct Labelled {
    pub label: String,
    #[serde(flatten)]
    pub report: IdentityReport,
}

pub fn run_checks(
    cfg: &RunConfig,
    state: &Eigenstate,
    ov: Overrides,
) -> Result<Vec<Labelled>, Failure> {
    let mut out = Vec::new();
    for c in &cfg.checks {
        let include_extra = !ov.disable_extra_term && c.include_extra.unwrap_or(true);
        let mut reports: Vec<(String, IdentityReport)> = Vec::new();
        match c.tag.as_str() {
            "virial" => reports.push(("virial".into(), virial(state, include_extra)?)),
            "kg-virial" => reports.push(("kg-virial".into(), kg_virial(state, include_extra)?)),
            "kg-massless" => reports.push(("kg-massless".into(), kg_massless(state)?)),
            "kramers" => {
                for &s in c.s.as_deref().unwrap_or(&[0, 1, 2, 3]) {
                    reports.push((format!("kramers:s={s}"), kramers(state, s)?));
                }
            }
            "oscillator-recurrence" => {
                for &s in c.s.as_deref().unwrap_or(&[0, 1, 2]) {
                    reports.push((
                        format!("oscillator-recurrence:s={s}"),
                        oscillator_recurrence(state, s)?,
                    ));
                }
            }
            "hypervirial-power" => {
                for &q in c.q.as_deref().unwrap_or(&[1.0]) {
                    reports.push((
                        format!("hypervirial-power:q={q}"),
                        hypervirial_power(state, q)?,
                    ));
                }
            }
            "hypervirial-general" => {
                for &q in c.q.as_deref().unwrap_or(&[1.0]) {
                    let r = hypervirial_general(state, &ProbeFunction::power(q))?;
                    reports.push((format!("hypervirial-general:q={q}"), r));
                }
            }
            "origin" => {
                for r in origin_relations(state)? {
                    reports.push((r.identity.clone(), r));
                }
            }
            other => return Err(Failure::config(format!("unknown check tag {other:?}"))),
        }
        for (label, r) in reports {
            let report = match ov.tolerance.or(c.tolerance) {
                Some(t) => r.with_tolerance(t),
                None => r,
            };
            out.push(Labelled { label, report });
        }
    }
    Ok(out)
}

pub fn check(cfg: &RunConfig, format: Format, ov: Overrides) -> Result<Output, Failure> {
    if cfg.checks.is_empty() {
        return Err(Failure::config(
            "check needs at least one entry in [[checks]]",
        ));
    }
    let state = configured_state(cfg)?;
    let reports = run_checks(cfg, &state, ov)?;
    let pass = reports.iter().all(|r| r.report.pass);
    let bytes = match format {
        Format::Json => {
            #[derive(Serialize)]
            struct Body<'a> {
                pass: bool,
                state: StateSummary<'a>,
                reports: &'a [Labelled],
            }
            envelope(
                "check",
                Body {
                    pass,
                    state: summary(&state),
                    reports: &reports,
                },
            )
        }
        Format::Csv => {
            let mut t = Table::new(&[
                "label",
                "identity",
                "lhs",
                "rhs",
                "residual",
                "tolerance",
                "pass",
            ]);
            for r in &reports {
                let x = &r.report;
                t.rows.push(vec![
                    r.label.clone(),
                    x.identity.clone(),
                    fmt17(x.lhs),
                    fmt17(x.rhs),
                    fmt17(x.residual),
                    fmt17(x.tolerance),
                    x.pass.to_string(),
                ]);
            }
            t.to_csv()
        }
    };
    Ok(Output {
        bytes,
        exit_code: if pass { EXIT_OK } else { EXIT_IDENTITY },
    })
}

pub fn fh(cfg: &RunConfig, format: Format, ov: Overrides) -> Result<Output, Failure> {
    let f = cfg
        .fh
        .as_ref()
        .ok_or_else(|| Failure::config("fh needs an [fh] block"))?;
    let state = configured_state(cfg)?;
    let defaults = FdOptions::default();
    let fd = FdOptions {
        h_rel: f.h_rel.unwrap_or(defaults.h_rel),
        agreement: f.agreement.unwrap_or(defaults.agreement),
    };
    let mut r: FhReport = fh_check(&state, f.parameter, &fd, &cfg.solver.options())?;
    if let Some(t) = ov.tolerance.or(f.tolerance) {
        r.report = r.report.with_tolerance(t);
    }
    let pass = r.report.pass;
    let bytes = match format {
        Format::Json => {
            #[derive(Serialize)]
            struct Body<'a> {
                pass: bool,
                state: StateSummary<'a>,
                fh: &'a FhReport,
            }
            envelope(
                "fh",
                Body {
                    pass,
                    state: summary(&state),
                    fh: &r,
                },
            )
        }
        Format::Csv => {
            let mut t = Table::new(&[
                "identity",
                "lhs",
                "rhs",
                "residual",
                "tolerance",
                "pass",
                "average",
                "b",
                "h",
                "relative_gap",
            ]);
            t.rows.push(vec![
                r.report.identity.clone(),
                fmt17(r.report.lhs),
                fmt17(r.report.rhs),
                fmt17(r.report.residual),
                fmt17(r.report.tolerance),
                pass.to_string(),
                fmt17(r.average),
                cell(r.boundary.map(|b| b.b)),
                fmt17(r.numeric.h),
                fmt17(r.numeric.relative_gap),
            ]);
            t.to_csv()
        }
    };
    Ok(Output {
        bytes,
        exit_code: if pass { EXIT_OK } else { EXIT_IDENTITY },
    })
}

#[derive(Debug, Clone, Serialize)]
struct Residual {
    label: String,
    residual: f64,
    pass: bool,
}

#[derive(Debug, Clone, Serialize)]
struct ScanRow {
    value: f64,
    classification: String,
    status: String,
    error: Option<String>,
    eigenvalue: Option<f64>,
    nodes: Option<usize>,
    a_st: Option<f64>,
    a_add: Option<f64>,
    b: Option<f64>,
    residuals: Vec<Residual>,
}

fn scan_row(
    cfg: &RunConfig,
    base: &RadialProblem,
    parameter: ScanParameter,
    term: usize,
    value: f64,
    ov: Overrides,
) -> ScanRow {
    let mut row = ScanRow {
        value,
        classification: String::new(),
        status: "ok".into(),
        error: None,
        eigenvalue: None,
        nodes: None,
        a_st: None,
        a_add: None,
        b: None,
        residuals: Vec::new(),
    };
    let fail = |mut row: ScanRow, f: Failure| {
        row.status = f.kind;
        row.error = Some(f.message);
        row
    };
    let (problem, tau) = match parameter {
        ScanParameter::Tau => (Ok(base.clone()), value),
        ScanParameter::Alpha | ScanParameter::V0 => (
            with_parameter(base, Parameter::Coupling { term }, value),
            cfg.bc.tau,
        ),
        ScanParameter::M => (with_parameter(base, Parameter::Mass, value), cfg.bc.tau),
    };
    let problem = match problem {
        Ok(p) => p,
        Err(e) => return fail(row, e.into()),
    };
    row.classification = match classify_singularity(&problem) {
        Ok(c) => class_label(&c).into(),
        Err(e) => return fail(row, e.into()),
    };
    let state = match cfg
        .boundary_condition(&problem, tau)
        .and_then(|bc| solve_state(cfg, &problem, &bc))
    {
        Ok(s) => s,
        Err(f) => return fail(row, f),
    };
    row.eigenvalue = Some(state.eigenvalue);
    row.nodes = Some(state.nodes);
    let (a_st, a_add) = identities::branch_coefficients(&state);
    row.a_st = Some(a_st);
    row.a_add = Some(a_add);
    row.b = virial_extra_term(&state).ok();
    match run_checks(cfg, &state, ov) {
        Ok(reports) => {
            row.residuals = reports
                .into_iter()
                .map(|r| Residual {
                    label: r.label,
                    residual: r.report.residual,
                    pass: r.report.pass,
                })
                .collect()
        }
        Err(f) => return fail(row, f),
    }
    row
}

pub fn threads_from_env() -> Result<Option<usize>, Failure> {
    match std::env::var("HVL_THREADS") {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(0) | Err(_) => Err(Failure::config(format!(
                "HVL_THREADS must be a positive integer, got {v:?}"
            ))),
            Ok(n) => Ok(Some(n)),
        },
    }
}

pub fn scan(cfg: &RunConfig, format: Format, ov: Overrides) -> Result<Output, Failure> {
    let sc = cfg
        .scan
        .as_ref()
        .ok_or_else(|| Failure::config("scan needs a [scan] block"))?;
    let base = cfg.problem()?;
    let term = match sc.parameter {
        ScanParameter::Alpha | ScanParameter::V0 => sc.term_index(base)?,
        _ => 0,
    };
    let values = sc.values();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads_from_env()? {
        pool = pool.num_threads(n);
    }
    let pool = pool
        .build()
        .map_err(|e| Failure::config(format!("thread pool: {e}")))?;
    let rows: Vec<ScanRow> = pool.install(|| {
        values
            .par_iter()
            .map(|&v| scan_row(cfg, base, sc.parameter, term, v, ov))
            .collect()
    });
    let bytes = match format {
        Format::Json => {
            #[derive(Serialize)]
            struct Body<'a> {
                parameter: ScanParameter,
                term: Option<usize>,
                rows: &'a [ScanRow],
            }
            let term =
                matches!(sc.parameter, ScanParameter::Alpha | ScanParameter::V0).then_some(term);
            envelope(
                "scan",
                Body {
                    parameter: sc.parameter,
                    term,
                    rows: &rows,
                },
            )
        }
        Format::Csv => {
            let mut labels: Vec<String> = Vec::new();
            for r in &rows {
                for x in &r.residuals {
                    if !labels.contains(&x.label) {
                        labels.push(x.label.clone());
                    }
                }
            }
            let mut header = vec![
                "value",
                "classification",
                "status",
                "eigenvalue",
                "nodes",
                "a_st",
                "a_add",
                "b",
            ];
            header.extend(labels.iter().map(|s| s.as_str()));
            let mut t = Table::new(&header);
            for r in &rows {
                let mut cells = vec![
                    fmt17(r.value),
                    r.classification.clone(),
                    r.status.clone(),
                    cell(r.eigenvalue),
                    r.nodes.map(|n| n.to_string()).unwrap_or_default(),
                    cell(r.a_st),
                    cell(r.a_add),
                    cell(r.b),
                ];
                for l in &labels {
                    cells.push(cell(
                        r.residuals
                            .iter()
                            .find(|x| &x.label == l)
                            .map(|x| x.residual),
                    ));
                }
                t.rows.push(cells);
            }
            t.to_csv()
        }
    };
    Ok(Output {
        bytes,
        exit_code: EXIT_OK,
    })
}

fn closed_form(o: &OracleConfig) -> Result<ClosedForm, Failure> {
    Ok(match *o {
        OracleConfig::Hydrogen { n, l, mass, alpha } => oracles::hydrogen(n, l, mass, alpha)?,
        OracleConfig::Oscillator { nr, l, mass, omega } => oracles::oscillator(nr, l, mass, omega)?,
        OracleConfig::InverseSquare { p, kappa, mass } => oracles::inverse_square(p, kappa, mass)?,
        OracleConfig::MasslessKg { p, mass, repulsive } => {
            oracles::massless_kg(p, mass, repulsive)?
        }
    })
}

#[derive(Serialize)]
struct Moment {
    q: f64,
    value: f64,
}

pub fn oracle(cfg: &RunConfig, format: Format) -> Result<Output, Failure> {
    let o = cfg
        .oracle
        .as_ref()
        .ok_or_else(|| Failure::config("oracle needs an [oracle] block"))?;
    let closed = closed_form(o)?;
    let opts: SolverOptions = cfg.solver.options();
    let sampled = closed.state_on(&opts.grid, opts.decay)?;
    let state = &sampled.state;
    let moments: Vec<Moment> = [-2.0, -1.0, 1.0, 2.0]
        .into_iter()
        .filter_map(|q| {
            expectation(state, &Weight::power(q))
                .ok()
                .map(|value| Moment { q, value })
        })
        .collect();
    let solved = if matches!(o, OracleConfig::MasslessKg { .. }) {
        solve_kg_massless(&closed.problem, &closed.bc, &opts)
    } else {
        let e = closed.eigenvalue;
        let w = 0.1 * e.abs().max(0.1);
        solve_bound_state(
            &closed.problem,
            &closed.bc,
            closed.nodes,
            (e - w, e + w),
            &opts,
        )
    }?;
    let s = samples(state);
    let bytes = match format {
        Format::Json => {
            #[derive(Serialize)]
            struct Body<'a> {
                provenance: &'static str,
                problem: &'a RadialProblem,
                bc: BoundaryCondition,
                eigenvalue: f64,
                nodes: usize,
                origin_coefficients: Option<(f64, f64)>,
                ode_residual: f64,
                moments: Vec<Moment>,
                solver_eigenvalue: f64,
                samples: &'a Samples,
            }
            envelope(
                "oracle",
                Body {
                    provenance: closed.provenance,
                    problem: &closed.problem,
                    bc: closed.bc,
                    eigenvalue: closed.eigenvalue,
                    nodes: closed.nodes,
                    origin_coefficients: closed.origin_coefficients().ok(),
                    ode_residual: closed.ode_residual(state.radii())?,
                    moments,
                    solver_eigenvalue: solved.eigenvalue,
                    samples: &s,
                },
            )
        }
        Format::Csv => samples_table(&s).to_csv(),
    };
    Ok(Output {
        bytes,
        exit_code: EXIT_OK,
    })
}
