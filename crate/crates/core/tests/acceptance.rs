//! Acceptance criteria 1-10. Prints one PASS/FAIL line per criterion.

use std::process::ExitCode;
use std::time::Instant;

use hvl_core::fh::{fh_check, fh_regular, FdOptions, Parameter};
use hvl_core::identities::{
    hypervirial_general, hypervirial_power, kg_massless, kramers, origin_relations,
    oscillator_recurrence, virial, ProbeFunction, ORIGIN_DENSITY, ORIGIN_DERIVATIVE,
};
use hvl_core::model::{EquationKind, PotentialSpec, RadialProblem};
use hvl_core::observables::{expectation, fit_origin, Weight};
use hvl_core::oracles;
use hvl_core::solver::{
    solve_bound_state, solve_kg_massless, BoundaryCondition, Eigenstate, SolverOptions,
};
use rand::{Rng, SeedableRng};

const VIRIAL_TOL: f64 = 1e-6;
const KRAMERS_TOL: f64 = 1e-5;
const ORIGIN_TOL: f64 = 1e-4;
const DERIVATIVE_VALUE_TOL: f64 = 1e-4;
const OSCILLATOR_TOL: f64 = 1e-5;
const CLOSURE_TOL: f64 = 1e-3;
const PRODUCT_TOL: f64 = 5e-3;
const MASSLESS_TOL: f64 = 1e-5;
const KG_MASSLESS_TOL: f64 = 1e-3;
const GENERAL_POWER_TOL: f64 = 1e-10;
const FH_REGULAR_TOL: f64 = 1e-5;
const FH_SINGULAR_TOL: f64 = 1e-3;
const EIGEN_HALVING_TOL: f64 = 1e-7;
const AVERAGE_HALVING_TOL: f64 = 1e-8;
const ORACLE_ENERGY_TOL: f64 = 1e-7;

type Outcome = Result<String, String>;

fn opts() -> SolverOptions {
    SolverOptions::default()
}

fn solve_with(
    p: &RadialProblem,
    bc: &BoundaryCondition,
    nodes: usize,
    bracket: (f64, f64),
    o: &SolverOptions,
) -> Eigenstate {
    solve_bound_state(p, bc, nodes, bracket, o).unwrap_or_else(|e| panic!("solve failed: {e}"))
}

fn hydrogen_problem(l: u32) -> RadialProblem {
    RadialProblem::schroedinger(1.0, PotentialSpec::coulomb(1.0), l)
}

fn hydrogen(n: u32, l: u32, o: &SolverOptions) -> Eigenstate {
    let p = hydrogen_problem(l);
    let e = -0.5 / (n * n) as f64;
    solve_with(
        &p,
        &BoundaryCondition::Regular { s: l },
        (n - l - 1) as usize,
        (1.2 * e, 0.8 * e),
        o,
    )
}

fn oscillator(nr: u32, l: u32, o: &SolverOptions) -> Eigenstate {
    let p = RadialProblem::schroedinger(1.0, PotentialSpec::power_law(0.5, 2.0), l);
    let e = 2.0 * nr as f64 + l as f64 + 1.5;
    solve_with(
        &p,
        &BoundaryCondition::Regular { s: l },
        nr as usize,
        (e - 0.5, e + 0.5),
        o,
    )
}

const P_SINGULAR: f64 = 0.2;

fn inverse_square_state(o: &SolverOptions) -> Eigenstate {
    let c = oracles::inverse_square(P_SINGULAR, 1.0, 1.0).unwrap();
    solve_with(&c.problem, &c.bc, 0, (-0.8, -0.3), o)
}

fn anharmonic(tau: f64, o: &SolverOptions) -> Eigenstate {
    let p = RadialProblem::schroedinger(
        1.0,
        PotentialSpec::Sum {
            terms: vec![
                PotentialSpec::inverse_square((0.25 - P_SINGULAR * P_SINGULAR) / 2.0),
                PotentialSpec::power_law(0.5, 1.0),
            ],
        },
        0,
    );
    let bc = BoundaryCondition::for_problem(&p, tau).unwrap();
    solve_with(&p, &bc, 0, (-60.0, 20.0), o)
}

fn worst(acc: &mut f64, x: f64) {
    if x > *acc || x.is_nan() {
        *acc = x;
    }
}

fn criterion_1() -> Outcome {
    let (mut v, mut k, mut o, mut e) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for n in 1..=3 {
        for l in 0..n {
            let s = hydrogen(n, l, &opts());
            worst(
                &mut e,
                (s.eigenvalue / oracles::hydrogen(n, l, 1.0, 1.0).unwrap().eigenvalue - 1.0).abs(),
            );
            worst(
                &mut v,
                virial(&s, true).map_err(|x| x.to_string())?.residual,
            );
            for q in 0..=3 {
                worst(&mut k, kramers(&s, q).map_err(|x| x.to_string())?.residual);
            }
            for r in origin_relations(&s).map_err(|x| x.to_string())? {
                if r.identity == ORIGIN_DENSITY {
                    worst(&mut o, r.residual);
                }
            }
        }
    }
    let msg =
        format!("E vs oracle {e:.2e}, virial {v:.2e}, Kramers {k:.2e}, origin density {o:.2e}");
    if e <= ORACLE_ENERGY_TOL && v <= VIRIAL_TOL && k <= KRAMERS_TOL && o <= ORIGIN_TOL {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn criterion_2() -> Outcome {
    let s = hydrogen(2, 1, &opts());
    let r = origin_relations(&s)
        .map_err(|x| x.to_string())?
        .into_iter()
        .find(|r| r.identity == ORIGIN_DERIVATIVE)
        .ok_or("no derivative relation reported")?;
    let msg = format!("lhs {:.8}, rhs {:.8}", r.lhs, r.rhs);
    if (r.lhs - 0.375).abs() <= DERIVATIVE_VALUE_TOL
        && (r.rhs - 0.375).abs() <= DERIVATIVE_VALUE_TOL
    {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn criterion_3() -> Outcome {
    let mut w = 0.0f64;
    for nr in 0..=2 {
        for l in 0..=1 {
            let s = oscillator(nr, l, &opts());
            for q in 0..=2 {
                worst(
                    &mut w,
                    oscillator_recurrence(&s, q)
                        .map_err(|x| x.to_string())?
                        .residual,
                );
            }
        }
    }
    let msg = format!("worst residual {w:.2e}");
    if w <= OSCILLATOR_TOL {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn criterion_4() -> Outcome {
    let s = inverse_square_state(&opts());
    let fit = fit_origin(&s);
    let product = fit.a_st * fit.a_add;
    let p = P_SINGULAR;
    let closure = p * p * product;
    let rel = (s.eigenvalue / closure - 1.0).abs();
    let expect = -1.0 / (2.0 * p * p);
    let prod_rel = (product / expect - 1.0).abs();
    let vr = virial(&s, true).map_err(|x| x.to_string())?;
    let msg = format!(
        "E {:.10}, P^2 a_st a_add {closure:.10} (rel {rel:.2e}), a_st a_add {product:.6} vs {expect} (rel {prod_rel:.2e}), virial residual {:.2e}",
        s.eigenvalue, vr.residual
    );
    if rel <= CLOSURE_TOL && prod_rel <= PRODUCT_TOL && vr.pass {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn criterion_5() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for p in [0.2, 0.3] {
        for repulsive in [false, true] {
            let c = oracles::massless_kg(p, 1.0, repulsive).map_err(|x| x.to_string())?;
            let s = solve_kg_massless(&c.problem, &c.bc, &opts()).map_err(|x| x.to_string())?;
            let r = kg_massless(&s).map_err(|x| x.to_string())?;
            let refused = solve_kg_massless(&c.problem, &c.bc.with_tau(0.0), &opts()).is_err();
            ok &= s.eigenvalue.abs() <= MASSLESS_TOL && r.residual <= KG_MASSLESS_TOL && refused;
            parts.push(format!(
                "P={p}{} M={:.1e} res={:.1e}{}",
                if repulsive { " rep" } else { "" },
                s.eigenvalue,
                r.residual,
                if refused { "" } else { " tau=0 FOUND" }
            ));
        }
    }
    let msg = parts.join("; ");
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn criterion_6() -> Outcome {
    let o = opts();
    let pool: Vec<(Eigenstate, f64, f64)> = vec![
        (hydrogen(1, 0, &o), 0.0, 4.0),
        (hydrogen(2, 1, &o), -2.0, 4.0),
        (hydrogen(3, 2, &o), -4.0, 4.0),
        (oscillator(1, 0, &o), 0.0, 4.0),
        (oscillator(0, 1, &o), -2.0, 4.0),
        (inverse_square_state(&o), 1.0 + 2.0 * P_SINGULAR, 4.0),
        (anharmonic(1.0, &o), 1.0 + 2.0 * P_SINGULAR, 4.0),
        (anharmonic(0.0, &o), 1.0 - 2.0 * P_SINGULAR, 4.0),
    ];
    let mut rng = rand::rngs::StdRng::seed_from_u64(20);
    let mut w = 0.0f64;
    for _ in 0..20 {
        let (s, lo, hi) = &pool[rng.gen_range(0..pool.len())];
        let q = rng.gen_range(*lo..*hi);
        let a = hypervirial_power(s, q).map_err(|x| format!("q={q}: {x}"))?;
        let b =
            hypervirial_general(s, &ProbeFunction::power(q)).map_err(|x| format!("q={q}: {x}"))?;
        let scale = a
            .terms
            .iter()
            .map(|t| t.value.abs())
            .fold(a.lhs.abs().max(a.rhs.abs()), f64::max);
        worst(
            &mut w,
            (a.lhs - b.lhs).abs().max((a.rhs - b.rhs).abs()) / scale,
        );
    }
    let msg = format!("worst relative disagreement {w:.2e}");
    if w <= GENERAL_POWER_TOL {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn criterion_7() -> Outcome {
    let o = opts();
    let mut w = 0.0f64;
    for s in [
        hydrogen(1, 0, &o),
        hydrogen(2, 1, &o),
        oscillator(0, 0, &o),
        oscillator(1, 1, &o),
    ] {
        for p in [Parameter::Mass, Parameter::Coupling { term: 0 }] {
            let r = fh_regular(&s, p, &FdOptions::default(), &o).map_err(|x| x.to_string())?;
            worst(
                &mut w,
                (r.numeric.derivative - r.average).abs() / r.numeric.derivative.abs(),
            );
        }
    }
    let msg = format!("worst |dE - <dH>|/|dE| {w:.2e}");
    if w <= FH_REGULAR_TOL {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn criterion_8() -> Outcome {
    let o = opts();
    let mut parts = Vec::new();
    let mut ok = true;
    for tau in [0.5, 1.0, 2.0] {
        let s = anharmonic(tau, &o);
        let r = fh_check(
            &s,
            Parameter::Coupling { term: 1 },
            &FdOptions::default(),
            &o,
        )
        .map_err(|x| x.to_string())?;
        ok &= r.report.residual <= FH_SINGULAR_TOL;
        parts.push(format!("tau={tau} res={:.1e}", r.report.residual));
    }
    let s = anharmonic(0.0, &o);
    let r = fh_check(
        &s,
        Parameter::Coupling { term: 1 },
        &FdOptions::default(),
        &o,
    )
    .map_err(|x| x.to_string())?;
    let b = r.boundary.map_or(0.0, |t| t.b);
    let rel = (r.numeric.derivative - r.average).abs() / r.numeric.derivative.abs();
    ok &= rel <= FH_REGULAR_TOL && b == 0.0;
    parts.push(format!("tau=0 rel={rel:.1e} B={b:e}"));
    let msg = parts.join("; ");
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn criterion_9() -> Outcome {
    let o = opts();
    let mut parts = Vec::new();
    let mut ok = true;
    let mut states = vec![
        anharmonic(1.0, &o),
        anharmonic(0.0, &o),
        inverse_square_state(&o),
    ];
    states.push({
        let p = RadialProblem::new(
            EquationKind::KleinGordonOneBody { mass: 1.0 },
            PotentialSpec::coulomb(0.3),
            0,
        );
        let bc = BoundaryCondition::for_problem(&p, 0.5).unwrap();
        solve_with(&p, &bc, 0, (0.05, 0.999999), &o)
    });
    for s in &states {
        for p in [Parameter::Coupling { term: 0 }, Parameter::AngularMomentum] {
            match fh_check(s, p, &FdOptions::default(), &o) {
                Err(e) if e.kind() == "refusal" => {}
                Err(e) => {
                    ok = false;
                    parts.push(format!("{} {p:?}: wrong error {e}", s.bc.label()));
                }
                Ok(r) => {
                    ok = false;
                    parts.push(format!("{} {p:?}: returned {}", s.bc.label(), r.report.rhs));
                }
            }
        }
    }
    let msg = if ok {
        format!("{} refusals", 2 * states.len())
    } else {
        parts.join("; ")
    };
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn criterion_10() -> Outcome {
    let coarse = opts();
    let fine = SolverOptions {
        grid: coarse.grid.refined(),
        ..coarse
    };
    let kg = oracles::massless_kg(0.3, 1.0, false).unwrap();
    let build = |o: &SolverOptions| -> Vec<(Eigenstate, Vec<f64>)> {
        let mut v = Vec::new();
        for n in 1..=3 {
            for l in 0..n {
                v.push((hydrogen(n, l, o), vec![-1.0, 1.0, 2.0]));
            }
        }
        for nr in 0..=2 {
            for l in 0..=1 {
                v.push((oscillator(nr, l, o), vec![-1.0, 1.0, 2.0]));
            }
        }
        v.push((inverse_square_state(o), vec![-0.5, 1.0, 2.0]));
        for tau in [0.0, 0.5, 1.0, 2.0] {
            v.push((anharmonic(tau, o), vec![-0.5, 1.0, 2.0]));
        }
        v.push((
            solve_kg_massless(&kg.problem, &kg.bc, o).unwrap(),
            vec![-0.5, 1.0],
        ));
        v
    };
    let (a, b) = (build(&coarse), build(&fine));
    let (mut we, mut wa) = (0.0f64, 0.0f64);
    for ((sa, qs), (sb, _)) in a.iter().zip(&b) {
        let scale = sa.eigenvalue.abs().max(1e-300);
        if sa.eigenvalue.abs() > 1e-6 {
            worst(&mut we, (sa.eigenvalue - sb.eigenvalue).abs() / scale);
        } else {
            worst(&mut we, (sa.eigenvalue - sb.eigenvalue).abs());
        }
        for &q in qs {
            let x = expectation(sa, &Weight::power(q)).map_err(|e| e.to_string())?;
            let y = expectation(sb, &Weight::power(q)).map_err(|e| e.to_string())?;
            worst(&mut wa, (x / y - 1.0).abs());
        }
    }
    let msg = format!("eigenvalue shift {we:.2e}, expectation shift {wa:.2e}");
    if we < EIGEN_HALVING_TOL && wa < AVERAGE_HALVING_TOL {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("hydrogen identity suite", criterion_1),
        ("2p derivative identity", criterion_2),
        ("oscillator recurrence", criterion_3),
        ("singular virial closure", criterion_4),
        ("massless Klein-Gordon state", criterion_5),
        ("general vs power hypervirial", criterion_6),
        ("Feynman-Hellmann regular", criterion_7),
        ("Feynman-Hellmann singular", criterion_8),
        ("Feynman-Hellmann refusal", criterion_9),
        ("grid halving", criterion_10),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(msg) => println!("criterion {:>2} PASS  {name}: {msg} [{secs:.1}s]", i + 1),
            Err(msg) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {msg} [{secs:.1}s]", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
