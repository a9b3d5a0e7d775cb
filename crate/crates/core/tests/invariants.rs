use hvl_core::fh::{boundary_bracket, fh_check, FdOptions, Parameter};
use hvl_core::identities::{
    hypervirial_power, kramers, oscillator_recurrence, virial, virial_extra_term,
};
use hvl_core::model::{
    build_effective_coefficient, classify_singularity, EquationKind, PotentialSpec, RadialProblem,
    SingularityClass,
};
use hvl_core::observables::{expectation, fit_origin, Weight};
use hvl_core::oracles;
use hvl_core::solver::{solve_bound_state, BoundaryCondition, Eigenstate, SolverOptions};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn solve(p: &RadialProblem, tau: f64, nodes: usize, bracket: (f64, f64)) -> Eigenstate {
    let bc = BoundaryCondition::for_problem(p, tau).unwrap();
    solve_bound_state(p, &bc, nodes, bracket, &SolverOptions::default()).unwrap()
}

fn hydrogen(n: u32, l: u32) -> Eigenstate {
    let p = RadialProblem::schroedinger(1.0, PotentialSpec::coulomb(1.0), l);
    let e = -0.5 / (n * n) as f64;
    solve(&p, 0.0, (n - l - 1) as usize, (1.2 * e, 0.8 * e))
}

fn oscillator(nr: u32, l: u32) -> Eigenstate {
    let p = RadialProblem::schroedinger(1.0, PotentialSpec::power_law(0.5, 2.0), l);
    let e = 2.0 * nr as f64 + l as f64 + 1.5;
    solve(&p, 0.0, nr as usize, (e - 0.5, e + 0.5))
}

fn anharmonic(v0: f64, mu: f64) -> RadialProblem {
    RadialProblem::schroedinger(
        1.0,
        PotentialSpec::Sum {
            terms: vec![
                PotentialSpec::inverse_square(v0),
                PotentialSpec::power_law(mu, 1.0),
            ],
        },
        0,
    )
}

fn few(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        ..ProptestConfig::default()
    }
}

proptest! {
    #[test]
    fn classification_ignores_regular_terms(
        v0 in 0.01f64..0.2,
        alpha in 0.0f64..5.0,
        c in -3.0f64..3.0,
        n in -0.9f64..4.0,
        l in 0u32..3,
    ) {
        let base = RadialProblem::schroedinger(1.0, PotentialSpec::inverse_square(v0), l);
        let extended = RadialProblem::schroedinger(
            1.0,
            PotentialSpec::Sum {
                terms: vec![
                    PotentialSpec::inverse_square(v0),
                    PotentialSpec::coulomb(alpha),
                    PotentialSpec::power_law(c, n),
                ],
            },
            l,
        );
        prop_assert_eq!(classify_singularity(&base).unwrap(), classify_singularity(&extended).unwrap());
    }

    #[test]
    fn a_shifts_by_energy_difference(
        e1 in -5.0f64..5.0,
        de in 0.0f64..5.0,
        mass in 0.1f64..4.0,
        r in 1e-4f64..50.0,
    ) {
        let p = RadialProblem::schroedinger(
            mass,
            PotentialSpec::Sum { terms: vec![PotentialSpec::coulomb(1.3), PotentialSpec::power_law(0.7, 1.5)] },
            1,
        );
        let a1 = build_effective_coefficient(&p, e1).unwrap().a(r);
        let a2 = build_effective_coefficient(&p, e1 + de).unwrap().a(r);
        let scale = a1.abs().max(a2.abs()).max(1.0);
        prop_assert!(((a2 - a1) - 2.0 * mass * de).abs() <= 1e-13 * scale);
    }

    #[test]
    fn p_formula(coupling in 0.001f64..0.6, mass in 0.2f64..3.0, l in 0u32..3, kind in 0usize..3) {
        let half = l as f64 + 0.5;
        let (problem, factor) = match kind {
            0 => (
                RadialProblem::schroedinger(mass, PotentialSpec::inverse_square(coupling), l),
                2.0 * mass * coupling,
            ),
            1 => (
                RadialProblem::new(EquationKind::KleinGordonOneBody { mass }, PotentialSpec::coulomb(coupling), l),
                coupling * coupling,
            ),
            _ => (
                RadialProblem::new(EquationKind::KleinGordonTwoBody { mass }, PotentialSpec::coulomb(coupling), l),
                0.25 * coupling * coupling,
            ),
        };
        let class = classify_singularity(&problem).unwrap();
        match class {
            SingularityClass::Supercritical { p_squared } => {
                prop_assert!((p_squared + factor - half * half).abs() < 1e-14)
            }
            SingularityClass::Regular => prop_assert!(false),
            other => {
                let p = other.p().unwrap();
                prop_assert!((p * p + factor - half * half).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn bracket_antisymmetry(a in -10.0f64..10.0, b in -10.0f64..10.0, da in -10.0f64..10.0, db in -10.0f64..10.0) {
        prop_assert_eq!(boundary_bracket(a, b, da, db), -boundary_bracket(b, a, db, da));
    }
}

proptest! {
    #![proptest_config(few(8))]

    #[test]
    fn disjoint_brackets_agree(alpha in 0.5f64..2.0, lo in 0.05f64..0.4, hi in 0.05f64..0.4) {
        let p = RadialProblem::schroedinger(1.0, PotentialSpec::coulomb(alpha), 0);
        let e = -alpha * alpha / 8.0;
        let a = solve(&p, 0.0, 1, (e * (1.0 + lo), e * 0.999)).eigenvalue;
        let b = solve(&p, 0.0, 1, (e * 1.001, e * (1.0 - hi))).eigenvalue;
        prop_assert!((a - b).abs() < 1e-10 * e.abs(), "{} {}", a, b);
    }

    #[test]
    fn single_branch_boundary_term_vanishes(mu in 0.3f64..1.0, infinite in proptest::bool::ANY) {
        let tau = if infinite { f64::INFINITY } else { 0.0 };
        let s = solve(&anharmonic(0.105, mu), tau, 0, (-60.0, 20.0));
        let r = fh_check(&s, Parameter::Coupling { term: 1 }, &FdOptions::default(), &SolverOptions::default())
            .unwrap();
        prop_assert!(r.boundary.unwrap().b.abs() < 1e-8);
    }
}

#[test]
fn regular_solves_do_not_leak_singular_branches() {
    let p_leak: f64 = 0.2;
    for s in [hydrogen(1, 0), hydrogen(2, 0), oscillator(1, 0)] {
        let (lo, hi) = (2.0 * s.grid.r_min(), 100.0 * s.grid.r_min());
        let idx: Vec<usize> = (0..s.grid.len())
            .filter(|&i| s.grid.r(i) >= lo && s.grid.r(i) <= hi)
            .collect();
        let basis = |r: f64| [1.0, r, r.powf(-0.5 - p_leak)];
        let a = DMatrix::from_fn(idx.len(), 3, |i, j| {
            basis(s.grid.r(idx[i]))[j] / s.radial[idx[i]]
        });
        let b = DVector::from_element(idx.len(), 1.0);
        let c = a.svd(true, true).solve(&b, 1e-15).unwrap();
        let edge = c[2].abs() * hi.powf(-0.5 - p_leak);
        let r_hi = s.radial[*idx.last().unwrap()].abs();
        assert!(edge < 1e-6 * r_hi, "{edge} vs {r_hi}");
    }
}

#[test]
fn single_branch_exponents() {
    let p: f64 = 0.2;
    let v0 = (0.25 - p * p) / 2.0;
    for (tau, want) in [(0.0, -0.5 + p), (f64::INFINITY, -0.5 - p)] {
        let s = solve(&anharmonic(v0, 0.5), tau, 0, (-60.0, 20.0));
        let (lo, hi) = fit_origin(&s).window;
        let pts: Vec<(f64, f64)> = (0..s.grid.len())
            .filter(|&i| s.grid.r(i) >= lo && s.grid.r(i) <= hi)
            .map(|i| (s.grid.r(i).ln(), s.radial[i].abs().ln()))
            .collect();
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let slope = sxy / sxx;
        assert!(
            (slope / want - 1.0).abs() < 1e-2,
            "tau={tau} slope {slope} want {want}"
        );
    }
}

#[test]
fn power_identity_on_regular_states() {
    let mut states = Vec::new();
    for n in 1..=3 {
        for l in 0..n {
            states.push(hydrogen(n, l));
        }
    }
    for nr in 0..=2 {
        for l in 0..=1 {
            states.push(oscillator(nr, l));
        }
    }
    for s in &states {
        let l = s.l() as i32;
        for q in -2 * l..=4 {
            let r = hypervirial_power(s, q as f64).unwrap();
            assert!(r.residual <= 1e-5, "l={l} q={q} {r:?}");
        }
    }
}

#[test]
fn recurrences_on_solved_states() {
    for n in 1..=3 {
        for l in 0..n {
            let s = hydrogen(n, l);
            for k in 0..=3 {
                let r = kramers(&s, k).unwrap();
                assert!(r.residual <= 1e-5, "n={n} l={l} s={k} {r:?}");
            }
        }
    }
    for nr in 0..=2 {
        let s = oscillator(nr, 0);
        for k in 0..=2 {
            let r = oscillator_recurrence(&s, k).unwrap();
            assert!(r.residual <= 1e-5, "nr={nr} s={k} {r:?}");
        }
    }
}

#[test]
fn extra_virial_term_vanishes_with_tau() {
    let v0 = (0.25 - 0.04) / 2.0;
    let mut last = f64::INFINITY;
    let mut final_state = None;
    for tau in [1.0, 0.5, 0.1, 1e-2, 1e-3, 1e-4, 0.0] {
        let s = solve(&anharmonic(v0, 0.5), tau, 0, (-60.0, 20.0));
        let b = virial_extra_term(&s).unwrap().abs();
        assert!(b < last, "tau={tau} b={b} previous {last}");
        assert!(virial(&s, true).unwrap().pass);
        last = b;
        final_state = Some(s);
    }
    let s = final_state.unwrap();
    assert!(last < 1e-6 * s.eigenvalue.abs());
}

#[test]
fn log_pair_identities() {
    for tau in [0.0, 1.0, -2.0] {
        let s = solve(&anharmonic(0.125, 0.5), tau, 0, (-60.0, 20.0));
        assert_eq!(s.bc.label(), "singular-log");
        let v = virial(&s, true).unwrap();
        assert!(v.residual <= 1e-4, "tau={tau} {v:?}");
        for q in [1.0, 2.0, 3.0] {
            let r = hypervirial_power(&s, q).unwrap();
            assert!(r.residual <= 1e-4, "tau={tau} q={q} {r:?}");
        }
        if tau != 0.0 {
            assert!(!virial(&s, false).unwrap().pass);
        }
    }
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a / b - 1.0).abs() < tol
}

#[test]
fn oracle_moments() {
    for n in 1..=3u32 {
        for l in 0..n {
            let o = oracles::hydrogen_state(n, l, 1.0, 1.0).unwrap();
            let (nf, lf) = (n as f64, l as f64);
            let ll = lf * (lf + 1.0);
            let want = [
                (1.0, (3.0 * nf * nf - ll) / 2.0),
                (-1.0, 1.0 / (nf * nf)),
                (2.0, nf * nf * (5.0 * nf * nf + 1.0 - 3.0 * ll) / 2.0),
                (-2.0, 1.0 / (nf.powi(3) * (lf + 0.5))),
            ];
            for (q, w) in want {
                let got = expectation(&o.state, &Weight::power(q)).unwrap();
                assert!(close(got, w, 1e-7), "n={n} l={l} q={q} {got} {w}");
            }
        }
    }
    for nr in 0..=2u32 {
        for l in 0..=1u32 {
            let o = oracles::oscillator_state(nr, l, 1.0, 1.0).unwrap();
            let e = 2.0 * nr as f64 + l as f64 + 1.5;
            let r2 = expectation(&o.state, &Weight::power(2.0)).unwrap();
            let rm2 = expectation(&o.state, &Weight::power(-2.0)).unwrap();
            assert!(
                close(r2, e, 1e-7) && close(rm2, 1.0 / (l as f64 + 0.5), 1e-7),
                "{r2} {rm2}"
            );
        }
    }
    let g = oracles::oscillator_state(0, 0, 1.0, 1.0).unwrap();
    let r1 = expectation(&g.state, &Weight::power(1.0)).unwrap();
    assert!(close(r1, 2.0 / std::f64::consts::PI.sqrt(), 1e-7));
}

#[test]
fn solver_reproduces_oracles() {
    let mut cases = Vec::new();
    for n in 1..=3u32 {
        for l in 0..n {
            cases.push(oracles::hydrogen(n, l, 1.0, 1.0).unwrap());
        }
    }
    for nr in 0..=2u32 {
        cases.push(oracles::oscillator(nr, 1, 1.0, 1.0).unwrap());
    }
    cases.push(oracles::inverse_square(0.2, 1.0, 1.0).unwrap());
    for c in cases {
        let e = c.eigenvalue;
        let w = 0.1 * e.abs().max(0.1);
        let s = solve_bound_state(
            &c.problem,
            &c.bc,
            c.nodes,
            (e - w, e + w),
            &SolverOptions::default(),
        )
        .unwrap();
        assert!(
            close(s.eigenvalue, e, 1e-7),
            "{} {} {}",
            c.provenance,
            s.eigenvalue,
            e
        );
    }
}
