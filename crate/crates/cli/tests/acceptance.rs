//! One test per acceptance criterion; each prints a PASS line when it holds.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::Command;

use conslaw_core::expr::{
    divergence, evaluate, partial, q_int, total_derivative, total_derivative_multi, Atom,
};
use conslaw_core::flux::{
    base_point_fluxes, bilinear_s, flux_direct, flux_homotopy1, flux_homotopy2, flux_scaling,
    homotopy1_integrand, law_homotopy1, scaling_weights, FluxAnsatzSpec, ScalingSymmetry,
};
use conslaw_core::parse::ParseError;
use conslaw_core::parse::{parse_expression, parse_problem, render, Problem, Scope};
use conslaw_core::problem::{generate_ansatz, PdeSystem};
use conslaw_core::solver::{characteristic_form, solve_multipliers, MultiplierSet};
use conslaw_core::verify::{euler_annihilation, verify_on_solutions};
use conslaw_core::{DiffExpr, FluxError, ProblemError, Q};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn problem_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../problems")
        .join(name)
}

fn load(name: &str) -> Problem {
    parse_problem(&std::fs::read_to_string(problem_path(name)).unwrap()).unwrap()
}

fn ex(sys: &PdeSystem, src: &str) -> DiffExpr {
    parse_expression(src, &Scope::new(&sys.vars, &sys.functions)).unwrap()
}

fn exs(sys: &PdeSystem, srcs: &[&str]) -> Vec<DiffExpr> {
    srcs.iter().map(|s| ex(sys, s)).collect()
}

fn ms(sys: &PdeSystem, src: &str) -> MultiplierSet {
    MultiplierSet::new(vec![ex(sys, src)])
}

fn basis(p: &Problem) -> Vec<DiffExpr> {
    let ansatz = generate_ansatz(&p.system, p.ansatz.as_ref().unwrap()).unwrap();
    let mut out: Vec<DiffExpr> = solve_multipliers(&p.system, &ansatz)
        .unwrap()
        .multipliers
        .into_iter()
        .map(|m| m.components[0].clone())
        .collect();
    out.sort();
    out
}

fn sorted(mut v: Vec<DiffExpr>) -> Vec<DiffExpr> {
    v.sort();
    v
}

fn pass(n: u32, what: &str) {
    println!("criterion {n}: PASS  {what}");
}

fn conslaw(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_conslaw"))
        .args(args)
        .env_remove("CONSLAW_MAX_SWEEPS")
        .output()
        .unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn path_str(name: &str) -> String {
    problem_path(name).display().to_string()
}

const KDV: [&str; 4] = ["1", "u", "x - t*u", "(1/2)*u^2 + u_{xx}"];

#[test]
fn criterion_1_wave_equation_multipliers_and_direct_fluxes() {
    let p = load("wave.json");
    let sys = &p.system;
    assert_eq!(basis(&p), sorted(exs(sys, &["1", "x", "t", "x*t"])));
    let cases = [
        ("1", ["-c(u)^2*u_{x}", "u_{t}"]),
        ("x", ["-x*c(u)^2*u_{x} + C(u)", "x*u_{t}"]),
        ("t", ["-t*c(u)^2*u_{x}", "t*u_{t} - u"]),
        ("x*t", ["-x*t*c(u)^2*u_{x} + t*C(u)", "x*t*u_{t} - x*u"]),
    ];
    for (lam, want) in cases {
        let law = flux_direct(sys, &ms(sys, lam), &FluxAnsatzSpec::default()).unwrap();
        assert_eq!(law.fluxes, exs(sys, &want), "Lambda = {lam}");
    }
    pass(
        1,
        "wave: basis {1, x, t, xt}; four direct density/flux pairs exact",
    );
}

#[test]
fn criterion_2_kdv_multiplier_basis() {
    let p = load("kdv.json");
    let got = basis(&p);
    assert_eq!(got.len(), 4);
    assert_eq!(got, sorted(exs(&p.system, &KDV)));
    let (code, out, _) = conslaw(&[
        "multipliers",
        &path_str("kdv.json"),
        "--deps",
        "t,x,u,u_x,u_xx",
        "--degree",
        "2",
    ]);
    assert_eq!(code, 0);
    assert!(out.starts_with("multipliers (4):"), "{out}");
    pass(
        2,
        "KdV: basis {1, U, x - tU, U^2/2 + U_xx}; nullspace dimension 4",
    );
}

#[test]
fn criterion_3_kdv_homotopy1() {
    let p = load("kdv.json");
    let sys = &p.system;
    let f = characteristic_form(sys, &[ex(sys, "u")]);
    assert_eq!(homotopy1_integrand(&f, 0, 1), ex(sys, "u^2"));
    assert_eq!(
        homotopy1_integrand(&f, 1, 1),
        ex(sys, "u^3 - u_{x}^2 + 2*u*u_{xx}")
    );
    let want = [
        ["u", "(1/2)*u^2 + u_{xx}"],
        ["(1/2)*u^2", "(1/3)*u^3 - (1/2)*u_{x}^2 + u*u_{xx}"],
        [
            "x*u - (1/2)*t*u^2",
            "-(1/3)*t*u^3 + (1/2)*(x*u^2 + t*u_{x}^2) - u_{x} + (x - t*u)*u_{xx}",
        ],
        [
            "(1/6)*u^3 + (1/2)*u*u_{xx}",
            "(1/8)*u^4 + (1/2)*(u_{t}*u_{x} - u*u_{tx} + u^2*u_{xx} + u_{xx}^2)",
        ],
    ];
    for (lam, want) in KDV.iter().zip(want) {
        let law = law_homotopy1(sys, &ms(sys, lam)).unwrap();
        assert_eq!(law.fluxes, exs(sys, &want), "Lambda = {lam}");
    }
    pass(3, "KdV homotopy1: I^(t), I^(x) and all four laws exact");
}

#[test]
fn criterion_4_kdv_homotopy2() {
    let p = load("kdv.json");
    let sys = &p.system;
    for lam in KDV {
        let m = ms(sys, lam);
        let h1 = law_homotopy1(sys, &m).unwrap();
        let h2 = flux_homotopy2(sys, &m, &[DiffExpr::zero()]).unwrap();
        assert_eq!(h1.fluxes, h2.fluxes, "Lambda = {lam}");
    }
    let at_x = flux_homotopy2(sys, &ms(sys, "u"), &[ex(sys, "x")]).unwrap();
    assert_eq!(
        at_x.fluxes,
        exs(
            sys,
            &[
                "t*x^2 + (1/2)*(u^2 - x^2)",
                "(1/2) - (1/3)*x^3 + (1/3)*u^3 - (1/2)*u_{x}^2 + u*u_{xx}"
            ]
        )
    );
    let u = [ex(sys, "u")];
    assert_eq!(
        base_point_fluxes(sys, &u, &[DiffExpr::zero()]).unwrap(),
        exs(sys, &["0", "0"])
    );
    assert_eq!(
        base_point_fluxes(sys, &u, &[ex(sys, "x")]).unwrap(),
        exs(sys, &["t*x^2", "0"])
    );
    let (code, out, _) = conslaw(&[
        "fluxes",
        &path_str("kdv.json"),
        "--method",
        "homotopy2",
        "--base-point",
        "u=x",
    ]);
    assert_eq!(code, 0);
    assert!(
        out.contains("Phi^t = t*x^2 - (1/2)*x^2 + (1/2)*u^2"),
        "{out}"
    );
    pass(
        4,
        "KdV homotopy2: U~=0 equals homotopy1; U~=x display; base-point fluxes",
    );
}

#[test]
fn criterion_5_kdv_scaling() {
    let p = load("kdv.json");
    let sys = &p.system;
    let sym = ScalingSymmetry::new(vec![q_int(3), q_int(1)], vec![q_int(-2)]);
    let (law, _) = flux_scaling(sys, &ms(sys, "u"), &sym).unwrap();
    assert_eq!(law.fluxes[0], ex(sys, "(2*u + 3*t*u_{t} + x*u_{x})*u"));
    for lam in KDV {
        let (law, _) = flux_scaling(sys, &ms(sys, lam), &sym).unwrap();
        let reduced = sys.reduce_on_solutions(&divergence(&law.fluxes)).unwrap();
        assert!(reduced.is_zero(), "Lambda = {lam}");
    }
    let (code, out, _) = conslaw(&[
        "fluxes",
        &path_str("kdv.json"),
        "--method",
        "scaling",
        "--weights",
        "x=1,t=3,u=-2",
    ]);
    assert_eq!(code, 0);
    assert!(
        out.contains("Phi^t = 3*t*u*u_{t} + x*u*u_{x} + 2*u^2"),
        "{out}"
    );
    pass(
        5,
        "KdV scaling: Lambda = U density exact; all four conserved on solutions",
    );
}

#[test]
fn criterion_6_g_equation() {
    let p = load("gequation.json");
    let sys = &p.system;
    let lam1 = &p.multipliers[0];
    assert!(matches!(
        law_homotopy1(sys, lam1),
        Err(FluxError::DivergentIntegral(_))
    ));
    assert!(matches!(
        flux_homotopy2(sys, lam1, &[DiffExpr::zero()]),
        Err(FluxError::DivergentIntegral(_))
    ));
    let (x1, x2) = (&p.scalings[0], &p.scalings[1]);
    let w1 = scaling_weights(sys, lam1, x1).unwrap();
    let w2 = scaling_weights(sys, lam1, x2).unwrap();
    assert_eq!(w1.chi_value(), Some(q_int(0)));
    assert!(w1.is_critical());
    assert_eq!(w2.chi_value(), Some(q_int(2)));
    assert!(!w2.is_critical());
    let (law2, _) = flux_scaling(sys, lam1, x2).unwrap();
    assert!(verify_on_solutions(sys, &law2).unwrap().passed());
    let (law1, _) = flux_scaling(sys, lam1, x1).unwrap();
    assert!(law1.is_critical());
    pass(
        6,
        "G-equation: homotopy1/2 diverge; chi 0 (critical) and 2; X2 law conserved",
    );
}

fn odd_rational(rng: &mut ChaCha8Rng) -> Q {
    let n = 2 * rng.gen_range(-4i64..4) + 1;
    let d = 2 * rng.gen_range(0i64..3) + 1;
    Q::new(n.into(), d.into())
}

fn poly(sys: &PdeSystem, rng: &mut ChaCha8Rng, jet: bool) -> DiffExpr {
    const ATOMS: [&str; 7] = ["t", "x", "u", "u_{t}", "u_{x}", "u_{xx}", "u_{tx}"];
    const JETS: [&str; 5] = ["u", "u_{t}", "u_{x}", "u_{xx}", "u_{tx}"];
    let terms: Vec<String> = (0..rng.gen_range(1..=3))
        .map(|_| {
            let mut f = vec![format!("({})", odd_rational(rng))];
            if jet {
                f.push(JETS.choose(rng).unwrap().to_string());
            }
            for _ in 0..rng.gen_range(0..=2) {
                f.push(ATOMS.choose(rng).unwrap().to_string());
            }
            f.join("*")
        })
        .collect();
    ex(sys, &terms.join(" + "))
}

fn eval_at(e: &DiffExpr, values: &mut BTreeMap<Atom, Q>, rng: &mut ChaCha8Rng) -> Option<Q> {
    evaluate(e, &mut |a: &Atom| {
        Some(
            values
                .entry(a.clone())
                .or_insert_with(|| odd_rational(rng))
                .clone(),
        )
    })
}

#[test]
fn criterion_7_property_suites() {
    let kdv = load("kdv.json").system;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..200 {
        let f = divergence(&[poly(&kdv, &mut rng, false), poly(&kdv, &mut rng, false)]);
        assert!(euler_annihilation(&f, 1));
    }
    for _ in 0..100 {
        let f = divergence(&[poly(&kdv, &mut rng, true), poly(&kdv, &mut rng, true)]);
        assert_eq!(divergence(&flux_homotopy1(&f, 2, 1).unwrap()), f);
    }
    for _ in 0..50 {
        let f = &ex(&kdv, "u_{t}") + &poly(&kdv, &mut rng, true);
        let (v, w) = (poly(&kdv, &mut rng, false), poly(&kdv, &mut rng, false));
        let mut lv = DiffExpr::zero();
        let mut lstar = DiffExpr::zero();
        for j in f.jets() {
            let d = partial(&f, &Atom::Jet(j.clone()));
            lv = lv + &d * &total_derivative_multi(&v, &j.index);
            let term = total_derivative_multi(&(&d * &w), &j.index);
            lstar = if j.order() % 2 == 1 {
                lstar - term
            } else {
                lstar + term
            };
        }
        let lhs = &(&w * &lv) - &(&v * &lstar);
        let s: Vec<DiffExpr> = (0..2)
            .map(|i| {
                bilinear_s(
                    std::slice::from_ref(&v),
                    std::slice::from_ref(&w),
                    std::slice::from_ref(&f),
                    i,
                    None,
                )
                .unwrap()
            })
            .collect();
        let rhs = divergence(&s);
        assert_eq!(lhs, rhs);
        for _ in 0..30 {
            let mut values = BTreeMap::new();
            assert_eq!(
                eval_at(&lhs, &mut values, &mut rng),
                eval_at(&rhs, &mut values, &mut rng)
            );
        }
    }
    let g = load("gequation.json").system;
    const PIECES: [&str; 6] = [
        "g_{x}",
        "g_{y}^(-3)",
        "s(g_{x}^2 + g_{y}^2)",
        "H(g_{x}, g_{y})",
        "(t - y)",
        "g_{xy}",
    ];
    for _ in 0..200 {
        let src: Vec<String> = (0..rng.gen_range(1..=3))
            .map(|_| {
                let mut f = vec![format!("({})", odd_rational(&mut rng))];
                for _ in 0..rng.gen_range(1..=3) {
                    f.push(PIECES.choose(&mut rng).unwrap().to_string());
                }
                f.join("*")
            })
            .collect();
        let e = total_derivative(&ex(&g, &src.join(" - ")), rng.gen_range(0..3));
        assert_eq!(ex(&g, &render(&g.vars, &e)), e);
    }
    pass(
        7,
        "properties: 200 divergences, 100 inversions, 50x30 bilinear identities, 200 round trips",
    );
}

#[test]
fn criterion_8_failure_modes_and_exit_codes() {
    let kdv = load("kdv.json").system;
    assert!(matches!(
        flux_homotopy1(&ex(&kdv, "1 + u_{x}"), 2, 1),
        Err(FluxError::NonvanishingAtZero(_))
    ));
    let wave = load("wave.json").system;
    assert!(matches!(
        law_homotopy1(&wave, &ms(&wave, "1")),
        Err(FluxError::ArbitraryFunctionPresent(_))
    ));
    assert!(matches!(
        flux_homotopy2(&wave, &ms(&wave, "1"), &[DiffExpr::zero()]),
        Err(FluxError::ArbitraryFunctionPresent(_))
    ));
    let err =
        parse_problem("independents: t, x\ndependents: u\nequation: u_{t} = u_{tx}\n").unwrap_err();
    assert!(matches!(
        err,
        ParseError::Problem(ProblemError::NotSolvedForm { .. })
    ));

    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, body: &str| {
        let path = dir.path().join(name);
        std::fs::write(&path, body).unwrap();
        path.display().to_string()
    };
    let bad = write(
        "bad.conslaw",
        "independents: x\ndependents: u\nequation: u_{x} + u = 0\n",
    );
    let empty = write(
        "empty.conslaw",
        "independents: t, x\ndependents: u\nequation: u_{t} = u_{x}^2\nansatz: deps = t, x; degree = 1\n",
    );
    let wrong = write(
        "wrong.conslaw",
        "independents: t, x\ndependents: u\nequation: u_{t} = -u*u_{x} - u_{xxx}\nlaw: multiplier = u; fluxes = (1/2)*u^2, 0\n",
    );
    let kdv_file = path_str("kdv.json");
    let g_file = path_str("gequation.json");
    let cases: [(&[&str], i32); 5] = [
        (&["multipliers", &kdv_file], 0),
        (&["multipliers", &bad], 2),
        (&["multipliers", &empty], 3),
        (&["fluxes", &g_file, "--method", "homotopy1", "--json"], 4),
        (&["verify", &wrong], 5),
    ];
    for (args, want) in cases {
        let (code, _, stderr) = conslaw(args);
        assert_eq!(code, want, "{args:?}: {stderr}");
    }
    let (_, _, stderr) = conslaw(&["fluxes", &g_file, "--method", "homotopy1", "--json"]);
    let first: serde_json::Value = serde_json::from_str(stderr.lines().next().unwrap()).unwrap();
    assert_eq!(first["kind"], "DivergentIntegral");
    pass(8, "failure modes: NonvanishingAtZero, ArbitraryFunctionPresent, solved form; exit codes 0/2/3/4/5");
}
