mod common;

use common::{ex, exs, load, problem_path};
use conslaw_core::expr::q_int;
use conslaw_core::flux::{law_homotopy1, Method};
use conslaw_core::parse::{
    parse_base_point, parse_deps, parse_problem, parse_weights, LawEntry, MultiplierEntry,
    ParseError, Report,
};
use conslaw_core::problem::AnsatzSpec;
use conslaw_core::solver::MultiplierSet;
use conslaw_core::ProblemError;

#[test]
fn kdv_json_and_dsl_agree() {
    let a = load("kdv.json");
    let b = load("kdv.conslaw");
    assert_eq!(a.system.vars, b.system.vars);
    assert_eq!(a.system.equations, b.system.equations);
    assert_eq!(a.ansatz, b.ansatz);
    assert_eq!(a.methods, b.methods);
    assert_eq!(a.scalings, b.scalings);
    assert_eq!(a.system.equations.len(), 1);
    assert_eq!(
        a.system.residuals(),
        exs(&a.system, &["u_{t} + u*u_{x} + u_{xxx}"])
    );
    assert_eq!(a.methods, vec![Method::Homotopy1]);
}

#[test]
fn wave_and_g_files_parse() {
    let w = load("wave.json");
    assert_eq!(w.system.vars.independents, vec!["x", "t"]);
    assert!(w.system.function("c").is_some() && w.system.function("C").is_some());
    let g = load("gequation.json");
    assert_eq!(g.multipliers.len(), 2);
    assert_eq!(g.scalings.len(), 2);
}

#[test]
fn rejects_equations_not_in_solved_form() {
    let err = parse_problem("independents: t, x\ndependents: u\nequation: u_{t} + u_{xxx} = 0\n")
        .unwrap_err();
    assert!(matches!(err, ParseError::Schema { line: 3, .. }), "{err}");
    assert!(err.to_string().contains("not in solved form"));
    let err =
        parse_problem("independents: t, x\ndependents: u\nequation: u_{t} = u_{tx}\n").unwrap_err();
    assert!(
        matches!(err, ParseError::Problem(ProblemError::NotSolvedForm { .. })),
        "{err}"
    );
}

#[test]
fn reports_positions_of_errors() {
    let err =
        parse_problem("independents: t, x\ndependents: u\nequation: u_{t} = v*u\n").unwrap_err();
    assert!(
        matches!(err, ParseError::Undeclared { ref name, line: 3, .. } if name == "v"),
        "{err}"
    );
    let err =
        parse_problem("independents: t, x\ndependents: u\nequation: u_{t} = (u\n").unwrap_err();
    assert!(matches!(err, ParseError::Syntax { line: 3, .. }), "{err}");
    assert!(matches!(
        parse_problem("{ \"independents\": 3 }"),
        Err(ParseError::Json(_))
    ));
}

#[test]
fn command_line_fragments() {
    let p = load("kdv.json");
    let sys = &p.system;
    let atoms = parse_deps(sys, "t,x,u,u_x,u_xx").unwrap();
    assert_eq!(Some(AnsatzSpec::new(atoms, Some(2), None)), p.ansatz);
    let w = parse_weights(&sys.vars, "x=1,t=3,u=-2").unwrap();
    assert_eq!(w.p, vec![q_int(3), q_int(1)]);
    assert_eq!(w.q, vec![q_int(-2)]);
    assert_eq!(parse_base_point(sys, "u=x").unwrap(), vec![ex(sys, "x")]);
    assert!(parse_weights(&sys.vars, "z=1").is_err());
    assert!(parse_deps(sys, "u_q").is_err());
}

#[test]
fn kdv_report_renders_plain_and_latex() {
    let p = load("kdv.json");
    let vars = &p.system.vars;
    let ms = MultiplierSet::new(vec![ex(&p.system, "u")]);
    let law = law_homotopy1(&p.system, &ms).unwrap();
    let report = Report {
        multipliers: vec![MultiplierEntry::new(vars, &ms)],
        laws: vec![LawEntry::new(vars, Some(0), &law)],
        ..Report::default()
    };
    let json = report.to_json();
    assert!(json.contains("(1/2)*u^2"), "{json}");
    assert!(
        report.to_latex().contains("\\tfrac{1}{2}u^{2}"),
        "{}",
        report.to_latex()
    );
    assert_eq!(json, report.clone().to_json());
    let value: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(value["laws"][0]["status"], "characteristic-identity");
}

#[test]
fn empty_report_is_valid_json() {
    let json = Report::default().to_json();
    let value: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(value["multipliers"].as_array().unwrap().len(), 0);
    assert_eq!(value["laws"].as_array().unwrap().len(), 0);
}

#[test]
fn problem_path_points_at_the_examples() {
    assert!(std::path::Path::new(&problem_path("kdv.json")).exists());
}

#[test]
fn every_dsl_section_parses() {
    let src = "\
independents: t, x
dependents: u
function c(a): arbitrary
function C(a): antiderivative c(a)^2
function s(a): root 2
equation: u_{t} = -u*u_{x} - u_tx*0 - diff(u, x, x, x)   # comment
ansatz: deps = t, x, u, u_{x}, u_{xx}; degree = 2
flux_ansatz: degree = 4
methods: homotopy1, scaling
scaling: x = 1, t = 3, u = -2
base_point: u = x
multiplier: u
pair: eta = u_{x}; omega = u
law: multiplier = u; fluxes = (1/2)*u^2, (1/3)*u^3 - (1/2)*u_{x}^2 + u*u_{xx}
max_sweeps: 16
";
    let p = parse_problem(src).unwrap();
    assert_eq!(p.system.residuals(), exs(&p.system, &["u_{t} + u*u_{x} + u_{xxx}"]));
    assert_eq!(p.methods, vec![Method::Homotopy1, Method::Scaling]);
    assert_eq!(p.flux_ansatz.degree, Some(4));
    assert_eq!(p.base_point, Some(vec![ex(&p.system, "x")]));
    assert_eq!(p.pairs.len(), 1);
    assert_eq!(p.laws.len(), 1);
    assert!(p.laws[0].0.is_some());
    assert_eq!(p.system.max_sweeps, Some(16));
}
