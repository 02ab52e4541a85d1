mod common;

use std::collections::BTreeSet;

use common::{ex, load, JetPoint};
use conslaw_core::expr::{euler, partial, q_int, Atom, Jet, MultiIndex};
use conslaw_core::linalg::{nullspace, LinearSystem};
use conslaw_core::parse::{parse_deps, parse_problem};
use conslaw_core::problem::{enumerate_monomials, generate_ansatz, AnsatzSpec, PdeSystem};
use conslaw_core::solver::{characteristic_form, determining_columns, solve_multipliers};
use conslaw_core::DiffExpr;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn basis(sys: &PdeSystem, spec: &AnsatzSpec) -> Vec<DiffExpr> {
    let ansatz = generate_ansatz(sys, spec).unwrap();
    solve_multipliers(sys, &ansatz)
        .unwrap()
        .multipliers
        .into_iter()
        .map(|m| m.components[0].clone())
        .collect()
}

/// True when `got` and `want` span the same space: the combined list has the
/// rank of each.
fn same_span(got: &[DiffExpr], want: &[DiffExpr]) -> bool {
    let rank = |es: &[DiffExpr]| {
        let monos: Vec<_> = es
            .iter()
            .flat_map(|e| e.terms().map(|(m, _)| m.clone()))
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let mut sys = LinearSystem::new(es.len());
        for m in &monos {
            let row = es
                .iter()
                .enumerate()
                .filter_map(|(k, e)| {
                    e.terms()
                        .find(|(mm, _)| *mm == m)
                        .map(|(_, c)| (k, c.clone()))
                })
                .collect();
            sys.push(row, String::new());
        }
        es.len() - nullspace(&sys).len()
    };
    let both: Vec<DiffExpr> = got.iter().chain(want).cloned().collect();
    rank(got) == got.len()
        && rank(want) == want.len()
        && rank(&both) == got.len()
        && got.len() == want.len()
}

#[test]
fn kdv_degree_two_basis_is_the_four_known_multipliers() {
    let p = load("kdv.json");
    let got = basis(&p.system, p.ansatz.as_ref().unwrap());
    assert_eq!(got.len(), 4);
    let want: BTreeSet<DiffExpr> = ["1", "u", "x - t*u", "(1/2)*u^2 + u_{xx}"]
        .iter()
        .map(|s| ex(&p.system, s))
        .collect();
    assert_eq!(got.into_iter().collect::<BTreeSet<_>>(), want);
}

#[test]
fn kdv_degree_zero_gives_the_constant() {
    let p = load("kdv.json");
    let atoms = parse_deps(&p.system, "t,x,u,u_x,u_xx").unwrap();
    let got = basis(&p.system, &AnsatzSpec::new(atoms, Some(0), None));
    assert_eq!(got, vec![DiffExpr::one()]);
}

#[test]
fn kdv_ansatz_contents_and_leading_derivative_filter() {
    let p = load("kdv.json");
    let ansatz = generate_ansatz(&p.system, p.ansatz.as_ref().unwrap()).unwrap();
    let monos: Vec<DiffExpr> = ansatz
        .columns
        .iter()
        .map(|(_, m)| DiffExpr::term(q_int(1), m.clone()))
        .collect();
    for s in ["u", "x", "t*u", "u^2", "u_{xx}"] {
        assert!(monos.contains(&ex(&p.system, s)), "{s}");
    }
    let atoms = parse_deps(&p.system, "t,x,u,u_t,u_x").unwrap();
    let ansatz = generate_ansatz(&p.system, &AnsatzSpec::new(atoms, Some(2), None)).unwrap();
    assert_eq!(ansatz.warnings.len(), 1);
    let ut = Atom::Jet(Jet::new(0, MultiIndex::single(0)));
    assert!(ansatz.columns.iter().all(|(_, m)| m.exponent(&ut) == 0));
}

#[test]
fn wave_ansatz_has_twenty_seven_monomials() {
    let p = load("wave.json");
    let spec = p.ansatz.as_ref().unwrap();
    let ansatz = generate_ansatz(&p.system, spec).unwrap();
    let mut oracle = BTreeSet::new();
    for a in 0..=2 {
        for b in 0..=2 {
            for c in 0..=2 {
                oracle.insert(ex(&p.system, &format!("x^{a}*t^{b}*u^{c}")));
            }
        }
    }
    let got: BTreeSet<DiffExpr> = ansatz
        .columns
        .iter()
        .map(|(_, m)| DiffExpr::term(q_int(1), m.clone()))
        .collect();
    assert_eq!(ansatz.len(), 27);
    assert_eq!(got, oracle);
    assert_eq!(enumerate_monomials(&spec.atoms, None, Some(2)).len(), 27);
}

#[test]
fn wave_basis_is_one_x_t_xt() {
    let p = load("wave.json");
    let got = basis(&p.system, p.ansatz.as_ref().unwrap());
    let want: BTreeSet<DiffExpr> = ["1", "x", "t", "x*t"]
        .iter()
        .map(|s| ex(&p.system, s))
        .collect();
    assert_eq!(got.into_iter().collect::<BTreeSet<_>>(), want);
}

/// `E_U(Lambda(x,U) U_x) = -Lambda_x` by hand, so the multipliers are the
/// ansatz monomials free of `x`.
#[test]
fn first_order_toy_forces_x_independence() {
    let p = parse_problem(
        "independents: x\ndependents: u\nequation: u_{x} = 0\nansatz: deps = x, u; degree = 2\n",
    )
    .unwrap();
    let got = basis(&p.system, p.ansatz.as_ref().unwrap());
    let want: Vec<DiffExpr> = ["1", "u", "u^2"].iter().map(|s| ex(&p.system, s)).collect();
    assert!(same_span(&got, &want), "{got:?}");
}

/// For `Lambda(x, t)`, `E_U(Lambda (U_t - U_xx)) = -Lambda_t - Lambda_xx`.
#[test]
fn heat_equation_contains_one_and_x() {
    let p = parse_problem("independents: x, t\ndependents: u\nequation: u_{t} = u_{xx}\nansatz: deps = x, t, u; atom_degree = 1\n").unwrap();
    let sys = &p.system;
    let got = basis(sys, p.ansatz.as_ref().unwrap());
    let want: Vec<DiffExpr> = ["1", "x"].iter().map(|s| ex(sys, s)).collect();
    assert!(same_span(&got, &want), "{got:?}");
    let (x, t, u) = (Atom::Indep(0), Atom::Indep(1), Atom::Jet(Jet::base(0)));
    for lam in &got {
        assert!(partial(lam, &u).is_zero());
        let adjoint = &partial(lam, &t) + &partial(&partial(lam, &x), &x);
        assert!(adjoint.is_zero());
    }
}

/// Candidate multipliers found by evaluating the determining expressions at
/// random jet points span a space of the same dimension as the nullspace.
#[test]
fn kdv_nullspace_is_complete_within_the_ansatz() {
    let p = load("kdv.json");
    let ansatz = generate_ansatz(&p.system, p.ansatz.as_ref().unwrap()).unwrap();
    let columns = determining_columns(&p.system, &ansatz);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut sys = LinearSystem::new(columns.len());
    for _ in 0..50 {
        let mut point = JetPoint::new();
        let row = columns
            .iter()
            .enumerate()
            .map(|(k, col)| (k, point.eval(&col[0], &mut rng).unwrap()))
            .collect();
        sys.push(row, String::new());
    }
    assert_eq!(nullspace(&sys).len(), 4);
}

#[test]
fn scaled_multiplier_stays_a_multiplier() {
    let p = load("kdv.json");
    let lam = ex(&p.system, "(3/7)*((1/2)*u^2 + u_{xx})");
    assert!(euler(&characteristic_form(&p.system, &[lam]), 0).is_zero());
}
