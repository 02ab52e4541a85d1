#![allow(dead_code)]

use std::collections::BTreeMap;

use conslaw_core::expr::{evaluate, Atom};
use conslaw_core::parse::{parse_expression, parse_problem, Problem, Scope};
use conslaw_core::problem::PdeSystem;
use conslaw_core::{DiffExpr, Q};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn problem_path(name: &str) -> String {
    format!("{}/../../problems/{name}", env!("CARGO_MANIFEST_DIR"))
}

pub fn load(name: &str) -> Problem {
    let src = std::fs::read_to_string(problem_path(name)).expect("problem file");
    parse_problem(&src).expect("problem parses")
}

pub fn ex(sys: &PdeSystem, src: &str) -> DiffExpr {
    parse_expression(src, &Scope::new(&sys.vars, &sys.functions)).expect("expression parses")
}

pub fn exs(sys: &PdeSystem, srcs: &[&str]) -> Vec<DiffExpr> {
    srcs.iter().map(|s| ex(sys, s)).collect()
}

/// Small odd rational, never zero.
pub fn odd_rational(rng: &mut ChaCha8Rng) -> Q {
    let n = 2 * rng.gen_range(-4i64..4) + 1;
    let d = 2 * rng.gen_range(0i64..3) + 1;
    Q::new(n.into(), d.into())
}

/// Random point in jet space; atoms get values on first use.
pub struct JetPoint {
    values: BTreeMap<Atom, Q>,
}

impl JetPoint {
    pub fn new() -> Self {
        Self {
            values: BTreeMap::new(),
        }
    }

    pub fn eval(&mut self, e: &DiffExpr, rng: &mut ChaCha8Rng) -> Option<Q> {
        let values = &mut self.values;
        evaluate(e, &mut |a: &Atom| {
            Some(
                values
                    .entry(a.clone())
                    .or_insert_with(|| odd_rational(rng))
                    .clone(),
            )
        })
    }
}
