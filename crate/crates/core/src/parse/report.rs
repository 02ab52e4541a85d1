//! Deterministic JSON and LaTeX reports.

use std::collections::BTreeMap;

use serde::Serialize;

use super::render::{latex, render};
use crate::flux::{Assumption, ConservationLaw, ScalingSymmetry, WeightReport};
use crate::problem::Variables;
use crate::solver::MultiplierSet;

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct MultiplierEntry {
    pub components: Vec<String>,
    pub latex: Vec<String>,
}

impl MultiplierEntry {
    pub fn new(vars: &Variables, ms: &MultiplierSet) -> Self {
        Self {
            components: ms.components.iter().map(|c| render(vars, c)).collect(),
            latex: ms.components.iter().map(|c| latex(vars, c)).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LawEntry {
    /// Index into the report's multipliers; `None` for symmetry pairs.
    pub multiplier: Option<usize>,
    pub method: String,
    pub fluxes: Vec<String>,
    pub fluxes_latex: Vec<String>,
    pub status: String,
    pub assumptions: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub triviality: Option<String>,
}

impl LawEntry {
    pub fn new(vars: &Variables, multiplier: Option<usize>, law: &ConservationLaw) -> Self {
        Self {
            multiplier,
            method: law.method.name().into(),
            fluxes: law.fluxes.iter().map(|f| render(vars, f)).collect(),
            fluxes_latex: law.fluxes.iter().map(|f| latex(vars, f)).collect(),
            status: law.status.name().into(),
            assumptions: law
                .assumptions
                .iter()
                .map(|a| assumption_text(vars, a))
                .collect(),
            triviality: None,
        }
    }
}

pub fn assumption_text(vars: &Variables, a: &Assumption) -> String {
    match a {
        Assumption::NonzeroDenominator(m) => {
            let e = crate::expr::DiffExpr::term(crate::expr::q_int(1), m.clone());
            format!("{} != 0", render(vars, &e))
        }
        Assumption::BasePoint(base) => {
            let parts: Vec<String> = vars
                .dependents
                .iter()
                .zip(base)
                .map(|(d, b)| format!("{d} = {}", render(vars, b)))
                .collect();
            format!("base point {}", parts.join(", "))
        }
        Assumption::Critical => "critical scaling: fluxes expected trivial".into(),
        Assumption::IndependentFunctions => "arbitrary functions treated as independent".into(),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WeightEntry {
    pub multiplier: usize,
    pub r: Vec<String>,
    pub s: Vec<Option<String>>,
    pub chi: Vec<Option<String>>,
    pub critical: bool,
}

impl WeightEntry {
    pub fn new(multiplier: usize, w: &WeightReport) -> Self {
        let text = |v: &Option<crate::Q>| v.as_ref().map(|q| q.to_string());
        Self {
            multiplier,
            r: w.r.iter().map(|q| q.to_string()).collect(),
            s: w.s.iter().map(text).collect(),
            chi: w.chi.iter().map(text).collect(),
            critical: w.is_critical(),
        }
    }
}

/// Label of a scaling symmetry, e.g. `t=3, x=1, u=-2`.
pub fn symmetry_label(vars: &Variables, sym: &ScalingSymmetry) -> String {
    vars.independents
        .iter()
        .zip(&sym.p)
        .chain(vars.dependents.iter().zip(&sym.q))
        .map(|(n, w)| format!("{n}={w}"))
        .collect::<Vec<_>>()
        .join(", ")
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub multiplier: Option<usize>,
    pub method: String,
    pub kind: String,
    pub message: String,
}

/// Cross-method check for one multiplier: every law produced for it is
/// conserved on solutions.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Agreement {
    pub multiplier: usize,
    pub methods: Vec<String>,
    pub on_solutions: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Report {
    pub multipliers: Vec<MultiplierEntry>,
    pub laws: Vec<LawEntry>,
    /// Keyed by scaling symmetry label.
    pub weights: BTreeMap<String, Vec<WeightEntry>>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub agreement: Vec<Agreement>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<Diagnostic>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl Report {
    pub fn add_weights(&mut self, vars: &Variables, sym: &ScalingSymmetry, entry: WeightEntry) {
        self.weights
            .entry(symmetry_label(vars, sym))
            .or_default()
            .push(entry);
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// A LaTeX fragment listing multipliers and fluxes.
    pub fn to_latex(&self) -> String {
        let mut out = String::new();
        for (k, m) in self.multipliers.iter().enumerate() {
            out.push_str(&format!(
                "\\Lambda_{{{}}} = \\left({}\\right)\\\\\n",
                k + 1,
                m.latex.join(",\\ ")
            ));
        }
        for law in &self.laws {
            let tag = match law.multiplier {
                Some(k) => format!("{}, \\Lambda_{{{}}}", law.method, k + 1),
                None => law.method.clone(),
            };
            for (i, f) in law.fluxes_latex.iter().enumerate() {
                out.push_str(&format!(
                    "\\Phi^{{{}}}_{{\\mathrm{{{tag}}}}} = {f}\\\\\n",
                    i + 1
                ));
            }
        }
        out
    }
}
