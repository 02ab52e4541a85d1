//! Problem documents, as a line-based DSL or as JSON.
//!
//! ```text
//! independents: t, x
//! dependents: u
//! function c(a): arbitrary
//! function A(a): antiderivative c(a)^2
//! function s(a): root 2
//! equation: u_{t} = -u*u_{x} - u_{xxx}
//! ansatz: deps = t, x, u, u_{x}, u_{xx}; degree = 2
//! methods: homotopy1, scaling
//! scaling: x = 1, t = 3, u = -2
//! base_point: u = x
//! multiplier: u
//! law: multiplier = u; fluxes = (1/2)*u^2, (1/3)*u^3 - (1/2)*u_{x}^2 + u*u_{xx}
//! ```

use std::collections::{BTreeMap, HashMap};
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::expr::{parse_expression_at, Scope};
use super::ParseError;
use crate::error::ProblemError;
use crate::expr::{Atom, DiffExpr, FunctionDef, PowerRule, Q};
use crate::flux::{FluxAnsatzSpec, Method, ScalingSymmetry};
use crate::problem::{AnsatzSpec, Equation, PdeSystem, Variables};
use crate::solver::MultiplierSet;

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RawFunction {
    pub name: String,
    pub params: Vec<String>,
    /// `arbitrary`, `antiderivative`, `root` or `defined`.
    pub kind: String,
    pub integrand: Option<String>,
    pub degree: Option<u32>,
    pub derivatives: Vec<String>,
    pub power: Option<u32>,
    pub power_value: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RawAnsatz {
    pub deps: Vec<String>,
    pub degree: Option<u32>,
    pub atom_degree: Option<u32>,
    pub order: Option<u32>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RawPair {
    pub eta: Vec<String>,
    pub omega: Vec<String>,
}

/// A candidate law to verify; an empty multiplier means none is known.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RawLaw {
    pub multiplier: Vec<String>,
    pub fluxes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RawNumber {
    Int(i64),
    Text(String),
}

/// The document before name resolution; the JSON schema.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RawProblem {
    pub independents: Vec<String>,
    pub dependents: Vec<String>,
    pub functions: Vec<RawFunction>,
    /// `lhs = rhs`, with `lhs` a single jet.
    pub equations: Vec<String>,
    pub ansatz: Option<RawAnsatz>,
    pub flux_ansatz: Option<RawAnsatz>,
    pub methods: Vec<String>,
    pub scaling: Vec<BTreeMap<String, RawNumber>>,
    pub base_point: BTreeMap<String, String>,
    pub multipliers: Vec<Vec<String>>,
    pub pairs: Vec<RawPair>,
    pub laws: Vec<RawLaw>,
    pub max_sweeps: Option<usize>,
    #[serde(skip)]
    lines: HashMap<(&'static str, usize), usize>,
}

impl RawProblem {
    fn line(&self, section: &'static str, k: usize) -> usize {
        self.lines.get(&(section, k)).copied().unwrap_or(0)
    }
}

#[derive(Clone, Debug)]
pub struct Problem {
    pub system: PdeSystem,
    pub ansatz: Option<AnsatzSpec>,
    pub flux_ansatz: FluxAnsatzSpec,
    pub methods: Vec<Method>,
    pub scalings: Vec<ScalingSymmetry>,
    pub base_point: Option<Vec<DiffExpr>>,
    pub multipliers: Vec<MultiplierSet>,
    pub pairs: Vec<(Vec<DiffExpr>, Vec<DiffExpr>)>,
    pub laws: Vec<(Option<MultiplierSet>, Vec<DiffExpr>)>,
}

fn schema<T>(line: usize, msg: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError::Schema {
        line,
        msg: msg.into(),
    })
}

/// Splits at `sep` outside parentheses and braces; pieces are trimmed.
fn split_top(s: &str, sep: char) -> Vec<String> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut cur = String::new();
    for ch in s.chars() {
        match ch {
            '(' | '{' => depth += 1,
            ')' | '}' => depth -= 1,
            _ => {}
        }
        if ch == sep && depth == 0 {
            out.push(cur.trim().to_string());
            cur.clear();
        } else {
            cur.push(ch);
        }
    }
    out.push(cur.trim().to_string());
    out.retain(|p| !p.is_empty());
    out
}

fn key_value(s: &str, line: usize) -> Result<(String, String), ParseError> {
    match s.split_once('=') {
        Some((k, v)) => Ok((k.trim().to_string(), v.trim().to_string())),
        None => schema(line, format!("expected `name = value`, found `{s}`")),
    }
}

fn parse_u32(s: &str, line: usize) -> Result<u32, ParseError> {
    s.trim()
        .parse()
        .or_else(|_| schema(line, format!("expected a nonnegative integer, found `{s}`")))
}

fn parse_ansatz_line(v: &str, line: usize) -> Result<RawAnsatz, ParseError> {
    let mut a = RawAnsatz::default();
    for part in split_top(v, ';') {
        let (k, val) = key_value(&part, line)?;
        match k.as_str() {
            "deps" => a.deps = split_top(&val, ','),
            "degree" => a.degree = Some(parse_u32(&val, line)?),
            "atom_degree" => a.atom_degree = Some(parse_u32(&val, line)?),
            "order" => a.order = Some(parse_u32(&val, line)?),
            other => return schema(line, format!("unknown ansatz option `{other}`")),
        }
    }
    Ok(a)
}

fn parse_function_line(v: &str, line: usize) -> Result<RawFunction, ParseError> {
    let Some((head, body)) = v.split_once(':') else {
        return schema(line, "expected `function name(params): kind`");
    };
    let head = head.trim();
    let (Some(open), true) = (head.find('('), head.ends_with(')')) else {
        return schema(line, format!("malformed function head `{head}`"));
    };
    let mut f = RawFunction {
        name: head[..open].trim().to_string(),
        params: split_top(&head[open + 1..head.len() - 1], ','),
        ..RawFunction::default()
    };
    let mut parts = split_top(body, ';').into_iter();
    let kind = parts.next().unwrap_or_default();
    let (word, rest) = kind.split_once(char::is_whitespace).unwrap_or((&kind, ""));
    f.kind = word.to_string();
    match word {
        "arbitrary" | "defined" => {}
        "antiderivative" => f.integrand = Some(rest.trim().to_string()),
        "root" => f.degree = Some(parse_u32(rest, line)?),
        other => return schema(line, format!("unknown function kind `{other}`")),
    }
    for part in parts {
        let (k, val) = key_value(&part, line)?;
        if let Some(p) = k.strip_prefix("d/d") {
            if f.params.get(f.derivatives.len()).map(String::as_str) != Some(p.trim()) {
                return schema(
                    line,
                    format!("derivative rules must follow the parameter order, found d/d{p}"),
                );
            }
            f.derivatives.push(val);
        } else if let Some(p) = k.strip_prefix("power") {
            f.power = Some(parse_u32(p, line)?);
            f.power_value = Some(val);
        } else {
            return schema(line, format!("unknown function rule `{k}`"));
        }
    }
    Ok(f)
}

fn parse_dsl(src: &str) -> Result<RawProblem, ParseError> {
    let mut raw = RawProblem::default();
    for (k, text) in src.lines().enumerate() {
        let line = k + 1;
        let text = text.split('#').next().unwrap_or("").trim();
        if text.is_empty() {
            continue;
        }
        if let Some(rest) = text.strip_prefix("function ") {
            raw.lines.insert(("functions", raw.functions.len()), line);
            raw.functions.push(parse_function_line(rest, line)?);
            continue;
        }
        let Some((key, value)) = text.split_once(':') else {
            return schema(line, format!("expected `key: value`, found `{text}`"));
        };
        let value = value.trim();
        match key.trim() {
            "independents" => raw.independents.extend(split_top(value, ',')),
            "dependents" => raw.dependents.extend(split_top(value, ',')),
            "equation" | "equations" => {
                for eq in split_top(value, ';') {
                    raw.lines.insert(("equations", raw.equations.len()), line);
                    raw.equations.push(eq);
                }
            }
            "ansatz" => {
                raw.lines.insert(("ansatz", 0), line);
                raw.ansatz = Some(parse_ansatz_line(value, line)?);
            }
            "flux_ansatz" => {
                raw.lines.insert(("flux_ansatz", 0), line);
                raw.flux_ansatz = Some(parse_ansatz_line(value, line)?);
            }
            "methods" | "method" => raw.methods.extend(split_top(value, ',')),
            "scaling" => {
                let mut w = BTreeMap::new();
                for part in split_top(value, ',') {
                    let (k, v) = key_value(&part, line)?;
                    w.insert(k, RawNumber::Text(v));
                }
                raw.lines.insert(("scaling", raw.scaling.len()), line);
                raw.scaling.push(w);
            }
            "base_point" => {
                raw.lines.insert(("base_point", 0), line);
                for part in split_top(value, ',') {
                    let (k, v) = key_value(&part, line)?;
                    raw.base_point.insert(k, v);
                }
            }
            "multiplier" => {
                raw.lines
                    .insert(("multipliers", raw.multipliers.len()), line);
                raw.multipliers.push(split_top(value, ';'));
            }
            "pair" => {
                let mut p = RawPair::default();
                for part in split_top(value, ';') {
                    let (k, v) = key_value(&part, line)?;
                    match k.as_str() {
                        "eta" => p.eta = split_top(&v, ','),
                        "omega" => p.omega = split_top(&v, ','),
                        other => return schema(line, format!("unknown pair component `{other}`")),
                    }
                }
                raw.lines.insert(("pairs", raw.pairs.len()), line);
                raw.pairs.push(p);
            }
            "law" => {
                let mut l = RawLaw::default();
                for part in split_top(value, ';') {
                    let (k, v) = key_value(&part, line)?;
                    match k.as_str() {
                        "multiplier" => l.multiplier = split_top(&v, ','),
                        "fluxes" => l.fluxes = split_top(&v, ','),
                        other => return schema(line, format!("unknown law component `{other}`")),
                    }
                }
                raw.lines.insert(("laws", raw.laws.len()), line);
                raw.laws.push(l);
            }
            "max_sweeps" => raw.max_sweeps = Some(parse_u32(value, line)? as usize),
            other => return schema(line, format!("unknown section `{other}`")),
        }
    }
    Ok(raw)
}

fn expr_at(src: &str, scope: &Scope<'_>, line: usize) -> Result<DiffExpr, ParseError> {
    parse_expression_at(src, scope, line.max(1))
}

fn build_functions(
    raw: &RawProblem,
    vars: &Variables,
) -> Result<Vec<Arc<FunctionDef>>, ParseError> {
    let mut defs: Vec<Arc<FunctionDef>> = Vec::new();
    for (k, f) in raw.functions.iter().enumerate() {
        let line = raw.line("functions", k);
        let params: Vec<&str> = f.params.iter().map(String::as_str).collect();
        let unary = |what: &str| {
            if params.len() == 1 {
                Ok(())
            } else {
                schema(
                    line,
                    format!("{what} `{}` must take exactly one parameter", f.name),
                )
            }
        };
        let def = match f.kind.as_str() {
            "arbitrary" => FunctionDef::arbitrary(&f.name, &params),
            "antiderivative" => {
                unary("antiderivative")?;
                let Some(src) = &f.integrand else {
                    return schema(
                        line,
                        format!("antiderivative `{}` needs an integrand", f.name),
                    );
                };
                let scope = Scope::template(vars, &defs, &f.params, None);
                FunctionDef::antiderivative(&f.name, params[0], expr_at(src, &scope, line)?)?
            }
            "root" => {
                unary("root")?;
                match f.degree {
                    Some(d) if d >= 2 => FunctionDef::root(&f.name, params[0], d),
                    _ => {
                        return schema(
                            line,
                            format!("root `{}` needs a degree of at least 2", f.name),
                        )
                    }
                }
            }
            "defined" => {
                let scope = Scope::template(vars, &defs, &f.params, Some(&f.name));
                let derivatives = f
                    .derivatives
                    .iter()
                    .map(|d| expr_at(d, &scope, line))
                    .collect::<Result<Vec<_>, _>>()?;
                let power_rule = match (f.power, &f.power_value) {
                    (Some(power), Some(v)) => {
                        let plain = Scope::template(vars, &defs, &f.params, None);
                        Some(PowerRule {
                            power,
                            value: expr_at(v, &plain, line)?,
                        })
                    }
                    (None, None) => None,
                    _ => return schema(line, "a power rule needs both an exponent and a value"),
                };
                FunctionDef::defined(&f.name, &params, derivatives, power_rule)?
            }
            other => return schema(line, format!("unknown function kind `{other}`")),
        };
        defs.push(def);
    }
    Ok(defs)
}

fn check_names(raw: &RawProblem) -> Result<(), ParseError> {
    let mut seen: Vec<&str> = Vec::new();
    let names = raw
        .independents
        .iter()
        .chain(&raw.dependents)
        .chain(raw.functions.iter().map(|f| &f.name));
    for name in names {
        let ok = name.chars().next().is_some_and(|c| c.is_ascii_alphabetic())
            && name.chars().all(|c| c.is_ascii_alphanumeric())
            && !matches!(name.as_str(), "diff" | "lambda");
        if !ok {
            return schema(0, format!("invalid name `{name}`"));
        }
        if seen.contains(&name.as_str()) {
            return schema(0, format!("`{name}` is declared twice"));
        }
        seen.push(name);
    }
    Ok(())
}

fn build_ansatz_atoms(
    raw: &RawAnsatz,
    scope: &Scope<'_>,
    line: usize,
) -> Result<Vec<Atom>, ParseError> {
    raw.deps
        .iter()
        .map(|d| {
            let e = expr_at(d, scope, line)?;
            match e.as_single_term() {
                Some((m, c)) if e.num_terms() == 1 && c == &Q::from_integer(1.into()) => {
                    let mut f = m.factors();
                    match (f.next(), f.next()) {
                        (Some((a, 1)), None) => Ok(a.clone()),
                        _ => schema(
                            line,
                            format!("ansatz dependence `{d}` is not a single variable"),
                        ),
                    }
                }
                _ => schema(
                    line,
                    format!("ansatz dependence `{d}` is not a single variable"),
                ),
            }
        })
        .collect()
}

/// Ansatz dependence such as `t,x,u,u_x,u_xx`.
pub fn parse_deps(sys: &PdeSystem, src: &str) -> Result<Vec<Atom>, ParseError> {
    let raw = RawAnsatz {
        deps: split_top(src, ','),
        ..RawAnsatz::default()
    };
    build_ansatz_atoms(&raw, &Scope::new(&sys.vars, &sys.functions), 1)
}

fn parse_rational(s: &str, line: usize) -> Result<Q, ParseError> {
    Q::from_str(s.trim())
        .or_else(|_| schema(line, format!("expected a rational number, found `{s}`")))
}

fn build_scaling(
    vars: &Variables,
    w: &BTreeMap<String, RawNumber>,
    line: usize,
) -> Result<ScalingSymmetry, ParseError> {
    let mut p = vec![Q::from_integer(0.into()); vars.n()];
    let mut q = vec![Q::from_integer(0.into()); vars.m()];
    for (name, value) in w {
        let value = match value {
            RawNumber::Int(i) => Q::from_integer((*i).into()),
            RawNumber::Text(s) => parse_rational(s, line)?,
        };
        if let Some(i) = vars.independents.iter().position(|x| x == name) {
            p[i] = value;
        } else if let Some(j) = vars.dependents.iter().position(|x| x == name) {
            q[j] = value;
        } else {
            return Err(ParseError::Undeclared {
                name: name.clone(),
                line,
                col: 0,
            });
        }
    }
    Ok(ScalingSymmetry::new(p, q))
}

/// Weights such as `x=1,t=3,u=-2`; unnamed variables get weight 0.
pub fn parse_weights(vars: &Variables, src: &str) -> Result<ScalingSymmetry, ParseError> {
    let mut w = BTreeMap::new();
    for part in split_top(src, ',') {
        let (k, v) = key_value(&part, 1)?;
        w.insert(k, RawNumber::Text(v));
    }
    build_scaling(vars, &w, 1)
}

fn build_base_point(
    sys: &PdeSystem,
    map: &BTreeMap<String, String>,
    line: usize,
) -> Result<Vec<DiffExpr>, ParseError> {
    let scope = Scope::new(&sys.vars, &sys.functions);
    let mut base = vec![DiffExpr::zero(); sys.m()];
    for (name, src) in map {
        let Some(j) = sys.vars.dependents.iter().position(|d| d == name) else {
            return Err(ParseError::Undeclared {
                name: name.clone(),
                line,
                col: 0,
            });
        };
        base[j] = expr_at(src, &scope, line)?;
    }
    Ok(base)
}

/// Base point such as `u=x`; unnamed dependents are set to 0.
pub fn parse_base_point(sys: &PdeSystem, src: &str) -> Result<Vec<DiffExpr>, ParseError> {
    let mut map = BTreeMap::new();
    for part in split_top(src, ',') {
        let (k, v) = key_value(&part, 1)?;
        map.insert(k, v);
    }
    build_base_point(sys, &map, 1)
}

fn parse_methods(names: &[String]) -> Result<Vec<Method>, ParseError> {
    let mut out = Vec::new();
    for name in names {
        let ms: Vec<Method> = if name.trim().eq_ignore_ascii_case("all") {
            Method::ALL.to_vec()
        } else {
            vec![Method::from_str(name).or_else(|e| schema(0, e))?]
        };
        for m in ms {
            if !out.contains(&m) {
                out.push(m);
            }
        }
    }
    Ok(out)
}

fn build(raw: RawProblem) -> Result<Problem, ParseError> {
    check_names(&raw)?;
    if raw.independents.is_empty() || raw.dependents.is_empty() {
        return schema(0, "independents and dependents must both be declared");
    }
    if raw.equations.is_empty() {
        return schema(0, "no equations");
    }
    let vars = Variables::new(&raw.independents, &raw.dependents);
    let functions = build_functions(&raw, &vars)?;
    let scope = Scope::new(&vars, &functions);
    let mut equations = Vec::new();
    for (k, src) in raw.equations.iter().enumerate() {
        let line = raw.line("equations", k);
        let Some((lhs, rhs)) = src.split_once('=') else {
            return schema(line, format!("equation `{src}` has no `=`"));
        };
        let lhs_e = expr_at(lhs, &scope, line)?;
        let leading = match lhs_e.as_single_term() {
            Some((m, c)) if lhs_e.num_terms() == 1 && c == &Q::from_integer(1.into()) => {
                let mut f = m.factors();
                match (f.next(), f.next()) {
                    (Some((Atom::Jet(j), 1)), None) => Some(j.clone()),
                    _ => None,
                }
            }
            _ => None,
        };
        let Some(leading) = leading else {
            return schema(
                line,
                format!(
                    "not in solved form: the left-hand side `{}` must be a single derivative",
                    lhs.trim()
                ),
            );
        };
        equations.push(Equation::new(leading, expr_at(rhs, &scope, line)?));
    }
    let mut system = PdeSystem::new(vars.clone(), functions.clone(), equations)?;
    system.require_solved_form()?;
    system.max_sweeps = raw.max_sweeps;

    let ansatz = match &raw.ansatz {
        Some(a) => {
            let line = raw.line("ansatz", 0);
            let atoms = if a.deps.is_empty() {
                AnsatzSpec::up_to_order(
                    &system,
                    a.order.unwrap_or(system.order().saturating_sub(1)),
                    None,
                )
                .atoms
            } else {
                build_ansatz_atoms(a, &scope, line)?
            };
            Some(AnsatzSpec::new(atoms, a.degree, a.atom_degree))
        }
        None => None,
    };
    let flux_ansatz = match &raw.flux_ansatz {
        Some(a) => FluxAnsatzSpec {
            atoms: if a.deps.is_empty() {
                None
            } else {
                Some(build_ansatz_atoms(a, &scope, raw.line("flux_ansatz", 0))?)
            },
            degree: a.degree,
            order: a.order,
        },
        None => FluxAnsatzSpec::default(),
    };
    let methods = parse_methods(&raw.methods)?;
    let scalings = raw
        .scaling
        .iter()
        .enumerate()
        .map(|(k, w)| build_scaling(&vars, w, raw.line("scaling", k)))
        .collect::<Result<Vec<_>, _>>()?;
    let base_point = if raw.base_point.is_empty() {
        None
    } else {
        Some(build_base_point(
            &system,
            &raw.base_point,
            raw.line("base_point", 0),
        )?)
    };
    let n_eq = system.equations.len();
    let mut multipliers = Vec::new();
    for (k, comps) in raw.multipliers.iter().enumerate() {
        let line = raw.line("multipliers", k);
        if comps.len() != n_eq {
            return Err(ProblemError::MultiplierCount {
                expected: n_eq,
                found: comps.len(),
            }
            .into());
        }
        let c = comps
            .iter()
            .map(|s| expr_at(s, &scope, line))
            .collect::<Result<Vec<_>, _>>()?;
        multipliers.push(MultiplierSet::new(c));
    }
    let mut pairs = Vec::new();
    for (k, p) in raw.pairs.iter().enumerate() {
        let line = raw.line("pairs", k);
        if p.eta.len() != system.m() || p.omega.len() != n_eq {
            return schema(
                line,
                "pair needs one eta per dependent and one omega per equation",
            );
        }
        let eta = p
            .eta
            .iter()
            .map(|s| expr_at(s, &scope, line))
            .collect::<Result<Vec<_>, _>>()?;
        let omega = p
            .omega
            .iter()
            .map(|s| expr_at(s, &scope, line))
            .collect::<Result<Vec<_>, _>>()?;
        pairs.push((eta, omega));
    }
    let mut laws = Vec::new();
    for (k, l) in raw.laws.iter().enumerate() {
        let line = raw.line("laws", k);
        if l.fluxes.len() != system.n() || !(l.multiplier.is_empty() || l.multiplier.len() == n_eq)
        {
            return schema(
                line,
                "law needs one flux per independent and one multiplier per equation",
            );
        }
        let fluxes = l
            .fluxes
            .iter()
            .map(|s| expr_at(s, &scope, line))
            .collect::<Result<Vec<_>, _>>()?;
        let multiplier = if l.multiplier.is_empty() {
            None
        } else {
            let c = l
                .multiplier
                .iter()
                .map(|s| expr_at(s, &scope, line))
                .collect::<Result<Vec<_>, _>>()?;
            Some(MultiplierSet::new(c))
        };
        laws.push((multiplier, fluxes));
    }
    Ok(Problem {
        system,
        ansatz,
        flux_ansatz,
        methods,
        scalings,
        base_point,
        multipliers,
        pairs,
        laws,
    })
}

pub fn parse_problem_json(src: &str) -> Result<Problem, ParseError> {
    let raw: RawProblem = serde_json::from_str(src).map_err(|e| ParseError::Json(e.to_string()))?;
    build(raw)
}

/// Parses a document; JSON when it starts with `{`, the DSL otherwise.
pub fn parse_problem(src: &str) -> Result<Problem, ParseError> {
    if src.trim_start().starts_with('{') {
        parse_problem_json(src)
    } else {
        build(parse_dsl(src)?)
    }
}
