//! Pipeline behind the `conslaw` command.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use conslaw_core::flux::{
    flux_direct, flux_homotopy2, flux_scaling, flux_symmetry_pair, law_homotopy1, scaling_weights,
    ConservationLaw, Method, ScalingSymmetry, Status,
};
use conslaw_core::parse::{
    parse_base_point, parse_deps, parse_problem, parse_weights, symmetry_label, Agreement,
    Diagnostic, LawEntry, MultiplierEntry, ParseError, Problem, Report, WeightEntry,
};
use conslaw_core::problem::{generate_ansatz, AnsatzSpec};
use conslaw_core::solver::{solve_multipliers, MultiplierSet};
use conslaw_core::verify::{triviality_heuristic, verify_characteristic, verify_on_solutions};
use conslaw_core::{DiffExpr, FluxError, KernelError, SolveError};
use rayon::prelude::*;
use thiserror::Error;

pub const EXIT_OK: u8 = 0;
pub const EXIT_PARSE: u8 = 2;
pub const EXIT_EMPTY: u8 = 3;
pub const EXIT_INAPPLICABLE: u8 = 4;
pub const EXIT_VERIFICATION: u8 = 5;

#[derive(Debug, Parser)]
#[command(
    name = "conslaw",
    version,
    about = "Conservation-law multipliers and fluxes for PDE systems"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the determining equations for multipliers.
    Multipliers(RunArgs),
    /// Reconstruct fluxes for each multiplier.
    Fluxes(RunArgs),
    /// Check the laws given in the problem file, or the computed ones.
    Verify(RunArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Direct,
    Homotopy1,
    Homotopy2,
    Scaling,
    Pair,
    All,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Problem file (DSL or JSON).
    pub problem: PathBuf,
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    /// Total degree of the multiplier ansatz.
    #[arg(long)]
    pub degree: Option<u32>,
    /// Ansatz atoms, e.g. `t,x,u,u_x,u_xx`.
    #[arg(long)]
    pub deps: Option<String>,
    /// Base point for homotopy2, e.g. `u=x`.
    #[arg(long)]
    pub base_point: Option<String>,
    /// Scaling weights, e.g. `x=1,t=3,u=-2`.
    #[arg(long)]
    pub weights: Option<String>,
    #[arg(long, conflicts_with = "json")]
    pub latex: bool,
    #[arg(long)]
    pub json: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io { .. } | CliError::Parse(_) | CliError::Usage(_) => EXIT_PARSE,
            CliError::Solve(SolveError::Problem(_)) => EXIT_PARSE,
            CliError::Solve(_) | CliError::Kernel(_) => EXIT_VERIFICATION,
        }
    }
}

#[derive(Debug)]
pub struct Outcome {
    pub report: Report,
    pub code: u8,
    pub independents: Vec<String>,
}

pub fn run(command: &Command) -> Result<Outcome, CliError> {
    match command {
        Command::Multipliers(args) => run_multipliers(args),
        Command::Fluxes(args) => run_fluxes(args),
        Command::Verify(args) => run_verify(args),
    }
}

pub fn load_problem(args: &RunArgs) -> Result<Problem, CliError> {
    let src = std::fs::read_to_string(&args.problem).map_err(|source| CliError::Io {
        path: args.problem.display().to_string(),
        source,
    })?;
    let mut problem = parse_problem(&src)?;
    if let Ok(v) = std::env::var("CONSLAW_MAX_SWEEPS") {
        let n = v.trim().parse::<usize>().map_err(|_| {
            CliError::Usage(format!(
                "CONSLAW_MAX_SWEEPS must be a nonnegative integer, got `{v}`"
            ))
        })?;
        problem.system.max_sweeps = Some(n);
    }
    if let Some(w) = &args.weights {
        problem.scalings = vec![parse_weights(&problem.system.vars, w)?];
    }
    if let Some(b) = &args.base_point {
        problem.base_point = Some(parse_base_point(&problem.system, b)?);
    }
    Ok(problem)
}

fn ansatz_spec(args: &RunArgs, problem: &Problem) -> Result<Option<AnsatzSpec>, CliError> {
    let sys = &problem.system;
    let file = problem.ansatz.as_ref();
    let degree = args.degree.or(file.and_then(|a| a.total_degree));
    let atom_degree = file.and_then(|a| a.atom_degree);
    let atoms = match (&args.deps, file) {
        (Some(d), _) => parse_deps(sys, d)?,
        (None, Some(a)) => a.atoms.clone(),
        (None, None) if degree.is_some() => {
            AnsatzSpec::up_to_order(sys, sys.order().saturating_sub(1), None).atoms
        }
        (None, None) => return Ok(None),
    };
    if degree.is_none() && atom_degree.is_none() {
        return Err(CliError::Usage(
            "the multiplier ansatz needs a degree (--degree)".into(),
        ));
    }
    Ok(Some(AnsatzSpec::new(atoms, degree, atom_degree)))
}

fn solve(
    args: &RunArgs,
    problem: &Problem,
    report: &mut Report,
) -> Result<Vec<MultiplierSet>, CliError> {
    let Some(spec) = ansatz_spec(args, problem)? else {
        return Err(CliError::Usage(
            "no multiplier ansatz: give --deps and --degree or an `ansatz` section".into(),
        ));
    };
    let ansatz = generate_ansatz(&problem.system, &spec).map_err(SolveError::from)?;
    let solution = solve_multipliers(&problem.system, &ansatz)?;
    report.warnings.extend(solution.warnings);
    Ok(solution.multipliers)
}

pub fn run_multipliers(args: &RunArgs) -> Result<Outcome, CliError> {
    let problem = load_problem(args)?;
    let mut report = Report::default();
    let ms = solve(args, &problem, &mut report)?;
    let vars = &problem.system.vars;
    report.multipliers = ms.iter().map(|m| MultiplierEntry::new(vars, m)).collect();
    let code = if ms.is_empty() { EXIT_EMPTY } else { EXIT_OK };
    Ok(Outcome {
        report,
        code,
        independents: problem.system.vars.independents.clone(),
    })
}

fn has_arbitrary(problem: &Problem, ms: &[MultiplierSet]) -> bool {
    problem
        .system
        .functions
        .iter()
        .any(|f| f.involves_arbitrary())
        || ms
            .iter()
            .flat_map(|m| &m.components)
            .any(|c| c.func_atoms().iter().any(|f| f.def.involves_arbitrary()))
}

/// Requested methods; without a request, the file's list, else a default
/// chosen from the problem's shape.
pub fn select_methods(args: &RunArgs, problem: &Problem, ms: &[MultiplierSet]) -> Vec<Method> {
    let all = || {
        let mut v = Method::ALL.to_vec();
        if !problem.pairs.is_empty() {
            v.push(Method::Pair);
        }
        v
    };
    match args.method {
        Some(MethodArg::All) => return all(),
        Some(MethodArg::Direct) => return vec![Method::Direct],
        Some(MethodArg::Homotopy1) => return vec![Method::Homotopy1],
        Some(MethodArg::Homotopy2) => return vec![Method::Homotopy2],
        Some(MethodArg::Scaling) => return vec![Method::Scaling],
        Some(MethodArg::Pair) => return vec![Method::Pair],
        None => {}
    }
    if !problem.methods.is_empty() {
        return problem.methods.clone();
    }
    if has_arbitrary(problem, ms) {
        return vec![Method::Direct];
    }
    let homogeneous = !problem.scalings.is_empty()
        && ms.iter().all(|m| {
            problem.scalings.iter().any(|sym| {
                scaling_weights(&problem.system, m, sym).is_ok_and(|w| {
                    let chis: Vec<_> = w.chi.iter().flatten().collect();
                    !w.is_critical() && chis.windows(2).all(|p| p[0] == p[1])
                })
            })
        });
    if homogeneous {
        vec![Method::Scaling]
    } else {
        vec![Method::Homotopy2]
    }
}

enum Job<'a> {
    Law(usize, Method, Option<&'a ScalingSymmetry>),
    Pair(usize),
}

enum JobResult {
    Law(ConservationLaw),
    Scaled(ConservationLaw, conslaw_core::flux::WeightReport),
    Failed(FluxError),
    Weights(conslaw_core::flux::WeightReport),
}

fn run_job(problem: &Problem, ms: &[MultiplierSet], job: &Job<'_>) -> JobResult {
    let sys = &problem.system;
    let result = match *job {
        Job::Law(k, Method::Scaling, Some(sym)) => {
            let w = match scaling_weights(sys, &ms[k], sym) {
                Ok(w) => w,
                Err(e) => return JobResult::Failed(e),
            };
            return match flux_scaling(sys, &ms[k], sym) {
                Ok((law, w)) => JobResult::Scaled(law, w),
                Err(FluxError::NonHomogeneous(_)) => JobResult::Weights(w),
                Err(e) => JobResult::Failed(e),
            };
        }
        Job::Law(k, Method::Direct, _) => flux_direct(sys, &ms[k], &problem.flux_ansatz),
        Job::Law(k, Method::Homotopy1, _) => law_homotopy1(sys, &ms[k]),
        Job::Law(k, Method::Homotopy2, _) => {
            let base = problem
                .base_point
                .clone()
                .unwrap_or_else(|| vec![DiffExpr::zero(); sys.m()]);
            flux_homotopy2(sys, &ms[k], &base)
        }
        Job::Law(_, m, _) => unreachable!("no job for {m}"),
        Job::Pair(k) => flux_symmetry_pair(sys, &problem.pairs[k].0, &problem.pairs[k].1),
    };
    match result {
        Ok(law) => JobResult::Law(law),
        Err(e) => JobResult::Failed(e),
    }
}

/// Checks a law in full and records it; false when a check fails.
fn record_law(
    problem: &Problem,
    report: &mut Report,
    multiplier: Option<usize>,
    law: &ConservationLaw,
) -> Result<bool, CliError> {
    let sys = &problem.system;
    let mut entry = LawEntry::new(&sys.vars, multiplier, law);
    let ok = match law.status {
        Status::CharacteristicIdentity => verify_characteristic(sys, law).passed(),
        _ => verify_on_solutions(sys, law)?.passed(),
    };
    if !ok {
        entry.status = "failed".into();
    }
    entry.triviality = Some(triviality_heuristic(sys, &law.fluxes)?.name().into());
    report.laws.push(entry);
    Ok(ok)
}

fn diagnostic(
    multiplier: Option<usize>,
    method: &str,
    kind: &str,
    message: impl Into<String>,
) -> Diagnostic {
    Diagnostic {
        multiplier,
        method: method.into(),
        kind: kind.into(),
        message: message.into(),
    }
}

fn compute_fluxes(args: &RunArgs, problem: &Problem, report: &mut Report) -> Result<u8, CliError> {
    let sys = &problem.system;
    let ms = if problem.multipliers.is_empty() {
        solve(args, problem, report)?
    } else {
        problem.multipliers.clone()
    };
    report.multipliers = ms
        .iter()
        .map(|m| MultiplierEntry::new(&sys.vars, m))
        .collect();
    let methods = select_methods(args, problem, &ms);

    let mut jobs = Vec::new();
    for k in 0..ms.len() {
        for &method in &methods {
            match method {
                Method::Scaling if problem.scalings.is_empty() => {
                    report.diagnostics.push(diagnostic(
                        Some(k),
                        "scaling",
                        "NoScalingSymmetry",
                        "no scaling symmetry given; use --weights",
                    ))
                }
                Method::Scaling => jobs.extend(
                    problem
                        .scalings
                        .iter()
                        .map(|s| Job::Law(k, method, Some(s))),
                ),
                Method::Pair => {}
                _ => jobs.push(Job::Law(k, method, None)),
            }
        }
    }
    if methods.contains(&Method::Pair) {
        if problem.pairs.is_empty() {
            report.diagnostics.push(diagnostic(
                None,
                "pair",
                "NoPair",
                "no symmetry/adjoint-symmetry pair given",
            ));
        }
        jobs.extend((0..problem.pairs.len()).map(Job::Pair));
    }
    let results: Vec<JobResult> = jobs.par_iter().map(|j| run_job(problem, &ms, j)).collect();

    let mut failed = false;
    let mut useful = vec![false; ms.len()];
    let mut useful_pairs = false;
    let mut per_multiplier: Vec<Vec<ConservationLaw>> = vec![Vec::new(); ms.len()];
    for (job, result) in jobs.iter().zip(results) {
        let (k, method, sym) = match *job {
            Job::Law(k, m, s) => (Some(k), m, s),
            Job::Pair(_) => (None, Method::Pair, None),
        };
        let under = |msg: String| match sym {
            Some(s) => format!("{msg} (scaling {})", symmetry_label(&sys.vars, s)),
            None => msg,
        };
        let weights = |report: &mut Report, w: &conslaw_core::flux::WeightReport| {
            if let (Some(k), Some(sym)) = (k, sym) {
                report.add_weights(&sys.vars, sym, WeightEntry::new(k, w));
            }
        };
        match result {
            JobResult::Scaled(law, w) => {
                weights(report, &w);
                failed |= !record_law(problem, report, k, &law)?;
                if law.is_critical() {
                    report.diagnostics.push(diagnostic(
                        k,
                        method.name(),
                        "Critical",
                        under(
                            "critical scaling (chi = 0); the fluxes are expected to be trivial"
                                .into(),
                        ),
                    ));
                } else if let Some(k) = k {
                    useful[k] = true;
                }
                if let Some(k) = k {
                    per_multiplier[k].push(law);
                }
            }
            JobResult::Law(law) => {
                failed |= !record_law(problem, report, k, &law)?;
                match k {
                    Some(k) => {
                        useful[k] = true;
                        per_multiplier[k].push(law);
                    }
                    None => useful_pairs = true,
                }
            }
            JobResult::Weights(w) => {
                weights(report, &w);
                report.diagnostics.push(diagnostic(
                    k,
                    method.name(),
                    "NonHomogeneous",
                    under("the multiplier components have different chi weights".into()),
                ));
            }
            JobResult::Failed(e) => {
                failed |= !e.is_inapplicable();
                report.diagnostics.push(diagnostic(
                    k,
                    method.name(),
                    e.kind(),
                    under(e.to_string()),
                ));
            }
        }
    }
    if methods.len() > 1 {
        for (k, laws) in per_multiplier.iter().enumerate() {
            let mut on_solutions = !laws.is_empty();
            for law in laws {
                on_solutions &= verify_on_solutions(sys, law)?.passed();
            }
            report.agreement.push(Agreement {
                multiplier: k,
                methods: laws.iter().map(|l| l.method.name().to_string()).collect(),
                on_solutions,
            });
        }
    }

    Ok(if failed {
        EXIT_VERIFICATION
    } else if ms.is_empty() && problem.pairs.is_empty() {
        EXIT_EMPTY
    } else if !useful.iter().any(|&u| u) && !useful_pairs {
        EXIT_INAPPLICABLE
    } else {
        EXIT_OK
    })
}

pub fn run_fluxes(args: &RunArgs) -> Result<Outcome, CliError> {
    let problem = load_problem(args)?;
    let mut report = Report::default();
    let code = compute_fluxes(args, &problem, &mut report)?;
    Ok(Outcome {
        report,
        code,
        independents: problem.system.vars.independents.clone(),
    })
}

pub fn run_verify(args: &RunArgs) -> Result<Outcome, CliError> {
    let problem = load_problem(args)?;
    let mut report = Report::default();
    if problem.laws.is_empty() {
        let code = compute_fluxes(args, &problem, &mut report)?;
        return Ok(Outcome {
            report,
            code,
            independents: problem.system.vars.independents.clone(),
        });
    }
    let sys = &problem.system;
    let mut failed = false;
    for (k, (ms, fluxes)) in problem.laws.iter().enumerate() {
        let law = ConservationLaw {
            multipliers: ms.clone(),
            fluxes: fluxes.clone(),
            method: Method::Pair,
            status: Status::Unverified,
            assumptions: vec![],
        };
        let mut entry = LawEntry::new(&sys.vars, None, &law);
        entry.method = "given".into();
        let on_solutions = verify_on_solutions(sys, &law)?.passed();
        let characteristic = ms.is_some() && verify_characteristic(sys, &law).passed();
        entry.status = if characteristic {
            Status::CharacteristicIdentity.name().into()
        } else if on_solutions && ms.is_none() {
            Status::OnSolutions.name().into()
        } else {
            "failed".into()
        };
        if entry.status == "failed" {
            failed = true;
            let what = if on_solutions {
                "characteristic identity"
            } else {
                "conservation on solutions"
            };
            report.diagnostics.push(diagnostic(
                Some(k),
                "given",
                "VerificationFailed",
                format!("{what} fails"),
            ));
        }
        entry.triviality = Some(triviality_heuristic(sys, fluxes)?.name().into());
        if let Some(ms) = ms {
            entry.multiplier = Some(report.multipliers.len());
            report.multipliers.push(MultiplierEntry::new(&sys.vars, ms));
        }
        report.laws.push(entry);
    }
    Ok(Outcome {
        report,
        code: if failed { EXIT_VERIFICATION } else { EXIT_OK },
        independents: sys.vars.independents.clone(),
    })
}

/// Plain-text rendering of a report.
pub fn render_text(report: &Report, indeps: &[String]) -> String {
    let mut out = String::new();
    out.push_str(&format!("multipliers ({}):\n", report.multipliers.len()));
    for (k, m) in report.multipliers.iter().enumerate() {
        out.push_str(&format!("  [{}] {}\n", k + 1, m.components.join("; ")));
    }
    if !report.laws.is_empty() {
        out.push_str("laws:\n");
    }
    for law in &report.laws {
        let tag = law
            .multiplier
            .map(|k| format!("[{}] ", k + 1))
            .unwrap_or_default();
        out.push_str(&format!("  {tag}{} ({})", law.method, law.status));
        if let Some(t) = &law.triviality {
            out.push_str(&format!(", triviality {t}"));
        }
        out.push('\n');
        for (name, f) in indeps.iter().zip(&law.fluxes) {
            out.push_str(&format!("      Phi^{name} = {f}\n"));
        }
        for a in &law.assumptions {
            out.push_str(&format!("      assuming {a}\n"));
        }
    }
    for (label, entries) in &report.weights {
        out.push_str(&format!("weights ({label}):\n"));
        for w in entries {
            let opt = |v: &[Option<String>]| {
                v.iter()
                    .map(|x| x.clone().unwrap_or_else(|| "-".into()))
                    .collect::<Vec<_>>()
                    .join(", ")
            };
            out.push_str(&format!(
                "  [{}] r = {}, s = {}, chi = {}{}\n",
                w.multiplier + 1,
                w.r.join(", "),
                opt(&w.s),
                opt(&w.chi),
                if w.critical { " (critical)" } else { "" }
            ));
        }
    }
    for a in &report.agreement {
        out.push_str(&format!(
            "agreement [{}]: {} {}\n",
            a.multiplier + 1,
            if a.methods.is_empty() {
                "no method".into()
            } else {
                a.methods.join(", ")
            },
            if a.on_solutions {
                "agree on solutions"
            } else {
                "DISAGREE on solutions"
            }
        ));
    }
    for d in &report.diagnostics {
        let tag = d
            .multiplier
            .map(|k| format!("[{}] ", k + 1))
            .unwrap_or_default();
        out.push_str(&format!(
            "diagnostic: {tag}{} {}: {}\n",
            d.method, d.kind, d.message
        ));
    }
    for w in &report.warnings {
        out.push_str(&format!("warning: {w}\n"));
    }
    out
}
