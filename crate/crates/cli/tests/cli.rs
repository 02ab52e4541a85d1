use std::path::PathBuf;
use std::process::Command;

use clap::Parser;
use conslaw_cli::{load_problem, select_methods, Cli, Command as Sub, RunArgs};
use conslaw_core::flux::Method;

fn problem(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../problems")
        .join(name)
        .display()
        .to_string()
}

fn conslaw_env(args: &[&str], env: &[(&str, &str)]) -> (i32, String, String) {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_conslaw"));
    cmd.args(args).env_remove("CONSLAW_MAX_SWEEPS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    let out = cmd.output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn conslaw(args: &[&str]) -> (i32, String, String) {
    conslaw_env(args, &[])
}

fn run_args(args: &[&str]) -> RunArgs {
    let cli = Cli::try_parse_from(std::iter::once("conslaw").chain(args.iter().copied())).unwrap();
    match cli.command {
        Sub::Multipliers(a) | Sub::Fluxes(a) | Sub::Verify(a) => a,
    }
}

fn write(dir: &tempfile::TempDir, name: &str, body: &str) -> String {
    let path = dir.path().join(name);
    std::fs::write(&path, body).unwrap();
    path.display().to_string()
}

#[test]
fn kdv_json_report_has_plain_fractions() {
    let (code, out, _) = conslaw(&["fluxes", &problem("kdv.json"), "--json"]);
    assert_eq!(code, 0);
    assert!(out.contains("(1/2)*u^2"), "{out}");
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["multipliers"].as_array().unwrap().len(), 4);
    assert_eq!(v["laws"].as_array().unwrap().len(), 4);
    assert!(v["laws"]
        .as_array()
        .unwrap()
        .iter()
        .all(|l| l["status"] == "characteristic-identity"));
}

#[test]
fn kdv_latex_report() {
    let (code, out, _) = conslaw(&["fluxes", &problem("kdv.json"), "--latex"]);
    assert_eq!(code, 0);
    assert!(out.contains("\\tfrac{1}{2}u^{2}"), "{out}");
}

#[test]
fn g_scaling_report_lists_both_chi_values() {
    let (code, out, stderr) = conslaw(&["fluxes", &problem("gequation.json"), "--json"]);
    assert_eq!(code, 0, "{stderr}");
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    let weights = v["weights"].as_object().unwrap();
    let chis: Vec<&str> = weights
        .values()
        .flat_map(|e| e.as_array().unwrap())
        .filter(|e| e["multiplier"] == 0)
        .map(|e| e["chi"][0].as_str().unwrap())
        .collect();
    assert_eq!(chis.len(), 2);
    assert!(chis.contains(&"0") && chis.contains(&"2"), "{chis:?}");
    let critical: Vec<bool> = weights
        .values()
        .flat_map(|e| e.as_array().unwrap())
        .map(|e| e["critical"].as_bool().unwrap())
        .collect();
    assert!(critical.contains(&true) && critical.contains(&false));
    assert!(stderr
        .lines()
        .all(|l| serde_json::from_str::<serde_json::Value>(l).is_ok()));
}

#[test]
fn reports_are_deterministic() {
    let args = ["fluxes", &problem("kdv.json"), "--method", "all", "--json"];
    let (_, a, _) = conslaw(&args);
    let (_, b, _) = conslaw(&args);
    assert_eq!(a, b);
}

#[test]
fn method_all_prints_agreement() {
    let (code, out, _) = conslaw(&["fluxes", &problem("kdv.json"), "--method", "all"]);
    assert_eq!(code, 0);
    let lines: Vec<&str> = out.lines().filter(|l| l.starts_with("agreement")).collect();
    assert_eq!(lines.len(), 4, "{out}");
    assert!(lines
        .iter()
        .all(|l| l.ends_with("direct, homotopy1, homotopy2, scaling agree on solutions")));
}

#[test]
fn method_all_on_g_reports_inapplicable_methods() {
    let (code, out, stderr) = conslaw(&[
        "fluxes",
        &problem("gequation.json"),
        "--method",
        "all",
        "--json",
    ]);
    assert_eq!(code, 0, "{stderr}");
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    let kinds: Vec<(u64, String, String)> = v["diagnostics"]
        .as_array()
        .unwrap()
        .iter()
        .map(|d| {
            (
                d["multiplier"].as_u64().unwrap(),
                d["method"].as_str().unwrap().to_string(),
                d["kind"].as_str().unwrap().to_string(),
            )
        })
        .collect();
    assert!(kinds.contains(&(0, "homotopy1".into(), "DivergentIntegral".into())));
    assert!(kinds.contains(&(0, "homotopy2".into(), "DivergentIntegral".into())));
    assert!(kinds.contains(&(1, "homotopy1".into(), "ArbitraryFunctionPresent".into())));
    assert_eq!(v["agreement"].as_array().unwrap().len(), 2);
    assert_eq!(stderr.lines().count(), kinds.len());
}

#[test]
fn out_flag_writes_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let (code, stdout, _) = conslaw(&[
        "multipliers",
        &problem("kdv.json"),
        "--json",
        "--out",
        &out.display().to_string(),
    ]);
    assert_eq!(code, 0);
    assert!(stdout.is_empty());
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(v["multipliers"].as_array().unwrap().len(), 4);
}

#[test]
fn wave_multipliers_from_the_command_line() {
    let (code, out, _) = conslaw(&["multipliers", &problem("wave.json")]);
    assert_eq!(code, 0);
    assert!(out.starts_with("multipliers (4):"), "{out}");
    let (code, out, _) = conslaw(&["multipliers", &problem("kdv.conslaw"), "--degree", "0"]);
    assert_eq!(code, 0);
    assert_eq!(out, "multipliers (1):\n  [1] 1\n");
}

#[test]
fn default_methods_follow_the_problem_shape() {
    let pick = |args: &[&str]| {
        let a = run_args(args);
        let p = load_problem(&a).unwrap();
        select_methods(&a, &p, &p.multipliers)
    };
    let dir = tempfile::tempdir().unwrap();
    let plain = write(
        &dir,
        "kdv.conslaw",
        "independents: t, x\ndependents: u\nequation: u_{t} = -u*u_{x} - u_{xxx}\nmultiplier: u\n",
    );
    assert_eq!(pick(&["fluxes", &plain]), vec![Method::Homotopy2]);
    assert_eq!(
        pick(&["fluxes", &plain, "--weights", "x=1,t=3,u=-2"]),
        vec![Method::Scaling]
    );
    let critical = write(
        &dir,
        "critical.conslaw",
        "independents: t, x\ndependents: u\nequation: u_{t} = -u*u_{x} - u_{xxx}\nmultiplier: x - t*u\nscaling: x = 1, t = 3, u = -2\n",
    );
    assert_eq!(pick(&["fluxes", &critical]), vec![Method::Homotopy2]);
    let wave = write(
        &dir,
        "wave.conslaw",
        "independents: x, t\ndependents: u\nfunction c(a): arbitrary\nequation: u_{tt} = c(u)^2*u_{xx}\nmultiplier: 1\n",
    );
    assert_eq!(pick(&["fluxes", &wave]), vec![Method::Direct]);
    assert_eq!(
        pick(&["fluxes", &problem("kdv.json")]),
        vec![Method::Homotopy1]
    );
    assert_eq!(
        pick(&["fluxes", &problem("kdv.json"), "--method", "all"]).len(),
        4
    );
}

#[test]
fn verify_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    let head = "independents: t, x\ndependents: u\nequation: u_{t} = -u*u_{x} - u_{xxx}\n";
    let good = write(
        &dir,
        "good.conslaw",
        &format!("{head}law: multiplier = u; fluxes = (1/2)*u^2, (1/3)*u^3 - (1/2)*u_{{x}}^2 + u*u_{{xx}}\n"),
    );
    let (code, out, _) = conslaw(&["verify", &good, "--json"]);
    assert_eq!(code, 0, "{out}");
    assert!(out.contains("characteristic-identity"));
    let curl = write(
        &dir,
        "curl.conslaw",
        &format!("{head}law: fluxes = u_{{x}}, -u_{{t}}\n"),
    );
    let (code, out, _) = conslaw(&["verify", &curl]);
    assert_eq!(code, 0, "{out}");
    assert!(out.contains("identically-divergence-free"), "{out}");
    let wrong = write(
        &dir,
        "wrong.conslaw",
        &format!("{head}law: fluxes = u, 0\n"),
    );
    let (code, _, stderr) = conslaw(&["verify", &wrong]);
    assert_eq!(code, 5, "{stderr}");
    let (code, _, _) = conslaw(&["verify", &problem("kdv.json")]);
    assert_eq!(code, 0);
}

#[test]
fn max_sweeps_environment_variable() {
    let (code, _, stderr) = conslaw_env(
        &["fluxes", &problem("kdv.json")],
        &[("CONSLAW_MAX_SWEEPS", "many")],
    );
    assert_eq!(code, 2);
    assert!(stderr.contains("CONSLAW_MAX_SWEEPS"));
    let (code, _, _) = conslaw_env(
        &["fluxes", &problem("kdv.json")],
        &[("CONSLAW_MAX_SWEEPS", "8")],
    );
    assert_eq!(code, 0);
}

#[test]
fn usage_errors_exit_with_parse_code() {
    let (code, _, stderr) = conslaw(&["multipliers", "/nonexistent/problem.json"]);
    assert_eq!(code, 2);
    assert!(stderr.starts_with("error:"));
    let (code, _, stderr) = conslaw(&[
        "multipliers",
        &problem("kdv.json"),
        "--deps",
        "u_q",
        "--json",
    ]);
    assert_eq!(code, 2);
    let v: serde_json::Value = serde_json::from_str(stderr.trim()).unwrap();
    assert_eq!(v["kind"], "Error");
    let (code, _, _) = conslaw(&["fluxes", &problem("kdv.json"), "--method", "bogus"]);
    assert_eq!(code, 2);
}
