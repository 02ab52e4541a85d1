use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use conslaw_cli::{render_text, run, Cli, Command, EXIT_PARSE};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let args = match &cli.command {
        Command::Multipliers(a) | Command::Fluxes(a) | Command::Verify(a) => a.clone(),
    };
    let outcome = match run(&cli.command) {
        Ok(o) => o,
        Err(e) => {
            if args.json {
                let v = serde_json::json!({ "kind": "Error", "message": e.to_string() });
                eprintln!("{v}");
            } else {
                eprintln!("error: {e}");
            }
            return ExitCode::from(e.exit_code());
        }
    };
    let body = if args.json {
        outcome.report.to_json()
    } else if args.latex {
        outcome.report.to_latex()
    } else {
        render_text(&outcome.report, &outcome.independents)
    };
    if args.json {
        for d in &outcome.report.diagnostics {
            eprintln!(
                "{}",
                serde_json::to_string(d).expect("diagnostic serializes")
            );
        }
    } else if args.latex {
        for d in &outcome.report.diagnostics {
            eprintln!("diagnostic: {} {}: {}", d.method, d.kind, d.message);
        }
    }
    let written = match &args.out {
        Some(path) => std::fs::write(path, &body),
        None => std::io::stdout().write_all(body.as_bytes()),
    };
    if let Err(e) = written {
        eprintln!("error: cannot write output: {e}");
        return ExitCode::from(EXIT_PARSE);
    }
    ExitCode::from(outcome.code)
}
