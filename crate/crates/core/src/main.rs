use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use flatmpc::cli::{self, exit_code, EXIT_COMPARE, EXIT_INFEASIBLE};

/// Explicit MPC for quadcopter position control through differential
/// flatness.
#[derive(Parser)]
#[command(version, about)]
struct Args {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Synthesise the three axis controllers and write the controller file.
    Synth {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the closed loop and write the trace CSV and summary JSON.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        controller: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare explicit and implicit controllers on one scenario.
    Compare {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        controller: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Describe a controller file.
    Inspect {
        #[arg(long)]
        controller: PathBuf,
    },
}

fn json(value: &impl serde::Serialize) -> String {
    serde_json::to_string_pretty(value).unwrap_or_default()
}

fn main() -> ExitCode {
    let args = Args::parse();
    let code = match args.cmd {
        Cmd::Synth { config, out } => match cli::cmd_synth(&config, out.as_deref()) {
            Ok(report) => {
                say(&json(&report));
                0
            }
            Err(e) => fail(&e, exit_code(&e)),
        },
        Cmd::Simulate { config, controller, out } => {
            match cli::cmd_simulate(&config, controller.as_deref(), out.as_deref()) {
                Ok(outcome) => {
                    for s in &outcome.summaries {
                        say(&json(s));
                    }
                    if outcome.feasible() {
                        0
                    } else {
                        eprintln!("error: infeasible_state: the closed loop left the feasible set; trace truncated");
                        EXIT_INFEASIBLE
                    }
                }
                Err(e) => fail(&e, exit_code(&e)),
            }
        }
        Cmd::Compare { config, controller, out } => {
            match cli::cmd_compare(&config, controller.as_deref(), out.as_deref()) {
                Ok(report) => {
                    say(&json(&report));
                    if report.all_completed {
                        0
                    } else {
                        eprintln!("error: a comparison run left the feasible set");
                        EXIT_COMPARE
                    }
                }
                Err(e) => {
                    let code = match exit_code(&e) {
                        c @ 1..=4 => c,
                        _ => EXIT_COMPARE,
                    };
                    fail(&e, code)
                }
            }
        }
        Cmd::Inspect { controller } => match cli::cmd_inspect(&controller) {
            Ok(text) => {
                say(text.trim_end());
                0
            }
            Err(e) => fail(&e, exit_code(&e)),
        },
    };
    ExitCode::from(code as u8)
}

// Ignores a closed stdout (e.g. piped into `head`).
fn say(text: &str) {
    let _ = writeln!(std::io::stdout(), "{text}");
}

fn fail(e: &flatmpc::Error, code: i32) -> i32 {
    eprintln!("error: {e}");
    code
}
