use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use flowlab::error::Error;
use flowlab::flow::Termination;
use flowlab::runner;

/// Donaldson heat flow laboratory for holomorphic bundles on flat tori.
#[derive(Parser)]
#[command(name = "flowlab", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario: integrate the flow, write diagnostics CSV, the final
    /// metric snapshot, and a summary JSON.
    Run {
        scenario: PathBuf,
        /// Output directory (defaults to the scenario's setting, then
        /// $FLOWLAB_OUT/<stem>, then ./flowlab_runs/<stem>).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Static checks of a scenario without flowing: cocycle, seams,
    /// Hermiticity, degree integrality.
    Validate { scenario: PathBuf },
    /// Re-evaluate curvature and curvature-relation residuals of the
    /// scenario's canonical metric over a list of grid resolutions.
    Sweep {
        scenario: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        grids: Vec<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render report artifacts from a completed run directory.
    Report {
        dir: PathBuf,
        /// Force SVG charts on regardless of the scenario setting.
        #[arg(long)]
        svg: bool,
    },
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::FlowAborted(_) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result: Result<(), Error> = match cli.command {
        Command::Run { scenario, out } => {
            match runner::cmd_run(&scenario, out.as_deref()) {
                Ok((summary, termination)) => {
                    println!(
                        "lambda = {}, final sup deviation = {:.6e}, classification = {}",
                        summary.lambda, summary.final_sup_dev, summary.classification
                    );
                    if let Some(p) = summary.oracle_prediction {
                        println!("oracle prediction = {p}");
                    }
                    match termination {
                        Termination::Aborted(msg) => Err(Error::FlowAborted(msg)),
                        _ => Ok(()),
                    }
                }
                Err(e) => Err(e),
            }
        }
        Command::Validate { scenario } => match runner::cmd_validate(&scenario) {
            Ok(report) => {
                print!("{}", report.render());
                if report.all_passed() {
                    Ok(())
                } else {
                    Err(Error::Scenario("validation checks failed".into()))
                }
            }
            Err(e) => Err(e),
        },
        Command::Sweep { scenario, grids, out } => {
            match runner::cmd_sweep(&scenario, &grids, out.as_deref()) {
                Ok(rows) => {
                    println!("n,curvature_residual,relation_residual,curvature_order,relation_order");
                    for r in rows {
                        println!(
                            "{},{:.6e},{:.6e},{},{}",
                            r.n,
                            r.curvature_residual,
                            r.relation_residual,
                            r.curvature_order.map(|v| format!("{v:.2}")).unwrap_or_default(),
                            r.relation_order.map(|v| format!("{v:.2}")).unwrap_or_default(),
                        );
                    }
                    Ok(())
                }
                Err(e) => Err(e),
            }
        }
        Command::Report { dir, svg } => {
            match runner::cmd_report(&dir, if svg { Some(true) } else { None }) {
                Ok(written) => {
                    for p in written {
                        println!("wrote {}", p.display());
                    }
                    Ok(())
                }
                Err(e) => Err(e),
            }
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
