// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use backflow_cli::commands::{self, OracleOptions};
use backflow_cli::validate::{self, ValidateOptions};
use backflow_cli::{CliError, Scenario};

#[derive(Parser)]
#[command(
    name = "backflow",
    version,
    about = "Quantum backflow in a Bragg-split condensate"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ScenarioArgs {
    /// Scenario file (flat key = value)
    #[arg(long)]
    config: PathBuf,
    /// Output directory
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override one config key (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl ScenarioArgs {
    fn load(&self) -> Result<Scenario, CliError> {
        Scenario::load(&self.config, &self.set)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Analytic density and current at the pulse time
    Simulate {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Cross-check with the split-step propagator
        #[arg(long)]
        oracle: bool,
        /// Use the reduced 1024-point oracle grid
        #[arg(long)]
        quick: bool,
    },
    /// Optimal amplitude and guard margins versus alpha
    Design {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, default_value_t = 0.01)]
        alpha_min: f64,
        #[arg(long, default_value_t = 100.0)]
        alpha_max: f64,
        #[arg(long, default_value_t = 41)]
        alpha_steps: usize,
    },
    /// Detectability versus imaging resolution
    Imaging {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Largest resolution in metres
        #[arg(long, default_value_t = 20e-6)]
        sigma_max: f64,
        #[arg(long, default_value_t = 41)]
        sigma_steps: usize,
    },
    /// Analytic-versus-oracle and invariant checks
    Validate {
        #[arg(long)]
        quick: bool,
        /// Scales every oracle time step
        #[arg(long, default_value_t = 1.0, hide = true)]
        dt_scale: f64,
    },
    /// Full split-step protocol with snapshots and a checkpoint
    OracleRun {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long)]
        quick: bool,
        /// Extra snapshot times after the pulse, seconds
        #[arg(long, value_delimiter = ',')]
        times: Vec<f64>,
    },
}

fn list(files: &[PathBuf]) {
    for f in files {
        println!("wrote {}", f.display());
    }
}

fn print_file(dir: &Path, name: &str) {
    if let Ok(text) = std::fs::read_to_string(dir.join(name)) {
        print!("{text}");
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate {
            scenario,
            oracle,
            quick,
        } => {
            let s = scenario.load()?;
            for w in &s.warnings {
                eprintln!("warning: {w}");
            }
            let oracle = oracle.then(|| OracleOptions::for_scenario(&s, quick));
            let (sim, files) = commands::simulate(&s, &scenario.out, oracle)?;
            for g in sim.design.guards.iter().filter(|g| !g.passed) {
                eprintln!("warning: guard {} failed: {}", g.name, g.detail);
            }
            print_file(&scenario.out, "report.txt");
            list(&files);
        }
        Command::Design {
            scenario,
            alpha_min,
            alpha_max,
            alpha_steps,
        } => {
            if !(alpha_min > 0.0 && alpha_max >= alpha_min) || alpha_steps == 0 {
                return Err(CliError::Input(
                    "alpha range must be positive and ordered".into(),
                ));
            }
            let s = scenario.load()?;
            let mut alphas = commands::log_spaced(alpha_min, alpha_max, alpha_steps);
            alphas.push(s.alpha);
            alphas.sort_by(f64::total_cmp);
            alphas.dedup_by(|a, b| ((*a - *b) / *b).abs() < 1e-12);
            commands::design(&s, &alphas, &scenario.out)?;
            print_file(&scenario.out, "design_report.txt");
            println!("wrote {}", scenario.out.join("design_sweep.csv").display());
        }
        Command::Imaging {
            scenario,
            sigma_max,
            sigma_steps,
        } => {
            if !(sigma_max >= 0.0) || sigma_steps == 0 {
                return Err(CliError::Input("sigma range must be non-negative".into()));
            }
            let s = scenario.load()?;
            let sigmas = commands::linear(0.0, sigma_max, sigma_steps);
            commands::imaging(&s, &sigmas, &scenario.out)?;
            print_file(&scenario.out, "imaging_report.txt");
            println!("wrote {}", scenario.out.join("detectability.csv").display());
        }
        Command::Validate { quick, dt_scale } => {
            if !(dt_scale > 0.0) {
                return Err(CliError::Input("dt scale must be positive".into()));
            }
            let checks = validate::run(ValidateOptions { quick, dt_scale });
            for c in &checks {
                println!("{c}");
            }
            let failed = checks.iter().filter(|c| !c.passed).count();
            if failed > 0 {
                return Err(CliError::Validation(format!(
                    "{failed} of {} checks failed",
                    checks.len()
                )));
            }
            println!("all {} checks passed", checks.len());
        }
        Command::OracleRun {
            scenario,
            quick,
            times,
        } => {
            let s = scenario.load()?;
            let (_, files) = commands::oracle_run(
                &s,
                OracleOptions::for_scenario(&s, quick),
                &times,
                &scenario.out,
            )?;
            print_file(&scenario.out, "oracle_report.txt");
            list(&files);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
