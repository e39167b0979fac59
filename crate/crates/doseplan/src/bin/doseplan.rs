//! Command-line front end.
//!
//! Exit codes: 0 on success, 2 on configuration or input validation
//! errors, 3 on solver failures.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use doseplan::scenario::{oracle_compare, parse_config, preset, preset_names, run_scenario, GridConfig, OracleConfig, RunConfig};
use doseplan::Error;

#[derive(Parser)]
#[command(name = "doseplan", about = "Radiation treatment planning on the M1 transport model", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an optimization scenario and write its artifacts.
    Run {
        /// TOML configuration file.
        #[arg(long, conflicts_with = "preset")]
        config: Option<PathBuf>,
        /// Built-in preset name (see `preset --list`).
        #[arg(long)]
        preset: Option<String>,
        /// Output directory (defaults to the configured one).
        #[arg(long)]
        output: Option<PathBuf>,
        /// Override the iteration budget.
        #[arg(long)]
        max_iters: Option<usize>,
        /// Override the grid resolution (cells per axis).
        #[arg(long)]
        resolution: Option<usize>,
    },
    /// Print a preset configuration, or list all preset names.
    Preset {
        /// Preset name.
        name: Option<String>,
        /// List available presets.
        #[arg(long)]
        list: bool,
    },
    /// Parse and validate a configuration file without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Compare the moment model against the discrete-ordinates reference.
    Oracle {
        #[arg(long, conflicts_with = "preset")]
        config: Option<PathBuf>,
        #[arg(long)]
        preset: Option<String>,
        /// Grid resolution for the comparison (cells per axis).
        #[arg(long, default_value_t = 20)]
        resolution: usize,
        /// Number of discrete ordinates (8, 16, or 32).
        #[arg(long, default_value_t = 16)]
        angles: usize,
        /// Horizon for the comparison solve.
        #[arg(long)]
        final_time: Option<f64>,
    },
}

fn exit_code_for(err: &Error) -> ExitCode {
    match err {
        Error::Grid(_) | Error::Hypothesis(_) | Error::Config(_) => ExitCode::from(2),
        Error::Closure(_)
        | Error::Cfl { .. }
        | Error::Solver(_)
        | Error::ResourceGuard(_)
        | Error::Io { .. } => ExitCode::from(3),
    }
}

fn load_config(config: &Option<PathBuf>, preset_name: &Option<String>) -> Result<RunConfig, Error> {
    match (config, preset_name) {
        (Some(path), None) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            parse_config(&text)
        }
        (None, Some(name)) => preset(name),
        _ => Err(Error::Config("pass exactly one of --config or --preset".into())),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run {
            config,
            preset,
            output,
            max_iters,
            resolution,
        } => {
            let mut cfg = load_config(&config, &preset)?;
            if let Some(n) = max_iters {
                cfg.optimizer.max_iters = n;
            }
            if let Some(n) = resolution {
                cfg.grid = GridConfig { nx: n, ny: n };
            }
            let (summary, out_dir) = run_scenario(&cfg, output.as_deref())?;
            println!("run complete: {}", out_dir.display());
            println!(
                "  status = {:?}, iterations = {}, objective = {:.6e}",
                summary.status, summary.iterations, summary.final_objective
            );
            println!(
                "  tumor:  mean dose {:.4}, survival {:.4}, killed {:.1}%",
                summary.tumor.mean_dose,
                summary.tumor.mean_survival,
                100.0 * summary.tumor.killed_fraction
            );
            println!(
                "  risk:   mean dose {:.4}, survival {:.4}",
                summary.risk.mean_dose, summary.risk.mean_survival
            );
            println!(
                "  normal: mean dose {:.4}, survival {:.4}",
                summary.normal.mean_dose, summary.normal.mean_survival
            );
            Ok(())
        }
        Command::Preset { name, list } => {
            if list || name.is_none() {
                for n in preset_names() {
                    println!("{n}");
                }
                return Ok(());
            }
            let cfg = preset(&name.unwrap())?;
            let text = toml::to_string_pretty(&cfg)
                .map_err(|e| Error::Config(format!("serialization: {e}")))?;
            print!("{text}");
            Ok(())
        }
        Command::Validate { config } => {
            let cfg = load_config(&Some(config.clone()), &None)?;
            cfg.resolve()?;
            println!("ok: {}", config.display());
            Ok(())
        }
        Command::Oracle {
            config,
            preset,
            resolution,
            angles,
            final_time,
        } => {
            let mut cfg = load_config(&config, &preset)?;
            cfg.grid = GridConfig { nx: resolution, ny: resolution };
            cfg.oracle = Some(OracleConfig { n_angles: angles });
            if let Some(t) = final_time {
                cfg.transport.final_time = t;
            }
            let report = oracle_compare(&cfg)?;
            println!("discrete ordinates: {} angles, {}x{} cells", report.n_angles, resolution, resolution);
            println!("  L1 dose, moment model:  {:.6e}", report.l1_m1);
            println!("  L1 dose, reference:     {:.6e}", report.l1_sn);
            println!("  L1 difference:          {:.6e}", report.l1_diff);
            println!("  relative difference:    {:.4}", report.relative_diff);
            Ok(())
        }
    }
}
