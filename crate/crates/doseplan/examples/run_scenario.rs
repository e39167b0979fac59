//! Full scenario pipeline through the configuration layer.
//!
//! Starts from a built-in preset, shrinks it for a quick demonstration,
//! runs the optimization, and writes the artifact set (manifest,
//! iteration log, control, dose, survival, and band maps) to a run
//! directory.
//!
//! Run with: cargo run --release --example run_scenario

use doseplan::scenario::{preset, run_scenario, GridConfig};

fn main() -> doseplan::Result<()> {
    let mut config = preset("basic-sf-baseline")?;
    config.grid = GridConfig { nx: 24, ny: 24 };
    config.optimizer.max_iters = 10;

    let (summary, out_dir) = run_scenario(&config, Some(std::path::Path::new("runs/example")))?;

    println!("artifacts in {}", out_dir.display());
    for entry in std::fs::read_dir(&out_dir).map_err(|e| doseplan::Error::Config(e.to_string()))? {
        if let Ok(entry) = entry {
            println!("  {}", entry.file_name().to_string_lossy());
        }
    }
    println!(
        "\n{:?} after {} iterations, objective {:.6e}",
        summary.status, summary.iterations, summary.final_objective
    );
    println!(
        "tumor killed fraction {:.1}%, risk survival {:.1}%",
        100.0 * summary.tumor.killed_fraction,
        100.0 * summary.risk.mean_survival
    );
    Ok(())
}
