//! Dose-tracking optimization on a coarse mesh.
//!
//! Minimizes the weighted squared deviation of the delivered dose from a
//! prescribed level on the tumor, with a quadratic control penalty, by
//! projected gradient descent. Coarse resolution keeps this under a
//! minute; the full-resolution experiments go through the `doseplan` CLI.
//!
//! Run with: cargo run --release --example optimize_tracking

use doseplan::grid::{build_grid, classify_regions, default_delta, default_eps, source_cap, TargetCase, Tissue};
use doseplan::objectives::TrackingSpec;
use doseplan::optimizer::{optimize, ObjectiveSpec, OptimizerConfig, Problem};
use doseplan::physics::{materials_from_regions, MaterialParams};

fn main() -> doseplan::Result<()> {
    let grid = build_grid(30, 30)?;
    let regions = classify_regions(&grid, TargetCase::Basic);
    let materials = materials_from_regions(
        &regions,
        MaterialParams { sigma_a: 0.001, sigma_s: 0.01 },
        MaterialParams { sigma_a: 0.05, sigma_s: 0.5 },
        0.85,
    )?;
    let caps = source_cap(&grid, 10.0, default_eps(&grid), default_delta(&grid), &[])?;
    let spec = TrackingSpec::from_regions(&regions, 25.0, 150.0, 1.0, 0.05, 5.0)?;

    let problem = Problem {
        grid: &grid,
        regions: &regions,
        materials: &materials,
        caps: &caps,
        objective: ObjectiveSpec::Tracking(spec),
        t_final: 5.0,
        cfl: 0.45,
        snapshot_stride: None,
    };
    let config = OptimizerConfig {
        max_iters: 20,
        ..OptimizerConfig::default()
    };
    let run = optimize(&problem, &config)?;

    println!("{:>4}  {:>14}  {:>9}  {:>11}  {:>11}", "iter", "objective", "step", "|dq|_inf", "|pg|_inf");
    for rec in &run.history {
        println!(
            "{:>4}  {:>14.6e}  {:>9.4}  {:>11.4e}  {:>11.4e}",
            rec.iter, rec.objective, rec.step, rec.dq_inf, rec.pg_inf
        );
    }
    println!("status: {:?}", run.status);

    let tumor: Vec<f64> = regions
        .labels
        .iter()
        .zip(&run.dose.values)
        .filter(|(l, _)| **l == Tissue::Tumor)
        .map(|(_, v)| *v)
        .collect();
    println!(
        "tumor dose: mean {:.3}, min {:.3}, max {:.3} (target 5.0)",
        tumor.iter().sum::<f64>() / tumor.len() as f64,
        tumor.iter().cloned().fold(f64::INFINITY, f64::min),
        tumor.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
    );
    Ok(())
}
