//! Cell-survival optimization on a coarse mesh.
//!
//! Minimizes the weighted linear-quadratic response: surviving tumor
//! cells count against the objective, killed risk and normal cells count
//! against it too, and a quadratic penalty limits the control effort.
//!
//! Run with: cargo run --release --example optimize_survival

use doseplan::grid::{build_grid, classify_regions, default_delta, default_eps, source_cap, TargetCase, Tissue};
use doseplan::objectives::{survival_field, CellModel};
use doseplan::optimizer::{optimize, ObjectiveSpec, OptimizerConfig, Problem};
use doseplan::physics::{materials_from_regions, MaterialParams};

const ALPHA: [f64; 3] = [0.52, 0.170, 0.170];
const BETA: [f64; 3] = [0.171, 0.0078, 0.0078];

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
    let model = CellModel::from_regions(&regions, [500.0, 2000.0, 1.0], ALPHA, BETA, 0.05)?;

    let problem = Problem {
        grid: &grid,
        regions: &regions,
        materials: &materials,
        caps: &caps,
        objective: ObjectiveSpec::Sf(model),
        t_final: 5.0,
        cfl: 0.45,
        snapshot_stride: None,
    };
    let config = OptimizerConfig {
        max_iters: 20,
        ..OptimizerConfig::default()
    };
    let run = optimize(&problem, &config)?;
    println!("status after {} iterations: {:?}", run.history.len(), run.status);
    println!("objective: {:.6e}", run.objective);

    let survival = survival_field(&run.dose, &regions, ALPHA, BETA);
    for tissue in [Tissue::Tumor, Tissue::Risk, Tissue::Normal] {
        let vals: Vec<f64> = regions
            .labels
            .iter()
            .zip(&survival)
            .filter(|(l, _)| **l == tissue)
            .map(|(_, v)| *v)
            .collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        println!("{tissue:?}: mean surviving fraction {mean:.4}");
    }
    Ok(())
}
