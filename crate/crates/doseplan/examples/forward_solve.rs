//! Forward transport solve with a boundary source.
//!
//! Builds the basic target geometry on a 40x40 mesh, drives the moment
//! system with the source cap as the control, and reports the resulting
//! dose per region.
//!
//! Run with: cargo run --release --example forward_solve

use doseplan::grid::{build_grid, classify_regions, default_delta, default_eps, source_cap, TargetCase, Tissue};
use doseplan::objectives::dose;
use doseplan::physics::{materials_from_regions, MaterialParams};
use doseplan::transport::{ControlField, ControlSnapshot, TransportSolver};

fn main() -> doseplan::Result<()> {
    let grid = build_grid(40, 40)?;
    let regions = classify_regions(&grid, TargetCase::Basic);
    let materials = materials_from_regions(
        &regions,
        MaterialParams { sigma_a: 0.001, sigma_s: 0.01 },
        MaterialParams { sigma_a: 0.05, sigma_s: 0.5 },
        0.85,
    )?;
    let caps = source_cap(&grid, 10.0, default_eps(&grid), default_delta(&grid), &[])?;

    // full-strength isotropic source in the admissible strip
    let n = grid.n_cells();
    let control = ControlField::Stationary(ControlSnapshot {
        q0: caps.values.clone(),
        q1x: vec![0.0; n],
        q1y: vec![0.0; n],
    });

    let solver = TransportSolver::new(&grid, &materials);
    println!("time step limit: {:.5}", solver.cfl_limit());
    let traj = solver.solve_state(&control, 5.0)?;
    println!(
        "{} steps of dt = {:.5}, realizable = {}",
        traj.n_steps, traj.dt, traj.realizable
    );

    let d = dose(&traj);
    for tissue in [Tissue::Tumor, Tissue::Risk, Tissue::Normal] {
        let cells: Vec<f64> = regions
            .labels
            .iter()
            .zip(&d.values)
            .filter(|(l, _)| **l == tissue)
            .map(|(_, v)| *v)
            .collect();
        let mean = cells.iter().sum::<f64>() / cells.len() as f64;
        let max = cells.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        println!("{tissue:?}: {} cells, mean dose {mean:.4}, max dose {max:.4}", cells.len());
    }
    Ok(())
}
