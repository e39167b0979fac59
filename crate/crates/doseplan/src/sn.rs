//! Discrete-ordinates reference solver.
//!
//! First-order upwind transport on equally spaced directions of the unit
//! circle, with Henyey-Greenstein scattering discretized by the
//! angle-difference kernel and renormalized to unit row sum. This is a
//! validation oracle for the M1 closure, intended for small grids only.

use crate::grid::Grid;
use crate::physics::{hg_kernel, MaterialField};
use crate::transport::ControlField;
use crate::{Error, Result};

/// Largest grid edge the oracle accepts.
pub const MAX_CELLS_PER_AXIS: usize = 40;

pub const SUPPORTED_ANGLE_COUNTS: [usize; 3] = [8, 16, 32];

/// Row-stochastic scattering matrix `P[k][j]` from the HG kernel evaluated
/// at `cos(θ_k − θ_j)`.
fn scattering_matrix(g: f64, n_angles: usize) -> Result<Vec<f64>> {
    let mut p = vec![0.0; n_angles * n_angles];
    for k in 0..n_angles {
        let mut row_sum = 0.0;
        for j in 0..n_angles {
            let dtheta = std::f64::consts::TAU * (k as f64 - j as f64) / n_angles as f64;
            let v = hg_kernel(g, dtheta.cos())?;
            p[k * n_angles + j] = v;
            row_sum += v;
        }
        for j in 0..n_angles {
            p[k * n_angles + j] /= row_sum;
        }
    }
    Ok(p)
}

/// Solves the kinetic equation by upwind discrete ordinates and returns
/// the time-integrated zeroth moment per cell.
///
/// The control's moment pair is expanded into the linear-in-angle kinetic
/// density `q(Ω) = q⁽⁰⁾/2π + (q⁽¹⁾·Ω)/π`. Inflow is vacuum.
pub fn sn_reference_solve(
    control: &ControlField,
    materials: &MaterialField,
    grid: &Grid,
    t_final: f64,
    n_angles: usize,
) -> Result<Vec<f64>> {
    if grid.nx > MAX_CELLS_PER_AXIS || grid.ny > MAX_CELLS_PER_AXIS {
        return Err(Error::ResourceGuard(format!(
            "discrete-ordinates oracle is limited to {MAX_CELLS_PER_AXIS} cells per axis, got {}x{}",
            grid.nx, grid.ny
        )));
    }
    if !SUPPORTED_ANGLE_COUNTS.contains(&n_angles) {
        return Err(Error::Config(format!(
            "n_angles must be one of {SUPPORTED_ANGLE_COUNTS:?}, got {n_angles}"
        )));
    }
    if !(t_final > 0.0) {
        return Err(Error::Solver(format!("final time must be positive, got {t_final}")));
    }
    let (nx, ny) = (grid.nx, grid.ny);
    let n = grid.n_cells();
    if control.n_cells() != n || materials.n_cells() != n {
        return Err(Error::Solver("field sizes do not match the grid".into()));
    }

    let omegas: Vec<(f64, f64)> = (0..n_angles)
        .map(|k| {
            let theta = std::f64::consts::TAU * (k as f64 + 0.5) / n_angles as f64;
            (theta.cos(), theta.sin())
        })
        .collect();
    let p = scattering_matrix(materials.g, n_angles)?;
    let weight = std::f64::consts::TAU / n_angles as f64;

    // explicit upwind stability: dt (|Ωx|/dx + |Ωy|/dy + σ_t) ≤ 1
    let max_rate = omegas
        .iter()
        .map(|&(ox, oy)| ox.abs() / grid.dx + oy.abs() / grid.dy)
        .fold(0.0, f64::max);
    let max_sigma_t = (0..n)
        .map(|k| materials.sigma_t(k))
        .fold(0.0, f64::max);
    let dt_max = 0.5 / (max_rate + max_sigma_t);
    let n_steps = (t_final / dt_max).ceil().max(1.0) as usize;
    let dt = t_final / n_steps as f64;

    let mut psi = vec![0.0; n_angles * n];
    let mut next = vec![0.0; n_angles * n];
    let mut scatter = vec![0.0; n_angles];
    let mut dose = vec![0.0; n];

    for step in 0..n_steps {
        let q = control.snapshot(step.min(match control {
            ControlField::TimeVarying(v) => v.len() - 1,
            ControlField::Stationary(_) => 0,
        }));
        // left-rule dose accumulation
        for cell in 0..n {
            let mut zeroth = 0.0;
            for a in 0..n_angles {
                zeroth += psi[a * n + cell];
            }
            dose[cell] += dt * weight * zeroth;
        }
        for j in 0..ny {
            for i in 0..nx {
                let cell = j * nx + i;
                // in-cell scattering sum
                for a in 0..n_angles {
                    let mut acc = 0.0;
                    for b in 0..n_angles {
                        acc += p[a * n_angles + b] * psi[b * n + cell];
                    }
                    scatter[a] = acc;
                }
                let sigma_t = materials.sigma_t(cell);
                let sigma_s = materials.sigma_s[cell];
                for (a, &(ox, oy)) in omegas.iter().enumerate() {
                    let c = psi[a * n + cell];
                    let upwind_x = if ox > 0.0 {
                        let west = if i > 0 { psi[a * n + cell - 1] } else { 0.0 };
                        ox * (c - west) / grid.dx
                    } else {
                        let east = if i + 1 < nx { psi[a * n + cell + 1] } else { 0.0 };
                        ox * (east - c) / grid.dx
                    };
                    let upwind_y = if oy > 0.0 {
                        let south = if j > 0 { psi[a * n + cell - nx] } else { 0.0 };
                        oy * (c - south) / grid.dy
                    } else {
                        let north = if j + 1 < ny { psi[a * n + cell + nx] } else { 0.0 };
                        oy * (north - c) / grid.dy
                    };
                    let source = q.q0[cell] / std::f64::consts::TAU
                        + (q.q1x[cell] * ox + q.q1y[cell] * oy) / std::f64::consts::PI;
                    next[a * n + cell] = c
                        + dt * (-upwind_x - upwind_y - sigma_t * c + sigma_s * scatter[a] + source);
                }
            }
        }
        std::mem::swap(&mut psi, &mut next);
    }
    Ok(dose)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;
    use crate::transport::ControlSnapshot;

    fn uniform_materials(n: usize, sigma_a: f64, sigma_s: f64, g: f64) -> MaterialField {
        MaterialField {
            sigma_a: vec![sigma_a; n],
            sigma_s: vec![sigma_s; n],
            g,
        }
    }

    #[test]
    fn zero_control_gives_zero_dose() {
        let grid = build_grid(10, 10).unwrap();
        let n = grid.n_cells();
        let mats = uniform_materials(n, 0.05, 0.5, 0.85);
        let dose = sn_reference_solve(&ControlField::zeros(n), &mats, &grid, 1.0, 8).unwrap();
        assert!(dose.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn resource_guard() {
        let grid = build_grid(100, 100).unwrap();
        let n = grid.n_cells();
        let mats = uniform_materials(n, 0.05, 0.5, 0.85);
        let err = sn_reference_solve(&ControlField::zeros(n), &mats, &grid, 1.0, 8).unwrap_err();
        assert!(matches!(err, Error::ResourceGuard(_)));
    }

    #[test]
    fn rejects_odd_angle_counts() {
        let grid = build_grid(10, 10).unwrap();
        let n = grid.n_cells();
        let mats = uniform_materials(n, 0.05, 0.5, 0.85);
        assert!(sn_reference_solve(&ControlField::zeros(n), &mats, &grid, 1.0, 7).is_err());
    }

    #[test]
    fn scattering_rows_are_stochastic() {
        let p = scattering_matrix(0.85, 16).unwrap();
        for k in 0..16 {
            let sum: f64 = (0..16).map(|j| p[k * 16 + j]).sum();
            assert!((sum - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn central_source_produces_positive_dose() {
        let grid = build_grid(20, 20).unwrap();
        let n = grid.n_cells();
        let mats = uniform_materials(n, 0.5, 0.0, 0.0);
        let mut q0 = vec![0.0; n];
        q0[grid.idx(10, 10)] = 1.0;
        let control = ControlField::Stationary(ControlSnapshot {
            q0,
            q1x: vec![0.0; n],
            q1y: vec![0.0; n],
        });
        let dose = sn_reference_solve(&control, &mats, &grid, 2.0, 8).unwrap();
        assert!(dose[grid.idx(10, 10)] > 0.0);
        assert!(dose.iter().all(|&v| v >= 0.0));
    }
}
