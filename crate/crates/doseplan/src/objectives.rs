//! Dose operator, objective functionals, adjoint sources, and the reduced
//! gradient.
//!
//! Two objectives are supported. The tracking functional penalizes the
//! squared deviation of the dose from a prescribed field,
//! `∫ c₁(D − D̄)² + c₂ ∫∫ (q⁽⁰⁾² + |q⁽¹⁾|²)`. The survival functional
//! scores the linear-quadratic cell response,
//! `a₀∫ρ₀·SF₀ + Σᵢ aᵢ∫ρᵢ(1 − SFᵢ) + (c₂/2)·penalty` with
//! `SF = exp(−αD − βD²)`.
//!
//! The control penalty is pointwise in `(t, x)`, so the implemented
//! gradients and the projection fixed point `q* = proj(−λ*/(κ c₂))` are
//! mutually consistent; `κ` is the penalty-derivative factor (2 for
//! tracking, 1 for survival).

use crate::grid::{Grid, RegionMap, Tissue};
use crate::transport::{AdjointSolution, ControlField, ControlSnapshot, Trajectory};
use crate::{Error, Result};

/// Penalty-derivative factor for the tracking objective (`c₂·∫q²`).
pub const TRACKING_PENALTY_FACTOR: f64 = 2.0;
/// Penalty-derivative factor for the survival objective (`(c₂/2)·∫q²`).
pub const SF_PENALTY_FACTOR: f64 = 1.0;

/// Per-cell total dose `D(x) = ∫₀ᵀ ψ⁽⁰⁾ dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct DoseMap {
    pub values: Vec<f64>,
}

/// Extracts the dose map from a completed trajectory (the time integral is
/// accumulated during stepping with the left rectangle rule).
pub fn dose(traj: &Trajectory) -> DoseMap {
    DoseMap {
        values: traj.int0.clone(),
    }
}

/// Weights and prescribed dose for the tracking objective.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackingSpec {
    /// Per-cell weight `c₁(x)` assembled from the region weights.
    pub c1: Vec<f64>,
    pub c2: f64,
    pub d_bar: Vec<f64>,
    pub c_tumor: f64,
    pub c_risk: f64,
    pub c_normal: f64,
}

impl TrackingSpec {
    /// `c₁ = c_T·χ_T + c_R·χ_R + c_N·χ_N`, `D̄ = level·χ_T`.
    pub fn from_regions(
        regions: &RegionMap,
        c_tumor: f64,
        c_risk: f64,
        c_normal: f64,
        c2: f64,
        d_bar_level: f64,
    ) -> Result<TrackingSpec> {
        if !(c_tumor > 0.0 && c_risk > 0.0 && c_normal > 0.0) {
            return Err(Error::Config(format!(
                "tracking weights must be positive, got c_T = {c_tumor}, c_R = {c_risk}, c_N = {c_normal}"
            )));
        }
        if !(c2 > 0.0) {
            return Err(Error::Config(format!("control weight c2 must be positive, got {c2}")));
        }
        let c1 = regions
            .labels
            .iter()
            .map(|l| match l {
                Tissue::Tumor => c_tumor,
                Tissue::Risk => c_risk,
                Tissue::Normal => c_normal,
            })
            .collect();
        let d_bar = regions
            .labels
            .iter()
            .map(|l| if *l == Tissue::Tumor { d_bar_level } else { 0.0 })
            .collect();
        Ok(TrackingSpec {
            c1,
            c2,
            d_bar,
            c_tumor,
            c_risk,
            c_normal,
        })
    }
}

/// One cell population: density field, LQ parameters, objective weight.
#[derive(Debug, Clone, PartialEq)]
pub struct CellType {
    pub rho: Vec<f64>,
    pub alpha: f64,
    pub beta: f64,
    pub weight: f64,
}

/// Linear-quadratic survival model; `types[0]` is the tumor population.
#[derive(Debug, Clone, PartialEq)]
pub struct CellModel {
    pub types: Vec<CellType>,
    pub c2: f64,
}

impl CellModel {
    /// Indicator densities from the region map: `ρ₀ = χ_T`, `ρ₁ = χ_R`,
    /// `ρ₂ = χ_N`.
    pub fn from_regions(
        regions: &RegionMap,
        weights: [f64; 3],
        alpha: [f64; 3],
        beta: [f64; 3],
        c2: f64,
    ) -> Result<CellModel> {
        for i in 0..3 {
            if !(weights[i] > 0.0 && alpha[i] > 0.0 && beta[i] > 0.0) {
                return Err(Error::Config(format!(
                    "cell model parameters must be positive for type {i}: a = {}, alpha = {}, beta = {}",
                    weights[i], alpha[i], beta[i]
                )));
            }
        }
        if !(c2 > 0.0) {
            return Err(Error::Config(format!("control weight c2 must be positive, got {c2}")));
        }
        let tissues = [Tissue::Tumor, Tissue::Risk, Tissue::Normal];
        let types = (0..3)
            .map(|i| CellType {
                rho: regions.indicator(tissues[i]),
                alpha: alpha[i],
                beta: beta[i],
                weight: weights[i],
            })
            .collect();
        Ok(CellModel { types, c2 })
    }
}

/// Linear-quadratic surviving fraction `exp(−αD − βD²)`.
pub fn surviving_fraction(d: f64, alpha: f64, beta: f64) -> Result<f64> {
    if d < 0.0 {
        return Err(Error::Config(format!("dose must be nonnegative, got {d}")));
    }
    Ok((-alpha * d - beta * d * d).exp())
}

/// Raw control penalty `Σ_t Δt Σ_x ΔA (q⁽⁰⁾² + |q⁽¹⁾|²)`; the caller
/// applies its objective's `c₂` scaling.
pub fn control_penalty(control: &ControlField, grid: &Grid, t_final: f64) -> f64 {
    let area = grid.cell_area();
    let snapshot_energy = |s: &ControlSnapshot| -> f64 {
        (0..s.n_cells())
            .map(|k| s.q0[k].powi(2) + s.q1x[k].powi(2) + s.q1y[k].powi(2))
            .sum::<f64>()
            * area
    };
    match control {
        ControlField::Stationary(s) => t_final * snapshot_energy(s),
        ControlField::TimeVarying(v) => {
            let dt = t_final / v.len() as f64;
            v.iter().map(|s| dt * snapshot_energy(s)).sum()
        }
    }
}

/// Tracking objective `Σ ΔA c₁(D − D̄)² + c₂ · penalty`.
pub fn j_tracking(dose: &DoseMap, control: &ControlField, spec: &TrackingSpec, grid: &Grid, t_final: f64) -> f64 {
    let area = grid.cell_area();
    let misfit: f64 = (0..dose.values.len())
        .map(|k| spec.c1[k] * (dose.values[k] - spec.d_bar[k]).powi(2))
        .sum::<f64>()
        * area;
    misfit + spec.c2 * control_penalty(control, grid, t_final)
}

/// Survival objective
/// `a₀⟨ρ₀ SF₀⟩ + Σ_{i≥1} a_i⟨ρ_i (1 − SF_i)⟩ + (c₂/2) · penalty`.
pub fn j_sf(dose: &DoseMap, control: &ControlField, model: &CellModel, grid: &Grid, t_final: f64) -> f64 {
    let area = grid.cell_area();
    let mut total = 0.0;
    for (i, ty) in model.types.iter().enumerate() {
        let mut acc = 0.0;
        for k in 0..dose.values.len() {
            if ty.rho[k] == 0.0 {
                continue;
            }
            let d = dose.values[k].max(0.0);
            let sf = (-ty.alpha * d - ty.beta * d * d).exp();
            acc += ty.rho[k] * if i == 0 { sf } else { 1.0 - sf };
        }
        total += ty.weight * acc * area;
    }
    total + 0.5 * model.c2 * control_penalty(control, grid, t_final)
}

/// Adjoint right-hand side for tracking: `r(x) = 2 c₁(x) (D − D̄)`.
pub fn adjoint_source_tracking(dose: &DoseMap, spec: &TrackingSpec) -> Vec<f64> {
    (0..dose.values.len())
        .map(|k| 2.0 * spec.c1[k] * (dose.values[k] - spec.d_bar[k]))
        .collect()
}

/// Adjoint right-hand side for the survival objective: the dose derivative
/// of its integrand,
/// `r*(x) = a₀ρ₀(−α₀−2β₀D)e^{−α₀D−β₀D²} − Σ_{i≥1} a_iρ_i(−α_i−2β_iD)e^{−α_iD−β_iD²}`.
pub fn adjoint_source_sf(dose: &DoseMap, model: &CellModel) -> Vec<f64> {
    let n = dose.values.len();
    let mut r = vec![0.0; n];
    for (i, ty) in model.types.iter().enumerate() {
        let sign = if i == 0 { 1.0 } else { -1.0 };
        for k in 0..n {
            if ty.rho[k] == 0.0 {
                continue;
            }
            let d = dose.values[k].max(0.0);
            let sf = (-ty.alpha * d - ty.beta * d * d).exp();
            r[k] += sign * ty.weight * ty.rho[k] * (-ty.alpha - 2.0 * ty.beta * d) * sf;
        }
    }
    r
}

/// Reduced gradient for a stationary control: per cell,
/// `(∫λ⁽⁰⁾dt + κ c₂ T q⁽⁰⁾, ∫λ⁽¹⁾dt + κ c₂ T q⁽¹⁾)` with `κ` the
/// objective's penalty-derivative factor.
pub fn reduced_gradient(
    control: &ControlSnapshot,
    adjoint: &AdjointSolution,
    c2: f64,
    penalty_factor: f64,
    t_final: f64,
) -> ControlSnapshot {
    let n = control.n_cells();
    let scale = penalty_factor * c2 * t_final;
    let mut g = ControlSnapshot::zeros(n);
    for k in 0..n {
        g.q0[k] = adjoint.lambda0_int[k] + scale * control.q0[k];
        g.q1x[k] = adjoint.lambda1x_int[k] + scale * control.q1x[k];
        g.q1y[k] = adjoint.lambda1y_int[k] + scale * control.q1y[k];
    }
    g
}

/// Per-cell surviving fraction under the resident region's LQ parameters.
pub fn survival_field(dose: &DoseMap, regions: &RegionMap, alpha: [f64; 3], beta: [f64; 3]) -> Vec<f64> {
    (0..dose.values.len())
        .map(|k| {
            let i = match regions.labels[k] {
                Tissue::Tumor => 0,
                Tissue::Risk => 1,
                Tissue::Normal => 2,
            };
            let d = dose.values[k].max(0.0);
            (-alpha[i] * d - beta[i] * d * d).exp()
        })
        .collect()
}
