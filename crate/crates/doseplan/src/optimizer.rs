//! Projected gradient descent over admissible stationary control fields.
//!
//! Each iterate is `q_{k+1} = proj(q_k − s_k ∇j(q_k))` with an Armijo
//! backtracking line search on `s_k`. The projection clamps `q⁽⁰⁾` into
//! `[0, U(x)]` and rescales `q⁽¹⁾` into the realizable cone. Iteration
//! stops when both the iterate change and the projected-gradient residual
//! fall below the tolerance in the ∞-norm.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::grid::{Grid, RegionMap, SourceCapField};
use crate::objectives::{
    adjoint_source_sf, adjoint_source_tracking, dose, j_sf, j_tracking, reduced_gradient,
    CellModel, DoseMap, TrackingSpec, SF_PENALTY_FACTOR, TRACKING_PENALTY_FACTOR,
};
use crate::physics::{MaterialField, FLUX_MARGIN};
use crate::transport::{ControlField, ControlSnapshot, GhostMode, TransportSolver};
use crate::{Error, Result};

/// Armijo backtracking parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArmijoParams {
    pub initial_step: f64,
    pub shrink: f64,
    pub sufficient_decrease: f64,
    pub max_backtracks: usize,
}

impl Default for ArmijoParams {
    fn default() -> Self {
        ArmijoParams {
            initial_step: 1.0,
            shrink: 0.5,
            sufficient_decrease: 1e-4,
            max_backtracks: 30,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectiveKind {
    Tracking,
    Sf,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub max_iters: usize,
    /// Convergence tolerance on both ∞-norms.
    pub tol: f64,
    pub armijo: ArmijoParams,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            max_iters: 200,
            tol: 1e-4,
            armijo: ArmijoParams::default(),
        }
    }
}

impl OptimizerConfig {
    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::Config(format!("tolerance must be positive, got {}", self.tol)));
        }
        if !(self.armijo.shrink > 0.0 && self.armijo.shrink < 1.0) {
            return Err(Error::Config(format!(
                "Armijo shrink factor must lie in (0,1), got {}",
                self.armijo.shrink
            )));
        }
        if !(self.armijo.initial_step > 0.0) {
            return Err(Error::Config("Armijo initial step must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RunStatus {
    Converged,
    MaxIterations,
    StalledLineSearch,
}

/// One accepted iterate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iter: usize,
    pub objective: f64,
    pub step: f64,
    /// ∞-norm of `q_{k+1} − q_k`.
    pub dq_inf: f64,
    /// ∞-norm of `q_k − proj(q_k − ∇j)` at the iterate that was stepped from.
    pub pg_inf: f64,
    pub wall_time_s: f64,
}

/// Result of an optimization run.
#[derive(Debug, Clone)]
pub struct OptimizerRun {
    pub control: ControlSnapshot,
    pub dose: DoseMap,
    pub objective: f64,
    pub history: Vec<IterationRecord>,
    pub status: RunStatus,
}

/// Objective data for one scenario.
#[derive(Debug, Clone)]
pub enum ObjectiveSpec {
    Tracking(TrackingSpec),
    Sf(CellModel),
}

impl ObjectiveSpec {
    pub fn kind(&self) -> ObjectiveKind {
        match self {
            ObjectiveSpec::Tracking(_) => ObjectiveKind::Tracking,
            ObjectiveSpec::Sf(_) => ObjectiveKind::Sf,
        }
    }

    pub fn c2(&self) -> f64 {
        match self {
            ObjectiveSpec::Tracking(s) => s.c2,
            ObjectiveSpec::Sf(m) => m.c2,
        }
    }

    pub fn penalty_factor(&self) -> f64 {
        match self {
            ObjectiveSpec::Tracking(_) => TRACKING_PENALTY_FACTOR,
            ObjectiveSpec::Sf(_) => SF_PENALTY_FACTOR,
        }
    }
}

/// Assembled scenario: everything an optimization run needs.
pub struct Problem<'a> {
    pub grid: &'a Grid,
    pub regions: &'a RegionMap,
    pub materials: &'a MaterialField,
    pub caps: &'a SourceCapField,
    pub objective: ObjectiveSpec,
    pub t_final: f64,
    pub cfl: f64,
    pub snapshot_stride: Option<usize>,
}

impl<'a> Problem<'a> {
    fn solver(&self) -> TransportSolver<'a> {
        let mut s = TransportSolver::new(self.grid, self.materials);
        s.ghost = GhostMode::Vacuum;
        s.cfl = self.cfl;
        s.snapshot_stride = self.snapshot_stride;
        s
    }

    /// Forward solve + objective value for a stationary control.
    pub fn evaluate(&self, q: &ControlSnapshot) -> Result<(f64, DoseMap, bool)> {
        let control = ControlField::Stationary(q.clone());
        let traj = self.solver().solve_state(&control, self.t_final)?;
        let d = dose(&traj);
        let j = match &self.objective {
            ObjectiveSpec::Tracking(spec) => j_tracking(&d, &control, spec, self.grid, self.t_final),
            ObjectiveSpec::Sf(model) => j_sf(&d, &control, model, self.grid, self.t_final),
        };
        Ok((j, d, traj.realizable))
    }

    /// Adjoint solve + reduced gradient at `q` given its dose map.
    pub fn gradient(&self, q: &ControlSnapshot, d: &DoseMap) -> Result<ControlSnapshot> {
        let r = match &self.objective {
            ObjectiveSpec::Tracking(spec) => adjoint_source_tracking(d, spec),
            ObjectiveSpec::Sf(model) => adjoint_source_sf(d, model),
        };
        let adj = self.solver().solve_adjoint(&r, self.t_final)?;
        Ok(reduced_gradient(
            q,
            &adj,
            self.objective.c2(),
            self.objective.penalty_factor(),
            self.t_final,
        ))
    }
}

/// Projects raw control moments onto the admissible set: per cell,
/// `q⁽⁰⁾ = clamp(raw⁽⁰⁾, 0, U(x))`, then `q⁽¹⁾` rescaled so
/// `|q⁽¹⁾| ≤ (1 − 10⁻⁸) q⁽⁰⁾`.
pub fn project_control(raw: &ControlSnapshot, caps: &SourceCapField) -> ControlSnapshot {
    let n = raw.n_cells();
    let mut out = ControlSnapshot::zeros(n);
    for k in 0..n {
        let q0 = raw.q0[k].clamp(0.0, caps.values[k]);
        let mag = (raw.q1x[k].powi(2) + raw.q1y[k].powi(2)).sqrt();
        let limit = (1.0 - FLUX_MARGIN) * q0;
        let scale = if mag > limit {
            if mag > 0.0 {
                limit / mag
            } else {
                0.0
            }
        } else {
            1.0
        };
        out.q0[k] = q0;
        out.q1x[k] = raw.q1x[k] * scale;
        out.q1y[k] = raw.q1y[k] * scale;
    }
    out
}

fn axpy_project(q: &ControlSnapshot, g: &ControlSnapshot, step: f64, caps: &SourceCapField) -> ControlSnapshot {
    let n = q.n_cells();
    let mut raw = ControlSnapshot::zeros(n);
    for k in 0..n {
        raw.q0[k] = q.q0[k] - step * g.q0[k];
        raw.q1x[k] = q.q1x[k] - step * g.q1x[k];
        raw.q1y[k] = q.q1y[k] - step * g.q1y[k];
    }
    project_control(&raw, caps)
}

fn inf_diff(a: &ControlSnapshot, b: &ControlSnapshot) -> f64 {
    let mut m: f64 = 0.0;
    for k in 0..a.n_cells() {
        m = m
            .max((a.q0[k] - b.q0[k]).abs())
            .max((a.q1x[k] - b.q1x[k]).abs())
            .max((a.q1y[k] - b.q1y[k]).abs());
    }
    m
}

fn inner(grid: &Grid, a: &ControlSnapshot, b: &ControlSnapshot) -> f64 {
    let area = grid.cell_area();
    let mut s = 0.0;
    for k in 0..a.n_cells() {
        s += a.q0[k] * b.q0[k] + a.q1x[k] * b.q1x[k] + a.q1y[k] * b.q1y[k];
    }
    s * area
}

fn diff(a: &ControlSnapshot, b: &ControlSnapshot) -> ControlSnapshot {
    let n = a.n_cells();
    let mut d = ControlSnapshot::zeros(n);
    for k in 0..n {
        d.q0[k] = a.q0[k] - b.q0[k];
        d.q1x[k] = a.q1x[k] - b.q1x[k];
        d.q1y[k] = a.q1y[k] - b.q1y[k];
    }
    d
}

/// Runs projected gradient descent from `q₀ = 0`.
///
/// `on_iteration` is called after every accepted step with the new iterate
/// and its record (used for logging and checkpointing).
pub fn optimize_with(
    problem: &Problem<'_>,
    config: &OptimizerConfig,
    mut on_iteration: Option<&mut dyn FnMut(&ControlSnapshot, &IterationRecord)>,
) -> Result<OptimizerRun> {
    config.validate()?;
    let n = problem.grid.n_cells();
    let start = Instant::now();

    let mut q = project_control(&ControlSnapshot::zeros(n), problem.caps);
    let (mut j, mut d, realizable) = problem.evaluate(&q)?;
    if !realizable {
        return Err(Error::Solver("initial forward solve violated realizability".into()));
    }
    let mut history: Vec<IterationRecord> = Vec::new();
    let mut status = RunStatus::MaxIterations;
    let mut prev_step = config.armijo.initial_step;
    let mut last_dq: Option<f64> = None;

    for iter in 0..config.max_iters {
        let g = problem.gradient(&q, &d)?;
        let pg_inf = inf_diff(&q, &axpy_project(&q, &g, 1.0, problem.caps));
        if pg_inf < config.tol && last_dq.is_none_or(|dq| dq < config.tol) {
            status = RunStatus::Converged;
            break;
        }

        // warm-started backtracking: try one growth over the last accepted
        // step, capped at the configured initial step
        let mut step = (prev_step / config.armijo.shrink).min(config.armijo.initial_step);
        let mut accepted = None;
        for _ in 0..=config.armijo.max_backtracks {
            let trial = axpy_project(&q, &g, step, problem.caps);
            let (jt, dt, ok) = problem.evaluate(&trial)?;
            if !ok {
                return Err(Error::Solver("forward solve violated realizability".into()));
            }
            let decrease = inner(problem.grid, &g, &diff(&q, &trial));
            // strict decrease: equality means the step is below floating
            // point resolution and the search should stall instead of
            // spinning on null steps
            if jt <= j - config.armijo.sufficient_decrease * decrease && jt < j {
                accepted = Some((trial, jt, dt, step));
                break;
            }
            step *= config.armijo.shrink;
        }

        let Some((q_new, j_new, d_new, s)) = accepted else {
            status = RunStatus::StalledLineSearch;
            break;
        };

        debug_assert!(ControlField::Stationary(q_new.clone())
            .is_admissible(problem.caps, 1e-12));

        let dq = inf_diff(&q_new, &q);
        last_dq = Some(dq);
        q = q_new;
        j = j_new;
        d = d_new;
        prev_step = s;

        let record = IterationRecord {
            iter,
            objective: j,
            step: s,
            dq_inf: dq,
            pg_inf,
            wall_time_s: start.elapsed().as_secs_f64(),
        };
        if let Some(cb) = on_iteration.as_deref_mut() {
            cb(&q, &record);
        }
        history.push(record);

        if dq < config.tol && pg_inf < config.tol {
            // confirmed at the next iteration's residual check; cheap exit
            // here when the gradient residual is already tiny
            let g_next = problem.gradient(&q, &d)?;
            let pg_next = inf_diff(&q, &axpy_project(&q, &g_next, 1.0, problem.caps));
            if pg_next < config.tol {
                status = RunStatus::Converged;
                break;
            }
        }
    }

    Ok(OptimizerRun {
        control: q,
        dose: d,
        objective: j,
        history,
        status,
    })
}

/// [`optimize_with`] without a callback.
pub fn optimize(problem: &Problem<'_>, config: &OptimizerConfig) -> Result<OptimizerRun> {
    optimize_with(problem, config, None)
}
