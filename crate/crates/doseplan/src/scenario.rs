//! Scenario assembly: run configuration, presets, experiment driver, and
//! report/field export.
//!
//! A run is fully described by a TOML document (see the repo README for
//! the schema). Unknown keys are rejected. All defaults are resolved
//! before anything is solved and the resolved configuration is echoed
//! into the run manifest together with a content hash, so a run directory
//! is sufficient to reproduce the run exactly.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::export::{write_int_field, write_scalar_field, write_vector_field};
use crate::grid::{
    build_grid, classify_regions_with, default_delta, default_eps, source_cap, Edge, Grid,
    RegionMap, RegionRects, SourceCapField, TargetCase, Tissue,
};
use crate::objectives::{survival_field, CellModel, DoseMap, TrackingSpec};
use crate::optimizer::{
    optimize_with, ArmijoParams, IterationRecord, ObjectiveKind, ObjectiveSpec, OptimizerConfig,
    OptimizerRun, Problem, RunStatus,
};
use crate::physics::{materials_from_regions, MaterialField, MaterialParams};
use crate::sn::sn_reference_solve;
use crate::transport::{ControlField, ControlSnapshot, GhostMode, TransportSolver, CFL_DEFAULT};
use crate::{Error, Result};

/// Default total maximum source level `q_max`.
pub const DEFAULT_Q_MAX: f64 = 8.0;
/// Default control weight `c₂`.
pub const DEFAULT_C2: f64 = 0.4;
/// LQ parameters per tissue type (tumor, risk, normal).
pub const DEFAULT_LQ_ALPHA: [f64; 3] = [0.52, 0.170, 0.170];
pub const DEFAULT_LQ_BETA: [f64; 3] = [0.171, 0.0078, 0.0078];
pub const DEFAULT_SF_WEIGHTS: [f64; 3] = [500.0, 2000.0, 1.0];
/// Tracking weights (tumor, risk, normal).
pub const DEFAULT_TRACKING_WEIGHTS: [f64; 3] = [25.0, 150.0, 1.0];
pub const DEFAULT_FINAL_TIME: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub nx: usize,
    pub ny: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseConfig {
    pub target: TargetCase,
    /// Optional override of the target rectangles.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rects: Option<RegionRects>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialsConfig {
    pub void_sigma_a: Option<f64>,
    pub void_sigma_s: Option<f64>,
    pub tissue_sigma_a: Option<f64>,
    pub tissue_sigma_s: Option<f64>,
    pub g: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransportConfig {
    pub final_time: f64,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot_stride: Option<usize>,
}

fn default_cfl() -> f64 {
    CFL_DEFAULT
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceCapConfig {
    pub q_max: f64,
    /// Defaults to `min(dx, dy)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    /// Defaults to `10⁻⁴ · min(dx, dy)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default)]
    pub blocked: Vec<Edge>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrackingWeightsConfig {
    pub c_tumor: f64,
    pub c_risk: f64,
    pub c_normal: f64,
    pub c2: f64,
    /// Prescribed dose level on the tumor region.
    pub d_bar: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SfWeightsConfig {
    /// Objective weights `a_i` (tumor, risk, normal).
    pub weights: [f64; 3],
    pub alpha: [f64; 3],
    pub beta: [f64; 3],
    pub c2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectiveConfig {
    pub kind: ObjectiveKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tracking: Option<TrackingWeightsConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sf: Option<SfWeightsConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSettings {
    pub max_iters: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_initial_step")]
    pub initial_step: f64,
    #[serde(default = "default_shrink")]
    pub shrink: f64,
    #[serde(default = "default_sufficient_decrease")]
    pub sufficient_decrease: f64,
    #[serde(default = "default_max_backtracks")]
    pub max_backtracks: usize,
    /// Control checkpoint interval in iterations.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoint_every: Option<usize>,
}

fn default_tol() -> f64 {
    1e-4
}
fn default_initial_step() -> f64 {
    1.0
}
fn default_shrink() -> f64 {
    0.5
}
fn default_sufficient_decrease() -> f64 {
    1e-4
}
fn default_max_backtracks() -> usize {
    30
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    pub n_angles: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub directory: Option<PathBuf>,
    #[serde(default)]
    pub export_snapshots: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridConfig,
    pub case: CaseConfig,
    pub materials: MaterialsConfig,
    pub transport: TransportConfig,
    pub source_cap: SourceCapConfig,
    pub objective: ObjectiveConfig,
    pub optimizer: OptimizerSettings,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

/// Parses a TOML config document; unknown keys are rejected.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
}

/// Everything a run needs, with all defaults made concrete.
#[derive(Debug)]
pub struct Scenario {
    pub config: RunConfig,
    pub grid: Grid,
    pub regions: RegionMap,
    pub materials: MaterialField,
    pub caps: SourceCapField,
    pub objective: ObjectiveSpec,
    pub optimizer: OptimizerConfig,
}

fn require(value: Option<f64>, what: &str, hypothesis: &str) -> Result<f64> {
    value.ok_or_else(|| {
        Error::Hypothesis(format!(
            "({hypothesis}) {what} is required but missing from the configuration"
        ))
    })
}

impl RunConfig {
    /// Validates the configuration and assembles all module objects.
    /// Defaults (eps, delta, output directory) are resolved into the
    /// returned scenario's `config`.
    pub fn resolve(&self) -> Result<Scenario> {
        let grid = build_grid(self.grid.nx, self.grid.ny)?;
        let rects = self
            .case
            .rects
            .clone()
            .unwrap_or_else(|| self.case.target.rects());
        let regions = classify_regions_with(&grid, &rects);

        let void = MaterialParams {
            sigma_a: require(self.materials.void_sigma_a, "void sigma_a", "H-3")?,
            sigma_s: require(self.materials.void_sigma_s, "void sigma_s", "H-1")?,
        };
        let tissue = MaterialParams {
            sigma_a: require(self.materials.tissue_sigma_a, "tissue sigma_a", "H-3")?,
            sigma_s: require(self.materials.tissue_sigma_s, "tissue sigma_s", "H-1")?,
        };
        let materials = materials_from_regions(&regions, void, tissue, self.materials.g)?;

        let eps = self.source_cap.eps.unwrap_or_else(|| default_eps(&grid));
        let delta = self.source_cap.delta.unwrap_or_else(|| default_delta(&grid));
        let caps = source_cap(&grid, self.source_cap.q_max, eps, delta, &self.source_cap.blocked)?;

        if !(self.transport.final_time > 0.0) {
            return Err(Error::Config(format!(
                "final_time must be positive, got {}",
                self.transport.final_time
            )));
        }
        if !(self.transport.cfl > 0.0 && self.transport.cfl <= CFL_DEFAULT) {
            return Err(Error::Config(format!(
                "cfl must lie in (0, {CFL_DEFAULT}], got {}",
                self.transport.cfl
            )));
        }

        let objective = match self.objective.kind {
            ObjectiveKind::Tracking => {
                let w = self.objective.tracking.as_ref().ok_or_else(|| {
                    Error::Config("objective.kind = \"tracking\" needs an [objective.tracking] table".into())
                })?;
                ObjectiveSpec::Tracking(TrackingSpec::from_regions(
                    &regions, w.c_tumor, w.c_risk, w.c_normal, w.c2, w.d_bar,
                )?)
            }
            ObjectiveKind::Sf => {
                let w = self.objective.sf.as_ref().ok_or_else(|| {
                    Error::Config("objective.kind = \"sf\" needs an [objective.sf] table".into())
                })?;
                ObjectiveSpec::Sf(CellModel::from_regions(
                    &regions, w.weights, w.alpha, w.beta, w.c2,
                )?)
            }
        };

        let optimizer = OptimizerConfig {
            max_iters: self.optimizer.max_iters,
            tol: self.optimizer.tol,
            armijo: ArmijoParams {
                initial_step: self.optimizer.initial_step,
                shrink: self.optimizer.shrink,
                sufficient_decrease: self.optimizer.sufficient_decrease,
                max_backtracks: self.optimizer.max_backtracks,
            },
        };

        let mut resolved = self.clone();
        resolved.source_cap.eps = Some(eps);
        resolved.source_cap.delta = Some(delta);
        resolved.case.rects = Some(rects);

        Ok(Scenario {
            config: resolved,
            grid,
            regions,
            materials,
            caps,
            objective,
            optimizer,
        })
    }
}

/// Builds the configuration for a named experiment preset.
///
/// Names have the form `<case>-<objective>-<variant>` with case one of
/// `basic | intermediate | complex`, objective `tracking | sf`, and
/// variant `baseline | low-risk | blocked`.
pub fn preset(name: &str) -> Result<RunConfig> {
    let lower = name.to_ascii_lowercase().replace('_', "-");
    let mut parts = lower.splitn(3, '-');
    let case = match parts.next() {
        Some("basic") => TargetCase::Basic,
        Some("intermediate") => TargetCase::Intermediate,
        Some("complex") => TargetCase::Complex,
        _ => return Err(Error::Config(format!("unknown preset '{name}'"))),
    };
    let kind = match parts.next() {
        Some("tracking") => ObjectiveKind::Tracking,
        Some("sf") => ObjectiveKind::Sf,
        _ => return Err(Error::Config(format!("unknown preset '{name}'"))),
    };
    let variant = parts.next().unwrap_or("");
    let (low_risk, blocked) = match variant {
        "baseline" => (false, false),
        "low-risk" => (true, false),
        "blocked" => (false, true),
        _ => return Err(Error::Config(format!("unknown preset '{name}'"))),
    };

    let blocked_edges = if blocked {
        match case {
            TargetCase::Basic | TargetCase::Intermediate => vec![Edge::Left],
            TargetCase::Complex => vec![Edge::Right],
        }
    } else {
        Vec::new()
    };

    let tracking = TrackingWeightsConfig {
        c_tumor: DEFAULT_TRACKING_WEIGHTS[0],
        c_risk: if low_risk { 50.0 } else { DEFAULT_TRACKING_WEIGHTS[1] },
        c_normal: DEFAULT_TRACKING_WEIGHTS[2],
        c2: DEFAULT_C2,
        d_bar: DEFAULT_FINAL_TIME,
    };
    let sf = SfWeightsConfig {
        weights: [
            DEFAULT_SF_WEIGHTS[0],
            if low_risk { 1000.0 } else { DEFAULT_SF_WEIGHTS[1] },
            DEFAULT_SF_WEIGHTS[2],
        ],
        alpha: DEFAULT_LQ_ALPHA,
        beta: DEFAULT_LQ_BETA,
        c2: DEFAULT_C2,
    };

    Ok(RunConfig {
        grid: GridConfig { nx: 100, ny: 100 },
        case: CaseConfig { target: case, rects: None },
        materials: MaterialsConfig {
            void_sigma_a: Some(0.001),
            void_sigma_s: Some(0.01),
            tissue_sigma_a: Some(0.05),
            tissue_sigma_s: Some(0.5),
            g: 0.85,
        },
        transport: TransportConfig {
            final_time: DEFAULT_FINAL_TIME,
            cfl: CFL_DEFAULT,
            snapshot_stride: None,
        },
        source_cap: SourceCapConfig {
            q_max: DEFAULT_Q_MAX,
            eps: None,
            delta: None,
            blocked: blocked_edges,
        },
        objective: ObjectiveConfig {
            kind,
            tracking: (kind == ObjectiveKind::Tracking).then_some(tracking),
            sf: (kind == ObjectiveKind::Sf).then_some(sf),
        },
        optimizer: OptimizerSettings {
            max_iters: 200,
            tol: default_tol(),
            initial_step: default_initial_step(),
            shrink: default_shrink(),
            sufficient_decrease: default_sufficient_decrease(),
            max_backtracks: default_max_backtracks(),
            checkpoint_every: Some(25),
        },
        oracle: None,
        output: OutputConfig {
            directory: Some(PathBuf::from(format!("runs/{lower}"))),
            export_snapshots: false,
        },
    })
}

/// All preset names, in a stable order.
pub fn preset_names() -> Vec<String> {
    let mut names = Vec::new();
    for case in ["basic", "intermediate", "complex"] {
        for objective in ["tracking", "sf"] {
            for variant in ["baseline", "low-risk", "blocked"] {
                names.push(format!("{case}-{objective}-{variant}"));
            }
        }
    }
    names
}

/// Per-region aggregates for the run summary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionStats {
    pub cells: usize,
    pub area: f64,
    pub mean_dose: f64,
    pub max_dose: f64,
    pub min_dose: f64,
    pub mean_survival: f64,
    pub killed_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub objective_kind: ObjectiveKind,
    pub final_objective: f64,
    pub iterations: usize,
    pub status: RunStatus,
    pub tumor: RegionStats,
    pub risk: RegionStats,
    pub normal: RegionStats,
}

/// Computes per-region statistics from a dose map and survival field.
pub fn region_stats(
    regions: &RegionMap,
    grid: &Grid,
    dose: &[f64],
    survival: &[f64],
    tissue: Tissue,
) -> RegionStats {
    let mut cells = 0usize;
    let mut sum = 0.0;
    let mut max = f64::NEG_INFINITY;
    let mut min = f64::INFINITY;
    let mut surv = 0.0;
    for k in 0..regions.n_cells() {
        if regions.labels[k] != tissue {
            continue;
        }
        cells += 1;
        sum += dose[k];
        max = max.max(dose[k]);
        min = min.min(dose[k]);
        surv += survival[k];
    }
    if cells == 0 {
        return RegionStats {
            cells: 0,
            area: 0.0,
            mean_dose: 0.0,
            max_dose: 0.0,
            min_dose: 0.0,
            mean_survival: 1.0,
            killed_fraction: 0.0,
        };
    }
    let mean_survival = surv / cells as f64;
    RegionStats {
        cells,
        area: cells as f64 * grid.cell_area(),
        mean_dose: sum / cells as f64,
        max_dose: max,
        min_dose: min,
        mean_survival,
        killed_fraction: 1.0 - mean_survival,
    }
}

fn lq_params(scenario: &Scenario) -> ([f64; 3], [f64; 3]) {
    match (&scenario.objective, &scenario.config.objective.sf) {
        (ObjectiveSpec::Sf(_), Some(sf)) => (sf.alpha, sf.beta),
        _ => (DEFAULT_LQ_ALPHA, DEFAULT_LQ_BETA),
    }
}

/// Builds the summary for a finished optimization run.
pub fn summarize(scenario: &Scenario, run: &OptimizerRun) -> Summary {
    let (alpha, beta) = lq_params(scenario);
    let survival = survival_field(&run.dose, &scenario.regions, alpha, beta);
    Summary {
        objective_kind: scenario.objective.kind(),
        final_objective: run.objective,
        iterations: run.history.len(),
        status: run.status,
        tumor: region_stats(&scenario.regions, &scenario.grid, &run.dose.values, &survival, Tissue::Tumor),
        risk: region_stats(&scenario.regions, &scenario.grid, &run.dose.values, &survival, Tissue::Risk),
        normal: region_stats(&scenario.regions, &scenario.grid, &run.dose.values, &survival, Tissue::Normal),
    }
}

fn write_iteration_header(path: &Path) -> Result<()> {
    fs::write(path, "iter,objective,step,dq_inf,pg_inf,wall_time_s\n").map_err(|e| Error::io(path, e))
}

fn append_iteration(path: &Path, rec: &IterationRecord) -> Result<()> {
    let mut file = fs::OpenOptions::new()
        .append(true)
        .open(path)
        .map_err(|e| Error::io(path, e))?;
    writeln!(
        file,
        "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.6}",
        rec.iter, rec.objective, rec.step, rec.dq_inf, rec.pg_inf, rec.wall_time_s
    )
    .map_err(|e| Error::io(path, e))
}

/// Dose band index at 5% steps of the maximum prescribed dose.
pub fn dose_bands(dose: &DoseMap, d_bar_max: f64) -> Vec<i64> {
    let step = 0.05 * d_bar_max;
    dose.values
        .iter()
        .map(|&d| if step > 0.0 { (d / step).floor() as i64 } else { 0 })
        .collect()
}

/// Survival band index at 10% steps of surviving fraction.
pub fn survival_bands(survival: &[f64]) -> Vec<i64> {
    survival
        .iter()
        .map(|&s| ((s * 10.0).floor() as i64).clamp(0, 9))
        .collect()
}

/// Runs a full scenario and writes all artifacts into the output
/// directory. Returns the summary and the directory used.
pub fn run_scenario(config: &RunConfig, out_override: Option<&Path>) -> Result<(Summary, PathBuf)> {
    let scenario = config.resolve()?;
    let out_dir = out_override
        .map(Path::to_path_buf)
        .or_else(|| scenario.config.output.directory.clone())
        .unwrap_or_else(|| PathBuf::from("runs/unnamed"));
    fs::create_dir_all(&out_dir).map_err(|e| Error::io(&out_dir, e))?;

    match run_scenario_inner(&scenario, &out_dir) {
        Ok(summary) => Ok((summary, out_dir)),
        Err(e) => {
            // partial-results marker for aborted runs
            let marker = out_dir.join("INCOMPLETE");
            let _ = fs::write(&marker, format!("{e}\n"));
            Err(e)
        }
    }
}

fn run_scenario_inner(scenario: &Scenario, out_dir: &Path) -> Result<Summary> {
    let manifest_toml = toml::to_string_pretty(&scenario.config)
        .map_err(|e| Error::Config(format!("manifest serialization: {e}")))?;
    let hash = hex::encode(Sha256::digest(manifest_toml.as_bytes()));
    let manifest = format!("# content_hash = \"{hash}\"\n{manifest_toml}");
    let manifest_path = out_dir.join("manifest.toml");
    fs::write(&manifest_path, manifest).map_err(|e| Error::io(&manifest_path, e))?;

    let iter_log = out_dir.join("iterations.csv");
    write_iteration_header(&iter_log)?;

    let problem = Problem {
        grid: &scenario.grid,
        regions: &scenario.regions,
        materials: &scenario.materials,
        caps: &scenario.caps,
        objective: scenario.objective.clone(),
        t_final: scenario.config.transport.final_time,
        cfl: scenario.config.transport.cfl,
        snapshot_stride: scenario.config.transport.snapshot_stride,
    };

    let checkpoint_every = scenario.config.optimizer.checkpoint_every.unwrap_or(0);
    let grid = &scenario.grid;
    let mut callback_err: Option<Error> = None;
    let mut callback = |q: &ControlSnapshot, rec: &IterationRecord| {
        if callback_err.is_some() {
            return;
        }
        let step = || -> Result<()> {
            append_iteration(&iter_log, rec)?;
            if checkpoint_every > 0 && (rec.iter + 1) % checkpoint_every == 0 {
                write_scalar_field(out_dir.join("checkpoint_q0.csv"), grid, &q.q0)?;
            }
            Ok(())
        };
        if let Err(e) = step() {
            callback_err = Some(e);
        }
    };
    let run = optimize_with(&problem, &scenario.optimizer, Some(&mut callback))?;
    if let Some(e) = callback_err {
        return Err(e);
    }

    // fields
    let codes: Vec<i64> = scenario.regions.labels.iter().map(|l| l.code()).collect();
    write_int_field(out_dir.join("region_map.csv"), grid, &codes)?;
    write_scalar_field(out_dir.join("source_cap.csv"), grid, &scenario.caps.values)?;
    write_scalar_field(out_dir.join("control_q0.csv"), grid, &run.control.q0)?;
    // the displayed first moment is its time integral over the horizon
    let t = scenario.config.transport.final_time;
    let q1x_int: Vec<f64> = run.control.q1x.iter().map(|v| v * t).collect();
    let q1y_int: Vec<f64> = run.control.q1y.iter().map(|v| v * t).collect();
    write_vector_field(out_dir.join("control_q1_int.csv"), grid, &q1x_int, &q1y_int)?;
    write_scalar_field(out_dir.join("dose.csv"), grid, &run.dose.values)?;

    if let ObjectiveSpec::Tracking(spec) = &scenario.objective {
        let d_bar_max = spec.d_bar.iter().cloned().fold(0.0, f64::max);
        write_int_field(out_dir.join("dose_bands.csv"), grid, &dose_bands(&run.dose, d_bar_max))?;
    }

    let (alpha, beta) = lq_params(scenario);
    let survival = survival_field(&run.dose, &scenario.regions, alpha, beta);
    write_scalar_field(out_dir.join("survival.csv"), grid, &survival)?;
    write_int_field(out_dir.join("survival_bands.csv"), grid, &survival_bands(&survival))?;

    if scenario.config.output.export_snapshots {
        // final state snapshot only; full trajectories are rebuilt on demand
        let control = ControlField::Stationary(run.control.clone());
        let mut solver = TransportSolver::new(grid, &scenario.materials);
        solver.ghost = GhostMode::Vacuum;
        solver.cfl = scenario.config.transport.cfl;
        let traj = solver.solve_state(&control, t)?;
        write_scalar_field(out_dir.join("final_psi0.csv"), grid, &traj.final_state.psi0)?;
    }

    let summary = summarize(scenario, &run);
    let summary_path = out_dir.join("summary.json");
    let json = serde_json::to_string_pretty(&summary)
        .map_err(|e| Error::Config(format!("summary serialization: {e}")))?;
    fs::write(&summary_path, json).map_err(|e| Error::io(&summary_path, e))?;
    Ok(summary)
}

/// Report of the discrete-ordinates comparison.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct OracleReport {
    pub n_angles: usize,
    pub l1_m1: f64,
    pub l1_sn: f64,
    pub l1_diff: f64,
    pub relative_diff: f64,
}

/// Compares the M1 dose against the discrete-ordinates oracle for the
/// configured scenario, driving both with the cap field as the control
/// (`q⁽⁰⁾ = U(x)`, `q⁽¹⁾ = 0`).
pub fn oracle_compare(config: &RunConfig) -> Result<OracleReport> {
    let scenario = config.resolve()?;
    let n_angles = config.oracle.as_ref().map_or(16, |o| o.n_angles);
    let n = scenario.grid.n_cells();
    let control = ControlField::Stationary(ControlSnapshot {
        q0: scenario.caps.values.clone(),
        q1x: vec![0.0; n],
        q1y: vec![0.0; n],
    });
    let t = scenario.config.transport.final_time;
    let mut solver = TransportSolver::new(&scenario.grid, &scenario.materials);
    solver.cfl = scenario.config.transport.cfl;
    let m1_dose = solver.solve_state(&control, t)?.int0;
    let sn_dose = sn_reference_solve(&control, &scenario.materials, &scenario.grid, t, n_angles)?;
    let area = scenario.grid.cell_area();
    let l1_m1: f64 = m1_dose.iter().map(|v| v.abs() * area).sum();
    let l1_sn: f64 = sn_dose.iter().map(|v| v.abs() * area).sum();
    let l1_diff: f64 = m1_dose
        .iter()
        .zip(&sn_dose)
        .map(|(a, b)| (a - b).abs() * area)
        .sum();
    Ok(OracleReport {
        n_angles,
        l1_m1,
        l1_sn,
        l1_diff,
        relative_diff: if l1_sn > 0.0 { l1_diff / l1_sn } else { 0.0 },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_basic_tracking_baseline() {
        let cfg = preset("basic-tracking-baseline").unwrap();
        let w = cfg.objective.tracking.as_ref().unwrap();
        assert_eq!(w.c_tumor, 25.0);
        assert_eq!(w.c_risk, 150.0);
        assert_eq!(w.c_normal, 1.0);
        assert_eq!(w.d_bar, 5.0);
        assert_eq!(cfg.transport.final_time, 5.0);
        assert!(cfg.source_cap.blocked.is_empty());
    }

    #[test]
    fn preset_complex_sf_blocked() {
        let cfg = preset("complex-sf-blocked").unwrap();
        assert_eq!(cfg.source_cap.blocked, vec![Edge::Right]);
        assert_eq!(cfg.objective.sf.as_ref().unwrap().weights[1], 2000.0);
    }

    #[test]
    fn preset_low_risk_variants() {
        let cfg = preset("intermediate-tracking-low-risk").unwrap();
        assert_eq!(cfg.objective.tracking.as_ref().unwrap().c_risk, 50.0);
        let cfg = preset("basic-sf-low_risk").unwrap();
        assert_eq!(cfg.objective.sf.as_ref().unwrap().weights[1], 1000.0);
    }

    #[test]
    fn preset_rejects_unknown() {
        assert!(preset("fancy-tracking-baseline").is_err());
        assert!(preset("basic-tracking").is_err());
        assert!(preset("basic-tracking-extreme").is_err());
    }

    #[test]
    fn preset_names_resolve() {
        for name in preset_names() {
            let cfg = preset(&name).unwrap();
            cfg.resolve().unwrap();
        }
    }

    #[test]
    fn config_round_trip_and_unknown_key() {
        let cfg = preset("basic-tracking-baseline").unwrap();
        let text = toml::to_string_pretty(&cfg).unwrap();
        let back = parse_config(&text).unwrap();
        assert_eq!(back, cfg);

        let bad = format!("{text}\n[grid2]\nnx = 3\n");
        assert!(parse_config(&bad).is_err());
        let bad = text.replace("nx = 100", "nx = 100\nn_x = 2");
        let err = parse_config(&bad).unwrap_err();
        assert!(err.to_string().contains("n_x"), "{err}");
    }

    #[test]
    fn missing_sigma_a_names_hypothesis() {
        let mut cfg = preset("basic-tracking-baseline").unwrap();
        cfg.materials.tissue_sigma_a = None;
        let err = cfg.resolve().unwrap_err();
        assert!(err.to_string().contains("H-3"), "{err}");
    }

    #[test]
    fn dry_run_zero_iterations() {
        let mut cfg = preset("basic-sf-baseline").unwrap();
        cfg.grid = GridConfig { nx: 12, ny: 12 };
        cfg.transport.final_time = 1.0;
        cfg.optimizer.max_iters = 0;
        let dir = tempfile::tempdir().unwrap();
        let (summary, _) = run_scenario(&cfg, Some(dir.path())).unwrap();
        assert_eq!(summary.iterations, 0);
        // the vacuum floor leaves a ~1e-30 residual dose
        assert!(summary.tumor.mean_dose < 1e-12);
        assert_eq!(summary.tumor.mean_survival, 1.0);
        assert!(dir.path().join("manifest.toml").exists());
        assert!(dir.path().join("dose.csv").exists());
        assert!(dir.path().join("summary.json").exists());
    }

    #[test]
    fn runs_are_deterministic_byte_identical() {
        let mut cfg = preset("basic-tracking-baseline").unwrap();
        cfg.grid = GridConfig { nx: 12, ny: 12 };
        cfg.transport.final_time = 1.0;
        cfg.optimizer.max_iters = 3;
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        run_scenario(&cfg, Some(d1.path())).unwrap();
        run_scenario(&cfg, Some(d2.path())).unwrap();
        for file in ["dose.csv", "control_q0.csv", "summary.json", "manifest.toml"] {
            let a = fs::read(d1.path().join(file)).unwrap();
            let b = fs::read(d2.path().join(file)).unwrap();
            assert_eq!(a, b, "{file} differs between identical runs");
        }
    }

    #[test]
    fn summary_matches_exported_fields() {
        let mut cfg = preset("basic-sf-baseline").unwrap();
        cfg.grid = GridConfig { nx: 16, ny: 16 };
        cfg.transport.final_time = 1.0;
        cfg.optimizer.max_iters = 2;
        let dir = tempfile::tempdir().unwrap();
        let (summary, _) = run_scenario(&cfg, Some(dir.path())).unwrap();

        let (_, dose) = crate::export::read_scalar_field(dir.path().join("dose.csv")).unwrap();
        let (_, codes) = crate::export::read_scalar_field(dir.path().join("region_map.csv")).unwrap();
        let (_, survival) = crate::export::read_scalar_field(dir.path().join("survival.csv")).unwrap();
        let tumor_cells: Vec<usize> = codes
            .iter()
            .enumerate()
            .filter(|(_, &c)| c as i64 == Tissue::Tumor.code())
            .map(|(k, _)| k)
            .collect();
        let mean_dose: f64 =
            tumor_cells.iter().map(|&k| dose[k]).sum::<f64>() / tumor_cells.len() as f64;
        let mean_surv: f64 =
            tumor_cells.iter().map(|&k| survival[k]).sum::<f64>() / tumor_cells.len() as f64;
        assert!((mean_dose - summary.tumor.mean_dose).abs() < 1e-12);
        assert!((mean_surv - summary.tumor.mean_survival).abs() < 1e-12);
    }

    #[test]
    fn oracle_report_on_small_grid() {
        let mut cfg = preset("basic-tracking-baseline").unwrap();
        cfg.grid = GridConfig { nx: 10, ny: 10 };
        cfg.transport.final_time = 1.0;
        cfg.oracle = Some(OracleConfig { n_angles: 8 });
        let report = oracle_compare(&cfg).unwrap();
        assert!(report.l1_m1 > 0.0);
        assert!(report.l1_sn > 0.0);
        assert!(report.relative_diff.is_finite());
    }
}
