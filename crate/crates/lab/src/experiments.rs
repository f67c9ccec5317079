//! Experiment pipelines: amplitude tuning, single runs, well profiles, the
//! dichotomy table and parameter sweeps.

use std::path::Path;

use pmwell_core::evolve::{
    blowup_report, decay_fit, dissipation_slack, energy_identity_residual, integrate_trajectory,
    theoretical_decay_exponent, Outcome, StepperConfig, TrajectoryRecord,
};
use pmwell_core::variational::{
    classify_state, depth_or_bound, embedding_constant, epsilon_star, estimate_b, first_eigen_p, profile_deltas,
    reduce_starts, source_coefficient, well_depth_start, ProfileOptions, WellClass, WellDepth, WellDepthOptions,
    WellProfile,
};
use pmwell_core::{energy_j, energy_report, Field, Grid, ProblemParams, SourceSpec};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, ExperimentKind, GridSection, SourceSection};
use crate::error::{LabError, Result};
use crate::io::{self, OutDir};
use crate::manifest::Manifest;

/// Well depth with the starts run concurrently. The reduction is order
/// independent, so the value does not depend on the worker count.
pub fn well_depth_parallel(grid: &Grid, params: &ProblemParams, delta: f64, opts: &WellDepthOptions) -> Result<WellDepth> {
    let results = (0..opts.starts.max(1))
        .into_par_iter()
        .map(|s| well_depth_start(grid, params, delta, s, opts))
        .collect::<pmwell_core::Result<Vec<_>>>()?;
    Ok(reduce_starts(grid, results)?)
}

/// `d(delta)` profile with the `delta` points evaluated concurrently.
pub fn well_profile_parallel(
    grid: &Grid,
    params: &ProblemParams,
    c_star: f64,
    a_coef: f64,
    opts: &ProfileOptions,
) -> Result<WellProfile> {
    let b_est = estimate_b(grid, params, &opts.depth, opts.zero_tol, opts.b_rel_tol)?;
    let deltas = profile_deltas(b_est, opts.points);
    let mut points: Vec<f64> = deltas.clone();
    points.push(1.0);
    let depths = points
        .par_iter()
        .map(|&dl| depth_or_bound(grid, params, dl, &opts.depth))
        .collect::<pmwell_core::Result<Vec<_>>>()?;
    let (d_peak, _) = depths[deltas.len()];
    let (d_values, converged): (Vec<f64>, Vec<bool>) = depths[..deltas.len()].iter().copied().unzip();
    Ok(WellProfile::assemble(
        params, a_coef, c_star, b_est, d_peak, deltas, d_values, converged,
    )?)
}

/// `a = sup u^m f(u) / u^(m gamma)` sampled up to the larger of 10 and the
/// last table knot.
pub fn growth_coefficient(params: &ProblemParams) -> Result<f64> {
    let u_max = match &params.source {
        SourceSpec::Tabulated { u, .. } => u.last().copied().unwrap_or(1.0).max(10.0),
        _ => 10.0,
    };
    Ok(source_coefficient(params, u_max, 400)?)
}

/// Which side of the Nehari manifold along the ray `A u0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Branch {
    /// `A < eps*`, where `I(A u0) > 0`.
    Stable,
    /// `A > eps*`, where `I(A u0) < 0`.
    Unstable,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum EnergyTarget {
    /// `J(A u0) < 0`, smallest such amplitude.
    Negative,
    /// `J(A u0) = fraction d`.
    Subcritical { fraction: f64, d: f64 },
    /// `J(A u0) = d`.
    Critical { d: f64 },
    /// `J(A u0) = d + fraction (J(eps* u0) - d)`.
    Supercritical { fraction: f64, d: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tuned {
    pub amplitude: f64,
    pub j: f64,
    pub i: f64,
    pub target_j: f64,
    pub eps_star: f64,
    /// `J(eps* u0)`, the top of the ray.
    pub j_max: f64,
}

const TUNE_ITER: usize = 200;

/// Bisection on the amplitude so that `J(A u0)` hits the target on the
/// requested branch. `J(A u0)` increases up to `eps*` and decreases beyond,
/// so each branch is monotone. `tol` bounds `|J - target|` for the level
/// targets and the relative amplitude bracket for `Negative`.
pub fn tune_initial_energy(
    grid: &Grid,
    params: &ProblemParams,
    base: &Field,
    target: EnergyTarget,
    branch: Branch,
    tol: f64,
) -> Result<Tuned> {
    let es = epsilon_star(grid, base, params)?;
    let j_at = |a: f64| energy_j(grid, &base.scaled(a), params);
    let j_max = j_at(es)?;
    let j_zero = j_at(0.0)?;
    let branch = if matches!(target, EnergyTarget::Negative) { Branch::Unstable } else { branch };
    let level = match target {
        EnergyTarget::Negative => 0.0,
        EnergyTarget::Subcritical { fraction, d } => fraction * d,
        EnergyTarget::Critical { d } => d,
        EnergyTarget::Supercritical { fraction, d } => d + fraction * (j_max - d),
    };
    let unreachable = |min: f64| LabError::TargetUnreachable {
        target: level,
        min,
        max: j_max,
    };
    if !(level < j_max) {
        return Err(unreachable(if branch == Branch::Stable { j_zero } else { f64::NEG_INFINITY }));
    }
    let (mut lo, mut hi) = match branch {
        Branch::Stable => {
            if !(level > j_zero) {
                return Err(unreachable(j_zero));
            }
            (0.0, es)
        }
        Branch::Unstable => {
            let mut hi = 2.0 * es;
            let mut n = 0;
            while j_at(hi)? >= level {
                hi *= 2.0;
                n += 1;
                if n > 60 {
                    return Err(unreachable(j_at(hi)?));
                }
            }
            (es, hi)
        }
    };
    // `above(a)`: a lies past the crossing in the direction of growing A.
    let above = |a: f64| -> Result<bool> {
        let j = j_at(a)?;
        Ok(match branch {
            Branch::Stable => j > level,
            Branch::Unstable => j < level,
        })
    };
    let negative = matches!(target, EnergyTarget::Negative);
    for _ in 0..TUNE_ITER {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if above(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
        if negative && hi - lo <= tol * es {
            break;
        }
    }
    // `Negative` needs `J < 0` strictly: take the far end of the bracket.
    let amplitude = if negative {
        hi
    } else {
        let (jl, jh) = (j_at(lo)?, j_at(hi)?);
        if (jl - level).abs() <= (jh - level).abs() {
            lo
        } else {
            hi
        }
    };
    let rep = energy_report(grid, &base.scaled(amplitude), params)?;
    let hit = if negative { rep.j < 0.0 } else { (rep.j - level).abs() <= tol };
    if !hit {
        return Err(LabError::TargetUnreachable {
            target: level,
            min: rep.j,
            max: j_max,
        });
    }
    Ok(Tuned {
        amplitude,
        j: rep.j,
        i: rep.i,
        target_j: level,
        eps_star: es,
        j_max,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayOut {
    pub mode: String,
    pub rate_or_exponent: f64,
    pub fit_r2: f64,
    pub samples: usize,
    pub theoretical_exponent: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub outcome: String,
    pub t_star_observed: Option<f64>,
    pub t_star_bound: Option<f64>,
    pub m_used: Option<f64>,
    pub epsilon: Option<f64>,
    pub blowup_note: Option<String>,
    pub decay_fit: Option<DecayOut>,
    pub decay_note: Option<String>,
    pub j0: f64,
    pub i0: f64,
    pub final_time: f64,
    pub final_norm: f64,
    pub steps: usize,
    pub rejected_steps: usize,
    pub i_sign_flips: usize,
    pub min_value: f64,
    pub energy_identity_residual: f64,
    pub dissipation_slack: f64,
    pub max_step_residual: f64,
    pub note: Option<String>,
}

/// Runs one trajectory and collects the blow-up and decay diagnostics.
pub fn single_run(
    grid: &Grid,
    params: &ProblemParams,
    u0: &Field,
    stepper: &StepperConfig,
) -> Result<(TrajectoryRecord, RunResult)> {
    let traj = integrate_trajectory(grid, u0, params, stepper)?;
    let result = summarize_run(grid, params, u0, &traj);
    Ok((traj, result))
}

pub fn summarize_run(grid: &Grid, params: &ProblemParams, u0: &Field, traj: &TrajectoryRecord) -> RunResult {
    let (mut t_bound, mut m_used, mut epsilon, mut blowup_note) = (None, None, None, None);
    let t_star = match traj.outcome {
        Outcome::BlowUp { t_star } => {
            match blowup_report(grid, u0, params, traj) {
                Ok(b) => {
                    t_bound = Some(b.t_star_bound);
                    m_used = Some(b.m_used);
                    epsilon = Some(b.epsilon_used);
                }
                Err(e) => blowup_note = Some(e.to_string()),
            }
            Some(t_star)
        }
        _ => None,
    };
    let (decay, decay_note) = match traj.outcome {
        Outcome::GlobalDecay | Outcome::ReachedTEnd => match decay_fit(traj, params) {
            Ok(f) => (
                Some(DecayOut {
                    mode: format!("{:?}", f.mode),
                    rate_or_exponent: f.rate_or_exponent,
                    fit_r2: f.fit_r2,
                    samples: f.samples,
                    theoretical_exponent: theoretical_decay_exponent(params),
                }),
                None,
            ),
            Err(e) => (None, Some(e.to_string())),
        },
        _ => (None, None),
    };
    let r0 = traj.reports[0];
    RunResult {
        outcome: traj.outcome.label().to_string(),
        t_star_observed: t_star,
        t_star_bound: t_bound,
        m_used,
        epsilon,
        blowup_note,
        decay_fit: decay,
        decay_note,
        j0: r0.j,
        i0: r0.i,
        final_time: *traj.times.last().unwrap_or(&0.0),
        final_norm: traj.norms().last().copied().unwrap_or(0.0),
        steps: traj.len() - 1,
        rejected_steps: traj.rejected_steps,
        i_sign_flips: traj.i_sign_flips,
        min_value: traj.min_value,
        energy_identity_residual: energy_identity_residual(traj),
        dissipation_slack: dissipation_slack(traj),
        max_step_residual: traj.max_step_residual,
        note: traj.note.clone(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EnergyClass {
    JNeg,
    SubcriticalD,
    CriticalD,
    Supercritical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Prediction {
    GlobalExistence,
    BlowUp,
}

impl Prediction {
    fn symbol(self) -> &'static str {
        match self {
            Prediction::GlobalExistence => "+",
            Prediction::BlowUp => "-",
        }
    }

    fn matches(self, outcome: &str) -> bool {
        match self {
            Prediction::GlobalExistence => outcome == "GlobalDecay",
            Prediction::BlowUp => outcome == "BlowUp",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Agreement {
    True,
    False,
    NotPredicted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DichotomyRow {
    pub energy_class: EnergyClass,
    pub i_sign_at_start: i8,
    pub observed_outcome: String,
    pub theorem_prediction: Option<Prediction>,
    pub agreement: Agreement,
    pub amplitude: f64,
    pub target_j: f64,
    pub j0: f64,
    pub i0: f64,
    pub d: f64,
    pub start_class: String,
    pub trajectory_file: String,
    pub run: Option<RunResult>,
    pub error: Option<String>,
}

struct Cell {
    class: EnergyClass,
    target: EnergyTarget,
    branch: Branch,
    prediction: Option<Prediction>,
}

fn table_cells(d: f64, sub: f64, sup: f64, crit_tol: f64) -> Vec<(Cell, f64)> {
    use Branch::*;
    use EnergyClass::*;
    let level_tol = 1e-9 * d.abs().max(1.0);
    vec![
        (Cell { class: JNeg, target: EnergyTarget::Negative, branch: Unstable, prediction: Some(Prediction::BlowUp) }, 1e-6),
        (
            Cell { class: SubcriticalD, target: EnergyTarget::Subcritical { fraction: sub, d }, branch: Stable, prediction: Some(Prediction::GlobalExistence) },
            level_tol,
        ),
        (
            Cell { class: SubcriticalD, target: EnergyTarget::Subcritical { fraction: sub, d }, branch: Unstable, prediction: Some(Prediction::BlowUp) },
            level_tol,
        ),
        (
            Cell { class: CriticalD, target: EnergyTarget::Critical { d }, branch: Stable, prediction: Some(Prediction::GlobalExistence) },
            crit_tol * d,
        ),
        (
            Cell { class: CriticalD, target: EnergyTarget::Critical { d }, branch: Unstable, prediction: Some(Prediction::BlowUp) },
            crit_tol * d,
        ),
        (Cell { class: Supercritical, target: EnergyTarget::Supercritical { fraction: sup, d }, branch: Stable, prediction: None }, level_tol),
        (Cell { class: Supercritical, target: EnergyTarget::Supercritical { fraction: sup, d }, branch: Unstable, prediction: None }, level_tol),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableOut {
    pub d: f64,
    pub delta: f64,
    pub d_converged: bool,
    pub rows: Vec<DichotomyRow>,
}

/// Runs every table cell concurrently from the configured base profile.
/// Critical rows accept `|J - d| <= critical_tol d`. Trajectories go to
/// `out` when given.
pub fn dichotomy_table(
    cfg: &ExperimentConfig,
    grid: &Grid,
    params: &ProblemParams,
    out: Option<&Path>,
) -> Result<TableOut> {
    let e = &cfg.experiment;
    let opts = depth_options(cfg);
    let wd = well_depth_parallel(grid, params, e.delta, &opts)?;
    let d = wd.value;
    let base = cfg.base_profile(grid, params.p)?;
    let stepper = cfg.stepper()?;
    let cells = table_cells(d, e.subcritical_fraction, e.supercritical_fraction, e.critical_tol);
    let rows = cells
        .par_iter()
        .enumerate()
        .map(|(k, (cell, tol))| -> Result<DichotomyRow> {
            let file = format!(
                "cell_{k}_{:?}_{}.csv",
                cell.class,
                if cell.branch == Branch::Stable { "stable" } else { "unstable" }
            );
            let mut row = DichotomyRow {
                energy_class: cell.class,
                i_sign_at_start: 0,
                observed_outcome: "NotRun".into(),
                theorem_prediction: cell.prediction,
                agreement: if cell.prediction.is_some() { Agreement::False } else { Agreement::NotPredicted },
                amplitude: f64::NAN,
                target_j: f64::NAN,
                j0: f64::NAN,
                i0: f64::NAN,
                d,
                start_class: String::new(),
                trajectory_file: String::new(),
                run: None,
                error: None,
            };
            let tuned = match tune_initial_energy(grid, params, &base, cell.target, cell.branch, *tol) {
                Ok(t) => t,
                Err(err) => {
                    row.error = Some(err.to_string());
                    return Ok(row);
                }
            };
            let u0 = base.scaled(tuned.amplitude);
            let r0 = energy_report(grid, &u0, params)?;
            row.amplitude = tuned.amplitude;
            row.target_j = tuned.target_j;
            row.j0 = r0.j;
            row.i0 = r0.i;
            row.i_sign_at_start = if r0.i > 0.0 { 1 } else if r0.i < 0.0 { -1 } else { 0 };
            row.start_class = format!("{:?}", classify_state(&r0, d, params));
            match single_run(grid, params, &u0, &stepper) {
                Ok((traj, res)) => {
                    if let Some(dir) = out {
                        io::write_trajectory_csv(&dir.join(&file), &traj, res.m_used.unwrap_or(0.0))?;
                        row.trajectory_file = file;
                    }
                    row.observed_outcome = res.outcome.clone();
                    if let Some(p) = cell.prediction {
                        row.agreement = if p.matches(&res.outcome) { Agreement::True } else { Agreement::False };
                    }
                    row.run = Some(res);
                }
                Err(err) => row.error = Some(err.to_string()),
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TableOut {
        d,
        delta: e.delta,
        d_converged: wd.converged,
        rows,
    })
}

pub fn render_table(t: &TableOut) -> String {
    let mut s = format!("# Dichotomy table (d = {}, delta = {})\n\n", t.d, t.delta);
    s.push_str("| energy class | I(u0) | J(u0) | J(u0)/d | prediction | observed | agreement |\n");
    s.push_str("|---|---|---|---|---|---|---|\n");
    for r in &t.rows {
        let sign = match r.i_sign_at_start {
            1 => "+",
            -1 => "-",
            _ => "0",
        };
        let pred = r
            .theorem_prediction
            .map(|p| format!("{} {:?}", p.symbol(), p))
            .unwrap_or_else(|| "?".into());
        s.push_str(&format!(
            "| {:?} | {sign} | {:.6e} | {:.6} | {pred} | {} | {:?} |\n",
            r.energy_class,
            r.j0,
            r.j0 / r.d,
            r.observed_outcome,
            r.agreement
        ));
    }
    s
}

fn table_rows_csv(t: &TableOut) -> Vec<Vec<String>> {
    t.rows
        .iter()
        .map(|r| {
            let run = r.run.as_ref();
            vec![
                format!("{:?}", r.energy_class),
                r.i_sign_at_start.to_string(),
                r.amplitude.to_string(),
                r.j0.to_string(),
                r.i0.to_string(),
                r.d.to_string(),
                r.theorem_prediction.map(|p| format!("{p:?}")).unwrap_or_else(|| "NotPredicted".into()),
                r.observed_outcome.clone(),
                format!("{:?}", r.agreement),
                run.and_then(|x| x.t_star_observed).map(|x| x.to_string()).unwrap_or_default(),
                run.map(|x| x.energy_identity_residual.to_string()).unwrap_or_default(),
                run.map(|x| x.max_step_residual.to_string()).unwrap_or_default(),
                r.trajectory_file.clone(),
                r.error.clone().unwrap_or_default(),
            ]
        })
        .collect()
}

const TABLE_HEADER: [&str; 14] = [
    "energy_class",
    "i_sign",
    "amplitude",
    "J0",
    "I0",
    "d",
    "prediction",
    "observed",
    "agreement",
    "t_star",
    "energy_identity_residual",
    "max_step_residual",
    "trajectory_file",
    "error",
];

pub const SWEEP_AXES: [&str; 5] = ["amplitude", "q", "m", "p", "delta"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub status: String,
    pub outcome: Option<String>,
    pub j0: Option<f64>,
    pub i0: Option<f64>,
    pub t_star: Option<f64>,
    pub final_norm: Option<f64>,
    pub d: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOut {
    pub axis: String,
    pub rows: Vec<SweepRow>,
}

fn with_axis(cfg: &ExperimentConfig, axis: &str, v: f64) -> Result<ExperimentConfig> {
    let mut c = cfg.clone();
    match axis {
        "amplitude" => c.initial.amplitude = v,
        "q" => match &mut c.source {
            SourceSection::Power { q, .. } => *q = v,
            SourceSection::Tabulated { .. } => {
                return Err(LabError::Config("axis q needs a power-law source".into()));
            }
        },
        "m" => {
            c.params.m = v;
            c.params.lambda1p = None;
        }
        "p" => {
            c.params.p = v;
            c.params.lambda1p = None;
        }
        "delta" => c.experiment.delta = v,
        other => {
            return Err(LabError::Config(format!(
                "unknown sweep axis {other:?}; expected one of {SWEEP_AXES:?}"
            )))
        }
    }
    c.experiment.kind = ExperimentKind::SingleRun;
    Ok(c)
}

fn sweep_cell(cfg: &ExperimentConfig, axis: &str, v: f64) -> Result<SweepRow> {
    let c = with_axis(cfg, axis, v)?;
    let toml = c.to_toml()?;
    let c = ExperimentConfig::from_toml(&toml)?;
    let (grid, params) = c.resolve()?;
    let mut row = SweepRow {
        value: v,
        status: "ok".into(),
        outcome: None,
        j0: None,
        i0: None,
        t_star: None,
        final_norm: None,
        d: None,
    };
    if axis == "delta" {
        let wd = well_depth_parallel(&grid, &params, v, &depth_options(&c))?;
        row.d = Some(wd.value);
        return Ok(row);
    }
    let u0 = c.initial_field(&grid, params.p)?;
    let (_, res) = single_run(&grid, &params, &u0, &c.stepper()?)?;
    row.outcome = Some(res.outcome);
    row.j0 = Some(res.j0);
    row.i0 = Some(res.i0);
    row.t_star = res.t_star_observed;
    row.final_norm = Some(res.final_norm);
    Ok(row)
}

/// One run per value, concurrently; failures become rows. Sorted by value.
pub fn sweep(cfg: &ExperimentConfig, axis: &str, values: &[f64]) -> Result<SweepOut> {
    if !SWEEP_AXES.contains(&axis) {
        return Err(LabError::Config(format!(
            "unknown sweep axis {axis:?}; expected one of {SWEEP_AXES:?}"
        )));
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(LabError::Config(format!("sweep values must be finite, got {v}")));
    }
    let mut rows: Vec<SweepRow> = values
        .par_iter()
        .map(|&v| {
            sweep_cell(cfg, axis, v).unwrap_or_else(|e| SweepRow {
                value: v,
                status: format!("error: {e}"),
                outcome: None,
                j0: None,
                i0: None,
                t_star: None,
                final_norm: None,
                d: None,
            })
        })
        .collect();
    rows.sort_by(|a, b| a.value.total_cmp(&b.value));
    Ok(SweepOut {
        axis: axis.to_string(),
        rows,
    })
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub fn write_sweep_csv(path: &Path, s: &SweepOut) -> Result<()> {
    let rows: Vec<Vec<String>> = s
        .rows
        .iter()
        .map(|r| {
            vec![
                r.value.to_string(),
                r.status.clone(),
                r.outcome.clone().unwrap_or_default(),
                opt(r.j0),
                opt(r.i0),
                opt(r.t_star),
                opt(r.final_norm),
                opt(r.d),
            ]
        })
        .collect();
    io::write_rows_csv(
        path,
        &[s.axis.as_str(), "status", "outcome", "J0", "I0", "t_star", "final_norm", "d"],
        &rows,
    )
}

pub fn depth_options(cfg: &ExperimentConfig) -> WellDepthOptions {
    WellDepthOptions {
        starts: cfg.experiment.starts,
        tol: cfg.experiment.depth_tol,
        max_iter: cfg.experiment.depth_max_iter,
        seed: cfg.experiment.seed,
        stop_below: None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamsOut {
    pub m: f64,
    pub p: f64,
    pub sigma: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub lambda1p: Option<f64>,
    pub lambda_growth: f64,
    pub source: SourceSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenOut {
    pub lambda1p: f64,
    pub residual: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileOut {
    pub b_est: f64,
    pub d_peak: f64,
    pub c_star: f64,
    pub a_coef: f64,
    pub peak_delta: f64,
    pub all_converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleOut {
    pub amplitude: f64,
    pub d: Option<f64>,
    pub start_class: Option<String>,
    pub result: RunResult,
}

/// Summary document. It holds no timestamps, so equal inputs give equal bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub kind: ExperimentKind,
    pub seed: u64,
    pub grid: GridSection,
    pub params: ParamsOut,
    pub warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub run: Option<SingleOut>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eigen: Option<EigenOut>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub well_profile: Option<ProfileOut>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub table: Option<TableOut>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepOut>,
}

pub const SUMMARY_NAME: &str = "summary.json";

fn params_out(cfg: &ExperimentConfig, params: &ProblemParams) -> ParamsOut {
    ParamsOut {
        m: params.m,
        p: params.p,
        sigma: params.sigma,
        alpha: params.alpha,
        beta: params.beta,
        gamma: params.gamma,
        lambda1p: params.lambda1p,
        lambda_growth: params.lambda_growth(),
        source: cfg.source.clone(),
    }
}

/// Runs `kind` (overriding the configured one when given) and writes the
/// artifacts, the summary and the manifest under `out`.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    kind: Option<ExperimentKind>,
    sweep_spec: Option<(&str, &[f64])>,
    out: &Path,
) -> Result<Summary> {
    let kind = kind.unwrap_or(cfg.experiment.kind);
    let mut dir = OutDir::create(out)?;
    let (grid, params) = cfg.resolve()?;
    let mut summary = Summary {
        kind,
        seed: cfg.experiment.seed,
        grid: cfg.grid.clone(),
        params: params_out(cfg, &params),
        warnings: params.warnings(grid.dim()),
        run: None,
        eigen: None,
        well_profile: None,
        table: None,
        sweep: None,
    };
    let cfg_path = dir.artifact("config.toml");
    io::write_text(&cfg_path, &cfg.to_toml()?)?;
    // The summary is written even when the computation fails midway.
    let outcome = run_kind(cfg, kind, sweep_spec, &grid, &params, &mut dir, &mut summary);
    let summary_path = dir.artifact(SUMMARY_NAME);
    io::write_json(&summary_path, &summary)?;
    Manifest::write(&mut dir)?;
    outcome.map(|_| summary)
}

fn run_kind(
    cfg: &ExperimentConfig,
    kind: ExperimentKind,
    sweep_spec: Option<(&str, &[f64])>,
    grid: &Grid,
    params: &ProblemParams,
    dir: &mut OutDir,
    summary: &mut Summary,
) -> Result<()> {
    match kind {
        ExperimentKind::EigenOnly => {
            let e = first_eigen_p(grid, params.p, cfg.experiment.eigen_tol, cfg.experiment.eigen_max_iter)?;
            io::write_field_csv(&dir.artifact("eigenfield.csv"), &e.eigenfield)?;
            io::write_field_bin(&dir.artifact("eigenfield.bin"), &e.eigenfield)?;
            summary.eigen = Some(EigenOut {
                lambda1p: e.lambda1p,
                residual: e.residual,
                iterations: e.iterations,
            });
        }
        ExperimentKind::SingleRun => {
            let u0 = cfg.initial_field(grid, params.p)?;
            io::write_field_csv(&dir.artifact("initial_field.csv"), &u0)?;
            let (d, start_class) = match well_depth_parallel(grid, params, cfg.experiment.delta, &depth_options(cfg)) {
                Ok(w) => {
                    let r0 = energy_report(grid, &u0, params)?;
                    (Some(w.value), Some(format!("{:?}", classify_state(&r0, w.value, params))))
                }
                Err(_) => (None, None),
            };
            let (traj, res) = single_run(grid, params, &u0, &cfg.stepper()?)?;
            io::write_trajectory_csv(&dir.artifact("trajectory.csv"), &traj, res.m_used.unwrap_or(0.0))?;
            io::write_energy_csv(&dir.artifact("energy.csv"), &traj.times, &traj.reports)?;
            io::write_field_csv(&dir.artifact("final_field.csv"), &traj.final_field)?;
            io::write_field_bin(&dir.artifact("final_field.bin"), &traj.final_field)?;
            summary.run = Some(SingleOut {
                amplitude: cfg.initial.amplitude,
                d,
                start_class,
                result: res,
            });
        }
        ExperimentKind::WellProfile => {
            let c_star = embedding_constant(grid, params.p, params.gamma)?;
            let a_coef = growth_coefficient(params)?;
            let opts = ProfileOptions {
                points: cfg.experiment.profile_points,
                depth: depth_options(cfg),
                ..ProfileOptions::default()
            };
            let prof = well_profile_parallel(grid, params, c_star, a_coef, &opts)?;
            io::write_well_profile_csv(&dir.artifact("well_profile.csv"), &prof)?;
            summary.well_profile = Some(ProfileOut {
                b_est: prof.b_est,
                d_peak: prof.d_peak,
                c_star,
                a_coef,
                peak_delta: prof.delta_grid[prof.peak_index()],
                all_converged: prof.converged.iter().all(|c| *c),
            });
        }
        ExperimentKind::DichotomyTable => {
            let t = dichotomy_table(cfg, grid, params, Some(dir.root()))?;
            for r in &t.rows {
                if !r.trajectory_file.is_empty() {
                    dir.artifact(&r.trajectory_file);
                }
            }
            io::write_text(&dir.artifact("table.md"), &render_table(&t))?;
            io::write_rows_csv(&dir.artifact("table.csv"), &TABLE_HEADER, &table_rows_csv(&t))?;
            summary.table = Some(t);
        }
        ExperimentKind::EnergySweep => {
            let (axis, values) = match sweep_spec {
                Some((a, v)) => (a.to_string(), v.to_vec()),
                None => (
                    cfg.experiment
                        .axis
                        .clone()
                        .ok_or_else(|| LabError::Config("energy_sweep needs experiment.axis".into()))?,
                    cfg.experiment.values.clone(),
                ),
            };
            let s = sweep(cfg, &axis, &values)?;
            write_sweep_csv(&dir.artifact("sweep.csv"), &s)?;
            summary.sweep = Some(s);
        }
    }
    Ok(())
}

/// Classification of `u` against the depth `d`, exposed for reports.
pub fn well_class(grid: &Grid, params: &ProblemParams, u: &Field, d: f64) -> Result<WellClass> {
    Ok(classify_state(&energy_report(grid, u, params)?, d, params))
}
