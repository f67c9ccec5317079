//! Time stepping for `u_t = div(|grad u^m|^(p-2) grad u^m) + f(u)` and the
//! diagnostics built on trajectories: the energy identity, the blow-up
//! functional `E_p(t) = int_0^t int u^(m+1) + M`, its concavity margin, and
//! decay-rate fits.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // inherent when std is linked
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg;
use crate::mesh::{self, FaceField, Field, Grid};
use crate::nonlinearity::ProblemParams;
use crate::operators::{self, EnergyReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// Picard-lagged implicit diffusion, explicit source.
    SemiImplicit,
    /// Forward Euler.
    Explicit,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepperConfig {
    pub dt_init: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    pub t_end: f64,
    pub blowup_norm_threshold: f64,
    /// Flux regularization; `None` means `1e-8 / diameter`.
    pub eps_reg: Option<f64>,
    pub scheme: Scheme,
    pub picard_tol: f64,
    pub picard_max: usize,
    /// Hard cap on accepted plus rejected steps.
    pub max_steps: usize,
}

impl Default for StepperConfig {
    fn default() -> Self {
        StepperConfig {
            dt_init: 1e-4,
            dt_min: 1e-12,
            dt_max: 1e-2,
            t_end: 1.0,
            blowup_norm_threshold: 1e8,
            eps_reg: None,
            scheme: Scheme::SemiImplicit,
            picard_tol: 1e-10,
            picard_max: 60,
            max_steps: 5_000_000,
        }
    }
}

impl StepperConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.dt_min > 0.0
            && self.dt_min <= self.dt_init
            && self.dt_init <= self.dt_max
            && self.t_end > 0.0
            && self.blowup_norm_threshold > 0.0
            && self.picard_tol > 0.0
            && self.picard_max > 0
            && self.eps_reg.is_none_or(|e| e >= 0.0);
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "stepper needs 0 < dt_min <= dt_init <= dt_max and positive t_end, tolerances: {self:?}"
            )))
        }
    }

    fn eps(&self, grid: &Grid) -> f64 {
        self.eps_reg.unwrap_or_else(|| operators::default_eps_reg(grid))
    }
}

/// `(W_R - W_L) / (u_R - u_L)` with `W = u^m`, or `m ubar^(m-1)` when the
/// two values are too close to divide.
#[inline]
fn secant(ul: f64, ur: f64, wl: f64, wr: f64, m: f64) -> f64 {
    if m == 1.0 {
        return 1.0;
    }
    let du = ur - ul;
    if du.abs() > 1e-9 * ul.abs().max(ur.abs()) {
        (wr - wl) / du
    } else {
        m * (0.5 * (ul + ur)).max(0.0).powf(m - 1.0)
    }
}

/// Right-hand side `div(kappa grad u^m) + f(u)` at interior nodes.
fn rhs(grid: &Grid, u: &[f64], params: &ProblemParams, eps: f64) -> Vec<f64> {
    let n = grid.node_count();
    let w = operators::powm(u, params.m);
    let mut out = vec![0.0; n];
    operators::p_laplacian_into(grid, &w, params.p, eps, &mut out);
    for k in 0..n {
        if grid.is_boundary(k) {
            out[k] = 0.0;
        } else {
            out[k] += params.source.f(u[k]);
        }
    }
    out
}

fn clip(grid: &Grid, v: &mut [f64]) {
    for (k, x) in v.iter_mut().enumerate() {
        if grid.is_boundary(k) || *x < 0.0 {
            *x = 0.0;
        }
    }
}

/// One step of size `dt`. The result is nonnegative with zero boundary.
pub fn step(grid: &Grid, u: &Field, params: &ProblemParams, cfg: &StepperConfig, dt: f64) -> Result<Field> {
    if u.grid() != grid {
        return Err(Error::GridMismatch);
    }
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
    }
    let values = step_raw(grid, u.values(), params, cfg, dt)?;
    Field::from_values(grid, values)
}

pub(crate) fn step_raw(grid: &Grid, u: &[f64], params: &ProblemParams, cfg: &StepperConfig, dt: f64) -> Result<Vec<f64>> {
    let eps = cfg.eps(grid);
    let n = grid.node_count();
    match cfg.scheme {
        Scheme::Explicit => {
            let r = rhs(grid, u, params, eps);
            let mut next: Vec<f64> = u.iter().zip(&r).map(|(a, b)| a + dt * b).collect();
            clip(grid, &mut next);
            Ok(next)
        }
        Scheme::SemiImplicit => {
            let (m, p) = (params.m, params.p);
            let linear = m == 1.0 && p == 2.0;
            let b: Vec<f64> = (0..n)
                .map(|k| if grid.is_boundary(k) { 0.0 } else { u[k] + dt * params.source.f(u[k]) })
                .collect();
            let ones = vec![1.0; n];
            let [nx, _] = grid.nodes_per_axis();
            let cx = nx - 1;
            let mut iterate = u.to_vec();
            let mut update = f64::INFINITY;
            for _ in 0..cfg.picard_max {
                let w = operators::powm(&iterate, m);
                let gw = mesh::gradient_of(grid, &w);
                let kappa = operators::face_coefficients(grid, &gw, p, eps);
                let d = FaceField {
                    x: kappa
                        .x
                        .iter()
                        .enumerate()
                        .map(|(e, kv)| {
                            let k = grid.index(e % cx, e / cx);
                            dt * kv * secant(iterate[k], iterate[k + 1], w[k], w[k + 1], m)
                        })
                        .collect(),
                    y: kappa
                        .y
                        .iter()
                        .enumerate()
                        .map(|(k, kv)| dt * kv * secant(iterate[k], iterate[k + nx], w[k], w[k + nx], m))
                        .collect(),
                };
                let mut next = linalg::solve(grid, &ones, &d, &b)?;
                clip(grid, &mut next);
                if next.iter().any(|x| !x.is_finite()) {
                    return Err(Error::LinearSolveFailure("non-finite iterate".into()));
                }
                update = next
                    .iter()
                    .zip(&iterate)
                    .fold(0.0f64, |s, (a, b)| s.max((a - b).abs()));
                let scale = next.iter().fold(0.0f64, |s, x| s.max(x.abs()));
                iterate = next;
                if linear || update <= cfg.picard_tol * scale.max(f64::MIN_POSITIVE) {
                    return Ok(iterate);
                }
            }
            Err(Error::PicardStall {
                iterations: cfg.picard_max,
                update,
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Outcome {
    /// `||u||_{m+1}` fell below `1e-10`.
    GlobalDecay,
    /// Norm threshold crossed, or the step size collapsed while the norm grew.
    BlowUp { t_star: f64 },
    ReachedTEnd,
    Inconclusive,
}

impl Outcome {
    pub fn label(&self) -> &'static str {
        match self {
            Outcome::GlobalDecay => "GlobalDecay",
            Outcome::BlowUp { .. } => "BlowUp",
            Outcome::ReachedTEnd => "ReachedTEnd",
            Outcome::Inconclusive => "Inconclusive",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    pub reports: Vec<EnergyReport>,
    /// Running `int_0^t int u^(m-1) u_t^2`.
    pub dissipation: Vec<f64>,
    /// Integrand `int u^(m-1) u_t^2` at each sample.
    pub rates: Vec<f64>,
    /// Running `int_0^t int u^(m+1)`, the part of `E_p` without `M`.
    pub mass_integral: Vec<f64>,
    /// Step that produced each sample; 0 for the initial one.
    pub dts: Vec<f64>,
    pub outcome: Outcome,
    pub i_sign_flips: usize,
    pub rejected_steps: usize,
    /// Smallest nodal value seen in any accepted field.
    pub min_value: f64,
    /// Largest relative sup-norm residual of the discrete equation.
    pub max_step_residual: f64,
    pub final_field: Field,
    pub note: Option<String>,
    pub m: f64,
}

impl TrajectoryRecord {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `||u(t_k)||_{m+1}`.
    pub fn norms(&self) -> Vec<f64> {
        self.reports
            .iter()
            .map(|r| r.mass_m1.max(0.0).powf(1.0 / (self.m + 1.0)))
            .collect()
    }

    /// `E_p(t_k) = int_0^t_k int u^(m+1) + M`.
    pub fn ep_series(&self, big_m: f64) -> Vec<f64> {
        self.mass_integral.iter().map(|x| x + big_m).collect()
    }
}

fn sign(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

/// `int u^(m-1) r^2` with the continuous extension `0` where `u = 0`, `m > 1`.
fn weighted_rate(grid: &Grid, u: &[f64], rate: &[f64], m: f64) -> f64 {
    u.iter()
        .zip(rate)
        .enumerate()
        .map(|(k, (x, r))| {
            let wt = if m == 1.0 {
                1.0
            } else if *x > 0.0 {
                x.powf(m - 1.0)
            } else {
                0.0
            };
            grid.weight(k) * wt * r * r
        })
        .sum()
}

/// Marches `u0` (boundary forced to zero) until `t_end`, decay or blow-up.
///
/// The step halves on a Picard stall, a failed solve, a non-finite state, or
/// a change `|Delta J| > 1e-2 max(|J|, 1e-3 |J0|)`; it grows by 1.2 after
/// five clean steps, capped at `dt_max`. The dissipation integrand
/// `int u^(m-1) u_t^2` is sampled at every time node, with `u_t` the
/// difference quotient of the step ending there (the equation's right side
/// at `t = 0`), and accumulated by the trapezoid rule.
pub fn integrate_trajectory(grid: &Grid, u0: &Field, params: &ProblemParams, cfg: &StepperConfig) -> Result<TrajectoryRecord> {
    if u0.grid() != grid {
        return Err(Error::GridMismatch);
    }
    cfg.validate()?;
    if !u0.is_nonnegative() {
        return Err(Error::NegativeArgument(u0.min_value()));
    }
    let m = params.m;
    let mut u = u0.clone().into_values();
    clip(grid, &mut u);
    let eps = cfg.eps(grid);
    let r0 = operators::report_of(grid, &u, params);
    let j0 = r0.j;
    let norm_of = |r: &EnergyReport| r.mass_m1.max(0.0).powf(1.0 / (m + 1.0));

    let mut rec = TrajectoryRecord {
        times: vec![0.0],
        reports: vec![r0],
        dissipation: vec![0.0],
        rates: Vec::new(),
        mass_integral: vec![0.0],
        dts: vec![0.0],
        outcome: Outcome::Inconclusive,
        i_sign_flips: 0,
        rejected_steps: 0,
        min_value: u.iter().copied().fold(f64::INFINITY, f64::min),
        max_step_residual: 0.0,
        final_field: Field::zeros(grid),
        note: None,
        m,
    };
    let finish = |mut rec: TrajectoryRecord, u: Vec<f64>, outcome: Outcome| -> Result<TrajectoryRecord> {
        rec.outcome = outcome;
        rec.final_field = Field::from_values(grid, u)?;
        Ok(rec)
    };
    let mut g_prev = weighted_rate(grid, &u, &rhs(grid, &u, params, eps), m);
    rec.rates.push(g_prev);
    if norm_of(&r0) < DECAY_NORM {
        return finish(rec, u, Outcome::GlobalDecay);
    }

    let mut last_sign = sign(r0.i);
    let mut t = 0.0;
    let mut dt = cfg.dt_init;
    let mut clean = 0usize;
    let mut attempts = 0usize;
    let t_stop = cfg.t_end * (1.0 - 1e-12);

    while t < t_stop {
        attempts += 1;
        if attempts > cfg.max_steps {
            rec.note = Some(format!("step budget of {} exhausted at t = {t}", cfg.max_steps));
            return finish(rec, u, Outcome::Inconclusive);
        }
        let h = dt.min(cfg.t_end - t);
        let prev = *rec.reports.last().unwrap();
        let reject = |rec: &mut TrajectoryRecord, dt: &mut f64, why: String| -> Option<Outcome> {
            rec.rejected_steps += 1;
            *dt *= 0.5;
            if *dt < cfg.dt_min {
                let n = rec.reports.len();
                let growing = n >= 2 && rec.reports[n - 1].mass_m1 > rec.reports[n - 2].mass_m1;
                rec.note = Some(why);
                return Some(if growing { Outcome::BlowUp { t_star: t } } else { Outcome::Inconclusive });
            }
            None
        };
        let next = match step_raw(grid, &u, params, cfg, h) {
            Ok(v) => v,
            Err(e @ (Error::PicardStall { .. } | Error::LinearSolveFailure(_))) => {
                if let Some(o) = reject(&mut rec, &mut dt, format!("{e} at t = {t}")) {
                    return finish(rec, u, o);
                }
                clean = 0;
                continue;
            }
            Err(e) => return Err(e),
        };
        let rep = operators::report_of(grid, &next, params);
        let finite = rep.j.is_finite() && rep.mass_m1.is_finite() && next.iter().all(|x| x.is_finite());
        if !finite {
            if let Some(o) = reject(&mut rec, &mut dt, format!("non-finite state at t = {t}")) {
                return finish(rec, u, o);
            }
            clean = 0;
            continue;
        }
        let floor = (1e-3 * j0.abs()).max(f64::MIN_POSITIVE);
        if (rep.j - prev.j).abs() > 1e-2 * prev.j.abs().max(floor) && h * 0.5 >= cfg.dt_min {
            if let Some(o) = reject(&mut rec, &mut dt, format!("energy change too large at t = {t}")) {
                return finish(rec, u, o);
            }
            clean = 0;
            continue;
        }

        // Accept.
        let rate: Vec<f64> = next.iter().zip(&u).map(|(a, b)| (a - b) / h).collect();
        let g_new = weighted_rate(grid, &next, &rate, m);
        let residual = step_residual(grid, &u, &next, params, cfg, h);
        rec.max_step_residual = rec.max_step_residual.max(residual);
        t += h;
        let d_prev = *rec.dissipation.last().unwrap();
        let mi_prev = *rec.mass_integral.last().unwrap();
        rec.dissipation.push(d_prev + 0.5 * h * (g_prev + g_new));
        rec.rates.push(g_new);
        rec.mass_integral.push(mi_prev + 0.5 * h * (prev.mass_m1 + rep.mass_m1));
        rec.times.push(t);
        rec.reports.push(rep);
        rec.dts.push(h);
        rec.min_value = rec.min_value.min(next.iter().copied().fold(f64::INFINITY, f64::min));
        let s = sign(rep.i);
        if s != 0 {
            if last_sign != 0 && s != last_sign {
                rec.i_sign_flips += 1;
            }
            last_sign = s;
        }
        g_prev = g_new;
        u = next;

        let norm = norm_of(&rep);
        if norm > cfg.blowup_norm_threshold {
            return finish(rec, u, Outcome::BlowUp { t_star: t });
        }
        if norm < DECAY_NORM {
            return finish(rec, u, Outcome::GlobalDecay);
        }
        clean += 1;
        if clean >= 5 {
            dt = (dt * 1.2).min(cfg.dt_max);
            clean = 0;
        }
    }
    finish(rec, u, Outcome::ReachedTEnd)
}

/// `||u||_{m+1}` below which a run counts as decayed.
pub const DECAY_NORM: f64 = 1e-10;

/// Sup-norm of `(u_new - u)/dt - div(kappa(u_new) grad u_new^m) - f(u)`
/// relative to the sup-norm of the rate.
fn step_residual(grid: &Grid, u: &[f64], next: &[f64], params: &ProblemParams, cfg: &StepperConfig, dt: f64) -> f64 {
    if cfg.scheme == Scheme::Explicit {
        return 0.0;
    }
    let eps = cfg.eps(grid);
    let w = operators::powm(next, params.m);
    let mut lap = vec![0.0; grid.node_count()];
    operators::p_laplacian_into(grid, &w, params.p, eps, &mut lap);
    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    for k in 0..u.len() {
        if grid.is_boundary(k) || next[k] == 0.0 {
            continue;
        }
        let rate = (next[k] - u[k]) / dt;
        worst = worst.max((rate - lap[k] - params.source.f(u[k])).abs());
        scale = scale.max(rate.abs()).max(lap[k].abs());
    }
    if scale > 0.0 {
        worst / scale
    } else {
        0.0
    }
}

/// `sum_k dt_k |g_k - g_(k-1)| / 2` over the recorded integrand `g`: the gap
/// between the trapezoid sum and the backward sum `sum_k dt_k g_k`. The
/// backward sum satisfies `J(t_k) + sum <= J(0)` for `m = 1` and convex `F`,
/// so `J + D <= J(0) + slack` along such runs.
pub fn dissipation_slack(traj: &TrajectoryRecord) -> f64 {
    traj.rates
        .windows(2)
        .zip(traj.dts.iter().skip(1))
        .map(|(g, dt)| 0.5 * dt * (g[1] - g[0]).abs())
        .sum()
}

/// `max_k |J(t_k) + D(t_k) - J(0)| / max(1, |J(0)|)`; 0 for a single sample.
pub fn energy_identity_residual(traj: &TrajectoryRecord) -> f64 {
    if traj.len() < 2 {
        return 0.0;
    }
    let j0 = traj.reports[0].j;
    let scale = j0.abs().max(1.0);
    traj.reports
        .iter()
        .zip(&traj.dissipation)
        .map(|(r, d)| (r.j + d - j0).abs() / scale)
        .fold(0.0, f64::max)
}

/// `eps = sqrt(pm alpha)/(m+1) - 1` and `T = M / (eps int u0^(m+1))`.
pub fn blowup_bound(grid: &Grid, u0: &Field, params: &ProblemParams, big_m: f64) -> Result<(f64, f64)> {
    let rep = operators::energy_report(grid, u0, params)?;
    if !(rep.j < 0.0) {
        return Err(Error::NotApplicable(format!("J(u0) = {} is not negative", rep.j)));
    }
    let eps = blowup_epsilon(params);
    if !(eps > 0.0) {
        return Err(Error::NotApplicable(format!(
            "epsilon = sqrt(pm alpha)/(m+1) - 1 = {eps} is not positive"
        )));
    }
    if !(big_m > 0.0) {
        return Err(Error::InvalidArgument(format!("M must be positive, got {big_m}")));
    }
    Ok((big_m / (eps * rep.mass_m1), eps))
}

pub fn blowup_epsilon(params: &ProblemParams) -> f64 {
    (params.pm() * params.alpha).sqrt() / (params.m + 1.0) - 1.0
}

/// First derivative of `y(t)` by three-point nonuniform differences.
fn first_derivative(t: &[f64], y: &[f64]) -> Vec<f64> {
    let n = t.len();
    (0..n)
        .map(|k| {
            let i = k.saturating_sub(1).min(n - 3);
            let (t0, t1, t2) = (t[i], t[i + 1], t[i + 2]);
            let (y0, y1, y2) = (y[i], y[i + 1], y[i + 2]);
            let x = t[k];
            // Derivative of the quadratic interpolant at x.
            y0 * ((x - t1) + (x - t2)) / ((t0 - t1) * (t0 - t2))
                + y1 * ((x - t0) + (x - t2)) / ((t1 - t0) * (t1 - t2))
                + y2 * ((x - t0) + (x - t1)) / ((t2 - t0) * (t2 - t1))
        })
        .collect()
}

/// `E'' E - (1 + eps) E'^2` along the trajectory with `E = int_0^t int
/// u^(m+1) + M`, `E' = int u^(m+1)` (exact) and `E''` by divided differences.
pub fn concavity_series(traj: &TrajectoryRecord, big_m: f64, one_plus_eps: f64) -> Result<Vec<f64>> {
    if traj.len() < 3 {
        return Err(Error::InvalidArgument("concavity series needs at least 3 samples".into()));
    }
    if !(big_m >= 0.0) {
        return Err(Error::InvalidArgument(format!("M must be >= 0, got {big_m}")));
    }
    let e1: Vec<f64> = traj.reports.iter().map(|r| r.mass_m1).collect();
    let e2 = first_derivative(&traj.times, &e1);
    Ok(e1
        .iter()
        .zip(&e2)
        .zip(&traj.mass_integral)
        .map(|((d1, d2), mi)| d2 * (mi + big_m) - one_plus_eps * d1 * d1)
        .collect())
}

/// Smallest `M` that keeps every concavity margin positive, times
/// `1 + 1e-9`; `None` when some `E''` is not positive (no `M` works).
pub fn tighten_m(traj: &TrajectoryRecord, one_plus_eps: f64) -> Option<f64> {
    if traj.len() < 3 {
        return None;
    }
    let e1: Vec<f64> = traj.reports.iter().map(|r| r.mass_m1).collect();
    let e2 = first_derivative(&traj.times, &e1);
    let mut need = f64::NEG_INFINITY;
    for ((d1, d2), mi) in e1.iter().zip(&e2).zip(&traj.mass_integral) {
        if !(*d2 > 0.0) {
            return None;
        }
        need = need.max(one_plus_eps * d1 * d1 / d2 - mi);
    }
    Some(need.max(f64::MIN_POSITIVE) * (1.0 + 1e-9))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlowupReport {
    pub t_star_observed: f64,
    pub t_star_bound: f64,
    pub m_used: f64,
    pub epsilon_used: f64,
    pub concavity_margin_series: Vec<f64>,
}

/// Bound of the blow-up time for the tightened `M`, next to the observed one.
pub fn blowup_report(grid: &Grid, u0: &Field, params: &ProblemParams, traj: &TrajectoryRecord) -> Result<BlowupReport> {
    let Outcome::BlowUp { t_star } = traj.outcome else {
        return Err(Error::NotApplicable(format!("trajectory outcome is {}", traj.outcome.label())));
    };
    let eps = blowup_epsilon(params);
    let big_m = tighten_m(traj, 1.0 + eps)
        .ok_or_else(|| Error::NotApplicable("E_p'' is not positive along the run".into()))?;
    let (t_bound, eps) = blowup_bound(grid, u0, params, big_m)?;
    Ok(BlowupReport {
        t_star_observed: t_star,
        t_star_bound: t_bound,
        m_used: big_m,
        epsilon_used: eps,
        concavity_margin_series: concavity_series(traj, big_m, 1.0 + eps)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DecayMode {
    /// `||u|| ~ t^exponent`, for `pm > m + 1`.
    Polynomial,
    /// `||u|| ~ exp(-rate t)`, for `pm = m + 1`.
    Exponential,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub mode: DecayMode,
    /// Decay rate (exponential) or exponent (polynomial, negative).
    pub rate_or_exponent: f64,
    pub fit_r2: f64,
    pub samples: usize,
}

fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    let slope = sxy / sxx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    (slope, r2)
}

/// Fits `log ||u||_{m+1}` against `t` (when `pm = m + 1`) or `log t` (when
/// `pm > m + 1`) over the samples after the first 10%.
pub fn decay_fit(traj: &TrajectoryRecord, params: &ProblemParams) -> Result<DecayFit> {
    let norms = traj.norms();
    let n = norms.len();
    let first = norms.first().copied().unwrap_or(0.0);
    let last = norms.last().copied().unwrap_or(0.0);
    let ratio = if first > 0.0 { last / first } else { f64::INFINITY };
    if n < 5 || !(ratio <= 0.1) {
        return Err(Error::InsufficientDecay { ratio });
    }
    let skip = n / 10;
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    let critical = (params.pm() - params.m - 1.0).abs() <= 1e-12;
    for k in skip..n {
        let (t, v) = (traj.times[k], norms[k]);
        if t > 0.0 && v > 0.0 {
            xs.push(if critical { t } else { t.ln() });
            ys.push(v.ln());
        }
    }
    if xs.len() < 3 {
        return Err(Error::InsufficientDecay { ratio });
    }
    let (slope, r2) = linear_fit(&xs, &ys);
    Ok(if critical {
        DecayFit { mode: DecayMode::Exponential, rate_or_exponent: -slope, fit_r2: r2, samples: xs.len() }
    } else {
        DecayFit { mode: DecayMode::Polynomial, rate_or_exponent: slope, fit_r2: r2, samples: xs.len() }
    })
}

/// Tail exponent `-1 / (pm - m - 1)` for `pm > m + 1`.
pub fn theoretical_decay_exponent(params: &ProblemParams) -> Option<f64> {
    let s = params.pm() - params.m - 1.0;
    (s > 0.0).then(|| -1.0 / s)
}
