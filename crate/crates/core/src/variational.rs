//! Potential-well machinery: the first Dirichlet eigenvalue of the
//! p-Laplacian, the embedding constant `C_*`, the fibering map and its Nehari
//! root, the well depth `d(delta)` and its profile, and classification of a
//! state into the stable or unstable well.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // inherent when std is linked
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg;
use crate::mesh::{self, FaceField, Field, Grid};
use crate::nonlinearity::{ProblemParams, SourceSpec};
use crate::operators::{self, EnergyReport};
use crate::rng;

#[derive(Debug, Clone, PartialEq)]
pub struct EigenResult {
    pub lambda1p: f64,
    /// Positive in the interior, `||w||_p = 1`.
    pub eigenfield: Field,
    /// Weighted L2 norm of `-Delta_p w - lambda |w|^(p-2) w`.
    pub residual: f64,
    pub iterations: usize,
}

/// Smooth positive bump `prod x (L - x)` used as a default start.
fn parabola_start(grid: &Grid) -> Vec<f64> {
    let ext: Vec<f64> = grid.extents().to_vec();
    Field::dirichlet_from_fn(grid, |x| {
        x.iter()
            .zip(&ext)
            .map(|(t, l)| 4.0 * t * (l - t) / (l * l))
            .product()
    })
    .into_values()
}

/// Product of half-sines, the first Dirichlet mode of the Laplacian.
pub(crate) fn sine_mode(grid: &Grid) -> Field {
    let ext: Vec<f64> = grid.extents().to_vec();
    Field::dirichlet_from_fn(grid, |x| {
        x.iter()
            .zip(&ext)
            .map(|(t, l)| (core::f64::consts::PI * t / l).sin().max(0.0))
            .product()
    })
}

fn lq_power(grid: &Grid, v: &[f64], q: f64) -> f64 {
    v.iter()
        .enumerate()
        .map(|(k, x)| grid.weight(k) * x.abs().powf(q))
        .sum()
}

struct QuotientMin {
    q: f64,
    v: Vec<f64>,
    residual: f64,
    iterations: usize,
}

/// Minimizes `||grad v||_p^p / ||v||_gamma^p` by preconditioned descent.
///
/// The direction is `L^-1 r`, with `r` the Euler-Lagrange residual and `L`
/// the frozen-coefficient p-Laplacian. At `p = gamma = 2` a unit step is one
/// step of inverse iteration.
fn minimize_quotient(
    grid: &Grid,
    p: f64,
    gamma: f64,
    mut v: Vec<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<QuotientMin> {
    let n = grid.node_count();
    let zero = vec![0.0; n];
    let normalize = |v: &mut Vec<f64>| -> bool {
        let s = lq_power(grid, v, gamma).powf(1.0 / gamma);
        if !(s > 0.0) || !s.is_finite() {
            return false;
        }
        v.iter_mut().for_each(|x| *x /= s);
        true
    };
    if !normalize(&mut v) {
        return Err(Error::InvalidArgument("start field vanishes".into()));
    }
    let mut q = operators::grad_norm_p(grid, &v, p);
    let mut lap = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for it in 1..=max_iter {
        let grad = mesh::gradient_of(grid, &v);
        operators::p_laplacian_into(grid, &v, p, 0.0, &mut lap);
        let r: Vec<f64> = (0..n)
            .map(|k| {
                if grid.is_boundary(k) {
                    0.0
                } else {
                    let vk = v[k];
                    -lap[k] - q * vk.abs().powf(gamma - 2.0) * vk
                }
            })
            .collect();
        residual = mesh::weighted_sum(grid, &r.iter().map(|x| x * x).collect::<Vec<_>>()).sqrt();
        let gmax = grad.x.iter().chain(&grad.y).fold(0.0f64, |m, g| m.max(g.abs()));
        let d = operators::face_coefficients(grid, &grad, p, 1e-3 * gmax);
        let s = linalg::solve(grid, &zero, &d, &r)?;
        let mut tau = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let mut trial: Vec<f64> = v.iter().zip(&s).map(|(a, b)| (a - tau * b).abs()).collect();
            for k in 0..n {
                if grid.is_boundary(k) {
                    trial[k] = 0.0;
                }
            }
            if normalize(&mut trial) {
                let qt = operators::grad_norm_p(grid, &trial, p);
                if qt < q {
                    accepted = Some((qt, trial));
                    break;
                }
            }
            tau *= 0.5;
        }
        let Some((qt, trial)) = accepted else {
            return Ok(QuotientMin { q, v, residual, iterations: it });
        };
        let change = (q - qt).abs() / q;
        q = qt;
        v = trial;
        if change < tol {
            return Ok(QuotientMin { q, v, residual, iterations: it });
        }
    }
    Err(Error::NonConvergence {
        iterations: max_iter,
        best: q,
        residual,
    })
}

/// `lambda_{1,p} = inf ||grad v||_p^p / ||v||_p^p` over fields vanishing on
/// the boundary. Stops once the quotient changes by less than `tol`
/// (relative) between iterations.
pub fn first_eigen_p(grid: &Grid, p: f64, tol: f64, max_iter: usize) -> Result<EigenResult> {
    if !(p >= 2.0) {
        return Err(Error::InvalidArgument(format!("need p >= 2, got {p}")));
    }
    let res = minimize_quotient(grid, p, p, parabola_start(grid), tol, max_iter)?;
    let eigenfield = Field::from_values(grid, res.v)?;
    let lambda1p = operators::grad_norm_p(grid, eigenfield.values(), p)
        / lq_power(grid, eigenfield.values(), p);
    Ok(EigenResult {
        lambda1p,
        eigenfield,
        residual: res.residual,
        iterations: res.iterations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmbeddingOptions {
    pub starts: usize,
    pub seed: u64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for EmbeddingOptions {
    fn default() -> Self {
        EmbeddingOptions {
            starts: 4,
            seed: 0x5eed,
            tol: 1e-11,
            max_iter: 5000,
        }
    }
}

/// `||v||_gamma / ||grad v||_p` for a field vanishing on the boundary.
pub fn embedding_ratio(grid: &Grid, v: &Field, p: f64, gamma: f64) -> Result<f64> {
    if v.grid() != grid {
        return Err(Error::GridMismatch);
    }
    let num = lq_power(grid, v.values(), gamma).powf(1.0 / gamma);
    let den = operators::grad_norm_p(grid, v.values(), p).powf(1.0 / p);
    Ok(num / den)
}

/// Best `C_*` with `||v||_gamma <= C_* ||grad v||_p`, from default options.
pub fn embedding_constant(grid: &Grid, p: f64, gamma: f64) -> Result<f64> {
    embedding_constant_with(grid, p, gamma, &EmbeddingOptions::default())
}

/// Largest ratio found over the multi-start ascent; a lower bound on the
/// discrete constant. Start 0 is a smooth bump, the others random.
pub fn embedding_constant_with(grid: &Grid, p: f64, gamma: f64, opts: &EmbeddingOptions) -> Result<f64> {
    if !(p >= 2.0) || !(gamma >= p) {
        return Err(Error::InvalidArgument(format!("need 2 <= p <= gamma, got p = {p}, gamma = {gamma}")));
    }
    let mut best: Option<f64> = None;
    let mut last_err = None;
    for s in 0..opts.starts.max(1) {
        let start = if s == 0 {
            parabola_start(grid)
        } else {
            rng::random_positive_field(grid, opts.seed, s as u64).into_values()
        };
        match minimize_quotient(grid, p, gamma, start, opts.tol, opts.max_iter) {
            Ok(r) => {
                let c = r.q.powf(-1.0 / p);
                best = Some(best.map_or(c, |b: f64| b.max(c)));
            }
            Err(e) => last_err = Some(e),
        }
    }
    match (best, last_err) {
        (Some(c), _) => Ok(c),
        (None, Some(e)) => Err(e),
        (None, None) => unreachable!(),
    }
}

/// `phi(eps) = eps^(-m(p-1)) int u^m f(eps u)`.
pub fn fibering_phi(grid: &Grid, u: &Field, params: &ProblemParams, eps: f64) -> Result<f64> {
    if u.grid() != grid {
        return Err(Error::GridMismatch);
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("eps must be positive, got {eps}")));
    }
    if u.is_zero() {
        return Err(Error::InvalidArgument("fibering map of the zero field".into()));
    }
    let um = operators::powm(u.values(), params.m);
    Ok(phi_raw(grid, u.values(), &um, params, eps))
}

fn phi_raw(grid: &Grid, u: &[f64], um: &[f64], params: &ProblemParams, eps: f64) -> f64 {
    let s: f64 = u
        .iter()
        .zip(um)
        .enumerate()
        .filter(|(_, (x, _))| **x > 0.0)
        .map(|(k, (x, w))| grid.weight(k) * w * params.source.f(eps * x))
        .sum();
    s * eps.powf(-params.m * (params.p - 1.0))
}

pub const EPS_BRACKET: (f64, f64) = (1e-8, 1e8);

/// Root of `I_delta(eps u) = 0`, the scale putting `eps u` on the
/// `delta`-Nehari set. `I_delta(eps u) = eps^(pm) (delta N - phi(eps))`, so
/// bisection runs on the sign of `delta N - phi(eps)` in `log eps`.
pub fn epsilon_delta(grid: &Grid, u: &Field, params: &ProblemParams, delta: f64) -> Result<f64> {
    if u.grid() != grid {
        return Err(Error::GridMismatch);
    }
    if !(delta > 0.0) {
        return Err(Error::InvalidArgument(format!("delta must be positive, got {delta}")));
    }
    if u.is_zero() || !u.is_nonnegative() {
        return Err(Error::InvalidArgument("need a nonzero nonnegative field".into()));
    }
    eps_delta_raw(grid, u.values(), params, delta, false)
}

/// Root of `I(eps u) = 0`.
pub fn epsilon_star(grid: &Grid, u: &Field, params: &ProblemParams) -> Result<f64> {
    epsilon_delta(grid, u, params, 1.0)
}

fn eps_delta_raw(grid: &Grid, u: &[f64], params: &ProblemParams, delta: f64, closed_form: bool) -> Result<f64> {
    let um = operators::powm(u, params.m);
    let target = delta * operators::grad_norm_p(grid, &um, params.p);
    if closed_form {
        if let SourceSpec::PowerLaw { k, q } = params.source {
            let expo = q - params.m * (params.p - 1.0);
            if expo.abs() > 1e-12 {
                let pair: f64 = u
                    .iter()
                    .zip(&um)
                    .enumerate()
                    .map(|(i, (x, w))| grid.weight(i) * w * x.powf(q))
                    .sum();
                let e = (target / (k * pair)).powf(1.0 / expo);
                if e.is_finite() && e > 0.0 {
                    return Ok(e);
                }
            }
        }
    }
    let sign_at = |e: f64| -> f64 { target - phi_raw(grid, u, &um, params, e) };
    let (mut lo, mut hi) = (EPS_BRACKET.0.ln(), EPS_BRACKET.1.ln());
    let s_lo = sign_at(lo.exp());
    let s_hi = sign_at(hi.exp());
    if s_lo == 0.0 {
        return Ok(lo.exp());
    }
    if s_hi == 0.0 {
        return Ok(hi.exp());
    }
    if s_lo.signum() == s_hi.signum() {
        return Err(Error::NoRoot { sign: s_lo.signum() as i8 });
    }
    let lo_positive = s_lo > 0.0;
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        let s = sign_at(mid.exp());
        if s == 0.0 {
            return Ok(mid.exp());
        }
        if (s > 0.0) == lo_positive {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((0.5 * (lo + hi)).exp())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WellDepthOptions {
    pub starts: usize,
    /// Relative tolerance on the predicted decrease per step.
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    /// Return as soon as the running value drops below this.
    pub stop_below: Option<f64>,
}

impl Default for WellDepthOptions {
    fn default() -> Self {
        WellDepthOptions {
            starts: 4,
            tol: 1e-10,
            max_iter: 4000,
            seed: 0x5eed,
            stop_below: None,
        }
    }
}

/// Outcome of one descent run.
#[derive(Debug, Clone, PartialEq)]
pub struct StartResult {
    pub index: usize,
    pub value: f64,
    /// Minimizer found, on the `delta`-Nehari set.
    pub field: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WellDepth {
    pub value: f64,
    pub best_start: usize,
    pub field: Field,
    pub per_start: Vec<f64>,
    pub converged: bool,
}

/// Start field number `index`: the first Dirichlet mode for 0, random
/// positive bumps otherwise.
pub fn start_field(grid: &Grid, seed: u64, index: usize) -> Field {
    if index == 0 {
        sine_mode(grid)
    } else {
        rng::random_positive_field(grid, seed, index as u64)
    }
}

/// Multi-start upper estimate of `d(delta)`.
pub fn well_depth(grid: &Grid, params: &ProblemParams, delta: f64, starts: usize, tol: f64) -> Result<f64> {
    let opts = WellDepthOptions {
        starts,
        tol,
        ..WellDepthOptions::default()
    };
    well_depth_with(grid, params, delta, &opts).map(|w| w.value)
}

pub fn well_depth_with(grid: &Grid, params: &ProblemParams, delta: f64, opts: &WellDepthOptions) -> Result<WellDepth> {
    let mut results = Vec::with_capacity(opts.starts.max(1));
    for s in 0..opts.starts.max(1) {
        let r = well_depth_start(grid, params, delta, s, opts)?;
        let stop = opts.stop_below.is_some_and(|b| r.value < b);
        results.push(r);
        if stop {
            break;
        }
    }
    reduce_starts(grid, results)
}

/// Order-independent reduction: least value, ties broken by start index.
/// Fails with `NonConvergence` (carrying the best value) if no start
/// converged.
pub fn reduce_starts(grid: &Grid, mut results: Vec<StartResult>) -> Result<WellDepth> {
    results.sort_by_key(|r| r.index);
    let best = results
        .iter()
        .min_by(|a, b| a.value.total_cmp(&b.value).then(a.index.cmp(&b.index)))
        .ok_or_else(|| Error::InvalidArgument("no starts".into()))?;
    let converged = results.iter().any(|r| r.converged);
    if !converged {
        return Err(Error::NonConvergence {
            iterations: results.iter().map(|r| r.iterations).sum(),
            best: best.value,
            residual: f64::NAN,
        });
    }
    Ok(WellDepth {
        value: best.value,
        best_start: best.index,
        field: Field::from_values(grid, best.field.clone())?,
        per_start: results.iter().map(|r| r.value).collect(),
        converged,
    })
}

struct OnSet {
    v: Vec<f64>,
    report: EnergyReport,
}

fn onto_set(grid: &Grid, u: &[f64], params: &ProblemParams, delta: f64) -> Option<OnSet> {
    if u.iter().all(|&x| x == 0.0) {
        return None;
    }
    let eps = eps_delta_raw(grid, u, params, delta, true).ok()?;
    let v: Vec<f64> = u.iter().map(|x| eps * x).collect();
    let report = operators::report_of(grid, &v, params);
    report.j.is_finite().then_some(OnSet { v, report })
}

/// One projected descent run of `u -> J(eps_delta(u) u)` from start `index`.
///
/// The objective is scale invariant; its gradient at `v = eps u` is the
/// oblique projection `gJ - (<gJ, v> / <gI, v>) gI` of the gradient of `J`
/// along the gradient of `I_delta`. Directions are preconditioned by the
/// Laplacian weighted with the linearized diffusion of `J`.
pub fn well_depth_start(
    grid: &Grid,
    params: &ProblemParams,
    delta: f64,
    index: usize,
    opts: &WellDepthOptions,
) -> Result<StartResult> {
    if !(delta > 0.0) {
        return Err(Error::InvalidArgument(format!("delta must be positive, got {delta}")));
    }
    let (m, p) = (params.m, params.p);
    let n = grid.node_count();
    let start = start_field(grid, opts.seed, index);
    let mut cur = onto_set(grid, start.values(), params, delta).ok_or(Error::NoRoot { sign: 1 })?;
    let zero = vec![0.0; n];
    let mut lap = vec![0.0; n];
    let mut tau = 1.0;
    let mut calm = 0usize;
    for it in 1..=opts.max_iter {
        if opts.stop_below.is_some_and(|b| cur.report.j < b) {
            return Ok(StartResult {
                index,
                value: cur.report.j,
                field: cur.v,
                iterations: it,
                converged: true,
            });
        }
        let v = &cur.v;
        let w = operators::powm(v, m);
        let gw = mesh::gradient_of(grid, &w);
        operators::p_laplacian_into(grid, &w, p, 0.0, &mut lap);
        let mut g_j = vec![0.0; n];
        let mut g_i = vec![0.0; n];
        for k in 0..n {
            if grid.is_boundary(k) || v[k] <= 0.0 {
                continue;
            }
            let vk = v[k];
            let vm1 = if m == 1.0 { 1.0 } else { vk.powf(m - 1.0) };
            let f = params.source.f(vk);
            let a = -lap[k];
            g_j[k] = vm1 * (a - f);
            g_i[k] = delta * p * m * vm1 * a - (m * vm1 * f + vm1 * vk * params.source.derivative(vk));
        }
        let dot = |a: &[f64], b: &[f64]| -> f64 {
            a.iter().zip(b).enumerate().map(|(k, (x, y))| grid.weight(k) * x * y).sum()
        };
        let gi_v = dot(&g_i, v);
        if gi_v == 0.0 || !gi_v.is_finite() {
            break;
        }
        let c = dot(&g_j, v) / gi_v;
        let grad: Vec<f64> = g_j.iter().zip(&g_i).map(|(a, b)| a - c * b).collect();

        let kappa = operators::face_coefficients(grid, &gw, p, 1e-3 * gw.x.iter().chain(&gw.y).fold(0.0f64, |s, g| s.max(g.abs())));
        let d = weighted_diffusion(grid, v, &kappa, m, p);
        let s = linalg::solve(grid, &zero, &d, &grad)?;
        let decrement = dot(&grad, &s);
        let scale = cur.report.j.abs().max(cur.report.grad_pm_norm * 1e-6).max(f64::MIN_POSITIVE);
        if !(decrement > opts.tol * scale) {
            return Ok(StartResult {
                index,
                value: cur.report.j,
                field: cur.v,
                iterations: it,
                converged: true,
            });
        }
        let mut accepted = None;
        for _ in 0..50 {
            let trial: Vec<f64> = (0..n)
                .map(|k| if grid.is_boundary(k) { 0.0 } else { (v[k] - tau * s[k]).max(0.0) })
                .collect();
            if let Some(next) = onto_set(grid, &trial, params, delta) {
                if next.report.j < cur.report.j {
                    accepted = Some(next);
                    break;
                }
            }
            tau *= 0.5;
        }
        let Some(next) = accepted else {
            return Ok(StartResult {
                index,
                value: cur.report.j,
                field: cur.v,
                iterations: it,
                converged: true,
            });
        };
        let drop = cur.report.j - next.report.j;
        cur = next;
        calm = if drop <= opts.tol * scale { calm + 1 } else { 0 };
        if calm >= 5 {
            return Ok(StartResult {
                index,
                value: cur.report.j,
                field: cur.v,
                iterations: it,
                converged: true,
            });
        }
        tau = (tau * 1.5).min(4.0);
    }
    Ok(StartResult {
        index,
        value: cur.report.j,
        field: cur.v,
        iterations: opts.max_iter,
        converged: false,
    })
}

/// `(p - 1) m^2 vbar^(2(m-1)) kappa` on every edge, floored to stay positive.
fn weighted_diffusion(grid: &Grid, v: &[f64], kappa: &FaceField, m: f64, p: f64) -> FaceField {
    let [nx, _] = grid.nodes_per_axis();
    let cx = nx - 1;
    let factor = |a: f64, b: f64| -> f64 {
        if m == 1.0 {
            1.0
        } else {
            m * m * (0.5 * (a + b)).max(0.0).powf(2.0 * (m - 1.0))
        }
    };
    let mut d = FaceField {
        x: kappa
            .x
            .iter()
            .enumerate()
            .map(|(e, kv)| {
                let (i, j) = (e % cx, e / cx);
                let k = grid.index(i, j);
                (p - 1.0) * kv * factor(v[k], v[k + 1])
            })
            .collect(),
        y: kappa
            .y
            .iter()
            .enumerate()
            .map(|(e, kv)| {
                let k = e;
                (p - 1.0) * kv * factor(v[k], v[k + nx])
            })
            .collect(),
    };
    let top = d.x.iter().chain(&d.y).fold(0.0f64, |s, x| s.max(*x));
    let floor = 1e-6 * top.max(f64::MIN_POSITIVE);
    d.x.iter_mut().chain(d.y.iter_mut()).for_each(|x| *x = x.max(floor));
    d
}

/// `a = sup u^m f(u) / u^(m gamma)` over `n` log-spaced samples of
/// `[u_max 1e-3, u_max]`. Equals `k` for a power law with `m gamma = m + q`.
pub fn source_coefficient(params: &ProblemParams, u_max: f64, n: usize) -> Result<f64> {
    if !(u_max > 0.0) || n < 2 {
        return Err(Error::InvalidArgument("need u_max > 0 and at least two samples".into()));
    }
    if let SourceSpec::PowerLaw { k, q } = params.source {
        if (params.m * params.gamma - params.m - q).abs() < 1e-12 {
            return Ok(k);
        }
    }
    let lo = u_max * 1e-3;
    let r = (u_max / lo).ln() / (n - 1) as f64;
    Ok((0..n)
        .map(|i| {
            let u = lo * (r * i as f64).exp();
            u.powf(params.m) * params.source.f(u) / u.powf(params.m * params.gamma)
        })
        .fold(0.0, f64::max))
}

/// `r(delta) = (delta / (a C_*^gamma))^(1 / (gamma - p))`.
pub fn r_delta(params: &ProblemParams, a_coef: f64, c_star: f64, delta: f64) -> Result<f64> {
    if !(params.gamma > params.p) {
        return Err(Error::InvalidArgument(format!(
            "r(delta) needs gamma > p, got gamma = {}, p = {}",
            params.gamma, params.p
        )));
    }
    if !(a_coef > 0.0) || !(c_star > 0.0) || !(delta >= 0.0) {
        return Err(Error::InvalidArgument("need a > 0, C_* > 0, delta >= 0".into()));
    }
    Ok((delta / (a_coef * c_star.powf(params.gamma))).powf(1.0 / (params.gamma - params.p)))
}

/// `a(delta) = 1/(pm) - delta/alpha - beta/(lambda_{1,p} alpha)`.
pub fn a_delta(params: &ProblemParams, delta: f64) -> Result<f64> {
    let l = params
        .lambda1p
        .ok_or_else(|| Error::InvalidArgument("a(delta) needs lambda1p".into()))?;
    Ok(1.0 / params.pm() - delta / params.alpha - params.beta / (l * params.alpha))
}

/// Zero of `a(delta)`: `alpha/(pm) - beta/lambda_{1,p}`.
pub fn a_delta_root(params: &ProblemParams) -> Result<f64> {
    let l = params
        .lambda1p
        .ok_or_else(|| Error::InvalidArgument("needs lambda1p".into()))?;
    Ok(params.alpha / params.pm() - params.beta / l)
}

#[derive(Debug, Clone, PartialEq)]
pub struct WellProfile {
    pub delta_grid: Vec<f64>,
    pub d_values: Vec<f64>,
    pub r_values: Vec<f64>,
    pub a_values: Vec<f64>,
    /// `a(delta) r(delta)^p`.
    pub lower_bounds: Vec<f64>,
    pub converged: Vec<bool>,
    pub d_peak: f64,
    pub b_est: f64,
    pub c_star: f64,
    pub a_coef: f64,
}

impl WellProfile {
    /// Fills in the closed-form columns for computed `d` values.
    #[allow(clippy::too_many_arguments)]
    pub fn assemble(
        params: &ProblemParams,
        a_coef: f64,
        c_star: f64,
        b_est: f64,
        d_peak: f64,
        delta_grid: Vec<f64>,
        d_values: Vec<f64>,
        converged: Vec<bool>,
    ) -> Result<Self> {
        let mut r_values = Vec::with_capacity(delta_grid.len());
        let mut a_values = Vec::with_capacity(delta_grid.len());
        let mut lower_bounds = Vec::with_capacity(delta_grid.len());
        for &dl in &delta_grid {
            let r = r_delta(params, a_coef, c_star, dl)?;
            let a = a_delta(params, dl)?;
            r_values.push(r);
            a_values.push(a);
            lower_bounds.push(a * r.powf(params.p));
        }
        Ok(WellProfile {
            delta_grid,
            d_values,
            r_values,
            a_values,
            lower_bounds,
            converged,
            d_peak,
            b_est,
            c_star,
            a_coef,
        })
    }

    /// Index of the largest `d` value.
    pub fn peak_index(&self) -> usize {
        self.d_values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
            .map(|(i, _)| i)
            .unwrap_or(0)
    }
}

/// `n` equispaced points `b k / (n + 1)`, `k = 1..=n`, inside `(0, b)`.
pub fn profile_deltas(b_est: f64, n: usize) -> Vec<f64> {
    (1..=n).map(|k| b_est * k as f64 / (n + 1) as f64).collect()
}

/// Locates the zero `b` of `d(delta)` by bisection. The search starts on
/// `[alpha/(pm) - beta/lambda_{1,p}, gamma/(pm)]` and widens the upper end
/// when `d` is still positive there. Values with `|d| <= zero_tol` count as
/// nonpositive.
pub fn estimate_b(
    grid: &Grid,
    params: &ProblemParams,
    opts: &WellDepthOptions,
    zero_tol: f64,
    rel_tol: f64,
) -> Result<f64> {
    let is_pos = |delta: f64| -> Result<bool> {
        let o = WellDepthOptions {
            stop_below: Some(zero_tol),
            ..*opts
        };
        let d = match well_depth_with(grid, params, delta, &o) {
            Ok(w) => w.value,
            Err(Error::NonConvergence { best, .. }) => best,
            Err(e) => return Err(e),
        };
        Ok(d > zero_tol)
    };
    let mut lo = a_delta_root(params)?.max(1e-6);
    let mut hi = params.gamma / params.pm();
    if hi <= lo {
        hi = 1.1 * lo;
    }
    while !is_pos(lo)? {
        lo *= 0.5;
        if lo < 1e-8 {
            return Err(Error::InvalidArgument("d(delta) is not positive near 0".into()));
        }
    }
    let mut widen = 0;
    while is_pos(hi)? {
        hi *= 1.1;
        widen += 1;
        if widen > 60 {
            return Err(Error::InvalidArgument("d(delta) stays positive".into()));
        }
    }
    while hi - lo > rel_tol * hi {
        let mid = 0.5 * (lo + hi);
        if is_pos(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileOptions {
    pub points: usize,
    pub depth: WellDepthOptions,
    pub zero_tol: f64,
    pub b_rel_tol: f64,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        ProfileOptions {
            points: 25,
            depth: WellDepthOptions::default(),
            zero_tol: 1e-9,
            b_rel_tol: 1e-6,
        }
    }
}

/// `d(delta)` on `points` equispaced values in `(0, b_est)` with the
/// closed-form `r`, `a` and lower-bound columns. `params.lambda1p` must be set.
pub fn well_profile(
    grid: &Grid,
    params: &ProblemParams,
    c_star: f64,
    a_coef: f64,
    opts: &ProfileOptions,
) -> Result<WellProfile> {
    let b_est = estimate_b(grid, params, &opts.depth, opts.zero_tol, opts.b_rel_tol)?;
    let deltas = profile_deltas(b_est, opts.points);
    let mut d_values = Vec::with_capacity(deltas.len());
    let mut converged = Vec::with_capacity(deltas.len());
    for &dl in &deltas {
        let (v, c) = depth_or_bound(grid, params, dl, &opts.depth)?;
        d_values.push(v);
        converged.push(c);
    }
    let (d_peak, _) = depth_or_bound(grid, params, 1.0, &opts.depth)?;
    WellProfile::assemble(params, a_coef, c_star, b_est, d_peak, deltas, d_values, converged)
}

/// Well depth, falling back to the best upper bound when no start converged.
pub fn depth_or_bound(grid: &Grid, params: &ProblemParams, delta: f64, opts: &WellDepthOptions) -> Result<(f64, bool)> {
    match well_depth_with(grid, params, delta, opts) {
        Ok(w) => Ok((w.value, true)),
        Err(Error::NonConvergence { best, .. }) => Ok((best, false)),
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WellClass {
    /// Stable well `{I > 0, J < d}` or the zero state.
    InW,
    /// Unstable well `{I < 0, J < d}`.
    InV,
    /// `|I| <= tol_I`.
    OnNehari,
    OutsideWells,
}

/// Classifies a state with `tol_I = 1e-8 max(1, ||grad u^m||_p^p)`.
pub fn classify_state(report: &EnergyReport, d: f64, _params: &ProblemParams) -> WellClass {
    if report.grad_pm_norm == 0.0 && report.mass_m1 == 0.0 {
        return WellClass::InW;
    }
    let tol = 1e-8 * report.grad_pm_norm.max(1.0);
    if report.i.abs() <= tol {
        WellClass::OnNehari
    } else if report.j < d && report.i > tol {
        WellClass::InW
    } else if report.j < d && report.i < -tol {
        WellClass::InV
    } else {
        WellClass::OutsideWells
    }
}
