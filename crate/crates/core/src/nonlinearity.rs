//! Source terms `f`, their primitives `F(u) = int_0^u s^(m-1) f(s) ds`, the
//! parameter set of the problem, and a sampling checker for the structural
//! hypotheses on `f`.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

#[allow(unused_imports)] // inherent when std is linked
use num_traits::Float;

use crate::error::{Error, Result};
use crate::quadrature::adaptive_simpson;

/// Absolute tolerance of the quadrature behind tabulated primitives.
pub const PRIMITIVE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub enum SourceSpec {
    /// `f(u) = k u^q`.
    PowerLaw { k: f64, q: f64 },
    /// Piecewise-linear interpolation of `(u, f)` knots, extended linearly
    /// past the last knot. Linear interpolation keeps monotone and convex
    /// data monotone and convex.
    Tabulated { u: Vec<f64>, f: Vec<f64> },
}

impl SourceSpec {
    pub fn power(k: f64, q: f64) -> Result<Self> {
        let s = SourceSpec::PowerLaw { k, q };
        s.validate()?;
        Ok(s)
    }

    pub fn tabulated(u: Vec<f64>, f: Vec<f64>) -> Result<Self> {
        let s = SourceSpec::Tabulated { u, f };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParams { clause: "source", message: m });
        match self {
            SourceSpec::PowerLaw { k, q } => {
                if !(*k > 0.0) || !k.is_finite() {
                    return bad(format!("power law needs k > 0, got {k}"));
                }
                if !(*q >= 1.0) || !q.is_finite() {
                    return bad(format!("power law needs q >= 1, got {q}"));
                }
            }
            SourceSpec::Tabulated { u, f } => {
                if u.len() != f.len() || u.len() < 2 {
                    return bad(format!(
                        "table needs at least two (u, f) pairs of equal length, got {} and {}",
                        u.len(),
                        f.len()
                    ));
                }
                if u[0] != 0.0 || f[0] != 0.0 {
                    return bad("table must start at (0, 0)".to_string());
                }
                if u.windows(2).any(|w| !(w[1] > w[0])) {
                    return bad("table u values must be strictly increasing".to_string());
                }
                if f.iter().chain(u.iter()).any(|v| !v.is_finite() || *v < 0.0) {
                    return bad("table entries must be finite and nonnegative".to_string());
                }
                let n = u.len();
                let last = (f[n - 1] - f[n - 2]) / (u[n - 1] - u[n - 2]);
                if last < 0.0 {
                    return bad("table must not decrease on its last segment".to_string());
                }
            }
        }
        Ok(())
    }

    /// `f(u)` for `u >= 0`.
    pub fn eval(&self, u: f64) -> Result<f64> {
        if u < 0.0 {
            return Err(Error::NegativeArgument(u));
        }
        Ok(self.f(u))
    }

    /// `f(max(u, 0))`; used where nonnegativity is already guaranteed.
    #[inline]
    pub fn f(&self, u: f64) -> f64 {
        let u = u.max(0.0);
        match self {
            SourceSpec::PowerLaw { k, q } => {
                if u == 0.0 {
                    0.0
                } else {
                    k * u.powf(*q)
                }
            }
            SourceSpec::Tabulated { u: xs, f: ys } => {
                let s = segment(xs, u);
                ys[s] + (ys[s + 1] - ys[s]) / (xs[s + 1] - xs[s]) * (u - xs[s])
            }
        }
    }

    /// `f'(u)`; one-sided (right) slope at table knots.
    pub fn derivative(&self, u: f64) -> f64 {
        let u = u.max(0.0);
        match self {
            SourceSpec::PowerLaw { k, q } => {
                if u == 0.0 {
                    if *q == 1.0 {
                        *k
                    } else {
                        0.0
                    }
                } else {
                    k * q * u.powf(q - 1.0)
                }
            }
            SourceSpec::Tabulated { u: xs, f: ys } => {
                let s = segment(xs, u);
                (ys[s + 1] - ys[s]) / (xs[s + 1] - xs[s])
            }
        }
    }

    /// `F(u) = int_0^u s^(m-1) f(s) ds` for `u >= 0`.
    pub fn primitive(&self, m: f64, u: f64) -> Result<f64> {
        if u < 0.0 {
            return Err(Error::NegativeArgument(u));
        }
        Ok(self.big_f(m, u))
    }

    #[inline]
    pub(crate) fn big_f(&self, m: f64, u: f64) -> f64 {
        let u = u.max(0.0);
        if u == 0.0 {
            return 0.0;
        }
        match self {
            SourceSpec::PowerLaw { k, q } => k * u.powf(m + q) / (m + q),
            SourceSpec::Tabulated { u: xs, .. } => {
                let g = |s: f64| s.powf(m - 1.0) * self.f(s);
                let last = segment(xs, u);
                let pieces = (last + 1) as f64;
                let mut total = 0.0;
                for s in 0..=last {
                    let hi = if s == last { u } else { xs[s + 1] };
                    total += adaptive_simpson(&g, xs[s], hi, PRIMITIVE_TOL / pieces);
                }
                total
            }
        }
    }
}

/// Index of the table segment containing `u` (the last one past the end).
fn segment(xs: &[f64], u: f64) -> usize {
    let n = xs.len();
    match xs.partition_point(|&x| x <= u) {
        0 => 0,
        i if i >= n => n - 2,
        i => i - 1,
    }
}

/// `f(u)`; negative `u` is rejected.
pub fn f_eval(spec: &SourceSpec, u: f64) -> Result<f64> {
    spec.eval(u)
}

/// `F(u) = int_0^u s^(m-1) f(s) ds`; negative `u` is rejected.
pub fn primitive_eval(spec: &SourceSpec, m: f64, u: f64) -> Result<f64> {
    spec.primitive(m, u)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemParams {
    pub m: f64,
    pub p: f64,
    pub sigma: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    /// First Dirichlet eigenvalue of the p-Laplacian, once computed.
    pub lambda1p: Option<f64>,
    pub source: SourceSpec,
}

impl ProblemParams {
    /// `pm`.
    #[inline]
    pub fn pm(&self) -> f64 {
        self.p * self.m
    }

    /// Growth exponent `alpha / (1 + beta)` of the lower bound on `F - sigma`.
    pub fn lambda_growth(&self) -> f64 {
        self.alpha / (1.0 + self.beta)
    }

    pub fn with_lambda1p(mut self, lambda1p: f64) -> Self {
        self.lambda1p = Some(lambda1p);
        self
    }

    /// Structural checks on the constants. Each failure names its clause.
    pub fn validate(&self) -> Result<()> {
        let fail = |clause: &'static str, message: String| Err(Error::InvalidParams { clause, message });
        for (name, v) in [
            ("m", self.m),
            ("p", self.p),
            ("sigma", self.sigma),
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("gamma", self.gamma),
        ] {
            if !v.is_finite() {
                return fail("finite", format!("{name} must be finite, got {v}"));
            }
        }
        if self.m < 1.0 {
            return fail("m >= 1", format!("m = {}", self.m));
        }
        if self.p < 2.0 {
            return fail("p >= 2", format!("p = {}", self.p));
        }
        if self.sigma < 0.0 {
            return fail("sigma >= 0", format!("sigma = {}", self.sigma));
        }
        if self.beta < 0.0 {
            return fail("beta >= 0", format!("beta = {}", self.beta));
        }
        if !(self.p < self.alpha && self.alpha <= self.gamma) {
            return fail(
                "p < alpha <= gamma",
                format!("p = {}, alpha = {}, gamma = {}", self.p, self.alpha, self.gamma),
            );
        }
        if let Some(l) = self.lambda1p {
            if !(l > 0.0) {
                return fail("lambda1p > 0", format!("lambda1p = {l}"));
            }
            let bound = l * (self.alpha - self.m - 1.0) / (self.m + 1.0);
            if !(self.beta < bound) {
                return fail(
                    "beta < lambda1p (alpha - m - 1) / (m + 1)",
                    format!("beta = {} but the bound is {bound}", self.beta),
                );
            }
        }
        self.source.validate()
    }

    /// Non-fatal remarks for a grid of the given dimension: the Sobolev range
    /// `p < n`, `gamma < pn / (n - p)` is not available in one or two
    /// dimensions when `p >= 2`.
    pub fn warnings(&self, dim: usize) -> Vec<String> {
        let n = dim as f64;
        let mut out = Vec::new();
        if self.p >= n {
            out.push(format!(
                "p = {} >= dim = {dim}: the Sobolev exponent bound on gamma is vacuous on this grid",
                self.p
            ));
        } else {
            let crit = self.p * n / (n - self.p);
            if self.gamma >= crit {
                out.push(format!("gamma = {} >= pn/(n-p) = {crit}", self.gamma));
            }
        }
        if self.lambda_growth() <= self.pm() {
            out.push(format!(
                "alpha/(1+beta) = {} does not exceed pm = {}",
                self.lambda_growth(),
                self.pm()
            ));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Clause {
    /// `f(0) = 0` and `f(u) > 0` for `u > 0`.
    HI,
    /// Convexity of `f`.
    HIi,
    /// `u^m f(u) <= gamma (F(u) - sigma)`.
    HIiiUpper,
    /// `alpha F(u) <= u^m f(u) + beta u^(pm) + alpha sigma`.
    HIiiLower,
    /// `u f'(u) - m (p - 1) f(u) >= 0`.
    L31a,
}

impl Clause {
    pub const ALL: [Clause; 5] = [
        Clause::HI,
        Clause::HIi,
        Clause::HIiiUpper,
        Clause::HIiiLower,
        Clause::L31a,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Clause::HI => "H_i",
            Clause::HIi => "H_ii",
            Clause::HIiiUpper => "H_iii_upper",
            Clause::HIiiLower => "H_iii_lower",
            Clause::L31a => "L31a",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionReport {
    pub clause: Clause,
    pub u_min: f64,
    pub u_max: f64,
    pub n_samples: usize,
    /// Sample points where the inequality fails beyond rounding.
    pub violations: Vec<f64>,
    pub min_margin: f64,
    pub max_margin: f64,
    pub mean_margin: f64,
}

impl ConditionReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Relative slack below which a negative margin counts as rounding.
const TOL_CLOSED: f64 = 1e-10;
/// Looser slack for clauses evaluated through finite differences.
const TOL_DIFF: f64 = 1e-8;
/// Decades spanned by the log-spaced samples below `u_max`.
const DECADES: f64 = 3.0;

/// Samples every clause on `n_samples` log-spaced points of
/// `[u_max 10^-3, u_max]` and reports margins and violation sets.
pub fn check_h(params: &ProblemParams, u_max: f64, n_samples: usize) -> Result<Vec<ConditionReport>> {
    if !(u_max > 0.0) || !u_max.is_finite() {
        return Err(Error::InvalidArgument(format!("u_max must be positive, got {u_max}")));
    }
    if n_samples < 100 {
        return Err(Error::InvalidArgument(format!("need at least 100 samples, got {n_samples}")));
    }
    let u_min = u_max * 10f64.powf(-DECADES);
    let ratio = (u_max / u_min).ln() / (n_samples - 1) as f64;
    let us: Vec<f64> = (0..n_samples)
        .map(|i| {
            if i == n_samples - 1 {
                u_max
            } else {
                u_min * (ratio * i as f64).exp()
            }
        })
        .collect();
    let src = &params.source;
    let (m, p, sigma) = (params.m, params.p, params.sigma);
    let (alpha, beta, gamma) = (params.alpha, params.beta, params.gamma);

    Ok(Clause::ALL
        .iter()
        .map(|&clause| {
            // (u, margin, scale)
            let samples: Vec<(f64, f64, f64)> = match clause {
                Clause::HI => {
                    let mut v: Vec<(f64, f64, f64)> = us.iter().map(|&u| (u, src.f(u), 0.0)).collect();
                    let f0 = src.f(0.0);
                    if f0 != 0.0 {
                        v.insert(0, (0.0, -f0.abs(), 0.0));
                    }
                    v
                }
                Clause::HIi => us
                    .windows(3)
                    .map(|w| {
                        let (a, b, c) = (w[0], w[1], w[2]);
                        let (fa, fb, fc) = (src.f(a), src.f(b), src.f(c));
                        let s1 = (fb - fa) / (b - a);
                        let s2 = (fc - fb) / (c - b);
                        let dd = 2.0 * (s2 - s1) / (c - a);
                        let scale = 2.0 * (s1.abs() + s2.abs()) / (c - a);
                        (b, dd, scale)
                    })
                    .collect(),
                Clause::HIiiUpper => us
                    .iter()
                    .map(|&u| {
                        let big = src.big_f(m, u);
                        let lhs = u.powf(m) * src.f(u);
                        let rhs = gamma * (big - sigma);
                        (u, rhs - lhs, lhs.abs() + gamma * (big.abs() + sigma))
                    })
                    .collect(),
                Clause::HIiiLower => us
                    .iter()
                    .map(|&u| {
                        let big = alpha * src.big_f(m, u);
                        let rhs = u.powf(m) * src.f(u) + beta * u.powf(p * m) + alpha * sigma;
                        (u, rhs - big, rhs.abs() + big.abs())
                    })
                    .collect(),
                Clause::L31a => us
                    .iter()
                    .map(|&u| {
                        let fp = centered_derivative(src, u);
                        let lhs = u * fp;
                        let rhs = m * (p - 1.0) * src.f(u);
                        (u, lhs - rhs, lhs.abs() + rhs.abs())
                    })
                    .collect(),
            };
            let tol = match clause {
                Clause::HIi | Clause::L31a => TOL_DIFF,
                _ => TOL_CLOSED,
            };
            summarize(clause, u_min, u_max, n_samples, &samples, tol)
        })
        .collect())
}

/// Centered difference with step `max(1e-6, 1e-6 u)`, shrunk so it never
/// reaches below zero.
fn centered_derivative(src: &SourceSpec, u: f64) -> f64 {
    let mut h = (1e-6f64).max(1e-6 * u);
    if u - h < 0.0 {
        h = 0.5 * u;
    }
    if h == 0.0 {
        return src.derivative(u);
    }
    (src.f(u + h) - src.f(u - h)) / (2.0 * h)
}

fn summarize(
    clause: Clause,
    u_min: f64,
    u_max: f64,
    n_samples: usize,
    samples: &[(f64, f64, f64)],
    tol: f64,
) -> ConditionReport {
    let mut violations = Vec::new();
    let mut min_margin = f64::INFINITY;
    let mut max_margin = f64::NEG_INFINITY;
    let mut sum = 0.0;
    for &(u, margin, scale) in samples {
        let failed = if clause == Clause::HI {
            !(margin > 0.0)
        } else {
            !(margin >= -tol * scale)
        };
        if failed {
            violations.push(u);
        }
        min_margin = min_margin.min(margin);
        max_margin = max_margin.max(margin);
        sum += margin;
    }
    ConditionReport {
        clause,
        u_min,
        u_max,
        n_samples,
        violations,
        min_margin,
        max_margin,
        mean_margin: if samples.is_empty() { 0.0 } else { sum / samples.len() as f64 },
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthConstants {
    /// `|F(u_ref) - sigma| / |u_ref|^gamma`.
    pub a: f64,
    /// `F(u_ref) / u_ref^lambda`.
    pub b: f64,
    /// `alpha / (1 + beta)`.
    pub lambda: f64,
}

pub fn growth_constants(params: &ProblemParams, u_ref: f64) -> Result<GrowthConstants> {
    if u_ref == 0.0 || !u_ref.is_finite() {
        return Err(Error::InvalidArgument(format!("u_ref must be nonzero, got {u_ref}")));
    }
    let r = u_ref.abs();
    let big = params.source.big_f(params.m, r);
    let lambda = params.lambda_growth();
    Ok(GrowthConstants {
        a: (big - params.sigma).abs() / r.powf(params.gamma),
        b: big / r.powf(lambda),
        lambda,
    })
}
