//! The p-Laplacian of `u^m` and the functionals `J`, `I` and `I_delta`.
//!
//! In 2D the gradient of a nodal field is evaluated at the four corners of
//! every cell, pairing the x-edge and y-edge that meet there. The discrete
//! Dirichlet energy is `sum_corners (cell area / 4) |g|^p`, and the edge
//! coefficient `kappa` of the flux `kappa * D w` is the corner-weighted mean
//! of `|g|^(p-2)` over the corners touching the edge. With this pairing the
//! discrete operator is the exact gradient of the discrete energy, so
//! `<-div(kappa D w), w> = ||grad w||_p^p` holds to rounding, and `p = 2`
//! gives the 3-point / 5-point Laplacian.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // inherent when std is linked
use num_traits::Float;

use crate::error::{Error, Result};
use crate::mesh::{self, FaceField, Field, Grid};
use crate::nonlinearity::ProblemParams;

/// Default regularization of `|grad u^m|^(p-2)` inside the time stepper.
pub fn default_eps_reg(grid: &Grid) -> f64 {
    1e-8 / grid.diameter()
}

#[inline]
fn reg_power(g2: f64, eps2: f64, e: f64) -> f64 {
    if e == 0.0 {
        1.0
    } else {
        (g2 + eps2).powf(e)
    }
}

/// `kappa_e`, the face coefficient `(|grad w|^2 + eps^2)^((p-2)/2)` of the
/// flux at every edge.
pub(crate) fn face_coefficients(grid: &Grid, grad: &FaceField, p: f64, eps: f64) -> FaceField {
    let e = 0.5 * (p - 2.0);
    let eps2 = eps * eps;
    if grid.dim() == 1 {
        return FaceField {
            x: grad.x.iter().map(|g| reg_power(g * g, eps2, e)).collect(),
            y: Vec::new(),
        };
    }
    let mut out = FaceField::zeros(grid);
    if e == 0.0 {
        out.x.iter_mut().for_each(|v| *v = 1.0);
        out.y.iter_mut().for_each(|v| *v = 1.0);
        return out;
    }
    grid.for_each_corner(|w, ex, ey| {
        let c = w * reg_power(grad.x[ex] * grad.x[ex] + grad.y[ey] * grad.y[ey], eps2, e);
        out.x[ex] += c;
        out.y[ey] += c;
    });
    for (k, v) in out.x.iter_mut().enumerate() {
        *v /= grid.edge_weight(0, k);
    }
    for (k, v) in out.y.iter_mut().enumerate() {
        *v /= grid.edge_weight(1, k);
    }
    out
}

/// `||grad w||_p^p` for nodal values `w`.
pub(crate) fn grad_norm_p(grid: &Grid, w: &[f64], p: f64) -> f64 {
    let g = mesh::gradient_of(grid, w);
    grad_norm_p_of(grid, &g, p)
}

pub(crate) fn grad_norm_p_of(grid: &Grid, g: &FaceField, p: f64) -> f64 {
    if grid.dim() == 1 {
        let h = grid.spacing()[0];
        return g.x.iter().map(|d| h * d.abs().powf(p)).sum();
    }
    let half = 0.5 * p;
    let mut s = 0.0;
    grid.for_each_corner(|w, ex, ey| {
        let g2 = g.x[ex] * g.x[ex] + g.y[ey] * g.y[ey];
        s += w * if p == 2.0 { g2 } else { g2.powf(half) };
    });
    s
}

/// `div(kappa grad w)` into `out`, for nodal values `w`.
pub(crate) fn p_laplacian_into(grid: &Grid, w: &[f64], p: f64, eps: f64, out: &mut [f64]) {
    let g = mesh::gradient_of(grid, w);
    let kappa = face_coefficients(grid, &g, p, eps);
    let flux = FaceField {
        x: g.x.iter().zip(&kappa.x).map(|(a, b)| a * b).collect(),
        y: g.y.iter().zip(&kappa.y).map(|(a, b)| a * b).collect(),
    };
    mesh::divergence_into(grid, &flux, out);
}

/// Nodal powers `u^m`, with `0^m = 0`.
pub(crate) fn powm(u: &[f64], m: f64) -> Vec<f64> {
    if m == 1.0 {
        return u.to_vec();
    }
    u.iter().map(|&v| if v > 0.0 { v.powf(m) } else { 0.0 }).collect()
}

fn check_nonnegative(u: &Field) -> Result<()> {
    match u.values().iter().find(|v| !(**v >= 0.0)) {
        Some(&v) => Err(Error::NegativeArgument(v)),
        None => Ok(()),
    }
}

/// `div((|grad u^m|^2 + eps_reg^2)^((p-2)/2) grad u^m)`, zero on the boundary.
pub fn p_laplacian_m(grid: &Grid, u: &Field, m: f64, p: f64, eps_reg: f64) -> Result<Field> {
    if u.grid() != grid {
        return Err(Error::GridMismatch);
    }
    check_nonnegative(u)?;
    if !(eps_reg >= 0.0) {
        return Err(Error::InvalidArgument(alloc::format!("eps_reg must be >= 0, got {eps_reg}")));
    }
    let w = powm(u.values(), m);
    let mut out = vec![0.0; grid.node_count()];
    p_laplacian_into(grid, &w, p, eps_reg, &mut out);
    Field::from_values(grid, out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyReport {
    /// `grad_pm_norm / (pm) - potential`.
    pub j: f64,
    /// `grad_pm_norm - source_pairing`.
    pub i: f64,
    /// `||grad u^m||_p^p`.
    pub grad_pm_norm: f64,
    /// `int u^m f(u)`.
    pub source_pairing: f64,
    /// `int (F(u) - sigma)`.
    pub potential: f64,
    /// `int u^(m+1)`.
    pub mass_m1: f64,
}

impl EnergyReport {
    /// `delta * grad_pm_norm - source_pairing`.
    pub fn i_delta(&self, delta: f64) -> f64 {
        delta * self.grad_pm_norm - self.source_pairing
    }
}

/// Energy snapshot from raw nonnegative nodal values.
pub(crate) fn report_of(grid: &Grid, u: &[f64], params: &ProblemParams) -> EnergyReport {
    let m = params.m;
    let w = powm(u, m);
    let grad = grad_norm_p(grid, &w, params.p);
    let mut pairing = 0.0;
    let mut big = 0.0;
    let mut mass = 0.0;
    for (k, (&uk, &wk)) in u.iter().zip(&w).enumerate() {
        let wt = grid.weight(k);
        if uk > 0.0 {
            pairing += wt * wk * params.source.f(uk);
            big += wt * params.source.big_f(m, uk);
            mass += wt * wk * uk;
        }
    }
    let potential = big - params.sigma * grid.measure();
    EnergyReport {
        j: grad / params.pm() - potential,
        i: grad - pairing,
        grad_pm_norm: grad,
        source_pairing: pairing,
        potential,
        mass_m1: mass,
    }
}

pub fn energy_report(grid: &Grid, u: &Field, params: &ProblemParams) -> Result<EnergyReport> {
    if u.grid() != grid {
        return Err(Error::GridMismatch);
    }
    check_nonnegative(u)?;
    Ok(report_of(grid, u.values(), params))
}

/// `J(u) = ||grad u^m||_p^p / (pm) - int (F(u) - sigma)`.
pub fn energy_j(grid: &Grid, u: &Field, params: &ProblemParams) -> Result<f64> {
    energy_report(grid, u, params).map(|r| r.j)
}

/// `I(u) = ||grad u^m||_p^p - int u^m f(u)`.
pub fn nehari_i(grid: &Grid, u: &Field, params: &ProblemParams) -> Result<f64> {
    energy_report(grid, u, params).map(|r| r.i)
}

/// `I_delta(u) = delta ||grad u^m||_p^p - int u^m f(u)`.
pub fn nehari_i_delta(grid: &Grid, u: &Field, params: &ProblemParams, delta: f64) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(Error::InvalidArgument(alloc::format!("delta must be positive, got {delta}")));
    }
    energy_report(grid, u, params).map(|r| r.i_delta(delta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonlinearity::SourceSpec;
    use core::f64::consts::PI;

    fn cubic() -> ProblemParams {
        ProblemParams {
            m: 1.0,
            p: 2.0,
            sigma: 0.0,
            alpha: 3.5,
            beta: 0.1,
            gamma: 4.0,
            lambda1p: None,
            source: SourceSpec::power(1.0, 3.0).unwrap(),
        }
    }

    #[test]
    fn laplacian_of_sine() {
        let g = Grid::unit_interval(200).unwrap();
        let u = Field::from_fn(&g, |x| (PI * x[0]).sin());
        let l = p_laplacian_m(&g, &u, 1.0, 2.0, 0.0).unwrap();
        let err = g
            .interior_indices()
            .map(|k| (l.values()[k] + PI * PI * u.values()[k]).abs())
            .fold(0.0, f64::max);
        assert!(err / (PI * PI) < 1e-3, "rel err {}", err / (PI * PI));
    }

    #[test]
    fn constant_field_gives_zero() {
        for g in [Grid::unit_interval(20).unwrap(), Grid::new(2, &[1.0, 1.0], &[6, 7]).unwrap()] {
            let c = Field::constant(&g, 2.5);
            let l = p_laplacian_m(&g, &c, 1.5, 3.0, 0.0).unwrap();
            assert!(l.values().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn ramp_with_m2_p3_matches_direct_stencil() {
        let g = Grid::unit_interval(40).unwrap();
        let h = g.spacing()[0];
        let u = Field::from_fn(&g, |x| 0.2 + x[0]);
        let l = p_laplacian_m(&g, &u, 2.0, 3.0, 0.0).unwrap();
        let w = |i: usize| (0.2 + i as f64 * h).powi(2);
        for i in 1..40 {
            let gr = (w(i + 1) - w(i)) / h;
            let gl = (w(i) - w(i - 1)) / h;
            let direct = (gr.abs() * gr - gl.abs() * gl) / h;
            assert!((l.values()[i] - direct).abs() < 1e-10);
        }
    }

    #[test]
    fn p2_in_2d_is_five_point() {
        let g = Grid::new(2, &[1.0, 2.0], &[7, 9]).unwrap();
        let u = Field::dirichlet_from_fn(&g, |x| x[0] * (1.0 - x[0]) * x[1] * (2.0 - x[1]) + x[0] * x[0]);
        let l = p_laplacian_m(&g, &u, 1.0, 2.0, 0.0).unwrap();
        let (hx, hy) = (g.spacing()[0], g.spacing()[1]);
        let v = u.values();
        let nx = 8;
        for k in g.interior_indices() {
            let five = (v[k + 1] - 2.0 * v[k] + v[k - 1]) / (hx * hx)
                + (v[k + nx] - 2.0 * v[k] + v[k - nx]) / (hy * hy);
            assert!((l.values()[k] - five).abs() < 1e-10);
        }
    }

    #[test]
    fn sine_energies() {
        let g = Grid::unit_interval(400).unwrap();
        let u = Field::from_fn(&g, |x| (PI * x[0]).sin());
        let p = cubic();
        let r = energy_report(&g, &u, &p).unwrap();
        assert!((r.j - (PI * PI / 4.0 - 3.0 / 32.0)).abs() < 1e-3);
        assert!((r.i - (PI * PI / 2.0 - 3.0 / 8.0)).abs() < 1e-3);
        assert_eq!(nehari_i_delta(&g, &u, &p, 1.0).unwrap(), r.i);
        let i2 = nehari_i_delta(&g, &u, &p, 2.0).unwrap();
        assert!((i2 - (PI * PI - 3.0 / 8.0)).abs() < 1e-3);
    }

    #[test]
    fn zero_field_report() {
        let g = Grid::new(2, &[1.0, 2.0], &[5, 5]).unwrap();
        let mut p = cubic();
        p.sigma = 0.3;
        let r = energy_report(&g, &Field::zeros(&g), &p).unwrap();
        assert!((r.j - 0.6).abs() < 1e-14);
        assert_eq!(r.i, 0.0);
        assert_eq!(r.grad_pm_norm, 0.0);
        assert_eq!(r.mass_m1, 0.0);
        assert!((r.potential + 0.6).abs() < 1e-14);
        assert_eq!(nehari_i_delta(&g, &Field::zeros(&g), &p, 3.0).unwrap(), 0.0);
    }

    #[test]
    fn negative_values_rejected() {
        let g = Grid::unit_interval(8).unwrap();
        let u = Field::constant(&g, -1.0);
        assert!(energy_j(&g, &u, &cubic()).is_err());
        assert!(nehari_i_delta(&g, &Field::zeros(&g), &cubic(), 0.0).is_err());
    }
}
