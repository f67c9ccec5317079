//! Solves `c x - div(D grad x) = b` on interior nodes with `x = 0` on the
//! boundary. `c` is a nonnegative nodal diagonal and `D` a nonnegative edge
//! coefficient; the system is symmetric positive definite whenever some
//! `c > 0` or all `D > 0`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // inherent when std is linked
use num_traits::Float;

use crate::error::{Error, Result};
use crate::mesh::{FaceField, Grid};

pub(crate) const CG_TOL: f64 = 1e-13;

/// Applies `c x - div(D grad x)` at interior nodes; boundary entries are 0.
pub(crate) fn apply(grid: &Grid, c: &[f64], d: &FaceField, x: &[f64], out: &mut [f64]) {
    let [nx, ny] = grid.nodes_per_axis();
    let cx = nx - 1;
    let hx2 = grid.spacing()[0].powi(2);
    for v in out.iter_mut() {
        *v = 0.0;
    }
    if grid.dim() == 1 {
        for i in 1..cx {
            let l = d.x[i - 1] * (x[i] - x[i - 1]);
            let r = d.x[i] * (x[i] - x[i + 1]);
            out[i] = c[i] * x[i] + (l + r) / hx2;
        }
        return;
    }
    let hy2 = grid.spacing()[1].powi(2);
    for j in 1..ny - 1 {
        for i in 1..cx {
            let k = grid.index(i, j);
            let xl = d.x[i - 1 + cx * j] * (x[k] - x[k - 1]);
            let xr = d.x[i + cx * j] * (x[k] - x[k + 1]);
            let yd = d.y[i + nx * (j - 1)] * (x[k] - x[k - nx]);
            let yu = d.y[i + nx * j] * (x[k] - x[k + nx]);
            out[k] = c[k] * x[k] + (xl + xr) / hx2 + (yd + yu) / hy2;
        }
    }
}

pub(crate) fn solve(grid: &Grid, c: &[f64], d: &FaceField, b: &[f64]) -> Result<Vec<f64>> {
    if grid.dim() == 1 {
        thomas(grid, c, d, b)
    } else {
        cg(grid, c, d, b)
    }
}

fn thomas(grid: &Grid, c: &[f64], d: &FaceField, b: &[f64]) -> Result<Vec<f64>> {
    let n = grid.n_cells()[0];
    let hx2 = grid.spacing()[0].powi(2);
    let m = n - 1;
    let mut diag = vec![0.0; m];
    let mut off = vec![0.0; m];
    let mut rhs = vec![0.0; m];
    for r in 0..m {
        let i = r + 1;
        diag[r] = c[i] + (d.x[i - 1] + d.x[i]) / hx2;
        off[r] = -d.x[i] / hx2;
        rhs[r] = b[i];
    }
    let mut cp = vec![0.0; m];
    let mut dp = vec![0.0; m];
    let mut denom = diag[0];
    if !(denom.abs() > 0.0) || !denom.is_finite() {
        return Err(Error::LinearSolveFailure(format!("singular pivot {denom}")));
    }
    cp[0] = off[0] / denom;
    dp[0] = rhs[0] / denom;
    for r in 1..m {
        denom = diag[r] - off[r - 1] * cp[r - 1];
        if !(denom.abs() > 0.0) || !denom.is_finite() {
            return Err(Error::LinearSolveFailure(format!("singular pivot {denom} at row {r}")));
        }
        cp[r] = off[r] / denom;
        dp[r] = (rhs[r] - off[r - 1] * dp[r - 1]) / denom;
    }
    let mut x = vec![0.0; n + 1];
    x[m] = dp[m - 1];
    for r in (0..m - 1).rev() {
        x[r + 1] = dp[r] - cp[r] * x[r + 2];
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::LinearSolveFailure("non-finite solution".into()));
    }
    Ok(x)
}

fn cg(grid: &Grid, c: &[f64], d: &FaceField, b: &[f64]) -> Result<Vec<f64>> {
    let n = grid.node_count();
    let [nx, ny] = grid.nodes_per_axis();
    let cx = nx - 1;
    let hx2 = grid.spacing()[0].powi(2);
    let hy2 = grid.spacing()[1].powi(2);
    let mut inv_diag = vec![0.0; n];
    for j in 1..ny - 1 {
        for i in 1..cx {
            let k = grid.index(i, j);
            let dg = c[k]
                + (d.x[i - 1 + cx * j] + d.x[i + cx * j]) / hx2
                + (d.y[i + nx * (j - 1)] + d.y[i + nx * j]) / hy2;
            if !(dg > 0.0) || !dg.is_finite() {
                return Err(Error::LinearSolveFailure(format!("nonpositive diagonal {dg}")));
            }
            inv_diag[k] = 1.0 / dg;
        }
    }
    let dot = |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).map(|(x, y)| x * y).sum() };
    let mut x = vec![0.0; n];
    let mut r: Vec<f64> = (0..n).map(|k| if inv_diag[k] > 0.0 { b[k] } else { 0.0 }).collect();
    let bnorm = dot(&r, &r).sqrt();
    if bnorm == 0.0 {
        return Ok(x);
    }
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(a, w)| a * w).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let max_iter = 20 * n + 100;
    for _ in 0..max_iter {
        apply(grid, c, d, &p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::LinearSolveFailure(format!("operator not positive (pAp = {pap})")));
        }
        let alpha = rz / pap;
        for k in 0..n {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        if dot(&r, &r).sqrt() <= CG_TOL * bnorm {
            return Ok(x);
        }
        for k in 0..n {
            z[k] = r[k] * inv_diag[k];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for k in 0..n {
            p[k] = z[k] + beta * p[k];
        }
    }
    Err(Error::LinearSolveFailure(format!(
        "conjugate gradients did not converge in {max_iter} iterations"
    )))
}
