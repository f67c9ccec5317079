//! Uniform tensor grids on `(0, L1)` or `(0, L1) x (0, L2)` with Dirichlet
//! boundary, nodal fields, trapezoid quadrature and face-centered differences.
//!
//! Fields store a value at every node, boundary included. The PDE routines
//! keep boundary values at zero; the quadrature weights (trapezoid, half
//! weight on boundary nodes) sum to `|Omega|`, so constants integrate exactly.
//!
//! Gradients live on edges: an x-edge joins node `(i, j)` to `(i + 1, j)`, a
//! y-edge joins `(i, j)` to `(i, j + 1)`. Edge `(i, j)` of the x family has
//! index `i + n_cells[0] * j`; edge `(i, j)` of the y family has index
//! `i + (n_cells[0] + 1) * j`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // inherent when std is linked
use num_traits::Float;

use crate::error::{Error, Result};

/// Smallest admissible number of cells per axis.
pub const MIN_CELLS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    dim: usize,
    extents: [f64; 2],
    n_cells: [usize; 2],
    spacing: [f64; 2],
}

impl Grid {
    /// Builds a uniform grid. `extents` and `n_cells` need one entry per axis.
    pub fn new(dim: usize, extents: &[f64], n_cells: &[usize]) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidGrid(format!("dim must be 1 or 2, got {dim}")));
        }
        if extents.len() != dim || n_cells.len() != dim {
            return Err(Error::InvalidGrid(format!(
                "expected {dim} extents and {dim} cell counts, got {} and {}",
                extents.len(),
                n_cells.len()
            )));
        }
        let mut g = Grid {
            dim,
            extents: [1.0; 2],
            n_cells: [0; 2],
            spacing: [1.0; 2],
        };
        for axis in 0..dim {
            let l = extents[axis];
            let n = n_cells[axis];
            if !(l > 0.0) || !l.is_finite() {
                return Err(Error::InvalidGrid(format!(
                    "extent along axis {axis} must be positive and finite, got {l}"
                )));
            }
            if n < MIN_CELLS {
                return Err(Error::InvalidGrid(format!(
                    "need at least {MIN_CELLS} cells along axis {axis}, got {n}"
                )));
            }
            g.extents[axis] = l;
            g.n_cells[axis] = n;
            g.spacing[axis] = l / n as f64;
        }
        Ok(g)
    }

    /// Unit interval with `n` cells.
    pub fn unit_interval(n: usize) -> Result<Self> {
        Self::new(1, &[1.0], &[n])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn extents(&self) -> &[f64] {
        &self.extents[..self.dim]
    }

    pub fn n_cells(&self) -> &[usize] {
        &self.n_cells[..self.dim]
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing[..self.dim]
    }

    /// Nodes per axis; a 1D grid reports one node along the absent axis.
    pub fn nodes_per_axis(&self) -> [usize; 2] {
        if self.dim == 1 {
            [self.n_cells[0] + 1, 1]
        } else {
            [self.n_cells[0] + 1, self.n_cells[1] + 1]
        }
    }

    pub fn node_count(&self) -> usize {
        let [nx, ny] = self.nodes_per_axis();
        nx * ny
    }

    pub fn interior_count(&self) -> usize {
        self.n_cells().iter().map(|n| n - 1).product()
    }

    /// `|Omega|`.
    pub fn measure(&self) -> f64 {
        self.extents().iter().product()
    }

    pub fn diameter(&self) -> f64 {
        self.extents().iter().map(|l| l * l).sum::<f64>().sqrt()
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i + (self.n_cells[0] + 1) * j
    }

    #[inline]
    pub fn split(&self, idx: usize) -> (usize, usize) {
        let nx = self.n_cells[0] + 1;
        (idx % nx, idx / nx)
    }

    /// Coordinates of a node; the second entry is 0 in 1D.
    pub fn coords(&self, idx: usize) -> [f64; 2] {
        let (i, j) = self.split(idx);
        [
            i as f64 * self.spacing[0],
            if self.dim == 2 {
                j as f64 * self.spacing[1]
            } else {
                0.0
            },
        ]
    }

    pub fn is_boundary(&self, idx: usize) -> bool {
        let (i, j) = self.split(idx);
        if i == 0 || i == self.n_cells[0] {
            return true;
        }
        self.dim == 2 && (j == 0 || j == self.n_cells[1])
    }

    /// Indices of the interior (unknown) nodes in storage order.
    pub fn interior_indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.node_count()).filter(move |&k| !self.is_boundary(k))
    }

    #[inline]
    fn axis_weight(&self, axis: usize, k: usize) -> f64 {
        let h = self.spacing[axis];
        if k == 0 || k == self.n_cells[axis] {
            0.5 * h
        } else {
            h
        }
    }

    /// Trapezoid weight of node `idx`.
    pub fn weight(&self, idx: usize) -> f64 {
        let (i, j) = self.split(idx);
        let wx = self.axis_weight(0, i);
        if self.dim == 1 {
            wx
        } else {
            wx * self.axis_weight(1, j)
        }
    }

    pub fn weights(&self) -> Vec<f64> {
        (0..self.node_count()).map(|k| self.weight(k)).collect()
    }

    /// Number of x-edges and y-edges.
    pub fn edge_counts(&self) -> (usize, usize) {
        let [nx, ny] = self.nodes_per_axis();
        if self.dim == 1 {
            (self.n_cells[0], 0)
        } else {
            (self.n_cells[0] * ny, nx * self.n_cells[1])
        }
    }

    /// Quadrature weight attached to an x-edge (`axis = 0`) or y-edge.
    pub fn edge_weight(&self, axis: usize, e: usize) -> f64 {
        if self.dim == 1 {
            return self.spacing[0];
        }
        if axis == 0 {
            let j = e / self.n_cells[0];
            self.spacing[0] * self.axis_weight(1, j)
        } else {
            let i = e % (self.n_cells[0] + 1);
            self.spacing[1] * self.axis_weight(0, i)
        }
    }

    /// Visits the four quarter-cell corners of every cell. Each corner pairs
    /// the x-edge and the y-edge meeting there and carries a quarter of the
    /// cell area. The callback receives `(weight, x_edge, y_edge)`. 2D only.
    pub(crate) fn for_each_corner(&self, mut visit: impl FnMut(f64, usize, usize)) {
        debug_assert_eq!(self.dim, 2);
        let (cx, cy) = (self.n_cells[0], self.n_cells[1]);
        let nx = cx + 1;
        let w = 0.25 * self.spacing[0] * self.spacing[1];
        for j in 0..cy {
            for i in 0..cx {
                for b in 0..2 {
                    for a in 0..2 {
                        visit(w, i + cx * (j + b), (i + a) + nx * j);
                    }
                }
            }
        }
    }
}

/// Nodal function on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: &Grid) -> Self {
        Field {
            grid: *grid,
            values: vec![0.0; grid.node_count()],
        }
    }

    pub fn constant(grid: &Grid, c: f64) -> Self {
        Field {
            grid: *grid,
            values: vec![c; grid.node_count()],
        }
    }

    pub fn from_values(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(Error::InvalidArgument(format!(
                "expected {} node values, got {}",
                grid.node_count(),
                values.len()
            )));
        }
        Ok(Field {
            grid: *grid,
            values,
        })
    }

    /// Samples `f` at every node (boundary included).
    pub fn from_fn(grid: &Grid, f: impl Fn(&[f64]) -> f64) -> Self {
        let values = (0..grid.node_count())
            .map(|k| {
                let c = grid.coords(k);
                f(&c[..grid.dim()])
            })
            .collect();
        Field {
            grid: *grid,
            values,
        }
    }

    /// Samples `f` at interior nodes and sets the boundary to zero.
    pub fn dirichlet_from_fn(grid: &Grid, f: impl Fn(&[f64]) -> f64) -> Self {
        let mut field = Self::from_fn(grid, f);
        field.zero_boundary();
        field
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn zero_boundary(&mut self) {
        for k in 0..self.values.len() {
            if self.grid.is_boundary(k) {
                self.values[k] = 0.0;
            }
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scaled(&self, s: f64) -> Field {
        self.map(|v| s * v)
    }

    pub fn is_nonnegative(&self) -> bool {
        self.values.iter().all(|&v| v >= 0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn ensure_same_grid(&self, other: &Field) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// Sup-norm distance to another field on the same grid.
    pub fn sup_distance(&self, other: &Field) -> Result<f64> {
        self.ensure_same_grid(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }
}

/// Samples on x-edges and y-edges (y empty in 1D).
#[derive(Debug, Clone, PartialEq)]
pub struct FaceField {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl FaceField {
    pub fn zeros(grid: &Grid) -> Self {
        let (ex, ey) = grid.edge_counts();
        FaceField {
            x: vec![0.0; ex],
            y: vec![0.0; ey],
        }
    }

    fn matches(&self, grid: &Grid) -> bool {
        let (ex, ey) = grid.edge_counts();
        self.x.len() == ex && self.y.len() == ey
    }
}

fn check_grid(grid: &Grid, f: &Field) -> Result<()> {
    if f.grid() == grid {
        Ok(())
    } else {
        Err(Error::GridMismatch)
    }
}

/// Trapezoid approximation of the integral of `f` over the domain.
pub fn integrate(grid: &Grid, f: &Field) -> Result<f64> {
    check_grid(grid, f)?;
    Ok(weighted_sum(grid, f.values()))
}

#[inline]
pub(crate) fn weighted_sum(grid: &Grid, values: &[f64]) -> f64 {
    values
        .iter()
        .enumerate()
        .map(|(k, v)| grid.weight(k) * v)
        .sum()
}

/// Weighted nodal inner product of two fields.
pub fn inner(grid: &Grid, a: &Field, b: &Field) -> Result<f64> {
    check_grid(grid, a)?;
    check_grid(grid, b)?;
    Ok(a.values()
        .iter()
        .zip(b.values())
        .enumerate()
        .map(|(k, (x, y))| grid.weight(k) * x * y)
        .sum())
}

/// `(integral |f|^q)^(1/q)`.
pub fn lq_norm(grid: &Grid, f: &Field, q: f64) -> Result<f64> {
    check_grid(grid, f)?;
    if !(q >= 1.0) {
        return Err(Error::InvalidArgument(format!("L^q norm needs q >= 1, got {q}")));
    }
    let s: f64 = f
        .values()
        .iter()
        .enumerate()
        .map(|(k, v)| grid.weight(k) * v.abs().powf(q))
        .sum();
    Ok(s.powf(1.0 / q))
}

/// Face-centered two-point differences.
pub fn gradient(grid: &Grid, f: &Field) -> Result<FaceField> {
    check_grid(grid, f)?;
    Ok(gradient_of(grid, f.values()))
}

pub(crate) fn gradient_of(grid: &Grid, v: &[f64]) -> FaceField {
    let mut out = FaceField::zeros(grid);
    let [nx, ny] = grid.nodes_per_axis();
    let cx = nx - 1;
    let hx = grid.spacing[0];
    for j in 0..ny {
        for i in 0..cx {
            let k = grid.index(i, j);
            out.x[i + cx * j] = (v[k + 1] - v[k]) / hx;
        }
    }
    if grid.dim == 2 {
        let hy = grid.spacing[1];
        for j in 0..ny - 1 {
            for i in 0..nx {
                let k = grid.index(i, j);
                out.y[i + nx * j] = (v[k + nx] - v[k]) / hy;
            }
        }
    }
    out
}

/// Discrete divergence of an edge flux, the negative adjoint of [`gradient`]
/// for fields vanishing on the boundary. Boundary entries are zero.
pub fn divergence(grid: &Grid, flux: &FaceField) -> Result<Field> {
    if !flux.matches(grid) {
        return Err(Error::GridMismatch);
    }
    let mut out = Field::zeros(grid);
    divergence_into(grid, flux, out.values_mut());
    Ok(out)
}

pub(crate) fn divergence_into(grid: &Grid, flux: &FaceField, out: &mut [f64]) {
    let [nx, ny] = grid.nodes_per_axis();
    let cx = nx - 1;
    let hx = grid.spacing[0];
    if grid.dim == 1 {
        out[0] = 0.0;
        out[cx] = 0.0;
        for i in 1..cx {
            out[i] = (flux.x[i] - flux.x[i - 1]) / hx;
        }
        return;
    }
    let hy = grid.spacing[1];
    for v in out.iter_mut() {
        *v = 0.0;
    }
    for j in 1..ny - 1 {
        for i in 1..cx {
            let dx = (flux.x[i + cx * j] - flux.x[i - 1 + cx * j]) / hx;
            let dy = (flux.y[i + nx * j] - flux.y[i + nx * (j - 1)]) / hy;
            out[grid.index(i, j)] = dx + dy;
        }
    }
}

/// Edge inner product `<G, H>` with the edge quadrature weights.
pub fn face_inner(grid: &Grid, a: &FaceField, b: &FaceField) -> Result<f64> {
    if !a.matches(grid) || !b.matches(grid) {
        return Err(Error::GridMismatch);
    }
    let sx: f64 = a
        .x
        .iter()
        .zip(&b.x)
        .enumerate()
        .map(|(e, (p, q))| grid.edge_weight(0, e) * p * q)
        .sum();
    let sy: f64 = a
        .y
        .iter()
        .zip(&b.y)
        .enumerate()
        .map(|(e, (p, q))| grid.edge_weight(1, e) * p * q)
        .sum();
    Ok(sx + sy)
}
