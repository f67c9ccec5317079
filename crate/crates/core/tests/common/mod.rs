#![allow(dead_code)]

use pmwell_core::{Field, Grid, ProblemParams, SourceSpec};
use std::f64::consts::PI;

/// `f(u) = u^3`, `m = 1`, `p = 2`, `sigma = 0`.
pub fn cubic() -> ProblemParams {
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

pub fn heat() -> ProblemParams {
    ProblemParams {
        source: SourceSpec::tabulated(vec![0.0, 1.0], vec![0.0, 0.0]).unwrap(),
        ..cubic()
    }
}

pub fn sine(grid: &Grid) -> Field {
    Field::dirichlet_from_fn(grid, |x| (PI * x[0]).sin().max(0.0))
}

/// Nonnegative field from raw samples, zero on the boundary.
pub fn field_from(grid: &Grid, raw: &[f64]) -> Field {
    let mut f = Field::from_values(grid, raw.iter().map(|x| x.abs()).collect()).unwrap();
    f.zero_boundary();
    f
}
