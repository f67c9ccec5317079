//! Deterministic random fields for multi-start searches.
//!
//! Start `s` of a search seeded with `seed` draws from ChaCha8 stream `s`, so
//! the field it receives does not depend on which worker runs it.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[allow(unused_imports)] // inherent when std is linked
use num_traits::Float;

use crate::mesh::{Field, Grid};

pub(crate) fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// A strictly positive interior field: a product sine envelope times a sum
/// of one to four Gaussian bumps with random centers, widths and heights.
pub(crate) fn random_positive_field(grid: &Grid, seed: u64, index: u64) -> Field {
    let mut rng = stream(seed, index);
    let dim = grid.dim();
    let ext = grid.extents();
    let n_bumps = rng.gen_range(1..=4);
    let bumps: Vec<([f64; 2], [f64; 2], f64)> = (0..n_bumps)
        .map(|_| {
            let mut c = [0.5; 2];
            let mut w = [1.0; 2];
            for a in 0..dim {
                c[a] = ext[a] * rng.gen_range(0.15..0.85);
                w[a] = ext[a] * rng.gen_range(0.08..0.4);
            }
            (c, w, rng.gen_range(0.2..1.0))
        })
        .collect();
    let floor = 0.05;
    Field::dirichlet_from_fn(grid, |x| {
        let mut env = 1.0;
        for a in 0..dim {
            env *= (core::f64::consts::PI * x[a] / ext[a]).sin().max(0.0);
        }
        let mut s = floor;
        for (c, w, h) in &bumps {
            let mut r2 = 0.0;
            for a in 0..dim {
                let z = (x[a] - c[a]) / w[a];
                r2 += z * z;
            }
            s += h * (-0.5 * r2).exp();
        }
        env * s
    })
}
