mod common;

use pmwell_core::mesh::{divergence, face_inner, gradient, inner, integrate, lq_norm};
use pmwell_core::{Field, Grid};
use proptest::prelude::*;

fn grid_1d() -> Grid {
    Grid::new(1, &[1.3], &[17]).unwrap()
}

fn grid_2d() -> Grid {
    Grid::new(2, &[1.0, 0.7], &[6, 5]).unwrap()
}

fn sbp_defect(grid: &Grid, u: &[f64], v: &[f64]) -> f64 {
    let u = common::field_from(grid, u);
    let v = common::field_from(grid, v);
    // Any face flux G; here the gradient of u.
    let g = gradient(grid, &u).unwrap();
    let lhs = -inner(grid, &divergence(grid, &g).unwrap(), &v).unwrap();
    let rhs = face_inner(grid, &g, &gradient(grid, &v).unwrap()).unwrap();
    (lhs - rhs).abs() / (1.0 + lhs.abs().max(rhs.abs()))
}

proptest! {
    #[test]
    fn summation_by_parts_1d(
        u in prop::collection::vec(-5.0f64..5.0, 18),
        v in prop::collection::vec(-5.0f64..5.0, 18),
    ) {
        prop_assert!(sbp_defect(&grid_1d(), &u, &v) < 1e-12);
    }

    #[test]
    fn summation_by_parts_2d(
        u in prop::collection::vec(-5.0f64..5.0, 42),
        v in prop::collection::vec(-5.0f64..5.0, 42),
    ) {
        prop_assert!(sbp_defect(&grid_2d(), &u, &v) < 1e-12);
    }

    #[test]
    fn weights_sum_to_measure(
        lx in 0.1f64..10.0, ly in 0.1f64..10.0, nx in 4usize..60, ny in 4usize..60,
    ) {
        let g = Grid::new(2, &[lx, ly], &[nx, ny]).unwrap();
        let s: f64 = g.weights().iter().sum();
        prop_assert!((s / (lx * ly) - 1.0).abs() < 1e-12);
        prop_assert!(g.interior_indices().all(|k| g.weight(k) > 0.0));
        prop_assert_eq!(g.interior_count(), (nx - 1) * (ny - 1));
    }
}

fn order(errors: &[f64]) -> f64 {
    errors
        .windows(2)
        .map(|w| (w[0] / w[1]).log2())
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn integrate_converges_at_second_order() {
    // x^2 e^x on (0, 1); the trapezoid rule has no superconvergence here.
    let exact = std::f64::consts::E - 2.0;
    let errs: Vec<f64> = [16, 32, 64, 128, 256]
        .iter()
        .map(|&n| {
            let g = Grid::unit_interval(n).unwrap();
            let f = Field::from_fn(&g, |x| x[0] * x[0] * x[0].exp());
            (integrate(&g, &f).unwrap() - exact).abs()
        })
        .collect();
    assert!(order(&errs) >= 1.95, "{errs:?}");
}

#[test]
fn integrate_converges_at_second_order_2d() {
    // int_0^1 int_0^2 x^2 e^(x + y) = (e - 2)(e^2 - 1)
    let e = std::f64::consts::E;
    let exact = (e - 2.0) * (e * e - 1.0);
    let errs: Vec<f64> = [8, 16, 32, 64]
        .iter()
        .map(|&n| {
            let g = Grid::new(2, &[1.0, 2.0], &[n, 2 * n]).unwrap();
            let f = Field::from_fn(&g, |x| x[0] * x[0] * (x[0] + x[1]).exp());
            (integrate(&g, &f).unwrap() - exact).abs()
        })
        .collect();
    assert!(order(&errs) >= 1.95, "{errs:?}");
}

#[test]
fn lq_norm_converges_at_second_order() {
    // ||x e^x||_3 on (0, 1).
    let e3 = (3.0f64).exp();
    // Antiderivative of x^3 e^(3x): e^(3x) (x^3/3 - x^2/3 + 2x/9 - 2/27).
    let exact = (e3 * (1.0 / 3.0 - 1.0 / 3.0 + 2.0 / 9.0 - 2.0 / 27.0) + 2.0 / 27.0).cbrt();
    let errs: Vec<f64> = [16, 32, 64, 128, 256]
        .iter()
        .map(|&n| {
            let g = Grid::unit_interval(n).unwrap();
            let f = Field::from_fn(&g, |x| x[0] * x[0].exp());
            (lq_norm(&g, &f, 3.0).unwrap() - exact).abs()
        })
        .collect();
    assert!(order(&errs) >= 1.95, "{errs:?}");
}

#[test]
fn gradient_is_second_order_at_faces() {
    let errs: Vec<f64> = [25, 50, 100, 200]
        .iter()
        .map(|&n| {
            let g = Grid::unit_interval(n).unwrap();
            let h = g.spacing()[0];
            let u = common::sine(&g);
            let gr = gradient(&g, &u).unwrap();
            gr.x.iter()
                .enumerate()
                .map(|(i, d)| (d - std::f64::consts::PI * (std::f64::consts::PI * (i as f64 + 0.5) * h).cos()).abs())
                .fold(0.0, f64::max)
        })
        .collect();
    assert!(order(&errs) >= 1.95, "{errs:?}");
    assert!(errs[3] < 1e-3);
}

#[test]
fn mismatched_grids_are_rejected() {
    let a = Field::zeros(&Grid::unit_interval(8).unwrap());
    let b = Field::zeros(&Grid::unit_interval(9).unwrap());
    assert!(inner(a.grid(), &a, &b).is_err());
    assert!(a.sup_distance(&b).is_err());
}
