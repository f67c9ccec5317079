mod common;

use pmwell_core::variational::{
    a_delta, embedding_constant, epsilon_delta, epsilon_star, first_eigen_p, r_delta, source_coefficient, start_field,
    well_depth_with, WellDepthOptions,
};
use pmwell_core::{energy_report, nehari_i, nehari_i_delta, Grid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 0xfeed;

fn grad_norm(grid: &Grid, u: &pmwell_core::Field) -> f64 {
    let pr = common::cubic();
    energy_report(grid, u, &pr).unwrap().grad_pm_norm.powf(1.0 / pr.p)
}

#[test]
fn small_gradient_implies_positive_i_delta() {
    let g = Grid::unit_interval(64).unwrap();
    let pr = common::cubic();
    let c = embedding_constant(&g, pr.p, pr.gamma).unwrap();
    let a = source_coefficient(&pr, 10.0, 200).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    for i in 1..=1000 {
        let delta = rng.gen_range(0.01..2.0);
        let r = r_delta(&pr, a, c, delta).unwrap();
        let u = start_field(&g, SEED, i);
        let target = rng.gen_range(0.001..0.999) * r;
        let v = u.scaled(target / grad_norm(&g, &u));
        let id = nehari_i_delta(&g, &v, &pr, delta).unwrap();
        assert!(id > 0.0, "field {i}: delta {delta}, I_delta {id}");
    }
}

#[test]
fn negative_i_delta_implies_large_gradient() {
    let g = Grid::unit_interval(64).unwrap();
    let pr = common::cubic();
    let c = embedding_constant(&g, pr.p, pr.gamma).unwrap();
    let a = source_coefficient(&pr, 10.0, 200).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 1);
    let mut negatives = 0;
    for i in 1..=1000 {
        let delta = rng.gen_range(0.01..2.0);
        let u = start_field(&g, SEED + 1, i).scaled(10f64.powf(rng.gen_range(-1.0..2.0)));
        if nehari_i_delta(&g, &u, &pr, delta).unwrap() < 0.0 {
            negatives += 1;
            assert!(grad_norm(&g, &u) > r_delta(&pr, a, c, delta).unwrap());
        }
    }
    assert!(negatives > 100, "only {negatives} negative samples");
}

#[test]
fn nehari_sign_pattern_along_rays() {
    let g = Grid::unit_interval(64).unwrap();
    let pr = common::cubic();
    for i in 0..20 {
        let u = start_field(&g, SEED, i);
        let es = epsilon_star(&g, &u, &pr).unwrap();
        for j in 0..=400 {
            let t = 10f64.powf(-1.0 + 2.0 * j as f64 / 400.0);
            if (t - 1.0).abs() < 1e-9 {
                continue;
            }
            let iv = nehari_i(&g, &u.scaled(t * es), &pr).unwrap();
            assert!(if t < 1.0 { iv > 0.0 } else { iv < 0.0 }, "start {i}, t {t}: {iv}");
        }
    }
}

#[test]
fn epsilon_delta_follows_the_power_law_scaling() {
    // For f = u^3, m = 1, p = 2: eps_delta = sqrt(delta) eps*.
    let g = Grid::unit_interval(64).unwrap();
    let pr = common::cubic();
    let u = start_field(&g, SEED, 3);
    let es = epsilon_star(&g, &u, &pr).unwrap();
    for delta in [0.1, 0.5, 1.7] {
        let ed = epsilon_delta(&g, &u, &pr, delta).unwrap();
        assert!((ed / (delta.sqrt() * es) - 1.0).abs() < 1e-10);
    }
}

#[test]
fn bounded_energy_and_positive_i_delta_bound_the_gradient() {
    let g = Grid::unit_interval(48).unwrap();
    let lam = first_eigen_p(&g, 2.0, 1e-12, 2000).unwrap().lambda1p;
    let pr = common::cubic().with_lambda1p(lam);
    let opts = WellDepthOptions {
        starts: 2,
        ..WellDepthOptions::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 2);
    for delta in [0.3, 1.0] {
        let d = well_depth_with(&g, &pr, delta, &opts).unwrap().value;
        let ad = a_delta(&pr, delta).unwrap();
        assert!(ad > 0.0);
        let mut accepted = 0;
        let mut i = 1;
        while accepted < 200 {
            let u = start_field(&g, SEED + 2, i);
            i += 1;
            let ed = epsilon_delta(&g, &u, &pr, delta).unwrap();
            let v = u.scaled(rng.gen_range(0.01..1.0) * ed);
            let r = energy_report(&g, &v, &pr).unwrap();
            if r.j > d || r.i_delta(delta) <= 0.0 {
                continue;
            }
            accepted += 1;
            assert!(r.grad_pm_norm < d / ad, "delta {delta}: {} vs {}", r.grad_pm_norm, d / ad);
        }
    }
}

#[test]
fn eigenfield_is_positive_in_2d() {
    let g = Grid::new(2, &[1.0, 1.0], &[24, 24]).unwrap();
    let e = first_eigen_p(&g, 2.0, 1e-11, 2000).unwrap();
    assert!(g.interior_indices().all(|k| e.eigenfield.values()[k] > 0.0));
    // Five-point stencil eigenvalue: 2 (4/h^2) sin^2(pi h / 2).
    let h = 1.0 / 24.0;
    let exact = 8.0 / (h * h) * (std::f64::consts::PI * h / 2.0).sin().powi(2);
    assert!((e.lambda1p / exact - 1.0).abs() < 1e-6, "{} vs {exact}", e.lambda1p);
}
