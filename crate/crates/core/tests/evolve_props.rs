mod common;

use pmwell_core::evolve::{
    blowup_report, concavity_series, dissipation_slack, energy_identity_residual, integrate_trajectory, step, Outcome, Scheme,
    StepperConfig, TrajectoryRecord,
};
use pmwell_core::mesh::lq_norm;
use pmwell_core::variational::start_field;
use pmwell_core::{Field, Grid, ProblemParams, SourceSpec};
use proptest::prelude::*;

fn cfg(t_end: f64) -> StepperConfig {
    StepperConfig {
        t_end,
        dt_max: 1e-3,
        ..StepperConfig::default()
    }
}

fn porous(m: f64, p: f64) -> ProblemParams {
    ProblemParams {
        m,
        p,
        sigma: 0.0,
        alpha: p * m + 0.5,
        beta: 0.0,
        gamma: p * m + 1.0,
        lambda1p: None,
        source: SourceSpec::power(1.0, m * (p - 1.0) + 1.0).unwrap(),
    }
}

fn assert_dissipative(traj: &TrajectoryRecord) {
    let j0 = traj.reports[0].j;
    for w in traj.reports.windows(2) {
        assert!(w[1].j - w[0].j <= 1e-8 * j0.abs(), "J rose from {} to {}", w[0].j, w[1].j);
    }
    assert!(traj.times.windows(2).all(|w| w[1] > w[0]));
    assert!(traj.min_value >= 0.0);
    assert_eq!(traj.rates.len(), traj.len());
    if traj.m == 1.0 {
        let tol = dissipation_slack(traj) + 1e-12 * j0.abs().max(1.0);
        for (r, d) in traj.reports.iter().zip(&traj.dissipation) {
            assert!(r.j + d <= j0 + tol, "J {} D {} J0 {j0} slack {tol}", r.j, d);
        }
    }
}

#[test]
fn energy_decreases_along_semi_implicit_runs() {
    let g = Grid::unit_interval(64).unwrap();
    let u = common::sine(&g);
    let runs = [
        (common::heat(), u.clone()),
        (common::cubic(), u.scaled(2.0)),
        (porous(2.0, 2.0), u.scaled(0.5)),
        (porous(1.0, 3.0), u.scaled(0.5)),
        (porous(1.5, 2.5), start_field(&g, 7, 2)),
    ];
    for (pr, u0) in runs {
        let traj = integrate_trajectory(&g, &u0, &pr, &cfg(0.2)).unwrap();
        assert!(traj.len() > 10);
        assert_dissipative(&traj);
    }
}

#[test]
fn explicit_and_semi_implicit_agree_on_heat() {
    let g = Grid::unit_interval(50).unwrap();
    let pr = common::heat();
    let dt = 1e-6;
    let mut a = common::sine(&g);
    let mut b = a.clone();
    let semi = StepperConfig::default();
    let expl = StepperConfig {
        scheme: Scheme::Explicit,
        ..semi
    };
    for _ in 0..100 {
        a = step(&g, &a, &pr, &semi, dt).unwrap();
        b = step(&g, &b, &pr, &expl, dt).unwrap();
    }
    assert!(a.sup_distance(&b).unwrap() < 1e-4);
}

#[test]
fn heat_norm_tracks_the_analytic_decay() {
    let g = Grid::unit_interval(200).unwrap();
    let u0 = common::sine(&g);
    let c = StepperConfig {
        t_end: 0.3,
        dt_init: 1e-4,
        dt_max: 1e-4,
        ..StepperConfig::default()
    };
    let traj = integrate_trajectory(&g, &u0, &common::heat(), &c).unwrap();
    let n0 = traj.norms()[0];
    let pi2 = std::f64::consts::PI.powi(2);
    for (t, n) in traj.times.iter().zip(traj.norms()) {
        assert!((n / n0 / (-pi2 * t).exp() - 1.0).abs() < 1e-2, "t = {t}");
    }
    assert!(energy_identity_residual(&traj) < 1e-3);
}

#[test]
fn zero_data_decays_immediately() {
    let g = Grid::unit_interval(16).unwrap();
    let traj = integrate_trajectory(&g, &Field::zeros(&g), &common::cubic(), &cfg(1.0)).unwrap();
    assert_eq!(traj.outcome, Outcome::GlobalDecay);
    assert_eq!(traj.len(), 1);
    assert_eq!(energy_identity_residual(&traj), 0.0);
    let z = step(&g, &Field::zeros(&g), &common::cubic(), &StepperConfig::default(), 1e-3).unwrap();
    assert!(z.is_zero());
}

#[test]
fn negative_energy_blows_up_before_the_bound() {
    let g = Grid::unit_interval(64).unwrap();
    let pr = common::cubic();
    let u0 = common::sine(&g).scaled(10.0);
    let c = StepperConfig {
        t_end: 10.0,
        dt_max: 1e-3,
        ..StepperConfig::default()
    };
    let traj = integrate_trajectory(&g, &u0, &pr, &c).unwrap();
    let Outcome::BlowUp { t_star } = traj.outcome else {
        panic!("{:?}", traj.outcome)
    };
    assert!(traj.reports[0].j < 0.0 && t_star > 0.0);
    assert_eq!(traj.i_sign_flips, 0);
    let rep = blowup_report(&g, &u0, &pr, &traj).unwrap();
    assert!(rep.t_star_observed <= rep.t_star_bound);
    let tail = &rep.concavity_margin_series[rep.concavity_margin_series.len() / 2..];
    assert!(tail.iter().all(|x| *x > 0.0));
}

#[test]
fn stationary_zero_has_zero_margins() {
    let g = Grid::unit_interval(16).unwrap();
    let pr = common::heat();
    let c = StepperConfig {
        dt_init: 1e-3,
        ..StepperConfig::default()
    };
    let mut traj = integrate_trajectory(&g, &common::sine(&g), &pr, &c).unwrap();
    // Replace the samples by a frozen zero state.
    for r in &mut traj.reports {
        r.mass_m1 = 0.0;
    }
    traj.mass_integral.iter_mut().for_each(|x| *x = 0.0);
    assert!(concavity_series(&traj, 0.0, 1.5).unwrap().iter().all(|x| *x == 0.0));
}

#[test]
fn heat_mass_decreases() {
    let g = Grid::unit_interval(40).unwrap();
    let u = start_field(&g, 3, 1);
    let next = step(&g, &u, &common::heat(), &StepperConfig::default(), 1e-3).unwrap();
    let mass = |f: &Field| lq_norm(&g, f, 1.0).unwrap();
    assert!(mass(&next) < mass(&u));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn trajectories_stay_nonnegative(
        seed in 0u64..1000, amp in 0.1f64..3.0, m in 1.0f64..2.5, p in 2.0f64..3.0,
    ) {
        let g = Grid::unit_interval(32).unwrap();
        let u0 = start_field(&g, seed, 1).scaled(amp);
        let traj = integrate_trajectory(&g, &u0, &porous(m, p), &cfg(0.05)).unwrap();
        prop_assert!(traj.min_value >= 0.0);
        prop_assert!(traj.final_field.is_nonnegative());
    }
}
