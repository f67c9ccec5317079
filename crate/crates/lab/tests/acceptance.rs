//! Acceptance gate: ten criteria, one PASS/FAIL line each. Exits non-zero if
//! any criterion fails.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use pmwell_core::evolve::{
    blowup_report, decay_fit, energy_identity_residual, integrate_trajectory,
    theoretical_decay_exponent, DecayMode, Outcome, StepperConfig, TrajectoryRecord,
};
use pmwell_core::mesh::lq_norm;
use pmwell_core::nonlinearity::{check_h, Clause};
use pmwell_core::variational::{
    a_delta, a_delta_root, embedding_constant, epsilon_star, first_eigen_p, start_field, ProfileOptions,
    WellDepthOptions,
};
use pmwell_core::{energy_j, nehari_i, Field, Grid, ProblemParams, SourceSpec};
use pmwell_lab::config::ExperimentConfig;
use pmwell_lab::experiments::{growth_coefficient, well_depth_parallel, well_profile_parallel};
use pmwell_lab::{dichotomy_table, tune_initial_energy, Agreement, Branch, EnergyClass, EnergyTarget};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn params(m: f64, p: f64, q: f64, alpha: f64, gamma: f64) -> ProblemParams {
    ProblemParams {
        m,
        p,
        sigma: 0.0,
        alpha,
        beta: 0.1,
        gamma,
        lambda1p: None,
        source: SourceSpec::power(1.0, q).unwrap(),
    }
}

fn cubic() -> ProblemParams {
    params(1.0, 2.0, 3.0, 3.5, 4.0)
}

fn heat() -> ProblemParams {
    ProblemParams {
        source: SourceSpec::tabulated(vec![0.0, 1.0], vec![0.0, 0.0]).unwrap(),
        ..cubic()
    }
}

fn sine(g: &Grid) -> Field {
    start_field(g, 0, 0)
}

fn fixed_dt(dt: f64, t_end: f64) -> StepperConfig {
    StepperConfig {
        dt_init: dt,
        dt_max: dt,
        t_end,
        ..StepperConfig::default()
    }
}

fn normalized(f: Field) -> Field {
    let top = f.max_abs();
    f.scaled(1.0 / top)
}

fn eigenvalue() -> Verdict {
    let t = Instant::now();
    let g1 = Grid::unit_interval(200).unwrap();
    let l1 = first_eigen_p(&g1, 2.0, 1e-12, 5000).unwrap().lambda1p;
    let t1 = t.elapsed();
    let t = Instant::now();
    let g2 = Grid::new(2, &[1.0, 1.0], &[64, 64]).unwrap();
    let l2 = first_eigen_p(&g2, 2.0, 1e-11, 5000).unwrap().lambda1p;
    let t2 = t.elapsed();
    let e1 = (l1 / (PI * PI) - 1.0).abs();
    let e2 = (l2 / (2.0 * PI * PI) - 1.0).abs();
    let limit = Duration::from_secs(10);
    verdict(
        e1 < 1e-3 && e2 < 1e-2 && t1 < limit && t2 < limit,
        format!(
            "1D lambda = {l1:.6} (rel err {e1:.2e}, {t1:.2?}); 2D lambda = {l2:.6} (rel err {e2:.2e}, {t2:.2?})"
        ),
    )
}

fn heat_run(dt: f64) -> (Grid, TrajectoryRecord) {
    let g = Grid::unit_interval(200).unwrap();
    let u0 = sine(&g);
    let traj = integrate_trajectory(&g, &u0, &heat(), &fixed_dt(dt, 0.1)).unwrap();
    (g, traj)
}

fn heat_oracle() -> Verdict {
    let t = Instant::now();
    let (g, traj) = heat_run(1e-4);
    let el = t.elapsed();
    let tf = *traj.times.last().unwrap();
    let l2 = lq_norm(&g, &traj.final_field, 2.0).unwrap();
    let exact = (-PI * PI * 0.1f64).exp() * 0.5f64.sqrt();
    let err = (l2 / exact - 1.0).abs();
    verdict(
        (tf - 0.1).abs() < 1e-12 && err < 1e-2 && el < Duration::from_secs(5),
        format!("||u(0.1)||_2 = {l2:.6} vs {exact:.6} (rel err {err:.2e}, {el:.2?})"),
    )
}

fn energy_identity() -> Verdict {
    let (_, a) = heat_run(1e-4);
    let (_, b) = heat_run(5e-5);
    let ra = energy_identity_residual(&a);
    let rb = energy_identity_residual(&b);
    let order = (ra / rb).log2();
    verdict(
        ra < 1e-3 && rb < ra && order >= 1.0,
        format!("residual {ra:.3e} at dt = 1e-4, {rb:.3e} at dt = 5e-5, measured order {order:.4}"),
    )
}

fn nehari_fibering() -> Verdict {
    let g = Grid::unit_interval(400).unwrap();
    let pr = cubic();
    let u = sine(&g);
    let es = epsilon_star(&g, &u, &pr).unwrap();
    let exact = 2.0 * PI / 3f64.sqrt();
    let e_err = (es / exact - 1.0).abs();

    let n_scan = 10_000;
    let mut bad_sign = 0;
    for k in 0..n_scan {
        let eps = es * 10f64.powf(-1.0 + 2.0 * k as f64 / (n_scan - 1) as f64);
        let i = nehari_i(&g, &u.scaled(eps), &pr).unwrap();
        let ok = if eps < es {
            i > 0.0
        } else if eps > es {
            i < 0.0
        } else {
            true
        };
        bad_sign += usize::from(!ok);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(0xf1be);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let eps = es * 10f64.powf(rng.gen_range(-1.0..1.0));
        let h = 1e-5 * eps;
        let fd = (energy_j(&g, &u.scaled(eps + h), &pr).unwrap() - energy_j(&g, &u.scaled(eps - h), &pr).unwrap())
            / (2.0 * h);
        let exact = nehari_i(&g, &u.scaled(eps), &pr).unwrap() / eps;
        worst = worst.max((fd - exact).abs() / exact.abs());
    }
    verdict(
        e_err < 1e-3 && bad_sign == 0 && worst < 1e-6,
        format!(
            "eps* = {es:.6} vs {exact:.6} (rel err {e_err:.2e}); sign violations {bad_sign}/{n_scan}; \
             worst derivative rel err {worst:.2e} over 100 eps"
        ),
    )
}

fn well_profile() -> Verdict {
    let t = Instant::now();
    let g = Grid::unit_interval(64).unwrap();
    let lam = first_eigen_p(&g, 2.0, 1e-12, 5000).unwrap().lambda1p;
    let pr = cubic().with_lambda1p(lam);
    let c_star = embedding_constant(&g, pr.p, pr.gamma).unwrap();
    let a_coef = growth_coefficient(&pr).unwrap();
    let opts = ProfileOptions {
        points: 25,
        depth: WellDepthOptions::default(),
        ..ProfileOptions::default()
    };
    let prof = well_profile_parallel(&g, &pr, c_star, a_coef, &opts).unwrap();
    let el = t.elapsed();
    let peak = prof.peak_index();
    let dpk = prof.delta_grid[peak];
    let cell = prof.delta_grid[1] - prof.delta_grid[0];
    let d = &prof.d_values;
    let rising = d[..=peak].windows(2).all(|w| w[1] >= w[0]);
    let falling = d[peak..].windows(2).all(|w| w[1] <= w[0]);
    let root = a_delta_root(&pr).unwrap();
    let mut checked = 0;
    let mut below = Vec::new();
    for (k, &dl) in prof.delta_grid.iter().enumerate() {
        if dl < root && a_delta(&pr, dl).unwrap() > 0.0 {
            checked += 1;
            if !(d[k] > prof.lower_bounds[k]) {
                below.push(dl);
            }
        }
    }
    verdict(
        rising && falling && (dpk - 1.0).abs() <= cell && below.is_empty() && checked > 0
            && el < Duration::from_secs(300),
        format!(
            "b_est = {:.6}, peak at delta = {dpk:.4} (cell {cell:.4}), unimodal {}, d > a r^p at {}/{checked} \
             points below {root:.4}, all converged {}, {el:.2?}",
            prof.b_est,
            rising && falling,
            checked - below.len(),
            prof.converged.iter().all(|c| *c),
        ),
    )
}

fn long_run() -> StepperConfig {
    StepperConfig {
        t_end: 40.0,
        dt_max: 1e-2,
        ..StepperConfig::default()
    }
}

fn base_profiles(g: &Grid, n: usize) -> Vec<Field> {
    (0..n).map(|k| normalized(start_field(g, 0xacce, k % 7))).collect()
}

fn invariant_sets() -> Verdict {
    let g = Grid::unit_interval(64).unwrap();
    let pr = cubic();
    let d = well_depth_parallel(&g, &pr, 1.0, &WellDepthOptions::default()).unwrap().value;
    let bases = base_profiles(&g, 20);
    let run = |branch: Branch| -> Vec<(bool, String)> {
        bases
            .par_iter()
            .enumerate()
            .map(|(k, base)| {
                let fraction = 0.05 + 0.9 * k as f64 / 19.0;
                let tuned = match tune_initial_energy(&g, &pr, base, EnergyTarget::Subcritical { fraction, d }, branch, 1e-9 * d) {
                    Ok(t) => t,
                    Err(e) => return (false, format!("run {k}: {e}")),
                };
                let u0 = base.scaled(tuned.amplitude);
                let traj = integrate_trajectory(&g, &u0, &pr, &long_run()).unwrap();
                let i0 = traj.reports[0].i;
                let j0 = traj.reports[0].j;
                let (sign_ok, want) = match branch {
                    Branch::Stable => (i0 > 0.0, "GlobalDecay"),
                    Branch::Unstable => (i0 < 0.0, "BlowUp"),
                };
                let ok = sign_ok && j0 > 0.0 && j0 < d && traj.i_sign_flips == 0 && traj.outcome.label() == want;
                (ok, format!("run {k}: J0/d {:.3}, flips {}, {}", j0 / d, traj.i_sign_flips, traj.outcome.label()))
            })
            .collect()
    };
    let w = run(Branch::Stable);
    let v = run(Branch::Unstable);
    let w_ok = w.iter().filter(|x| x.0).count();
    let v_ok = v.iter().filter(|x| x.0).count();
    let failures: Vec<&String> = w.iter().chain(&v).filter(|x| !x.0).map(|x| &x.1).collect();
    verdict(
        w_ok == 20 && v_ok == 20,
        format!("d = {d:.6}; stable well {w_ok}/20 decayed without flips, unstable well {v_ok}/20 blew up without flips{}",
            if failures.is_empty() { String::new() } else { format!("; failures {failures:?}") }),
    )
}

fn negative_energy_blowup() -> Verdict {
    let g = Grid::unit_interval(64).unwrap();
    let bump = |k| normalized(start_field(&g, 0xb10, k));
    let q4 = params(1.0, 2.0, 4.0, 4.5, 5.0);
    let p3 = params(1.0, 3.0, 4.0, 4.5, 5.0);
    let m2 = params(2.0, 2.0, 3.0, 4.5, 5.0);
    let cases: Vec<(ProblemParams, Field, f64)> = vec![
        (cubic(), sine(&g), 1.0),
        (cubic(), sine(&g), 1.5),
        (cubic(), bump(1), 1.0),
        (cubic(), bump(2), 1.2),
        (cubic(), bump(3), 2.0),
        (q4.clone(), sine(&g), 1.0),
        (q4, bump(4), 1.3),
        (p3, sine(&g), 1.1),
        (m2.clone(), sine(&g), 1.0),
        (m2, bump(5), 1.2),
    ];
    let lines: Vec<(bool, String)> = cases
        .par_iter()
        .enumerate()
        .map(|(k, (pr, base, factor))| {
            let tuned = tune_initial_energy(&g, pr, base, EnergyTarget::Negative, Branch::Unstable, 1e-6).unwrap();
            let u0 = base.scaled(tuned.amplitude * factor);
            let cfg = StepperConfig {
                t_end: 100.0,
                dt_max: 1e-2,
                ..StepperConfig::default()
            };
            let traj = integrate_trajectory(&g, &u0, pr, &cfg).unwrap();
            let j0 = traj.reports[0].j;
            let Outcome::BlowUp { t_star } = traj.outcome else {
                return (false, format!("case {k}: J0 {j0:.3e}, outcome {}", traj.outcome.label()));
            };
            let rep = match blowup_report(&g, &u0, pr, &traj) {
                Ok(r) => r,
                Err(e) => return (false, format!("case {k}: {e}")),
            };
            let all_pos = rep.concavity_margin_series.iter().all(|x| *x > 0.0);
            let ok = j0 < 0.0 && t_star <= rep.t_star_bound && all_pos;
            (
                ok,
                format!(
                    "case {k}: T* {t_star:.4e} <= bound {:.4e} (M {:.3e}, eps {:.3}), margins positive {all_pos}",
                    rep.t_star_bound, rep.m_used, rep.epsilon_used
                ),
            )
        })
        .collect();
    let n_ok = lines.iter().filter(|x| x.0).count();
    let worst: Vec<&String> = lines.iter().filter(|x| !x.0).map(|x| &x.1).collect();
    verdict(
        n_ok == 10,
        format!("{n_ok}/10 blew up within the bound{}", if worst.is_empty() { String::new() } else { format!("; failures {worst:?}") }),
    )
}

fn decay_rates() -> Verdict {
    let g = Grid::unit_interval(64).unwrap();
    let pr1 = cubic();
    let t1 = integrate_trajectory(&g, &sine(&g).scaled(1.0), &pr1, &long_run()).unwrap();
    let f1 = decay_fit(&t1, &pr1).unwrap();
    let m2 = params(2.0, 2.0, 3.0, 4.5, 5.0);
    let cfg = StepperConfig {
        t_end: 2000.0,
        dt_max: 0.5,
        ..StepperConfig::default()
    };
    let t2 = integrate_trajectory(&g, &sine(&g).scaled(0.5), &m2, &cfg).unwrap();
    let f2 = decay_fit(&t2, &m2).unwrap();
    let want = theoretical_decay_exponent(&m2).unwrap();
    let rel = (f2.rate_or_exponent / want - 1.0).abs();
    verdict(
        f1.mode == DecayMode::Exponential
            && f1.fit_r2 > 0.99
            && f2.mode == DecayMode::Polynomial
            && rel <= 0.15
            && f2.fit_r2 > 0.98,
        format!(
            "m=1: rate {:.4} (R^2 {:.6}); m=2: exponent {:.4} vs {want} (rel {rel:.3}, R^2 {:.6}, {} samples)",
            f1.rate_or_exponent, f1.fit_r2, f2.rate_or_exponent, f2.fit_r2, f2.samples
        ),
    )
}

const TABLE_CONFIG: &str = r#"
[grid]
dim = 1
extents = [1.0]
n_cells = [64]

[params]
m = 1.0
p = 2.0
sigma = 0.0
alpha = 3.5
beta = 0.1
gamma = 4.0

[source]
kind = "power"
k = 1.0
q = 3.0

[initial]
family = "sine"
amplitude = 1.0

[stepper]
dt_init = 1e-4
dt_max = 1e-2
t_end = 40.0

[experiment]
kind = "dichotomy_table"
seed = 7
critical_tol = 1e-3
"#;

fn dichotomy() -> Verdict {
    let t = Instant::now();
    let cfg = ExperimentConfig::from_toml(TABLE_CONFIG).unwrap();
    let (g, pr) = cfg.resolve().unwrap();
    let table = dichotomy_table(&cfg, &g, &pr, None).unwrap();
    let el = t.elapsed();
    let predicted: Vec<_> = table.rows.iter().filter(|r| r.theorem_prediction.is_some()).collect();
    let agree = predicted.iter().filter(|r| r.agreement == Agreement::True).count();
    let crit_ok = table
        .rows
        .iter()
        .filter(|r| r.energy_class == EnergyClass::CriticalD)
        .all(|r| (r.j0 - table.d).abs() <= 1e-3 * table.d);
    let cells: Vec<String> = predicted
        .iter()
        .map(|r| format!("{:?}/{:+}:{}", r.energy_class, r.i_sign_at_start, r.observed_outcome))
        .collect();
    verdict(
        predicted.len() == 5 && agree == 5 && crit_ok && el < Duration::from_secs(900),
        format!("{agree}/{} predicted cells agree, critical |J-d| <= 1e-3 d: {crit_ok}, {el:.2?}; {cells:?}", predicted.len()),
    )
}

fn hypothesis_checker() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(0xc4ec);
    let mut disagree = 0;
    for _ in 0..1000 {
        let k = rng.gen_range(0.1..5.0);
        let q = rng.gen_range(1.0..6.0);
        let m = rng.gen_range(1.0..3.0);
        let p = rng.gen_range(2.0..4.0);
        let u_max = rng.gen_range(0.1..50.0);
        let pr = ProblemParams {
            source: SourceSpec::power(k, q).unwrap(),
            ..params(m, p, q, p * m + 0.5, p * m + 1.0)
        };
        let holds = check_h(&pr, u_max, 200)
            .unwrap()
            .into_iter()
            .find(|r| r.clause == Clause::L31a)
            .unwrap()
            .holds();
        disagree += usize::from(holds != (q >= m * (p - 1.0)));
    }
    verdict(disagree == 0, format!("{disagree} disagreements on 1000 draws"))
}

fn main() {
    let criteria: [(&str, fn() -> Verdict); 10] = [
        ("eigenvalue oracle", eigenvalue),
        ("linear heat oracle", heat_oracle),
        ("energy identity", energy_identity),
        ("Nehari and fibering suite", nehari_fibering),
        ("well-profile shape", well_profile),
        ("invariant sets", invariant_sets),
        ("blow-up for negative energy", negative_energy_blowup),
        ("decay rates", decay_rates),
        ("dichotomy table", dichotomy),
        ("hypothesis checker", hypothesis_checker),
    ];
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let v = std::panic::catch_unwind(f).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            verdict(false, format!("panicked: {msg}"))
        });
        failed += usize::from(!v.pass);
        println!(
            "{} criterion {:>2} ({name}): {} [{:.2?}]",
            if v.pass { "PASS" } else { "FAIL" },
            k + 1,
            v.detail,
            t.elapsed()
        );
    }
    println!("acceptance: {}/10 criteria passed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
