//! The acceptance suite: one test per criterion, each printing a single
//! pass/fail line. Tolerances and thresholds are pinned here, in code.
//!
//! Heavy trend studies (5, 7, 8) drive the same experiment code the
//! `workbench` binary exposes, at the stated configurations.

use harness_cli::experiments::{cutting, euler_limit, kinetic_limit, mc_scaling, nsf_limit};
use harness_cli::Verdict;
use rand::SeedableRng;
use std::path::PathBuf;

fn out_dir(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    let _ = std::fs::create_dir_all(&dir);
    dir
}

fn emit(criterion: &str, pass: bool, detail: &str) {
    println!(
        "acceptance {criterion}: {} — {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "{criterion}: {detail}");
}

/// Criterion 1: per-event momentum conservation exact (2 ulps/component per
/// event is the floating-point realization of the formula identity);
/// kinetic-energy relative drift <= 1e-12 per event; non-overlap >= eps -
/// 1e-9 at event times; time-reversal round trip within 1e-6 per coordinate
/// over runs of <= 1e3 events.
#[test]
fn acceptance_1_hard_sphere_micro_physics() {
    use particle_system::{evolve, Configuration, Particle, OVERLAP_TOL};
    use rand::Rng;
    use torus_core::TorusVec;

    let mut worst_momentum = 0.0f64;
    let mut worst_energy = 0.0f64;
    let mut worst_overlap = f64::INFINITY;
    let mut worst_reversal = 0.0f64;
    let mut total_events = 0usize;
    for seed in 0..12u64 {
        let eps = 0.035;
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
        let mut particles: Vec<Particle<2>> = Vec::new();
        'place: while particles.len() < 14 {
            let x = TorusVec::new([rng.random(), rng.random()]);
            for p in &particles {
                if p.base_x.torus_dist(&x) < eps * 1.4 {
                    continue 'place;
                }
            }
            particles.push(Particle::new(
                particles.len() as u32,
                x,
                [rng.random::<f64>() * 2.0 - 1.0, rng.random::<f64>() * 2.0 - 1.0],
            ));
        }
        let cfg = Configuration::new(eps, particles);
        let (mut fwd, hist) = evolve(&cfg, 2.0, 1000).unwrap();
        total_events += hist.events.len();
        assert!(hist.events.len() <= 1000);
        // per-event conservation from the recorded velocities
        for ev in &hist.events {
            for k in 0..2 {
                let dp = (ev.v_out.0[k] + ev.v_out.1[k]) - (ev.v_in.0[k] + ev.v_in.1[k]);
                worst_momentum = worst_momentum.max(dp.abs());
            }
            let e_in = torus_core::norm_sq(&ev.v_in.0) + torus_core::norm_sq(&ev.v_in.1);
            let e_out = torus_core::norm_sq(&ev.v_out.0) + torus_core::norm_sq(&ev.v_out.1);
            worst_energy = worst_energy.max((e_out - e_in).abs() / e_in.max(1e-300));
        }
        // non-overlap at every event time
        for ev in &hist.events {
            let state = hist.state_at(ev.t).unwrap();
            worst_overlap = worst_overlap.min(state.min_pair_distance() - (eps - OVERLAP_TOL));
        }
        // time-reversal round trip
        fwd.reverse_velocities();
        let (mut back, _) = evolve(&fwd, fwd.time + 2.0, 10_000).unwrap();
        back.reverse_velocities();
        for (p, q) in cfg.positions().iter().zip(back.positions().iter()) {
            for k in 0..2 {
                let d = (p.coords()[k] - q.coords()[k]).abs();
                worst_reversal = worst_reversal.max(d.min(1.0 - d));
            }
        }
    }
    let momentum_ok = worst_momentum <= 2.0 * f64::EPSILON;
    let energy_ok = worst_energy <= 1e-12;
    let overlap_ok = worst_overlap >= 0.0;
    let reversal_ok = worst_reversal <= 1e-6;
    emit(
        "1-hard-sphere-micro-physics",
        momentum_ok && energy_ok && overlap_ok && reversal_ok,
        &format!(
            "momentum {worst_momentum:.2e} (<= 2 ulp), energy/event {worst_energy:.2e} (<= 1e-12), \
             overlap margin {worst_overlap:.2e} (>= 0), reversal {worst_reversal:.2e} (<= 1e-6), \
             {total_events} events"
        ),
    );
}

/// Criterion 2: mean of N * eps^(d-1) within 3 standard errors of alpha over
/// 1e4 grand-canonical draws (d = 2, eps = 1e-3, alpha = 0.05).
#[test]
fn acceptance_2_boltzmann_grad_sampling() {
    use particle_system::{sample_grand_canonical, EnsembleParams, InitialDensity};
    let alpha = 0.05;
    let epsilon = 1e-3;
    let draws = 10_000usize;
    let n0 = InitialDensity::<2>::standard_maxwellian(6.0).unwrap();
    let params = EnsembleParams {
        alpha,
        epsilon,
        n0,
    };
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(2024);
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..draws {
        let n = sample_grand_canonical(&params, &mut rng).unwrap().len() as f64;
        sum += n;
        sum_sq += n * n;
    }
    let mean_n = sum / draws as f64;
    let var_n = (sum_sq / draws as f64 - mean_n * mean_n).max(0.0);
    let observed = mean_n * epsilon; // N * eps^(d-1), d = 2
    let se = (var_n / draws as f64).sqrt() * epsilon;
    let pass = (observed - alpha).abs() <= 3.0 * se;
    emit(
        "2-boltzmann-grad-sampling",
        pass,
        &format!("mean N*eps^(d-1) = {observed:.5} vs alpha = {alpha} (3se = {:.5})", 3.0 * se),
    );
}

/// Criteria 3 and 4: the cutting-algorithm invariant campaigns (1e4
/// molecules per algorithm plus the exhaustive small-molecule master suite)
/// and the master-proposition ledger arithmetic (case-3 exponent products
/// at eps in {1e-2, 1e-3}; the case-2 count inequality on the large tents
/// witness; the case-1 structural clauses).
#[test]
fn acceptance_3_and_4_cutting_and_ledger() {
    let p = cutting::CuttingParams {
        campaign_molecules: 10_000,
        seed: 7,
        eps_list: vec![1e-2, 1e-3],
        case2_tents: 8_500,
    };
    let report = cutting::run(&p, &out_dir("cutting")).unwrap();
    for c in &report.checks {
        println!(
            "acceptance 3/4 [{}]: {} — {}",
            c.name,
            c.verdict.word(),
            c.detail
        );
    }
    assert_eq!(
        report.verdict(),
        Verdict::Pass,
        "cutting campaigns or ledger arithmetic failed:\n{}",
        report.render()
    );
}

/// Criterion 5: fitted log-log slopes over eps in [1e-4, 1e-2] (d = 2):
/// double-root volume = d - 1 +- 0.3 and long-bond {33A} = d - 1 +- 0.3.
#[test]
fn acceptance_5_mc_scaling() {
    let p = mc_scaling::McScalingParams {
        eps_list: vec![1e-4, 3.16e-4, 1e-3, 3.16e-3, 1e-2],
        samples: 6_000_000,
        seed: 5,
        mu: 0.25,
        slope_tol: 0.3,
    };
    let report = mc_scaling::run(&p, &out_dir("mc")).unwrap();
    for c in &report.checks {
        println!("acceptance 5 [{}]: {} — {}", c.name, c.verdict.word(), c.detail);
    }
    assert_eq!(
        report.verdict(),
        Verdict::Pass,
        "mc scaling failed:\n{}",
        report.render()
    );
}

/// Criterion 6: Maxwellian stationarity drift within grid tolerance,
/// halving under refinement (raw operator); discrete H non-increasing within
/// 1e-8 per step; collision-step conservation to 1e-10.
#[test]
fn acceptance_6_kinetic_solver_physics() {
    use kinetic_solvers::{
        boltzmann_evolve, entropy, maxwellian_slice, BoltzmannParams, CollisionTable,
        KineticField, SpatialGrid, VelocityGrid,
    };
    // stationarity of the raw operator with refinement halving
    let mut drifts = Vec::new();
    for n in [12usize, 24] {
        let grid = VelocityGrid::<2>::new(n, 4.8);
        let table = CollisionTable::build(grid, 8);
        let m = maxwellian_slice(1.0, &[0.0, 0.0], 1.0, &grid).unwrap();
        let mut q = vec![0.0; grid.count()];
        table.apply(&m, &mut q, 1);
        let conservation = table.moment_residual(&q, 1);
        assert!(conservation <= 1e-10, "conservation residual {conservation}");
        drifts.push(q.iter().map(|x| x.abs()).fold(0.0f64, f64::max));
    }
    let halving = drifts[1] <= 0.6 * drifts[0];
    // entropy along a full inhomogeneous evolution
    let x_grid = SpatialGrid::<2>::new(8);
    let v_grid = VelocityGrid::<2>::new(16, 4.8);
    let table = CollisionTable::build(v_grid, 8);
    let mut f = KineticField::zeros(x_grid, v_grid, 1.0);
    for cell in 0..x_grid.count() {
        let x = x_grid.center(cell);
        let u = [0.3 * (2.0 * std::f64::consts::PI * x[1]).sin(), 0.0];
        let m = maxwellian_slice(1.0, &u, 1.0, &v_grid).unwrap();
        for v in 0..v_grid.count() {
            *f.at_mut(v, cell) = m[v];
        }
    }
    f.normalize_mass();
    let h0 = entropy(&f);
    let report = boltzmann_evolve(
        &mut f,
        &table,
        0.2,
        &BoltzmannParams {
            dt: 0.01,
            substeps: 2,
            ..BoltzmannParams::default()
        },
    )
    .unwrap();
    let entropy_ok = report.entropy_increase_events == 0 && entropy(&f) <= h0 + 1e-8;
    emit(
        "6-kinetic-solver-physics",
        halving && entropy_ok,
        &format!(
            "stationarity drift {:.3e} -> {:.3e} (halving: {halving}), \
             entropy non-increase events {} over {} steps, conservation <= 1e-10",
            drifts[0], drifts[1], report.entropy_increase_events, report.steps
        ),
    );
}

/// Criterion 7: strictly decreasing empirical-vs-kinetic L1 distance across
/// eps in {0.05, 0.02, 0.01} at d = 2, alpha = 1, t = 0.5, 200 runs per eps.
#[test]
fn acceptance_7_kinetic_limit_trend() {
    let p = kinetic_limit::KineticLimitParams {
        eps_list: vec![0.05, 0.02, 0.01],
        alpha: 1.0,
        t_final: 0.5,
        runs: 200,
        v_max: 6.0,
        seed: 11,
        kappa: 0.9,
        x_bins: 4,
        v_bins: 8,
        ref_x_cells: 32,
        ref_v_cells: 16,
    };
    let report = kinetic_limit::run(&p, &out_dir("kinetic")).unwrap();
    for c in &report.checks {
        println!("acceptance 7 [{}]: {} — {}", c.name, c.verdict.word(), c.detail);
    }
    assert_eq!(
        report.verdict(),
        Verdict::Pass,
        "kinetic-limit trend failed:\n{}",
        report.render()
    );
}

/// Criterion 8: hydrodynamic trends at 64^2 cells x 24^2 velocities, d = 2:
/// the Euler-moment L1 gap two-point ratio lies in [1.6, 2.6] when delta
/// halves, and the NSF gap ratio is at least 2.
#[test]
fn acceptance_8_hydrodynamic_trends() {
    let nsf = nsf_limit::NsfLimitParams {
        deltas: vec![0.2, 0.1],
        x_cells: 64,
        v_cells: 24,
        v_max: 4.0,
        n_omega: 4,
        tau_star: 0.02,
        seed: 13,
        particle_eps: 0.05,
        particle_runs: 64,
    };
    let nsf_report = nsf_limit::run(&nsf, &out_dir("nsf")).unwrap();
    for c in &nsf_report.checks {
        println!("acceptance 8 [{}]: {} — {}", c.name, c.verdict.word(), c.detail);
    }
    let euler = euler_limit::EulerLimitParams {
        deltas: vec![0.2, 0.1],
        x_cells: 64,
        v_cells: 24,
        v_max: 4.8,
        n_omega: 4,
        t_star: 0.04,
        seed: 13,
        f1_cells: 16,
    };
    let euler_report = euler_limit::run(&euler, &out_dir("euler")).unwrap();
    for c in &euler_report.checks {
        println!("acceptance 8 [{}]: {} — {}", c.name, c.verdict.word(), c.detail);
    }
    assert_eq!(
        nsf_report.verdict(),
        Verdict::Pass,
        "NSF trend failed:\n{}",
        nsf_report.render()
    );
    assert_eq!(
        euler_report.verdict(),
        Verdict::Pass,
        "Euler trend failed:\n{}",
        euler_report.render()
    );
}
