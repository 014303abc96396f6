//! Estimator integration checks: the Boltzmann-Grad scaling of the sampled
//! ensembles feeding the one-particle histogram, and the two-particle
//! variance cross-check (the empirical second moment of u_em against its
//! f_1/f_2 integral expression).

use particle_system::{
    empirical_observables, estimate_f1, estimate_f2, evolve, sample_grand_canonical,
    CollisionHistory, EnsembleParams, InitialDensity, ObservableMode, PhaseGrid, TestFunction,
};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

fn maxwell_params(alpha: f64, epsilon: f64) -> EnsembleParams<2> {
    EnsembleParams {
        alpha,
        epsilon,
        n0: InitialDensity::<2>::standard_maxwellian(6.0).unwrap(),
    }
}

#[test]
fn f1_mass_matches_scaling() {
    // integral of the f_1 histogram ~ E[N] eps^(d-1) / alpha ~ 1
    let params = maxwell_params(0.4, 0.01);
    let mut rng = ChaCha12Rng::seed_from_u64(3);
    let histories: Vec<CollisionHistory<2>> = (0..200)
        .map(|_| {
            let cfg = sample_grand_canonical(&params, &mut rng).unwrap();
            CollisionHistory {
                initial: cfg,
                events: vec![],
                horizon: 0.0,
            }
        })
        .collect();
    let grid = PhaseGrid {
        x_bins: 2,
        v_bins: 8,
        v_max: 6.0,
    };
    let f1 = estimate_f1(&histories, 0.0, grid, params.alpha).unwrap();
    assert!(
        (f1.mass() - 1.0).abs() < 0.05,
        "f1 mass {} should be near 1",
        f1.mass()
    );
}

/// The concentration identity: E[u_em^2] decomposes into the f_1
/// self-term (1/N-weighted) and the f_2 pair term. At t = 0 the draws are
/// exchangeable, so both sides are estimable from the same ensemble; they
/// must agree within combined Monte Carlo error.
#[test]
fn u_em_second_moment_matches_pair_expansion() {
    let alpha = 0.5;
    let epsilon = 0.02;
    let delta = 1.0; // Euler normalization keeps the algebra simple
    let params = maxwell_params(alpha, epsilon);
    let mut rng = ChaCha12Rng::seed_from_u64(5);
    let runs = 1500usize;
    let mut histories = Vec::with_capacity(runs);
    let psi = TestFunction::constant_one();
    let mut u_sq = 0.0f64;
    let mut u_sq_sq = 0.0f64;
    let mut mean_n = 0.0f64;
    let mut used = 0usize;
    for _ in 0..runs {
        let cfg = sample_grand_canonical(&params, &mut rng).unwrap();
        if cfg.is_empty() {
            continue;
        }
        mean_n += cfg.len() as f64;
        let hist = CollisionHistory {
            initial: cfg,
            events: vec![],
            horizon: 0.0,
        };
        let obs =
            empirical_observables(&hist, 0.0, &psi, 100.0, ObservableMode::Euler).unwrap();
        let v = obs.u[0] / delta;
        u_sq += v * v;
        u_sq_sq += v * v * v * v;
        used += 1;
        histories.push(hist);
    }
    mean_n /= used as f64;
    u_sq /= used as f64;
    let u_sq_se = ((u_sq_sq / used as f64 - u_sq * u_sq).max(0.0) / used as f64).sqrt();

    // integral side: (1/N^2) [ sum_j E v_j^2 + sum_{j != k} E v_j v_k ]
    // = (rescale) [ (1/N) \int v_x^2 f_1 + ((N-1)/N) \int v_x v_x' f_2 ] with
    // the f-normalizations carrying alpha eps^{-(d-1)} per particle
    let grid = PhaseGrid {
        x_bins: 1,
        v_bins: 10,
        v_max: 6.0,
    };
    let f1 = estimate_f1(&histories, 0.0, grid, alpha).unwrap();
    let f2 = estimate_f2(&histories, 0.0, grid, alpha).unwrap();
    let per_particle = alpha * epsilon.powi(-1); // alpha eps^{-(d-1)}
    let vol = grid.cell_volume();
    let mut self_term = 0.0;
    for (idx, val) in f1.values.iter().enumerate() {
        let (_, v) = grid.cell_center(idx);
        self_term += val * v[0] * v[0] * vol;
    }
    self_term *= per_particle / (mean_n * mean_n);
    let cells = grid.cell_count();
    let mut pair_term = 0.0;
    for a in 0..cells {
        let (_, va) = grid.cell_center(a);
        for b in 0..cells {
            let (_, vb) = grid.cell_center(b);
            pair_term += f2.values[a * cells + b] * va[0] * vb[0] * vol * vol;
        }
    }
    pair_term *= per_particle * per_particle / (mean_n * mean_n);
    let integral_side = self_term + pair_term;
    assert!(
        (u_sq - integral_side).abs() <= 5.0 * u_sq_se + 0.2 * u_sq,
        "empirical E[u_em^2] = {u_sq:.4e} vs f1/f2 expansion {integral_side:.4e} \
         (self {self_term:.4e}, pair {pair_term:.4e})"
    );
}
