//! The kinetic-limit study: L1 distance between the empirical one-particle
//! correlation function of hard-sphere runs and the discrete-velocity
//! solution of the limit equation, across a descending epsilon list.

use crate::report::RunReport;
use crate::{Config, Result};
use kinetic_solvers::{boltzmann_evolve, BoltzmannParams, CollisionTable, KineticField};
use particle_system::{
    estimate_f1, evolve, sample_grand_canonical, CollisionHistory, EnsembleParams,
    InitialDensity, PhaseGrid,
};
use rand::SeedableRng;
use std::path::Path;

pub struct KineticLimitParams {
    pub eps_list: Vec<f64>,
    pub alpha: f64,
    pub t_final: f64,
    pub runs: usize,
    pub v_max: f64,
    pub seed: u64,
    /// velocity-cutoff exponent kappa: the tail check uses |v| <= eps^-kappa
    pub kappa: f64,
    pub x_bins: usize,
    pub v_bins: usize,
    /// reference solver resolution
    pub ref_x_cells: usize,
    pub ref_v_cells: usize,
}

impl KineticLimitParams {
    pub fn from_config(cfg: &Config, seed: u64) -> Result<Self> {
        Ok(Self {
            eps_list: cfg.f64_list_or("kinetic-limit", "epsilon_list", &[0.05, 0.02, 0.01])?,
            alpha: cfg.f64_or("kinetic-limit", "alpha", 1.0)?,
            t_final: cfg.f64_or("kinetic-limit", "t_final", 0.5)?,
            runs: cfg.usize_or("kinetic-limit", "runs", 200)?,
            v_max: cfg.f64_or("kinetic-limit", "v_max", 6.0)?,
            seed,
            kappa: cfg.f64_or("kinetic-limit", "kappa", 0.9)?,
            x_bins: cfg.usize_or("kinetic-limit", "x_bins", 4)?,
            v_bins: cfg.usize_or("kinetic-limit", "v_bins", 8)?,
            ref_x_cells: cfg.usize_or("kinetic-limit", "ref_x_cells", 32)?,
            ref_v_cells: cfg.usize_or("kinetic-limit", "ref_v_cells", 16)?,
        })
    }
}

/// The spatially perturbed Maxwellian used as initial density.
pub fn initial_density_fn(amp: f64) -> impl Fn(&[f64; 2], &[f64; 2]) -> f64 + Clone {
    move |x: &[f64; 2], v: &[f64; 2]| {
        let norm = 2.0 * std::f64::consts::PI;
        (1.0 + amp * (2.0 * std::f64::consts::PI * x[0]).cos())
            * (-torus_core::norm_sq(v) / 2.0).exp()
            / norm
    }
}

/// Discrete reference solution binned onto the comparison grid.
pub fn reference_density(
    p: &KineticLimitParams,
    amp: f64,
) -> Result<(KineticField<2>, CollisionTable<2>)> {
    let x_grid = kinetic_solvers::SpatialGrid::new(p.ref_x_cells);
    let v_grid = kinetic_solvers::VelocityGrid::new(p.ref_v_cells, p.v_max);
    let table = CollisionTable::build(v_grid, 4);
    let mut f = KineticField::zeros(x_grid, v_grid, p.alpha);
    let dens = initial_density_fn(amp);
    for v in 0..v_grid.count() {
        let vel = v_grid.center(v);
        for cell in 0..x_grid.count() {
            let x = x_grid.center(cell);
            *f.at_mut(v, cell) = dens(&x, &vel);
        }
    }
    f.normalize_mass();
    let params = BoltzmannParams {
        dt: 0.8 * x_grid.dx() / p.v_max,
        substeps: 1,
        ..BoltzmannParams::default()
    };
    boltzmann_evolve(&mut f, &table, p.t_final, &params)?;
    Ok((f, table))
}

pub struct EpsRow {
    pub epsilon: f64,
    pub l1_distance: f64,
    pub mean_particles: f64,
    pub tail_mass: f64,
}

pub fn run(p: &KineticLimitParams, out_dir: &Path) -> Result<RunReport> {
    let start = std::time::Instant::now();
    let mut report = RunReport {
        experiment: "kinetic-limit".into(),
        seed: p.seed,
        config_echo: format!(
            "epsilon_list = {:?}\nalpha = {}\nt_final = {}\nruns = {}\nkappa = {}\n",
            p.eps_list, p.alpha, p.t_final, p.runs, p.kappa
        ),
        ..Default::default()
    };
    let amp = 0.5;
    let (reference, _) = reference_density(p, amp)?;
    let grid = PhaseGrid::<2> {
        x_bins: p.x_bins,
        v_bins: p.v_bins,
        v_max: p.v_max,
    };
    // bin the reference onto the comparison grid
    let mut ref_binned = vec![0.0f64; grid.cell_count()];
    {
        let xg = reference.x_grid;
        let vg = reference.v_grid;
        for v in 0..vg.count() {
            let vel = vg.center(v);
            for cell in 0..xg.count() {
                let x = xg.center(cell);
                if let Some(idx) = grid.index(&x, &vel) {
                    ref_binned[idx] +=
                        reference.at(v, cell) * xg.cell_volume() * vg.cell_volume();
                }
            }
        }
        let bin_vol = grid.cell_volume();
        for r in ref_binned.iter_mut() {
            *r /= bin_vol;
        }
    }

    let mut rows = Vec::new();
    for (i, &eps) in p.eps_list.iter().enumerate() {
        let n0 = InitialDensity::<2>::new(initial_density_fn(amp), p.v_max, 16, 48)?;
        let params = EnsembleParams {
            alpha: p.alpha,
            epsilon: eps,
            n0,
        };
        let mut histories: Vec<CollisionHistory<2>> = Vec::with_capacity(p.runs);
        let mut n_total = 0usize;
        let mut tail = 0usize;
        let cutoff = eps.powf(-p.kappa);
        for run in 0..p.runs {
            let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(
                p.seed ^ (i as u64) << 32 ^ run as u64,
            );
            let cfg = sample_grand_canonical(&params, &mut rng)?;
            n_total += cfg.len();
            let (end, hist) = evolve(&cfg, p.t_final, 1_000_000)?;
            tail += end
                .particles
                .iter()
                .filter(|q| torus_core::norm(&q.v) > cutoff)
                .count();
            histories.push(hist);
        }
        let f1 = estimate_f1(&histories, p.t_final, grid, p.alpha)?;
        let l1: f64 = f1
            .values
            .iter()
            .zip(ref_binned.iter())
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            * grid.cell_volume();
        rows.push(EpsRow {
            epsilon: eps,
            l1_distance: l1,
            mean_particles: n_total as f64 / p.runs as f64,
            tail_mass: tail as f64 / n_total.max(1) as f64,
        });
    }

    let csv_rows: Vec<String> = rows
        .iter()
        .map(|r| {
            format!(
                "{:.6e},{:.6e},{:.3},{:.3e}",
                r.epsilon, r.l1_distance, r.mean_particles, r.tail_mass
            )
        })
        .collect();
    let csv = report.write_csv(
        out_dir,
        "kinetic_limit.csv",
        "epsilon,l1_distance,mean_particles,tail_mass",
        &csv_rows,
    )?;
    report.write_plot_script(
        out_dir,
        "kinetic_limit.gp",
        csv.file_name().unwrap().to_str().unwrap(),
        "L1 distance vs epsilon",
        true,
    )?;

    let decreasing = rows.windows(2).all(|w| w[1].l1_distance < w[0].l1_distance);
    report.check(
        "l1-distance-strictly-decreasing",
        decreasing,
        rows.iter()
            .map(|r| format!("eps={:.3e}: {:.4e}", r.epsilon, r.l1_distance))
            .collect::<Vec<_>>()
            .join("; "),
    );
    let tail_ok = rows.iter().all(|r| r.tail_mass < 1e-6);
    report.check(
        "velocity-cutoff-tail-below-1e-6",
        tail_ok,
        rows.iter()
            .map(|r| format!("{:.1e}", r.tail_mass))
            .collect::<Vec<_>>()
            .join("; "),
    );
    report.wall_clock_s = start.elapsed().as_secs_f64();
    Ok(report)
}
