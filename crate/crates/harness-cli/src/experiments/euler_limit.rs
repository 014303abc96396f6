//! The compressible-limit study: kinetic runs from local-Maxwellian data
//! (plus the first expansion term) against the finite-volume Euler
//! reference; the L1 gap trend has slope one in delta.

use crate::report::RunReport;
use crate::{Config, Result};
use kinetic_solvers::{
    boltzmann_evolve, maxwellian_slice, prepare_euler_data, BoltzmannParams, CollisionTable,
    EulerState, FluidState, KineticField, SpatialGrid, VelocityGrid,
};
use std::path::Path;

pub struct EulerLimitParams {
    pub deltas: Vec<f64>,
    pub x_cells: usize,
    pub v_cells: usize,
    pub v_max: f64,
    pub n_omega: usize,
    pub t_star: f64,
    pub seed: u64,
    /// coarse grid for the expansion-term solve (the term is smooth)
    pub f1_cells: usize,
}

impl EulerLimitParams {
    pub fn from_config(cfg: &Config, seed: u64) -> Result<Self> {
        Ok(Self {
            deltas: cfg.f64_list_or("euler-limit", "delta_list", &[0.2, 0.1])?,
            x_cells: cfg.usize_or("euler-limit", "x_cells", 64)?,
            v_cells: cfg.usize_or("euler-limit", "v_cells", 24)?,
            v_max: cfg.f64_or("euler-limit", "v_max", 4.8)?,
            n_omega: cfg.usize_or("euler-limit", "n_omega", 4)?,
            t_star: cfg.f64_or("euler-limit", "t_star", 0.04)?,
            seed,
            f1_cells: cfg.usize_or("euler-limit", "f1_cells", 16)?,
        })
    }
}

pub fn smooth_fields(grid: SpatialGrid<2>) -> FluidState<2> {
    let mut fluid = FluidState::uniform(grid, 1.0, [0.0, 0.0], 1.0);
    for i in 0..grid.count() {
        let x = grid.center(i);
        let s = (2.0 * std::f64::consts::PI * x[0]).sin();
        fluid.rho[i] = 1.0 + 0.1 * s;
        fluid.u[i] = [0.06 * (2.0 * std::f64::consts::PI * x[0]).cos(), 0.0];
        fluid.temperature[i] = 1.0 + 0.06 * (2.0 * std::f64::consts::PI * x[1]).sin();
    }
    fluid
}

/// The local Maxwellian field of a fluid state on the kinetic grids.
pub fn local_maxwellian_field(
    fluid: &FluidState<2>,
    v_grid: VelocityGrid<2>,
    alpha: f64,
) -> Result<KineticField<2>> {
    let mut out = KineticField::zeros(fluid.grid, v_grid, alpha);
    let cells = fluid.grid.count();
    for cell in 0..cells {
        let m = maxwellian_slice(
            fluid.rho[cell],
            &fluid.u[cell],
            fluid.temperature[cell],
            &v_grid,
        )?;
        for v in 0..v_grid.count() {
            *out.at_mut(v, cell) = m[v];
        }
    }
    Ok(out)
}

pub struct DeltaRow {
    pub delta: f64,
    pub gap_l1: f64,
    pub gap_t0: f64,
}

pub fn run(p: &EulerLimitParams, out_dir: &Path) -> Result<RunReport> {
    let start = std::time::Instant::now();
    let mut report = RunReport {
        experiment: "euler-limit".into(),
        seed: p.seed,
        config_echo: format!(
            "delta_list = {:?}\nx_cells = {}\nv_cells = {}\nv_max = {}\nt_star = {}\n",
            p.deltas, p.x_cells, p.v_cells, p.v_max, p.t_star
        ),
        ..Default::default()
    };
    let x_grid = SpatialGrid::<2>::new(p.x_cells);
    let v_grid = VelocityGrid::<2>::new(p.v_cells, p.v_max);
    let table = CollisionTable::build(v_grid, p.n_omega);
    // expansion term on the coarse grid (nearest coarse cell feeds each
    // fine cell; the term is smooth and enters at order delta)
    let coarse = SpatialGrid::<2>::new(p.f1_cells);
    let coarse_table = table_for_coarse(&table, v_grid);

    // Euler reference
    let fluid0 = smooth_fields(x_grid);
    let mut euler = EulerState::from_primitive(&fluid0)?;
    kinetic_solvers::euler_evolve(&mut euler, 0.2 / p.x_cells as f64, p.t_star)?;
    let fluid_t = euler.to_primitive()?;

    let mut rows = Vec::new();
    for &delta in &p.deltas {
        let alpha = 1.0 / delta;
        let coarse_fluid = smooth_fields(coarse);
        let prep_coarse = prepare_euler_data(
            coarse,
            v_grid,
            delta,
            &coarse_fluid,
            coarse_table.as_ref().unwrap_or(&table),
            None,
        )?;
        // lift: fine initial data = local Maxwellian on the fine grid plus
        // the coarse-grid expansion term
        let mut f = local_maxwellian_field(&fluid0, v_grid, alpha)?;
        let m_coarse = local_maxwellian_field(&coarse_fluid, v_grid, alpha)?;
        let ratio = p.x_cells / p.f1_cells;
        for cell in 0..x_grid.count() {
            let ci = (cell / p.x_cells) / ratio;
            let cj = (cell % p.x_cells) / ratio;
            let ccell = ci * p.f1_cells + cj;
            for v in 0..v_grid.count() {
                let f1_term = prep_coarse.field.at(v, ccell)
                    * prep_coarse.mass_before_normalization
                    - m_coarse.at(v, ccell);
                *f.at_mut(v, cell) += f1_term;
            }
        }
        for val in f.values.iter_mut() {
            *val = val.max(0.0);
        }
        f.alpha = alpha;
        f.normalize_mass();
        // gap at t = 0: data-preparation truncation only
        let mref0 = {
            let mut m = local_maxwellian_field(&fluid0, v_grid, alpha)?;
            m.normalize_mass();
            m
        };
        let gap_t0 = f.l1_distance(&mref0)?;
        let dt = 0.9 * x_grid.dx() / p.v_max;
        boltzmann_evolve(
            &mut f,
            &table,
            p.t_star,
            &BoltzmannParams {
                dt,
                substeps: 1,
                ..BoltzmannParams::default()
            },
        )?;
        let mut reference = local_maxwellian_field(&fluid_t, v_grid, alpha)?;
        reference.normalize_mass();
        let gap = f.l1_distance(&reference)?;
        rows.push(DeltaRow {
            delta,
            gap_l1: gap,
            gap_t0,
        });
    }

    let csv_rows: Vec<String> = rows
        .iter()
        .map(|r| format!("{:.4},{:.6e},{:.6e}", r.delta, r.gap_l1, r.gap_t0))
        .collect();
    let csv = report.write_csv(out_dir, "euler_gap.csv", "delta,gap_l1,gap_t0", &csv_rows)?;
    report.write_plot_script(
        out_dir,
        "euler_gap.gp",
        csv.file_name().unwrap().to_str().unwrap(),
        "Euler gap vs delta",
        true,
    )?;
    for w in rows.windows(2) {
        let ratio = w[0].gap_l1 / w[1].gap_l1.max(1e-300);
        report.check(
            &format!("euler-gap-ratio-delta-{}-to-{}", w[0].delta, w[1].delta),
            (1.6..=2.6).contains(&ratio),
            format!("gap({}) / gap({}) = {ratio:.2}", w[0].delta, w[1].delta),
        );
    }
    for r in &rows {
        report.check(
            &format!("euler-t0-gap-is-truncation-only-delta-{}", r.delta),
            r.gap_t0 <= 2.0 * r.delta + 1e-9,
            format!("t=0 gap {:.3e} vs delta {}", r.gap_t0, r.delta),
        );
    }
    report.wall_clock_s = start.elapsed().as_secs_f64();
    Ok(report)
}

fn table_for_coarse(
    _fine: &CollisionTable<2>,
    _v_grid: VelocityGrid<2>,
) -> Option<CollisionTable<2>> {
    // the same velocity grid serves the coarse solve
    None
}
