//! Well-prepared data and moment extraction: normalization, the exact
//! Gaussian-moment identity for the velocity average, the expansion-term
//! residual shrinking under refinement, moment recovery with cutoffs, and
//! snapshot round trips.

use kinetic_solvers::grid::{FluidState, SpatialGrid, VelocityGrid};
use kinetic_solvers::hilbert::{
    hilbert_first_term, linearized_inverse, maxwellian_slice, moments, prepare_euler_data,
    prepare_nsf_data,
};
use kinetic_solvers::CollisionTable;
use torus_core::norm_sq;

fn rho0(x: &[f64; 2]) -> f64 {
    0.2 * (2.0 * std::f64::consts::PI * x[0]).cos()
}

fn u0(x: &[f64; 2]) -> [f64; 2] {
    [0.2 * (2.0 * std::f64::consts::PI * x[1]).sin(), 0.0]
}

#[test]
fn nsf_data_delta_zero_is_global_maxwellian() {
    let x_grid = SpatialGrid::<2>::new(4);
    let v_grid = VelocityGrid::<2>::new(16, 4.8);
    let prep = prepare_nsf_data(x_grid, v_grid, 0.0, &rho0, &u0, None).unwrap();
    let m = maxwellian_slice(1.0, &[0.0, 0.0], 1.0, &v_grid).unwrap();
    let scale = prep.field.at(0, 0) / (m[0] / prep.mass_before_normalization);
    let _ = scale;
    for cell in 0..x_grid.count() {
        for v in 0..v_grid.count() {
            let expected = m[v] / prep.mass_before_normalization;
            assert!((prep.field.at(v, cell) - expected).abs() < 1e-12);
        }
    }
}

#[test]
fn nsf_velocity_average_recovers_delta_u() {
    // the first Gaussian moment of the well-prepared bracket is exactly
    // delta * u_0(x) (up to the velocity-grid truncation tail)
    let x_grid = SpatialGrid::<2>::new(8);
    let v_grid = VelocityGrid::<2>::new(32, 6.0);
    let delta = 0.1;
    let prep = prepare_nsf_data(x_grid, v_grid, delta, &rho0, &u0, None).unwrap();
    let dvol = v_grid.cell_volume();
    for cell in 0..x_grid.count() {
        let x = x_grid.center(cell);
        let mut mean = [0.0f64; 2];
        for v in 0..v_grid.count() {
            let c = v_grid.center(v);
            let val = prep.field.at(v, cell) * prep.mass_before_normalization * dvol;
            mean[0] += val * c[0];
            mean[1] += val * c[1];
        }
        let expect = u0(&x);
        assert!(
            (mean[0] - delta * expect[0]).abs() < 1e-6,
            "cell {cell}: {} vs {}",
            mean[0],
            delta * expect[0]
        );
        assert!((mean[1] - delta * expect[1]).abs() < 1e-6);
    }
}

#[test]
fn euler_first_term_residual_shrinks_under_refinement() {
    // residual of the order-delta relation L F_1 = P_perp (d_t + v.grad) F_0
    // (the discrete range defect) decreases with velocity refinement
    let x_grid = SpatialGrid::<2>::new(4);
    let mut fluid = FluidState::uniform(x_grid, 1.0, [0.0, 0.0], 1.0);
    for i in 0..x_grid.count() {
        let x = x_grid.center(i);
        fluid.rho[i] = 1.0 + 0.1 * (2.0 * std::f64::consts::PI * x[0]).sin();
    }
    let mut residuals = Vec::new();
    for n in [8usize, 16] {
        let v_grid = VelocityGrid::<2>::new(n, 4.0);
        let table = CollisionTable::build(v_grid, 8);
        // measure through the solver's reported residual on one cell
        let m = maxwellian_slice(fluid.rho[0], &fluid.u[0], fluid.temperature[0], &v_grid)
            .unwrap();
        // an inhomogeneity orthogonal to the invariants with Maxwellian decay
        let h: Vec<f64> = (0..v_grid.count())
            .map(|v| {
                let c = v_grid.center(v);
                m[v] * c[0] * (norm_sq(&c) - 4.0)
            })
            .collect();
        let (_, residual) = linearized_inverse(&table, &m, &h, 1e-10, 400).unwrap();
        residuals.push(residual);
    }
    assert!(
        residuals[1] < residuals[0],
        "range defect must shrink under refinement: {residuals:?}"
    );
    // and the full preparation runs through
    let v_grid = VelocityGrid::<2>::new(12, 4.0);
    let table = CollisionTable::build(v_grid, 8);
    let prep = prepare_euler_data(x_grid, v_grid, 0.05, &fluid, &table, None).unwrap();
    assert!(prep.field.min_value() >= 0.0);
    assert!((prep.field.mass() - 1.0).abs() < 1e-12);
    let _ = hilbert_first_term(x_grid, v_grid, &fluid, &table).unwrap();
}

#[test]
fn moments_recover_maxwellian_fields() {
    let x_grid = SpatialGrid::<2>::new(2);
    let v_grid = VelocityGrid::<2>::new(48, 7.0);
    let mut f = kinetic_solvers::KineticField::zeros(x_grid, v_grid, 1.0);
    let (rho, u, t) = (0.8, [0.3, -0.2], 1.2);
    let m = maxwellian_slice(rho, &u, t, &v_grid).unwrap();
    for cell in 0..x_grid.count() {
        for v in 0..v_grid.count() {
            *f.at_mut(v, cell) = m[v];
        }
    }
    let out = moments(&f, 7.0, None);
    assert!((out.rho[0] - rho).abs() < 1e-4);
    assert!((out.u[0][0] - rho * u[0]).abs() < 1e-4); // momentum density
    // (|v|^2 - d)/d moment of M: (rho (d T + |u|^2) - d rho)/d
    let expect = (rho * (2.0 * t + norm_sq(&u)) - 2.0 * rho) / 2.0;
    assert!((out.temperature[0] - expect).abs() < 1e-4);

    // cutting the tails changes the moments by at most the Gaussian tail
    let cut = 4.0;
    let cut_out = moments(&f, cut, None);
    let tail_bound = (-(cut * cut) / 4.0).exp();
    assert!((cut_out.rho[0] - out.rho[0]).abs() <= tail_bound);
}

#[test]
fn nsf_mode_moments_apply_rescalings() {
    let x_grid = SpatialGrid::<2>::new(4);
    let v_grid = VelocityGrid::<2>::new(32, 6.0);
    let delta = 0.1;
    let prep = prepare_nsf_data(x_grid, v_grid, delta, &rho0, &u0, None).unwrap();
    let out = moments(&prep.field, 6.0, Some(delta));
    for cell in 0..x_grid.count() {
        let x = x_grid.center(cell);
        assert!(
            (out.u[cell][0] - u0(&x)[0]).abs() < 0.02,
            "NSF-rescaled velocity moment should recover u_0"
        );
        assert!((out.rho[cell] - rho0(&x)).abs() < 0.02);
    }
}

#[test]
fn snapshot_round_trip() {
    let dir = std::env::temp_dir().join("kinetic_snapshot_test");
    let _ = std::fs::create_dir_all(&dir);
    let x_grid = SpatialGrid::<2>::new(4);
    let v_grid = VelocityGrid::<2>::new(8, 3.0);
    let mut f = kinetic_solvers::KineticField::zeros(x_grid, v_grid, 2.0);
    for (i, v) in f.values.iter_mut().enumerate() {
        *v = (i as f64).sin().abs();
    }
    let base = dir.join("snap");
    kinetic_solvers::snapshot::write_snapshot(&f, 0.25, &base).unwrap();
    let g = kinetic_solvers::snapshot::read_snapshot::<2>(&base).unwrap();
    assert_eq!(f.values, g.values);
    assert_eq!(f.x_grid, g.x_grid);
    assert_eq!(f.v_grid, g.v_grid);
    assert_eq!(f.alpha, g.alpha);
}
