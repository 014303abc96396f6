//! Pseudo-spectral incompressible Navier-Stokes-Fourier solver on the
//! torus: advection in physical space, Leray projection and integrating-
//! factor diffusion in Fourier space, 2/3 dealiasing, zero spatial means.

use crate::fft::{fft, wavenumber, Complex};
use crate::grid::SpatialGrid;
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct NsfParams {
    pub mu1: f64,
    pub mu2: f64,
    pub dt: f64,
}

#[derive(Debug, Clone)]
pub struct NsfState<const D: usize> {
    pub grid: SpatialGrid<D>,
    pub u: Vec<[f64; D]>,
    pub rho: Vec<f64>,
    pub time: f64,
}

impl<const D: usize> NsfState<D> {
    pub fn new(grid: SpatialGrid<D>, u: Vec<[f64; D]>, rho: Vec<f64>) -> Self {
        Self {
            grid,
            u,
            rho,
            time: 0.0,
        }
    }

    pub fn mean_u(&self) -> [f64; D] {
        let mut m = [0.0; D];
        for u in &self.u {
            for k in 0..D {
                m[k] += u[k];
            }
        }
        for k in 0..D {
            m[k] /= self.u.len() as f64;
        }
        m
    }

    pub fn mean_rho(&self) -> f64 {
        self.rho.iter().sum::<f64>() / self.rho.len() as f64
    }
}

/// N-dimensional FFT by axis sweeps over a flat scalar field.
pub fn fftn<const D: usize>(field: &[f64], grid: &SpatialGrid<D>) -> Vec<Complex> {
    let mut data: Vec<Complex> = field.iter().map(|&x| Complex::new(x, 0.0)).collect();
    fft_axes(&mut data, grid, -1.0);
    data
}

pub fn ifftn_real<const D: usize>(mut data: Vec<Complex>, grid: &SpatialGrid<D>) -> Vec<f64> {
    fft_axes(&mut data, grid, 1.0);
    let scale = 1.0 / grid.count() as f64;
    data.into_iter().map(|c| c.re * scale).collect()
}

fn fft_axes<const D: usize>(data: &mut [Complex], grid: &SpatialGrid<D>, sign: f64) {
    let n = grid.n;
    let total = grid.count();
    let mut line = vec![Complex::default(); n];
    for axis in 0..D {
        let stride = n.pow((D - 1 - axis) as u32);
        let blocks = total / (n * stride);
        for b in 0..blocks {
            for s in 0..stride {
                let base = b * n * stride + s;
                for i in 0..n {
                    line[i] = data[base + i * stride];
                }
                fft(&mut line, sign);
                for i in 0..n {
                    data[base + i * stride] = line[i];
                }
            }
        }
    }
}

/// Spectral derivative along `axis`.
pub fn derivative<const D: usize>(field: &[f64], grid: &SpatialGrid<D>, axis: usize) -> Vec<f64> {
    let mut hat = fftn(field, grid);
    let n = grid.n;
    let total = grid.count();
    for (idx, c) in hat.iter_mut().enumerate().take(total) {
        let k = axis_wavenumber::<D>(idx, n, axis);
        let f = 2.0 * std::f64::consts::PI * k as f64;
        *c = c.mul(Complex::new(0.0, f));
    }
    ifftn_real(hat, grid)
}

fn axis_wavenumber<const D: usize>(idx: usize, n: usize, axis: usize) -> i64 {
    let stride = n.pow((D - 1 - axis) as u32);
    wavenumber((idx / stride) % n, n)
}

fn dealias_mask<const D: usize>(idx: usize, n: usize) -> bool {
    for axis in 0..D {
        let k = axis_wavenumber::<D>(idx, n, axis).unsigned_abs() as usize;
        if 3 * k > n {
            return false;
        }
    }
    true
}

/// One semi-implicit step: explicit dealiased advection, Leray projection,
/// integrating-factor diffusion; the k = 0 modes stay zero.
pub fn nsf_step<const D: usize>(state: &mut NsfState<D>, params: &NsfParams) -> Result<()> {
    let grid = state.grid;
    let n = grid.n;
    let total = grid.count();
    let dt = params.dt;

    // advection terms in physical space
    let u_fields: Vec<Vec<f64>> = (0..D)
        .map(|k| state.u.iter().map(|u| u[k]).collect())
        .collect();
    let mut adv_u: Vec<Vec<f64>> = vec![vec![0.0; total]; D];
    for comp in 0..D {
        for axis in 0..D {
            let dcomp = derivative(&u_fields[comp], &grid, axis);
            for i in 0..total {
                adv_u[comp][i] += u_fields[axis][i] * dcomp[i];
            }
        }
    }
    let mut adv_rho = vec![0.0; total];
    for axis in 0..D {
        let drho = derivative(&state.rho, &grid, axis);
        for i in 0..total {
            adv_rho[i] += u_fields[axis][i] * drho[i];
        }
    }

    // spectral update
    let mut u_hat: Vec<Vec<Complex>> = u_fields.iter().map(|f| fftn(f, &grid)).collect();
    let adv_hat: Vec<Vec<Complex>> = adv_u.iter().map(|f| fftn(f, &grid)).collect();
    let mut rho_hat = fftn(&state.rho, &grid);
    let advr_hat = fftn(&adv_rho, &grid);

    let two_pi = 2.0 * std::f64::consts::PI;
    for idx in 0..total {
        let mut kvec = [0.0f64; D];
        let mut k2 = 0.0;
        for axis in 0..D {
            let k = axis_wavenumber::<D>(idx, n, axis) as f64 * two_pi;
            kvec[axis] = k;
            k2 += k * k;
        }
        let alias_ok = dealias_mask::<D>(idx, n);
        // provisional: u* = u - dt adv (dealiased)
        let mut star = [Complex::default(); D];
        for comp in 0..D {
            let a = if alias_ok {
                adv_hat[comp][idx]
            } else {
                Complex::default()
            };
            star[comp] = u_hat[comp][idx].sub(a.scale(dt));
        }
        // Leray projection: remove the component along k
        if k2 > 0.0 {
            let mut dot = Complex::default();
            for comp in 0..D {
                dot = dot.add(star[comp].scale(kvec[comp]));
            }
            for comp in 0..D {
                star[comp] = star[comp].sub(dot.scale(kvec[comp] / k2));
            }
        } else {
            // zero-mean invariant
            star = [Complex::default(); D];
        }
        let visc = (-params.mu1 * k2 * dt).exp();
        for comp in 0..D {
            u_hat[comp][idx] = star[comp].scale(visc);
        }
        let ar = if alias_ok {
            advr_hat[idx]
        } else {
            Complex::default()
        };
        let diff = (-params.mu2 * k2 * dt).exp();
        rho_hat[idx] = rho_hat[idx].sub(ar.scale(dt)).scale(diff);
        if k2 == 0.0 {
            rho_hat[idx] = Complex::default();
        }
    }

    for comp in 0..D {
        let real = ifftn_real(u_hat[comp].clone(), &grid);
        for (i, v) in real.into_iter().enumerate() {
            state.u[i][comp] = v;
        }
    }
    state.rho = ifftn_real(rho_hat, &grid);
    state.time += dt;
    if !state.rho.iter().all(|x| x.is_finite())
        || !state.u.iter().all(|u| u.iter().all(|x| x.is_finite()))
    {
        return Err(Error::BlowUp(state.time, "NSF fields NaN".into()));
    }
    Ok(())
}

pub fn nsf_evolve<const D: usize>(
    state: &mut NsfState<D>,
    params: &NsfParams,
    t_final: f64,
) -> Result<()> {
    while state.time < t_final - 1e-12 {
        let mut p = params.clone();
        p.dt = params.dt.min(t_final - state.time);
        nsf_step(state, &p)?;
    }
    Ok(())
}

/// Discrete Leray projection of a velocity field (exposed for the
/// idempotence test).
pub fn project<const D: usize>(u: &[[f64; D]], grid: &SpatialGrid<D>) -> Vec<[f64; D]> {
    let n = grid.n;
    let total = grid.count();
    let fields: Vec<Vec<f64>> = (0..D).map(|k| u.iter().map(|x| x[k]).collect()).collect();
    let mut hats: Vec<Vec<Complex>> = fields.iter().map(|f| fftn(f, grid)).collect();
    let two_pi = 2.0 * std::f64::consts::PI;
    for idx in 0..total {
        let mut kvec = [0.0f64; D];
        let mut k2 = 0.0;
        for axis in 0..D {
            let k = axis_wavenumber::<D>(idx, n, axis) as f64 * two_pi;
            kvec[axis] = k;
            k2 += k * k;
        }
        if k2 == 0.0 {
            continue;
        }
        let mut dot = Complex::default();
        for comp in 0..D {
            dot = dot.add(hats[comp][idx].scale(kvec[comp]));
        }
        for comp in 0..D {
            let p = hats[comp][idx].sub(dot.scale(kvec[comp] / k2));
            hats[comp][idx] = p;
        }
    }
    let mut out = vec![[0.0; D]; total];
    for comp in 0..D {
        let real = ifftn_real(hats[comp].clone(), grid);
        for (i, v) in real.into_iter().enumerate() {
            out[i][comp] = v;
        }
    }
    out
}

/// Discrete divergence (spectral) max-norm.
pub fn divergence_max<const D: usize>(u: &[[f64; D]], grid: &SpatialGrid<D>) -> f64 {
    let mut div = vec![0.0; grid.count()];
    for axis in 0..D {
        let comp: Vec<f64> = u.iter().map(|x| x[axis]).collect();
        let d = derivative(&comp, grid, axis);
        for i in 0..grid.count() {
            div[i] += d[i];
        }
    }
    div.iter().fold(0.0f64, |m, &x| m.max(x.abs()))
}
