//! Conservative finite-volume compressible Euler on the torus: unlimited
//! MUSCL reconstruction with a Rusanov flux and two-stage Runge-Kutta; the
//! ideal-gas closure `p = rho T` (gamma = (d+2)/d). Runs are restricted to
//! smooth pre-shock horizons.

use crate::grid::{FluidState, SpatialGrid};
use crate::{Error, Result};

/// Conservative variables per cell: (rho, momentum, total energy
/// `rho (d T + |u|^2) / 2`).
#[derive(Debug, Clone)]
pub struct EulerState<const D: usize> {
    pub grid: SpatialGrid<D>,
    pub rho: Vec<f64>,
    pub momentum: Vec<[f64; D]>,
    pub energy: Vec<f64>,
    pub time: f64,
}

impl<const D: usize> EulerState<D> {
    pub fn gamma() -> f64 {
        (D as f64 + 2.0) / D as f64
    }

    pub fn from_primitive(fluid: &FluidState<D>) -> Result<Self> {
        let n = fluid.grid.count();
        let mut rho = Vec::with_capacity(n);
        let mut momentum = Vec::with_capacity(n);
        let mut energy = Vec::with_capacity(n);
        for i in 0..n {
            let r = fluid.rho[i];
            let t = fluid.temperature[i];
            if r <= 0.0 || t <= 0.0 {
                return Err(Error::NonPositive(r, t));
            }
            let u = fluid.u[i];
            let u2: f64 = u.iter().map(|x| x * x).sum();
            rho.push(r);
            let mut m = [0.0; D];
            for k in 0..D {
                m[k] = r * u[k];
            }
            momentum.push(m);
            energy.push(r * (D as f64 * t + u2) / 2.0);
        }
        Ok(Self {
            grid: fluid.grid,
            rho,
            momentum,
            energy,
            time: 0.0,
        })
    }

    pub fn to_primitive(&self) -> Result<FluidState<D>> {
        let n = self.grid.count();
        let mut out = FluidState::uniform(self.grid, 1.0, [0.0; D], 1.0);
        for i in 0..n {
            let r = self.rho[i];
            if r <= 0.0 {
                return Err(Error::NonPositive(r, 0.0));
            }
            let mut u = [0.0; D];
            let mut u2 = 0.0;
            for k in 0..D {
                u[k] = self.momentum[i][k] / r;
                u2 += u[k] * u[k];
            }
            let t = (2.0 * self.energy[i] / r - u2) / D as f64;
            if t <= 0.0 {
                return Err(Error::NonPositive(r, t));
            }
            out.rho[i] = r;
            out.u[i] = u;
            out.temperature[i] = t;
        }
        Ok(out)
    }

    pub fn totals(&self) -> (f64, [f64; D], f64) {
        let vol = self.grid.cell_volume();
        let mass = self.rho.iter().sum::<f64>() * vol;
        let mut mom = [0.0; D];
        for m in &self.momentum {
            for k in 0..D {
                mom[k] += m[k];
            }
        }
        for k in 0..D {
            mom[k] *= vol;
        }
        let en = self.energy.iter().sum::<f64>() * vol;
        (mass, mom, en)
    }

    fn pressure(&self, i: usize) -> f64 {
        let r = self.rho[i];
        let u2: f64 = self.momentum[i].iter().map(|m| (m / r) * (m / r)).sum();
        // p = rho T = (2 E - rho |u|^2) / d
        (2.0 * self.energy[i] - r * u2) / D as f64
    }
}

const NVAR_MAX: usize = 5; // rho + momentum(<=3) + energy

fn flux<const D: usize>(w: &[f64; NVAR_MAX], axis: usize) -> [f64; NVAR_MAX] {
    let nv = D + 2;
    let rho = w[0];
    let mut u = [0.0; D];
    let mut u2 = 0.0;
    for k in 0..D {
        u[k] = w[1 + k] / rho;
        u2 += u[k] * u[k];
    }
    let e = w[nv - 1];
    let p = (2.0 * e - rho * u2) / D as f64;
    let un = u[axis];
    let mut f = [0.0; NVAR_MAX];
    f[0] = rho * un;
    for k in 0..D {
        f[1 + k] = rho * u[k] * un;
    }
    f[1 + axis] += p;
    f[nv - 1] = (e + p) * un;
    f
}

fn sound_speed_bound<const D: usize>(w: &[f64; NVAR_MAX], axis: usize) -> f64 {
    let nv = D + 2;
    let rho = w[0].max(1e-300);
    let mut u2 = 0.0;
    for k in 0..D {
        u2 += (w[1 + k] / rho) * (w[1 + k] / rho);
    }
    let p = ((2.0 * w[nv - 1] - rho * u2) / D as f64).max(0.0);
    let c = (EulerState::<D>::gamma() * p / rho).sqrt();
    (w[1 + axis] / rho).abs() + c
}

/// One RK2 step with unlimited central slopes and the local Lax-Friedrichs
/// (Rusanov) flux. Smooth pre-shock data per the precondition; NaN or
/// positivity loss surfaces as a blow-up report.
pub fn euler_step<const D: usize>(state: &mut EulerState<D>, dt: f64) -> Result<()> {
    let w0 = pack(state);
    let k1 = rhs::<D>(&w0, &state.grid)?;
    let mut w1 = w0.clone();
    for (a, b) in w1.iter_mut().zip(k1.iter()) {
        *a += dt * b;
    }
    let k2 = rhs::<D>(&w1, &state.grid)?;
    let mut w_out = w0;
    for i in 0..w_out.len() {
        w_out[i] += 0.5 * dt * (k1[i] + k2[i]);
    }
    unpack(state, &w_out)?;
    state.time += dt;
    Ok(())
}

fn pack<const D: usize>(state: &EulerState<D>) -> Vec<f64> {
    let nv = D + 2;
    let n = state.grid.count();
    let mut out = vec![0.0; nv * n];
    for i in 0..n {
        out[i] = state.rho[i];
        for k in 0..D {
            out[(1 + k) * n + i] = state.momentum[i][k];
        }
        out[(nv - 1) * n + i] = state.energy[i];
    }
    out
}

fn unpack<const D: usize>(state: &mut EulerState<D>, w: &[f64]) -> Result<()> {
    let nv = D + 2;
    let n = state.grid.count();
    for i in 0..n {
        state.rho[i] = w[i];
        for k in 0..D {
            state.momentum[i][k] = w[(1 + k) * n + i];
        }
        state.energy[i] = w[(nv - 1) * n + i];
        if !state.rho[i].is_finite() || state.rho[i] <= 0.0 {
            return Err(Error::BlowUp(state.time, format!("rho = {}", state.rho[i])));
        }
        if state.pressure(i) <= 0.0 {
            return Err(Error::BlowUp(state.time, "pressure loss".into()));
        }
    }
    Ok(())
}

fn rhs<const D: usize>(w: &[f64], grid: &SpatialGrid<D>) -> Result<Vec<f64>> {
    let nv = D + 2;
    let n1 = grid.n;
    let n = grid.count();
    let dx = grid.dx();
    let mut out = vec![0.0; nv * n];
    let cell_w = |w: &[f64], i: usize| -> [f64; NVAR_MAX] {
        let mut c = [0.0; NVAR_MAX];
        for q in 0..nv {
            c[q] = w[q * n + i];
        }
        c
    };
    for axis in 0..D {
        let stride = n1.pow((D - 1 - axis) as u32);
        let shift = |i: usize, delta: isize| -> usize {
            let coord = (i / stride) % n1;
            let new_coord = (coord as isize + delta).rem_euclid(n1 as isize) as usize;
            i - coord * stride + new_coord * stride
        };
        for i in 0..n {
            let ip = shift(i, 1);
            let im = shift(i, -1);
            let imm = shift(i, -2);
            let ipp = shift(i, 2);
            let wm = cell_w(w, im);
            let wc = cell_w(w, i);
            let wp = cell_w(w, ip);
            let wmm = cell_w(w, imm);
            let wpp = cell_w(w, ipp);
            // interface i+1/2: left = wc + slope/2, right = wp - slope/2
            let mut wl = [0.0; NVAR_MAX];
            let mut wr = [0.0; NVAR_MAX];
            for q in 0..nv {
                wl[q] = wc[q] + 0.25 * (wp[q] - wm[q]);
                wr[q] = wp[q] - 0.25 * (wpp[q] - wc[q]);
            }
            let fl = flux::<D>(&wl, axis);
            let fr = flux::<D>(&wr, axis);
            let s = sound_speed_bound::<D>(&wl, axis).max(sound_speed_bound::<D>(&wr, axis));
            let mut f_plus = [0.0; NVAR_MAX];
            for q in 0..nv {
                f_plus[q] = 0.5 * (fl[q] + fr[q]) - 0.5 * s * (wr[q] - wl[q]);
            }
            // interface i-1/2 reuses the same construction shifted
            let mut wl2 = [0.0; NVAR_MAX];
            let mut wr2 = [0.0; NVAR_MAX];
            for q in 0..nv {
                wl2[q] = wm[q] + 0.25 * (wc[q] - wmm[q]);
                wr2[q] = wc[q] - 0.25 * (wp[q] - wm[q]);
            }
            let fl2 = flux::<D>(&wl2, axis);
            let fr2 = flux::<D>(&wr2, axis);
            let s2 = sound_speed_bound::<D>(&wl2, axis).max(sound_speed_bound::<D>(&wr2, axis));
            let mut f_minus = [0.0; NVAR_MAX];
            for q in 0..nv {
                f_minus[q] = 0.5 * (fl2[q] + fr2[q]) - 0.5 * s2 * (wr2[q] - wl2[q]);
            }
            for q in 0..nv {
                out[q * n + i] -= (f_plus[q] - f_minus[q]) / dx;
            }
        }
    }
    Ok(out)
}

pub fn euler_evolve<const D: usize>(
    state: &mut EulerState<D>,
    dt: f64,
    t_final: f64,
) -> Result<()> {
    while state.time < t_final - 1e-12 {
        let step = dt.min(t_final - state.time);
        euler_step(state, step)?;
    }
    Ok(())
}
