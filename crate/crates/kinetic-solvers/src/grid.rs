//! Uniform grids and field containers. Kinetic fields are stored
//! velocity-major (`values[v * cells + cell]`), which keeps the collision
//! sweep streaming over contiguous cell blocks.

use crate::{Error, Result};

/// Cell-centered velocity grid on `[-v_max, v_max]^D`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VelocityGrid<const D: usize> {
    pub n: usize,
    pub v_max: f64,
}

impl<const D: usize> VelocityGrid<D> {
    pub fn new(n: usize, v_max: f64) -> Self {
        Self { n, v_max }
    }

    pub fn dv(&self) -> f64 {
        2.0 * self.v_max / self.n as f64
    }

    pub fn count(&self) -> usize {
        self.n.pow(D as u32)
    }

    pub fn cell_volume(&self) -> f64 {
        self.dv().powi(D as i32)
    }

    pub fn center(&self, idx: usize) -> [f64; D] {
        let mut out = [0.0; D];
        let mut rem = idx;
        for k in (0..D).rev() {
            let i = rem % self.n;
            rem /= self.n;
            out[k] = -self.v_max + (i as f64 + 0.5) * self.dv();
        }
        out
    }

    pub fn index(&self, coords: [usize; D]) -> usize {
        let mut idx = 0;
        for k in 0..D {
            idx = idx * self.n + coords[k];
        }
        idx
    }

    /// Multilinear interpolation stencil at an off-grid velocity: up to 2^D
    /// (index, weight) pairs; `None` when the point leaves the grid hull.
    pub fn stencil(&self, v: &[f64; D]) -> Option<([usize; 8], [f64; 8], usize)> {
        let mut base = [0usize; 8];
        let mut frac = [0.0f64; 8];
        let dv = self.dv();
        let mut base_idx = [0usize; 8];
        let mut fr = [0.0; 8];
        for k in 0..D {
            let s = (v[k] + self.v_max) / dv - 0.5;
            if s < 0.0 || s > (self.n - 1) as f64 {
                return None;
            }
            let i0 = s.floor().min((self.n - 2) as f64).max(0.0) as usize;
            base_idx[k] = i0;
            fr[k] = (s - i0 as f64).clamp(0.0, 1.0);
        }
        let count = 1usize << D;
        let mut weights = [0.0f64; 8];
        let mut indices = [0usize; 8];
        for c in 0..count {
            let mut w = 1.0;
            let mut coords = [0usize; D];
            for k in 0..D {
                if (c >> k) & 1 == 1 {
                    w *= fr[k];
                    coords[k] = base_idx[k] + 1;
                } else {
                    w *= 1.0 - fr[k];
                    coords[k] = base_idx[k];
                }
            }
            indices[c] = self.index(coords);
            weights[c] = w;
        }
        base[..count].copy_from_slice(&indices[..count]);
        frac[..count].copy_from_slice(&weights[..count]);
        Some((base, frac, count))
    }
}

/// Uniform spatial grid on the unit torus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialGrid<const D: usize> {
    pub n: usize,
}

impl<const D: usize> SpatialGrid<D> {
    pub fn new(n: usize) -> Self {
        Self { n }
    }

    pub fn dx(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn count(&self) -> usize {
        self.n.pow(D as u32)
    }

    pub fn cell_volume(&self) -> f64 {
        self.dx().powi(D as i32)
    }

    pub fn center(&self, idx: usize) -> [f64; D] {
        let mut out = [0.0; D];
        let mut rem = idx;
        for k in (0..D).rev() {
            let i = rem % self.n;
            rem /= self.n;
            out[k] = (i as f64 + 0.5) * self.dx();
        }
        out
    }
}

/// A velocity distribution on the phase grid; `values[v * cells + cell]`.
#[derive(Debug, Clone)]
pub struct KineticField<const D: usize> {
    pub x_grid: SpatialGrid<D>,
    pub v_grid: VelocityGrid<D>,
    pub alpha: f64,
    pub values: Vec<f64>,
}

impl<const D: usize> KineticField<D> {
    pub fn zeros(x_grid: SpatialGrid<D>, v_grid: VelocityGrid<D>, alpha: f64) -> Self {
        Self {
            x_grid,
            v_grid,
            alpha,
            values: vec![0.0; x_grid.count() * v_grid.count()],
        }
    }

    pub fn cells(&self) -> usize {
        self.x_grid.count()
    }

    pub fn at(&self, v: usize, cell: usize) -> f64 {
        self.values[v * self.cells() + cell]
    }

    pub fn at_mut(&mut self, v: usize, cell: usize) -> &mut f64 {
        let c = self.cells();
        &mut self.values[v * c + cell]
    }

    /// Total mass `∫ f dx dv`.
    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.v_grid.cell_volume() * self.x_grid.cell_volume()
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// L1 distance to another field on the same grids.
    pub fn l1_distance(&self, other: &Self) -> Result<f64> {
        if self.x_grid != other.x_grid || self.v_grid != other.v_grid {
            return Err(Error::GridMismatch("L1 distance".into()));
        }
        Ok(self
            .values
            .iter()
            .zip(other.values.iter())
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            * self.v_grid.cell_volume()
            * self.x_grid.cell_volume())
    }

    pub fn normalize_mass(&mut self) {
        let m = self.mass();
        if m > 0.0 {
            for v in &mut self.values {
                *v /= m;
            }
        }
    }
}

/// Macroscopic fields on the spatial grid.
#[derive(Debug, Clone)]
pub struct FluidState<const D: usize> {
    pub grid: SpatialGrid<D>,
    pub rho: Vec<f64>,
    pub u: Vec<[f64; D]>,
    pub temperature: Vec<f64>,
}

impl<const D: usize> FluidState<D> {
    pub fn uniform(grid: SpatialGrid<D>, rho: f64, u: [f64; D], t: f64) -> Self {
        Self {
            grid,
            rho: vec![rho; grid.count()],
            u: vec![u; grid.count()],
            temperature: vec![t; grid.count()],
        }
    }
}
