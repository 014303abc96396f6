//! The discrete-velocity hard-sphere collision operator.
//!
//! A precomputed table enumerates velocity pairs and impact directions;
//! post-collision velocities land between grid nodes and are deposited by
//! two-point interpolation per component (multilinear), followed by a
//! per-cell moment-matching correction that zeroes the discrete mass,
//! momentum and energy of the output exactly (to round-off).

use crate::grid::VelocityGrid;
use torus_core::vec::{norm_sq, sub};

struct Row {
    a: u32,
    b: u32,
    kernel: f64,
    ga_idx: [u32; 8],
    ga_w: [f64; 8],
    gb_idx: [u32; 8],
    gb_w: [f64; 8],
    n_st: u8,
}

pub struct CollisionTable<const D: usize> {
    pub grid: VelocityGrid<D>,
    rows: Vec<Row>,
    /// orthonormalized collision invariants (d+2 vectors over the grid)
    invariants: Vec<Vec<f64>>,
}

impl<const D: usize> CollisionTable<D> {
    /// Builds the table with `n_omega` impact directions over the half
    /// sphere (the `ω -> -ω` fold doubles the weight).
    pub fn build(grid: VelocityGrid<D>, n_omega: usize) -> Self {
        let m = grid.count();
        let dvol = grid.cell_volume();
        let omegas = half_sphere::<D>(n_omega);
        let mut rows = Vec::new();
        for a in 0..m {
            let va = grid.center(a);
            for b in (a + 1)..m {
                let vb = grid.center(b);
                let dv = sub(&va, &vb);
                for &(omega, w_omega) in &omegas {
                    let p = torus_core::dot(&dv, &omega);
                    // fold: positive part over the full sphere = |p| over half
                    let kernel = p.abs() * 2.0 * w_omega * dvol;
                    if kernel == 0.0 {
                        continue;
                    }
                    let mut va_post = va;
                    let mut vb_post = vb;
                    for k in 0..D {
                        va_post[k] -= p * omega[k];
                        vb_post[k] += p * omega[k];
                    }
                    let (Some((ia, wa, na)), Some((ib, wb, nb))) =
                        (grid.stencil(&va_post), grid.stencil(&vb_post))
                    else {
                        continue; // post-collision point leaves the grid hull
                    };
                    debug_assert_eq!(na, nb);
                    let mut ga_idx = [0u32; 8];
                    let mut gb_idx = [0u32; 8];
                    for k in 0..na {
                        ga_idx[k] = ia[k] as u32;
                        gb_idx[k] = ib[k] as u32;
                    }
                    rows.push(Row {
                        a: a as u32,
                        b: b as u32,
                        kernel,
                        ga_idx,
                        ga_w: wa,
                        gb_idx,
                        gb_w: wb,
                        n_st: na as u8,
                    });
                }
            }
        }
        let invariants = orthonormal_invariants(&grid);
        Self {
            grid,
            rows,
            invariants,
        }
    }

    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    /// `Q(f, f)` on a block of cells (velocity-major layout: `f[v * cells +
    /// cell]`), with the conservation correction applied per cell.
    pub fn apply(&self, f: &[f64], q: &mut [f64], cells: usize) {
        q.fill(0.0);
        self.accumulate_bilinear(f, f, q, cells, 1.0);
        self.conserve(q, cells);
    }

    /// Raw bilinear form without the conservation correction:
    /// `q += scale * (gain(F at v') gain(G at v1') - F G)` symmetrized.
    pub fn apply_bilinear(&self, f: &[f64], g: &[f64], q: &mut [f64], cells: usize) {
        q.fill(0.0);
        self.accumulate_bilinear(f, g, q, cells, 0.5);
        // symmetric part: swap the roles
        self.accumulate_bilinear(g, f, q, cells, 0.5);
        self.conserve(q, cells);
    }

    fn accumulate_bilinear(&self, f: &[f64], g: &[f64], q: &mut [f64], cells: usize, s: f64) {
        for row in &self.rows {
            let n_st = row.n_st as usize;
            let fa = &f[row.a as usize * cells..row.a as usize * cells + cells];
            let gb = &g[row.b as usize * cells..row.b as usize * cells + cells];
            // gains: F at a', G at b'
            for cell in 0..cells {
                let mut gain_a = 0.0;
                let mut gain_b = 0.0;
                for k in 0..n_st {
                    gain_a += row.ga_w[k] * f[row.ga_idx[k] as usize * cells + cell];
                    gain_b += row.gb_w[k] * g[row.gb_idx[k] as usize * cells + cell];
                }
                let term = s * row.kernel * (gain_a * gain_b - fa[cell] * gb[cell]);
                q[row.a as usize * cells + cell] += term;
                q[row.b as usize * cells + cell] += term;
            }
        }
    }

    /// Projects each cell's output onto the orthogonal complement of the
    /// collision invariants {1, v, |v|^2}.
    pub fn conserve(&self, q: &mut [f64], cells: usize) {
        let m = self.grid.count();
        for inv in &self.invariants {
            for cell in 0..cells {
                let mut dot = 0.0;
                for v in 0..m {
                    dot += inv[v] * q[v * cells + cell];
                }
                for v in 0..m {
                    q[v * cells + cell] -= dot * inv[v];
                }
            }
        }
    }

    /// Max discrete moment residual of q (mass, momentum, energy) over the
    /// block; diagnostics for the conservation tests.
    pub fn moment_residual(&self, q: &[f64], cells: usize) -> f64 {
        let m = self.grid.count();
        let mut worst = 0.0f64;
        for cell in 0..cells {
            for kind in 0..(D + 2) {
                let mut s = 0.0;
                let mut scale = 0.0;
                for v in 0..m {
                    let c = self.grid.center(v);
                    let psi = match kind {
                        0 => 1.0,
                        k if k <= D => c[k - 1],
                        _ => norm_sq(&c),
                    };
                    s += psi * q[v * cells + cell];
                    scale += psi.abs() * q[v * cells + cell].abs();
                }
                let rel = if scale > 0.0 { s.abs() / scale } else { 0.0 };
                worst = worst.max(rel);
            }
        }
        worst
    }
}

/// Gram-Schmidt over the discrete invariants {1, v_1..v_D, |v|^2}.
fn orthonormal_invariants<const D: usize>(grid: &VelocityGrid<D>) -> Vec<Vec<f64>> {
    let m = grid.count();
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for kind in 0..(D + 2) {
        let mut v: Vec<f64> = (0..m)
            .map(|i| {
                let c = grid.center(i);
                match kind {
                    0 => 1.0,
                    k if k <= D => c[k - 1],
                    _ => norm_sq(&c),
                }
            })
            .collect();
        for prev in &basis {
            let dot: f64 = v.iter().zip(prev.iter()).map(|(a, b)| a * b).sum();
            for (x, p) in v.iter_mut().zip(prev.iter()) {
                *x -= dot * p;
            }
        }
        let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            for x in &mut v {
                *x /= norm;
            }
            basis.push(v);
        }
    }
    basis
}

/// Quadrature directions over the half sphere with uniform weights summing
/// to half the sphere measure.
fn half_sphere<const D: usize>(n: usize) -> Vec<([f64; D], f64)> {
    let mut out = Vec::new();
    match D {
        2 => {
            // angles in [0, pi)
            let w = std::f64::consts::PI / n as f64;
            for i in 0..n {
                let th = (i as f64 + 0.5) * w;
                let mut omega = [0.0; D];
                omega[0] = th.cos();
                omega[1] = th.sin();
                out.push((omega, w));
            }
        }
        3 => {
            // product midpoint in (cos theta, phi) over the upper hemisphere
            let nc = n.max(2);
            let w = (1.0 / nc as f64) * (2.0 * std::f64::consts::PI / nc as f64);
            for i in 0..nc {
                let mu = (i as f64 + 0.5) / nc as f64; // cos theta in (0,1)
                let s = (1.0 - mu * mu).sqrt();
                for j in 0..nc {
                    let phi = (j as f64 + 0.5) * 2.0 * std::f64::consts::PI / nc as f64;
                    let mut omega = [0.0; D];
                    omega[0] = s * phi.cos();
                    omega[1] = s * phi.sin();
                    omega[2] = mu;
                    out.push((omega, w));
                }
            }
        }
        _ => unreachable!("d in {{2,3}}"),
    }
    out
}
