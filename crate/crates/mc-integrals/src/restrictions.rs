//! Numeric evaluation of the symbolic restriction records against a sampled
//! assignment of edge values and collision times.

use crate::{IntegralSpec, Result};
use molecule::{AtomId, Bound, EdgeId, Restriction, Target};
use particle_system::PhasePoint;
use std::collections::BTreeMap;
use torus_core::vec::{norm, sub};

/// Edge values and atom times produced by one Monte Carlo sample.
#[derive(Debug, Clone, Default)]
pub struct Assignment<const D: usize> {
    edges: BTreeMap<EdgeId, PhasePoint<D>>,
    times: BTreeMap<AtomId, f64>,
}

impl<const D: usize> Assignment<D> {
    pub fn new() -> Self {
        Self {
            edges: BTreeMap::new(),
            times: BTreeMap::new(),
        }
    }

    pub fn set_edge(&mut self, e: EdgeId, z: PhasePoint<D>) {
        self.edges.insert(e, z);
    }

    /// Keeps an existing value (bond edges are written by the first atom
    /// that produces them).
    pub fn set_edge_keep(&mut self, e: EdgeId, z: PhasePoint<D>) {
        self.edges.entry(e).or_insert(z);
    }

    pub fn set_time(&mut self, a: AtomId, t: f64) {
        self.times.insert(a, t);
    }

    pub fn edge(&self, e: EdgeId) -> Option<&PhasePoint<D>> {
        self.edges.get(&e)
    }

    pub fn time(&self, a: AtomId) -> Option<f64> {
        self.times.get(&a).copied()
    }
}

fn bound_value<const D: usize>(b: &Bound, spec: &IntegralSpec<D>) -> f64 {
    b.value(spec.epsilon, &|name| {
        spec.params.get(name).copied().unwrap_or(1.0)
    })
}

/// The product of restriction indicators `Q` for one sample (0 or 1; a
/// missing referenced value fails closed).
pub fn evaluate_restrictions<const D: usize>(
    spec: &IntegralSpec<D>,
    a: &Assignment<D>,
) -> Result<f64> {
    let eps = spec.epsilon;
    let _ = eps;
    let resolve = |t: &Target| -> Option<PhasePoint<D>> {
        match t {
            Target::Edge(e) => a.edge(*e).copied().or_else(|| spec.fixed_ends.get(e).copied()),
            Target::External(i) => spec.externals.get(*i).copied(),
        }
    };
    let value_of = |e: EdgeId| -> Option<PhasePoint<D>> {
        a.edge(e).copied().or_else(|| spec.fixed_ends.get(&e).copied())
    };
    for r in &spec.molecule.restrictions {
        let ok = match r {
            Restriction::TimeSepAtLeast { a: x, b: y, bound } => {
                match (a.time(*x), a.time(*y)) {
                    (Some(tx), Some(ty)) => (tx - ty).abs() >= bound_value(bound, spec),
                    _ => false,
                }
            }
            Restriction::TimeSepAtMost { a: x, b: y, bound } => {
                match (a.time(*x), a.time(*y)) {
                    (Some(tx), Some(ty)) => (tx - ty).abs() <= bound_value(bound, spec),
                    _ => false,
                }
            }
            Restriction::LongBond { a: x, b: y } => match (a.time(*x), a.time(*y)) {
                (Some(tx), Some(ty)) => {
                    (tx - ty).abs() >= molecule::restriction::eps_star(spec.epsilon)
                }
                _ => false,
            },
            Restriction::PhaseProxAtMost { e1, to, bound } => {
                match (value_of(*e1), resolve(to)) {
                    (Some(z1), Some(z2)) => {
                        let dx = z1.x.torus_dist(&z2.x);
                        let dv = norm(&sub(&z1.v, &z2.v));
                        dx.min(dv) <= bound_value(bound, spec)
                    }
                    _ => false,
                }
            }
            Restriction::PhaseSepAtLeast { e1, to, bound } => {
                match (value_of(*e1), resolve(to)) {
                    (Some(z1), Some(z2)) => {
                        let dx = z1.x.torus_dist(&z2.x);
                        let dv = norm(&sub(&z1.v, &z2.v));
                        dx.max(dv) >= bound_value(bound, spec)
                    }
                    _ => false,
                }
            }
            Restriction::PhaseProxBothAtMost { e1, to, bound } => {
                match (value_of(*e1), resolve(to)) {
                    (Some(z1), Some(z2)) => {
                        let dx = z1.x.torus_dist(&z2.x);
                        let dv = norm(&sub(&z1.v, &z2.v));
                        dx.max(dv) <= bound_value(bound, spec)
                    }
                    _ => false,
                }
            }
            Restriction::VelProxAtMost { e1, to, bound } => {
                match (value_of(*e1), resolve(to)) {
                    (Some(z1), Some(z2)) => {
                        norm(&sub(&z1.v, &z2.v)) <= bound_value(bound, spec)
                    }
                    _ => false,
                }
            }
            Restriction::VelSepAtLeast { e1, to, bound } => {
                match (value_of(*e1), resolve(to)) {
                    (Some(z1), Some(z2)) => {
                        norm(&sub(&z1.v, &z2.v)) >= bound_value(bound, spec)
                    }
                    _ => false,
                }
            }
            Restriction::DoubleRoot { e1, e2 } => match (value_of(*e1), value_of(*e2)) {
                (Some(z1), Some(z2)) => {
                    let images = spec.images()?;
                    let roots = particle_system::contact_roots(
                        &z1,
                        &z2,
                        spec.epsilon,
                        (-spec.t_range, spec.t_range),
                        &images,
                    );
                    roots.len() >= 2
                }
                _ => false,
            },
            Restriction::LineSepAtLeast { e1, to, bound } => {
                match (value_of(*e1), resolve(to)) {
                    (Some(z1), Some(z2)) => {
                        line_inf_distance(&z1, &z2, spec)? >= bound_value(bound, spec)
                    }
                    _ => false,
                }
            }
            Restriction::LineProxAtMost { e1, to, bound } => {
                match (value_of(*e1), resolve(to)) {
                    (Some(z1), Some(z2)) => {
                        line_inf_distance(&z1, &z2, spec)? <= bound_value(bound, spec)
                    }
                    _ => false,
                }
            }
            Restriction::StrongDegeneracy {
                e, e_prime, ..
            } => match (value_of(*e), value_of(*e_prime)) {
                (Some(z1), Some(z2)) => {
                    let b = spec.epsilon.powf(1.0 - 1.0 / (8.0 * D as f64));
                    z1.x.torus_dist(&z2.x) <= b && norm(&sub(&z1.v, &z2.v)) <= b
                }
                _ => false,
            },
        };
        if !ok {
            return Ok(0.0);
        }
    }
    Ok(1.0)
}

/// `inf_{|t| <= t_range} |x1 - x2 + t (v1 - v2)|_T`, minimized in closed
/// form per periodic image.
fn line_inf_distance<const D: usize>(
    z1: &PhasePoint<D>,
    z2: &PhasePoint<D>,
    spec: &IntegralSpec<D>,
) -> Result<f64> {
    let images = spec.images()?;
    let dx0 = sub(z1.x.coords(), z2.x.coords());
    let dv = sub(&z1.v, &z2.v);
    let a = torus_core::norm_sq(&dv);
    let mut best = f64::INFINITY;
    for img in &images {
        let mut dm = dx0;
        for k in 0..D {
            dm[k] -= img.m[k] as f64;
        }
        let t_star = if a == 0.0 {
            0.0
        } else {
            (-torus_core::dot(&dm, &dv) / a).clamp(-spec.t_range, spec.t_range)
        };
        let p = torus_core::vec::axpy(&dm, t_star, &dv);
        best = best.min(norm(&p));
    }
    Ok(best)
}
