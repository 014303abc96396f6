//! Event-driven hard-sphere dynamics on the unit torus: the elastic collision
//! law and flow map, grand-canonical initial sampling under Boltzmann-Grad
//! scaling, and empirical estimators for correlation functions and
//! macroscopic observables.
//!
//! A single trajectory evolves strictly sequentially; independent
//! trajectories (different seeds) share no mutable state.

use torus_core::vec::{axpy, norm, norm_sq, scale, sub};
use torus_core::{enumerate_images, ImageShift, TorusVec};

mod dump;
mod observables;
mod sample;

pub use dump::{parse_history, write_history};
pub use observables::{
    empirical_observables,
    estimate_f1, estimate_f2, BinnedDensity, BinnedPairDensity, ObservableMode, Observables,
    PhaseGrid, TestFunction,
};
pub use sample::{sample_grand_canonical, EnsembleParams, InitialDensity};

use thiserror::Error;

/// Torus distance below `epsilon - OVERLAP_TOL` counts as overlap.
pub const OVERLAP_TOL: f64 = 1e-9;
/// Contact verification tolerance in `apply_collision`.
pub const CONTACT_TOL: f64 = 1e-9;
/// Default runaway guard for `evolve`.
pub const DEFAULT_MAX_EVENTS: usize = 1_000_000;

#[derive(Debug, Error)]
pub enum Error {
    #[error("particles {0} and {1} overlap: torus distance {2:.3e} < epsilon")]
    Overlap(u32, u32, f64),
    #[error("event pair ({0}, {1}) not in contact at event time (distance {2:.3e}, epsilon {3:.3e})")]
    NotInContact(u32, u32, f64, f64),
    #[error("event time {0} precedes configuration time {1}")]
    EventInPast(f64, f64),
    #[error("more than {0} collision events before the horizon; epsilon too large or pathological input")]
    RunawayEvents(usize),
    #[error("empty configuration has no observables")]
    EmptyConfiguration,
    #[error("unknown particle id {0} in event")]
    UnknownParticle(u32),
    #[error("initial density rejected: {0}")]
    BadDensity(String),
    #[error("rejection rate above 99.9% over {0} attempts; density too high for whole-configuration rejection")]
    DensityTooHigh(usize),
    #[error("desk-scale guard: alpha * epsilon^-(d-1) = {0:.3e} exceeds 1e6")]
    TooManyParticles(f64),
    #[error(transparent)]
    Torus(#[from] torus_core::TorusError),
    #[error("dump parse error at line {0}: {1}")]
    Parse(usize, String),
}

pub type Result<T> = std::result::Result<T, Error>;

/// A particle state `z = (x, v)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasePoint<const D: usize> {
    pub x: TorusVec<D>,
    pub v: [f64; D],
}

/// One hard sphere. The position is stored at `base_t` (the time of the last
/// collision that touched the particle, or the initial time); free transport
/// is evaluated lazily as `base_x + v (t - base_t)`. Evaluating through the
/// base point keeps the flow map exactly associative: splitting a run at any
/// event-free time reproduces the unsplit run bit for bit.
#[derive(Debug, Clone, Copy)]
pub struct Particle<const D: usize> {
    pub id: u32,
    pub base_x: TorusVec<D>,
    pub base_t: f64,
    pub v: [f64; D],
}

impl<const D: usize> Particle<D> {
    pub fn new(id: u32, x: TorusVec<D>, v: [f64; D]) -> Self {
        Self {
            id,
            base_x: x,
            base_t: 0.0,
            v,
        }
    }

    /// Canonical (reduced) position at absolute time `t`.
    pub fn position_at(&self, t: f64) -> TorusVec<D> {
        self.base_x.translate(&scale(&self.v, t - self.base_t))
    }

    pub fn phase_at(&self, t: f64) -> PhasePoint<D> {
        PhasePoint {
            x: self.position_at(t),
            v: self.v,
        }
    }
}

/// N-particle state with diameter `epsilon` at a given time.
#[derive(Debug, Clone)]
pub struct Configuration<const D: usize> {
    pub epsilon: f64,
    pub time: f64,
    pub particles: Vec<Particle<D>>,
}

impl<const D: usize> Configuration<D> {
    pub fn new(epsilon: f64, particles: Vec<Particle<D>>) -> Self {
        Self {
            epsilon,
            time: 0.0,
            particles,
        }
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn max_speed(&self) -> f64 {
        self.particles
            .iter()
            .map(|p| norm(&p.v))
            .fold(0.0, f64::max)
    }

    /// Reduced positions at the configuration's current time.
    pub fn positions(&self) -> Vec<TorusVec<D>> {
        self.particles
            .iter()
            .map(|p| p.position_at(self.time))
            .collect()
    }

    /// Minimum pairwise torus distance at the current time (`inf` if < 2 particles).
    pub fn min_pair_distance(&self) -> f64 {
        let xs = self.positions();
        let mut best = f64::INFINITY;
        for i in 0..xs.len() {
            for j in (i + 1)..xs.len() {
                best = best.min(xs[i].torus_dist(&xs[j]));
            }
        }
        best
    }

    /// Checks the non-overlap invariant at the current time.
    pub fn check_non_overlap(&self) -> Result<()> {
        let xs = self.positions();
        for i in 0..xs.len() {
            for j in (i + 1)..xs.len() {
                let d = xs[i].torus_dist(&xs[j]);
                if d < self.epsilon - OVERLAP_TOL {
                    return Err(Error::Overlap(
                        self.particles[i].id,
                        self.particles[j].id,
                        d,
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn total_momentum(&self) -> [f64; D] {
        let mut p = [0.0; D];
        for part in &self.particles {
            for k in 0..D {
                p[k] += part.v[k];
            }
        }
        p
    }

    pub fn kinetic_energy(&self) -> f64 {
        self.particles.iter().map(|p| norm_sq(&p.v)).sum::<f64>() / 2.0
    }

    /// Negates every velocity in place, re-basing positions at the current
    /// time (used by the time-reversal checks).
    pub fn reverse_velocities(&mut self) {
        let t = self.time;
        for p in &mut self.particles {
            p.base_x = p.position_at(t);
            p.base_t = t;
            for c in p.v.iter_mut() {
                *c = -*c;
            }
        }
    }
}

/// One elastic collision: time, pair, impact direction, periodic image, and
/// the incoming/outgoing velocities of the pair.
#[derive(Debug, Clone, Copy)]
pub struct CollisionEvent<const D: usize> {
    pub t: f64,
    pub pair: (u32, u32),
    pub omega: [f64; D],
    pub shift: ImageShift<D>,
    pub v_in: ([f64; D], [f64; D]),
    pub v_out: ([f64; D], [f64; D]),
}

/// Time-ordered record of collision events together with the initial state.
#[derive(Debug, Clone)]
pub struct CollisionHistory<const D: usize> {
    pub initial: Configuration<D>,
    pub events: Vec<CollisionEvent<D>>,
    pub horizon: f64,
}

impl<const D: usize> CollisionHistory<D> {
    /// Replays the recorded events to reconstruct the state at time `t`
    /// (`0 <= t <= horizon`).
    pub fn state_at(&self, t: f64) -> Result<Configuration<D>> {
        if t < self.initial.time || t > self.horizon {
            return Err(Error::EventInPast(t, self.initial.time));
        }
        let mut cfg = self.initial.clone();
        for ev in &self.events {
            if ev.t > t {
                break;
            }
            apply_collision(&mut cfg, ev)?;
        }
        cfg.time = t;
        Ok(cfg)
    }
}

/// Specular reflection of the pair velocities along `omega`:
/// `v_i' = v_i - ((v_i - v_j)·ω) ω`, `v_j' = v_j + ((v_i - v_j)·ω) ω`.
///
/// The same product `((v_i - v_j)·ω) ω` is subtracted on one side and added
/// on the other, so momentum is conserved exactly in floating point.
pub fn reflect<const D: usize>(
    v_i: &[f64; D],
    v_j: &[f64; D],
    omega: &[f64; D],
) -> ([f64; D], [f64; D]) {
    let p = torus_core::dot(&sub(v_i, v_j), omega);
    let mut out_i = *v_i;
    let mut out_j = *v_j;
    for k in 0..D {
        let q = p * omega[k];
        out_i[k] -= q;
        out_j[k] += q;
    }
    (out_i, out_j)
}

/// Finds the earliest collision event strictly after `cfg.time` and at or
/// before the absolute time `horizon`.
///
/// Per-pair quadratic root solve over the enumerated periodic images; the
/// incoming condition `(v_i - v_j)·ω ≤ 0` selects the approaching root. Ties
/// in time break toward the smaller particle-id pair.
pub fn next_collision<const D: usize>(
    cfg: &Configuration<D>,
    horizon: f64,
) -> Result<Option<CollisionEvent<D>>> {
    cfg.check_non_overlap()?;
    if cfg.len() < 2 || horizon <= cfg.time {
        return Ok(None);
    }
    let images = enumerate_images::<D>(cfg.max_speed(), horizon)?;
    let eps2 = cfg.epsilon * cfg.epsilon;

    let mut best: Option<(f64, usize, usize, ImageShift<D>)> = None;
    for i in 0..cfg.len() {
        for j in (i + 1)..cfg.len() {
            let pi = &cfg.particles[i];
            let pj = &cfg.particles[j];
            let dv = sub(&pi.v, &pj.v);
            let a = norm_sq(&dv);
            if a == 0.0 {
                continue; // no relative motion
            }
            // Positions as exact linear expressions in absolute time:
            // x_i(t) - x_j(t) = d0 + t dv with d0 independent of cfg.time.
            let d0 = {
                let qi = axpy(pi.base_x.coords(), -pi.base_t, &pi.v);
                let qj = axpy(pj.base_x.coords(), -pj.base_t, &pj.v);
                sub(&qi, &qj)
            };
            for img in &images {
                let mut dm = d0;
                for k in 0..D {
                    dm[k] -= img.m[k] as f64;
                }
                let b = 2.0 * torus_core::dot(&dm, &dv);
                let c = norm_sq(&dm) - eps2;
                let disc = b * b - 4.0 * a * c;
                if disc <= 0.0 {
                    continue;
                }
                let t_hit = (-b - disc.sqrt()) / (2.0 * a);
                if t_hit <= cfg.time || t_hit > horizon {
                    continue;
                }
                let key = (t_hit, cfg.particles[i].id, cfg.particles[j].id);
                let better = match &best {
                    None => true,
                    Some((bt, bi, bj, _)) => {
                        key < (*bt, cfg.particles[*bi].id, cfg.particles[*bj].id)
                    }
                };
                if better {
                    best = Some((t_hit, i, j, *img));
                }
            }
        }
    }

    Ok(best.map(|(t, i, j, img)| {
        let pi = &cfg.particles[i];
        let pj = &cfg.particles[j];
        let dv = sub(&pi.v, &pj.v);
        let qi = axpy(pi.base_x.coords(), -pi.base_t, &pi.v);
        let qj = axpy(pj.base_x.coords(), -pj.base_t, &pj.v);
        let mut w = sub(&qi, &qj);
        for k in 0..D {
            w[k] += t * dv[k] - img.m[k] as f64;
        }
        let wn = norm(&w);
        let omega = scale(&w, 1.0 / wn);
        let (vi_out, vj_out) = reflect(&pi.v, &pj.v, &omega);
        CollisionEvent {
            t,
            pair: (pi.id, pj.id),
            omega,
            shift: img,
            v_in: (pi.v, pj.v),
            v_out: (vi_out, vj_out),
        }
    }))
}

/// Advances every particle to `ev.t` by free transport and replaces the
/// velocities of the event pair by the reflected ones. Only the two
/// colliding particles are re-based.
pub fn apply_collision<const D: usize>(
    cfg: &mut Configuration<D>,
    ev: &CollisionEvent<D>,
) -> Result<()> {
    if ev.t < cfg.time {
        return Err(Error::EventInPast(ev.t, cfg.time));
    }
    let i = cfg
        .particles
        .iter()
        .position(|p| p.id == ev.pair.0)
        .ok_or(Error::UnknownParticle(ev.pair.0))?;
    let j = cfg
        .particles
        .iter()
        .position(|p| p.id == ev.pair.1)
        .ok_or(Error::UnknownParticle(ev.pair.1))?;

    let xi = cfg.particles[i].position_at(ev.t);
    let xj = cfg.particles[j].position_at(ev.t);
    let dist = xi.torus_dist(&xj);
    if (dist - cfg.epsilon).abs() > CONTACT_TOL {
        return Err(Error::NotInContact(ev.pair.0, ev.pair.1, dist, cfg.epsilon));
    }

    cfg.particles[i].base_x = xi;
    cfg.particles[i].base_t = ev.t;
    cfg.particles[i].v = ev.v_out.0;
    cfg.particles[j].base_x = xj;
    cfg.particles[j].base_t = ev.t;
    cfg.particles[j].v = ev.v_out.1;
    cfg.time = ev.t;
    Ok(())
}

/// An admissible contact root of a pair of free trajectories: time, impact
/// direction, and the periodic image it occurs in.
#[derive(Debug, Clone, Copy)]
pub struct ContactRoot<const D: usize> {
    pub t: f64,
    pub omega: [f64; D],
    pub shift: ImageShift<D>,
}

/// All contact roots of two freely transported phase points within the
/// absolute-time window, over the given periodic images, selecting the
/// approaching root per image (the incoming condition `(v1 - v2)·ω ≤ 0`).
///
/// This is the single source of truth for collision indicators: the Monte
/// Carlo integrals evaluate their `1_col` factors through it.
pub fn contact_roots<const D: usize>(
    z1: &PhasePoint<D>,
    z2: &PhasePoint<D>,
    epsilon: f64,
    window: (f64, f64),
    images: &[ImageShift<D>],
) -> Vec<ContactRoot<D>> {
    let dv = sub(&z1.v, &z2.v);
    let a = norm_sq(&dv);
    let mut out = Vec::new();
    if a == 0.0 {
        return out;
    }
    let d0 = sub(z1.x.coords(), z2.x.coords());
    let eps2 = epsilon * epsilon;
    for img in images {
        let mut dm = d0;
        for k in 0..D {
            dm[k] -= img.m[k] as f64;
        }
        let b = 2.0 * torus_core::dot(&dm, &dv);
        let c = norm_sq(&dm) - eps2;
        let disc = b * b - 4.0 * a * c;
        if disc <= 0.0 {
            continue;
        }
        let t = (-b - disc.sqrt()) / (2.0 * a);
        if t < window.0 || t > window.1 {
            continue;
        }
        let w = axpy(&dm, t, &dv);
        let wn = norm(&w);
        if wn == 0.0 {
            continue;
        }
        out.push(ContactRoot {
            t,
            omega: scale(&w, 1.0 / wn),
            shift: *img,
        });
    }
    out.sort_by(|p, q| p.t.total_cmp(&q.t));
    out
}

/// Runs the hard-sphere flow map to `t_final`, returning the final state and
/// the full collision history.
pub fn evolve<const D: usize>(
    cfg: &Configuration<D>,
    t_final: f64,
    max_events: usize,
) -> Result<(Configuration<D>, CollisionHistory<D>)> {
    let initial = cfg.clone();
    let mut state = cfg.clone();
    let mut events = Vec::new();
    while let Some(ev) = next_collision(&state, t_final)? {
        apply_collision(&mut state, &ev)?;
        events.push(ev);
        if events.len() > max_events {
            return Err(Error::RunawayEvents(max_events));
        }
    }
    state.time = t_final;
    Ok((
        state,
        CollisionHistory {
            initial,
            events,
            horizon: t_final,
        },
    ))
}
