//! Empirical macroscopic observables and binned correlation-function
//! estimators over collections of independent runs.

use crate::{CollisionHistory, Error, Result};
use std::sync::Arc;
use torus_core::norm_sq;

/// Euler-scaled observables, or the Navier-Stokes-Fourier variant where the
/// density observable subtracts the test-function mean and both density and
/// velocity are rescaled by `1/delta`.
#[derive(Debug, Clone, Copy)]
pub enum ObservableMode {
    Euler,
    Nsf { delta: f64 },
}

/// A spatial test function together with its mean over the torus (needed by
/// the NSF-mode density observable).
#[derive(Clone)]
pub struct TestFunction<const D: usize> {
    pub eval: Arc<dyn Fn(&[f64; D]) -> f64 + Send + Sync>,
    pub mean: f64,
}

impl<const D: usize> TestFunction<D> {
    pub fn constant_one() -> Self {
        Self {
            eval: Arc::new(|_| 1.0),
            mean: 1.0,
        }
    }
}

/// The empirical triple `(rho_em, u_em, T_em)` weighted by a test function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observables<const D: usize> {
    pub rho: f64,
    pub u: [f64; D],
    /// `(1/N) sum psi(x_j) (|v_j|^2 - d)/d` over the retained particles
    /// (Euler normalization in both modes).
    pub temperature: f64,
}

/// Evaluates the empirical observables of a history at time `t` with the
/// velocity cutoff `|v_j(t)| <= cutoff`.
pub fn empirical_observables<const D: usize>(
    history: &CollisionHistory<D>,
    t: f64,
    psi: &TestFunction<D>,
    cutoff: f64,
    mode: ObservableMode,
) -> Result<Observables<D>> {
    let state = history.state_at(t)?;
    if state.is_empty() {
        return Err(Error::EmptyConfiguration);
    }
    let n = state.len() as f64;
    let mut rho = 0.0;
    let mut u = [0.0; D];
    let mut temp = 0.0;
    let d = D as f64;
    for p in &state.particles {
        if norm_sq(&p.v) > cutoff * cutoff {
            continue;
        }
        let w = (psi.eval)(p.position_at(t).coords());
        rho += w;
        for k in 0..D {
            u[k] += w * p.v[k];
        }
        temp += w * (norm_sq(&p.v) - d) / d;
    }
    rho /= n;
    for c in u.iter_mut() {
        *c /= n;
    }
    temp /= n;
    match mode {
        ObservableMode::Euler => Ok(Observables {
            rho,
            u,
            temperature: temp,
        }),
        ObservableMode::Nsf { delta } => {
            let mut u_nsf = u;
            for c in u_nsf.iter_mut() {
                *c /= delta;
            }
            Ok(Observables {
                rho: (rho - psi.mean) / delta,
                u: u_nsf,
                temperature: temp,
            })
        }
    }
}

/// Uniform phase-space bins over `[0,1)^d x [-v_max, v_max]^d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseGrid<const D: usize> {
    pub x_bins: usize,
    pub v_bins: usize,
    pub v_max: f64,
}

impl<const D: usize> PhaseGrid<D> {
    pub fn cell_count(&self) -> usize {
        self.x_bins.pow(D as u32) * self.v_bins.pow(D as u32)
    }

    pub fn cell_volume(&self) -> f64 {
        let dx = 1.0 / self.x_bins as f64;
        let dv = 2.0 * self.v_max / self.v_bins as f64;
        dx.powi(D as i32) * dv.powi(D as i32)
    }

    /// Flat index for a phase point; `None` when a velocity coordinate lies
    /// outside `[-v_max, v_max)`.
    pub fn index(&self, x: &[f64; D], v: &[f64; D]) -> Option<usize> {
        let mut idx = 0usize;
        for k in 0..D {
            let b = (x[k] * self.x_bins as f64) as usize;
            idx = idx * self.x_bins + b.min(self.x_bins - 1);
        }
        for k in 0..D {
            let t = (v[k] + self.v_max) / (2.0 * self.v_max);
            if !(0.0..1.0).contains(&t) {
                return None;
            }
            idx = idx * self.v_bins + ((t * self.v_bins as f64) as usize).min(self.v_bins - 1);
        }
        Some(idx)
    }

    /// Center coordinates of a flat cell index.
    pub fn cell_center(&self, mut idx: usize) -> ([f64; D], [f64; D]) {
        let mut digits = [0usize; 8];
        let total = 2 * D;
        for k in (0..total).rev() {
            let base = if k < D { self.x_bins } else { self.v_bins };
            digits[k] = idx % base;
            idx /= base;
        }
        let mut x = [0.0; D];
        let mut v = [0.0; D];
        for k in 0..D {
            x[k] = (digits[k] as f64 + 0.5) / self.x_bins as f64;
            v[k] = -self.v_max + (digits[D + k] as f64 + 0.5) * 2.0 * self.v_max / self.v_bins as f64;
        }
        (x, v)
    }
}

/// A binned phase-space density (values are densities per unit phase volume,
/// not masses).
#[derive(Debug, Clone)]
pub struct BinnedDensity<const D: usize> {
    pub grid: PhaseGrid<D>,
    pub values: Vec<f64>,
}

impl<const D: usize> BinnedDensity<D> {
    pub fn zeros(grid: PhaseGrid<D>) -> Self {
        Self {
            values: vec![0.0; grid.cell_count()],
            grid,
        }
    }

    /// Total integral over phase space.
    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume()
    }

    /// L1 distance to another density on the same grid.
    pub fn l1_distance(&self, other: &Self) -> f64 {
        assert_eq!(self.grid, other.grid);
        self.values
            .iter()
            .zip(other.values.iter())
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            * self.grid.cell_volume()
    }

    /// L1 distance to a continuum density, evaluated at cell centers.
    pub fn l1_distance_to<F>(&self, f: F) -> f64
    where
        F: Fn(&[f64; D], &[f64; D]) -> f64,
    {
        let mut acc = 0.0;
        for (idx, val) in self.values.iter().enumerate() {
            let (x, v) = self.grid.cell_center(idx);
            acc += (val - f(&x, &v)).abs();
        }
        acc * self.grid.cell_volume()
    }
}

/// Histogram estimator of the one-particle correlation function `f_1` at
/// time `t` over independent runs.
///
/// Normalization: each particle contributes mass `eps^(d-1)/alpha` divided by
/// the run count, so the total integral is close to
/// `E[N] eps^(d-1)/alpha ~ 1`.
pub fn estimate_f1<const D: usize>(
    histories: &[CollisionHistory<D>],
    t: f64,
    grid: PhaseGrid<D>,
    alpha: f64,
) -> Result<BinnedDensity<D>> {
    if histories.is_empty() || grid.cell_count() == 0 {
        return Err(Error::EmptyConfiguration);
    }
    let mut out = BinnedDensity::zeros(grid);
    let eps = histories[0].initial.epsilon;
    let weight =
        eps.powi(D as i32 - 1) / alpha / (histories.len() as f64 * grid.cell_volume());
    for h in histories {
        let state = h.state_at(t)?;
        for p in &state.particles {
            if let Some(idx) = grid.index(p.position_at(t).coords(), &p.v) {
                out.values[idx] += weight;
            }
        }
    }
    Ok(out)
}

/// Coarse pair histogram estimating the two-particle correlation function
/// `f_2` (used only by the variance cross-check mirroring the empirical
/// concentration argument).
#[derive(Debug, Clone)]
pub struct BinnedPairDensity<const D: usize> {
    pub grid: PhaseGrid<D>,
    pub values: Vec<f64>,
}

impl<const D: usize> BinnedPairDensity<D> {
    pub fn mass(&self) -> f64 {
        let v = self.grid.cell_volume();
        self.values.iter().sum::<f64>() * v * v
    }
}

pub fn estimate_f2<const D: usize>(
    histories: &[CollisionHistory<D>],
    t: f64,
    grid: PhaseGrid<D>,
    alpha: f64,
) -> Result<BinnedPairDensity<D>> {
    if histories.is_empty() || grid.cell_count() == 0 {
        return Err(Error::EmptyConfiguration);
    }
    let cells = grid.cell_count();
    let mut values = vec![0.0; cells * cells];
    let eps = histories[0].initial.epsilon;
    let per_particle = eps.powi(D as i32 - 1) / alpha;
    let vol = grid.cell_volume();
    let weight = per_particle * per_particle / (histories.len() as f64 * vol * vol);
    for h in histories {
        let state = h.state_at(t)?;
        let idxs: Vec<Option<usize>> = state
            .particles
            .iter()
            .map(|p| grid.index(p.position_at(t).coords(), &p.v))
            .collect();
        for (i, a) in idxs.iter().enumerate() {
            for (j, b) in idxs.iter().enumerate() {
                if i == j {
                    continue;
                }
                if let (Some(a), Some(b)) = (a, b) {
                    values[a * cells + b] += weight;
                }
            }
        }
    }
    Ok(BinnedPairDensity { grid, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{evolve, Configuration, Particle};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;
    use torus_core::TorusVec;

    fn single_particle_history(x: [f64; 2], v: [f64; 2]) -> CollisionHistory<2> {
        let cfg = Configuration::new(0.01, vec![Particle::new(0, TorusVec::new(x), v)]);
        evolve(&cfg, 1.0, 10).unwrap().1
    }

    #[test]
    fn constant_psi_euler_density_is_one() {
        let h = single_particle_history([0.3, 0.4], [0.5, -0.2]);
        let obs = empirical_observables(
            &h,
            0.5,
            &TestFunction::constant_one(),
            10.0,
            ObservableMode::Euler,
        )
        .unwrap();
        assert_eq!(obs.rho, 1.0);
    }

    #[test]
    fn single_particle_velocity_observable() {
        // psi a bump at the particle position: u_em = psi(x0) v / N
        let h = single_particle_history([0.25, 0.75], [0.4, 0.1]);
        let psi = TestFunction::<2> {
            eval: Arc::new(|x: &[f64; 2]| {
                let dx = x[0] - 0.45;
                let dy = x[1] - 0.80;
                (-(dx * dx + dy * dy) * 100.0).exp()
            }),
            mean: 0.0312, // irrelevant in Euler mode
        };
        let obs =
            empirical_observables(&h, 0.5, &psi, 10.0, ObservableMode::Euler).unwrap();
        let x_t = [0.45, 0.80];
        let w = (psi.eval)(&x_t);
        assert!((obs.u[0] - w * 0.4).abs() < 1e-12);
        assert!((obs.u[1] - w * 0.1).abs() < 1e-12);
    }

    #[test]
    fn maxwellian_temperature_observable_centered() {
        // Standard-Gaussian velocities: E[(|v|^2 - d)/d] = 0, SE = sqrt(2/d)/sqrt(N).
        use rand_distr::Distribution;
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        let normal = rand_distr::StandardNormal;
        let n = 4000;
        let mut particles = Vec::new();
        for id in 0..n {
            let x = TorusVec::new([rng.random(), rng.random()]);
            let v: [f64; 2] = [normal.sample(&mut rng), normal.sample(&mut rng)];
            particles.push(Particle::new(id, x, v));
        }
        // epsilon tiny so the initial draw is effectively overlap-free
        let cfg = Configuration::new(1e-6, particles);
        let hist = CollisionHistory {
            initial: cfg,
            events: vec![],
            horizon: 0.0,
        };
        let obs = empirical_observables(
            &hist,
            0.0,
            &TestFunction::constant_one(),
            100.0,
            ObservableMode::Euler,
        )
        .unwrap();
        assert!(obs.temperature.abs() < 3.0 / (n as f64).sqrt());
    }

    #[test]
    fn empty_configuration_is_an_error() {
        let cfg = Configuration::<2>::new(0.01, vec![]);
        let hist = CollisionHistory {
            initial: cfg,
            events: vec![],
            horizon: 1.0,
        };
        assert!(matches!(
            empirical_observables(
                &hist,
                0.0,
                &TestFunction::constant_one(),
                1.0,
                ObservableMode::Euler
            ),
            Err(Error::EmptyConfiguration)
        ));
    }

    #[test]
    fn one_particle_histogram_mass() {
        // Single run, single particle: total mass eps^(d-1)/alpha.
        let h = single_particle_history([0.3, 0.4], [0.5, -0.2]);
        let grid = PhaseGrid {
            x_bins: 4,
            v_bins: 4,
            v_max: 2.0,
        };
        let alpha = 0.7;
        let f1 = estimate_f1(&[h], 0.2, grid, alpha).unwrap();
        let expected = 0.01f64.powi(1) / alpha;
        assert!((f1.mass() - expected).abs() < 1e-12);
        assert_eq!(f1.values.iter().filter(|v| **v > 0.0).count(), 1);
    }

    #[test]
    fn f1_at_time_zero_converges_to_n0() {
        // Law of large numbers against direct sampling from n_0.
        use crate::sample::{sample_grand_canonical, EnsembleParams, InitialDensity};
        let v_max = 6.0;
        let grid = PhaseGrid {
            x_bins: 2,
            v_bins: 6,
            v_max,
        };
        let alpha = 0.5;
        let epsilon = 0.01;
        let norm = 2.0 * std::f64::consts::PI;
        let n0_fn =
            move |_x: &[f64; 2], v: &[f64; 2]| (-norm_sq(v) / 2.0).exp() / norm;
        let mut rng = ChaCha12Rng::seed_from_u64(17);
        let mut errs = Vec::new();
        for runs in [40usize, 640] {
            let n0 = InitialDensity::<2>::new(n0_fn, v_max, 4, 64).unwrap();
            let params = EnsembleParams {
                alpha,
                epsilon,
                n0,
            };
            let histories: Vec<CollisionHistory<2>> = (0..runs)
                .map(|_| {
                    let cfg = sample_grand_canonical(&params, &mut rng).unwrap();
                    CollisionHistory {
                        initial: cfg,
                        events: vec![],
                        horizon: 0.0,
                    }
                })
                .collect();
            let f1 = estimate_f1(&histories, 0.0, grid, alpha).unwrap();
            errs.push(f1.l1_distance_to(n0_fn));
        }
        assert!(
            errs[1] < errs[0],
            "L1 error should decrease with run count: {errs:?}"
        );
    }

    #[test]
    fn forward_histogram_equals_reversed_initial_histogram() {
        // Time-reversal symmetry of the reflection law at the histogram level.
        let mut rng = ChaCha12Rng::seed_from_u64(23);
        let grid = PhaseGrid {
            x_bins: 3,
            v_bins: 4,
            v_max: 1.5,
        };
        let alpha = 1.0;
        let mut fwd_histories = Vec::new();
        let mut rev_histories = Vec::new();
        for _ in 0..20 {
            let mut particles: Vec<Particle<2>> = Vec::new();
            'place: while particles.len() < 6 {
                let x = TorusVec::new([rng.random(), rng.random()]);
                for p in &particles {
                    if p.base_x.torus_dist(&x) < 0.06 {
                        continue 'place;
                    }
                }
                let v = [rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5];
                particles.push(Particle::new(particles.len() as u32, x, v));
            }
            let cfg = Configuration::new(0.04, particles);
            let (mut end, hist) = evolve(&cfg, 1.0, 10_000).unwrap();
            fwd_histories.push(hist);
            end.reverse_velocities();
            end.time = 0.0;
            for p in &mut end.particles {
                p.base_t = 0.0;
            }
            rev_histories.push(CollisionHistory {
                initial: end,
                events: vec![],
                horizon: 0.0,
            });
        }
        let f_fwd = estimate_f1(&fwd_histories, 1.0, grid, alpha).unwrap();
        let f_rev = estimate_f1(&rev_histories, 0.0, grid, alpha).unwrap();
        // Bins are velocity-symmetric under v -> -v up to bin reflection;
        // compare against the reflected histogram.
        let mut reflected = BinnedDensity::zeros(grid);
        for idx in 0..grid.cell_count() {
            let (x, v) = grid.cell_center(idx);
            let neg = [-v[0], -v[1]];
            if let Some(j) = grid.index(&x, &neg) {
                reflected.values[j] = f_rev.values[idx];
            }
        }
        assert!(f_fwd.l1_distance(&reflected) < 1e-12);
    }
}
