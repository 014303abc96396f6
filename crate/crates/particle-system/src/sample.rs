//! Grand-canonical initial sampling: particle number Poisson with mean
//! `alpha * eps^-(d-1)`, states i.i.d. from `n_0`, whole configurations
//! redrawn until non-overlapping. Exact in law for the target density; the
//! partition function never needs evaluating.

use crate::{Configuration, Error, Particle, Result};
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use std::sync::Arc;
use torus_core::TorusVec;

type DensityFn<const D: usize> = dyn Fn(&[f64; D], &[f64; D]) -> f64 + Send + Sync;

/// An initial one-particle density `n_0(x, v)` on `T^d x [-V, V]^d`,
/// validated to integrate to 1 (within 1e-6, by midpoint quadrature) at
/// construction.
#[derive(Clone)]
pub struct InitialDensity<const D: usize> {
    f: Arc<DensityFn<D>>,
    v_max: f64,
    sup: f64,
}

impl<const D: usize> std::fmt::Debug for InitialDensity<D> {
    fn fmt(&self, fm: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        fm.debug_struct("InitialDensity")
            .field("v_max", &self.v_max)
            .field("sup", &self.sup)
            .finish()
    }
}

impl<const D: usize> InitialDensity<D> {
    /// Validates and wraps a density handle. `x_pts`/`v_pts` set the
    /// per-axis midpoint quadrature resolution for the unit-mass check.
    pub fn new<F>(f: F, v_max: f64, x_pts: usize, v_pts: usize) -> Result<Self>
    where
        F: Fn(&[f64; D], &[f64; D]) -> f64 + Send + Sync + 'static,
    {
        let f: Arc<DensityFn<D>> = Arc::new(f);
        let (mass, sup) = quadrature_mass_and_sup(f.as_ref(), v_max, x_pts, v_pts);
        if !(mass.is_finite() && (mass - 1.0).abs() <= 1e-6) {
            return Err(Error::BadDensity(format!(
                "density integrates to {mass:.9} on T^d x [-{v_max},{v_max}]^d, expected 1 +- 1e-6"
            )));
        }
        if !(sup.is_finite() && sup > 0.0) {
            return Err(Error::BadDensity("density has no positive finite sup".into()));
        }
        Ok(Self { f, v_max, sup })
    }

    /// The standard spatially uniform Maxwellian with unit temperature.
    pub fn standard_maxwellian(v_max: f64) -> Result<Self> {
        let norm = (2.0 * std::f64::consts::PI).powf(D as f64 / 2.0);
        Self::new(
            move |_x: &[f64; D], v: &[f64; D]| {
                (-torus_core::norm_sq(v) / 2.0).exp() / norm
            },
            v_max,
            4,
            if D == 2 { 64 } else { 32 },
        )
    }

    pub fn eval(&self, x: &[f64; D], v: &[f64; D]) -> f64 {
        (self.f)(x, v)
    }

    pub fn v_max(&self) -> f64 {
        self.v_max
    }

    /// One accept-reject draw from `n_0` against the uniform proposal on
    /// `T^d x [-V, V]^d`.
    fn draw<R: Rng>(&self, rng: &mut R) -> (TorusVec<D>, [f64; D]) {
        // Headroom over the probed sup guards against grid under-estimation.
        let bound = self.sup * 1.05;
        loop {
            let mut xc = [0.0; D];
            let mut v = [0.0; D];
            for c in xc.iter_mut() {
                *c = rng.random::<f64>();
            }
            for c in v.iter_mut() {
                *c = (rng.random::<f64>() * 2.0 - 1.0) * self.v_max;
            }
            if torus_core::norm(&v) > self.v_max {
                continue; // velocity truncation |v| <= V_max
            }
            let x = TorusVec::new(xc);
            let accept = (self.f)(x.coords(), &v) / bound;
            if rng.random::<f64>() < accept {
                return (x, v);
            }
        }
    }
}

fn quadrature_mass_and_sup<const D: usize>(
    f: &DensityFn<D>,
    v_max: f64,
    x_pts: usize,
    v_pts: usize,
) -> (f64, f64) {
    let dx = 1.0 / x_pts as f64;
    let dv = 2.0 * v_max / v_pts as f64;
    let cell = dx.powi(D as i32) * dv.powi(D as i32);
    let mut mass = 0.0;
    let mut sup = 0.0f64;
    let total = x_pts.pow(D as u32) * v_pts.pow(D as u32);
    let mut idx = vec![0usize; 2 * D];
    for _ in 0..total {
        let mut x = [0.0; D];
        let mut v = [0.0; D];
        for k in 0..D {
            x[k] = (idx[k] as f64 + 0.5) * dx;
            v[k] = -v_max + (idx[D + k] as f64 + 0.5) * dv;
        }
        let val = f(&x, &v);
        mass += val;
        sup = sup.max(val);
        // odometer increment
        for k in 0..2 * D {
            let limit = if k < D { x_pts } else { v_pts };
            idx[k] += 1;
            if idx[k] < limit {
                break;
            }
            idx[k] = 0;
        }
    }
    (mass * cell, sup)
}

/// Grand-canonical ensemble parameters under Boltzmann-Grad scaling.
#[derive(Debug, Clone)]
pub struct EnsembleParams<const D: usize> {
    /// Collision rate `alpha`; the expected particle number is
    /// `alpha * epsilon^-(d-1)`.
    pub alpha: f64,
    pub epsilon: f64,
    pub n0: InitialDensity<D>,
}

/// Draws one non-overlapping configuration from the grand-canonical law.
///
/// Candidate count from the Poisson law with mean `alpha eps^-(d-1)`,
/// particles i.i.d. from `n_0`, whole configurations redrawn until the
/// non-overlap indicator is satisfied.
pub fn sample_grand_canonical<const D: usize, R: Rng>(
    params: &EnsembleParams<D>,
    rng: &mut R,
) -> Result<Configuration<D>> {
    let mean = params.alpha * params.epsilon.powi(-(D as i32 - 1));
    if mean > 1e6 {
        return Err(Error::TooManyParticles(mean));
    }
    let eps = params.epsilon;
    const MAX_ATTEMPTS: usize = 10_000;
    for attempt in 1..=MAX_ATTEMPTS {
        let n = if mean == 0.0 {
            0
        } else {
            Poisson::new(mean).expect("positive mean").sample(rng) as usize
        };
        let mut particles = Vec::with_capacity(n);
        for id in 0..n {
            let (x, v) = params.n0.draw(rng);
            particles.push(Particle::new(id as u32, x, v));
        }
        let cfg = Configuration::new(eps, particles);
        if cfg.check_non_overlap().is_ok() {
            // Rejection guarantees the indicator; distance is >= eps exactly,
            // not merely >= eps - tol.
            if cfg.len() < 2 || cfg.min_pair_distance() >= eps {
                return Ok(cfg);
            }
        }
        let _ = attempt;
    }
    Err(Error::DensityTooHigh(MAX_ATTEMPTS))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn zero_mean_gives_empty_configuration() {
        let n0 = InitialDensity::<2>::standard_maxwellian(6.0).unwrap();
        let params = EnsembleParams {
            alpha: 0.0,
            epsilon: 0.01,
            n0,
        };
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let cfg = sample_grand_canonical(&params, &mut rng).unwrap();
        assert!(cfg.is_empty());
    }

    #[test]
    fn sampled_pairs_respect_hard_core() {
        let n0 = InitialDensity::<2>::standard_maxwellian(6.0).unwrap();
        let params = EnsembleParams {
            alpha: 0.3,
            epsilon: 0.01,
            n0,
        };
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        for _ in 0..50 {
            let cfg = sample_grand_canonical(&params, &mut rng).unwrap();
            if cfg.len() >= 2 {
                assert!(cfg.min_pair_distance() >= params.epsilon);
            }
        }
    }

    #[test]
    fn boltzmann_grad_scaling_mean() {
        // E[N] * eps^(d-1) within 3 standard errors of alpha.
        let n0 = InitialDensity::<2>::standard_maxwellian(6.0).unwrap();
        let alpha = 0.05;
        let epsilon = 1e-3;
        let params = EnsembleParams {
            alpha,
            epsilon,
            n0,
        };
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let draws = 2_000;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..draws {
            let n = sample_grand_canonical(&params, &mut rng).unwrap().len() as f64;
            sum += n;
            sum_sq += n * n;
        }
        let mean_n = sum / draws as f64;
        let var_n = sum_sq / draws as f64 - mean_n * mean_n;
        let se = (var_n / draws as f64).sqrt() * epsilon; // SE of N * eps^(d-1)
        let observed = mean_n * epsilon;
        assert!(
            (observed - alpha).abs() <= 3.0 * se,
            "observed {observed}, alpha {alpha}, 3se {}",
            3.0 * se
        );
    }

    #[test]
    fn non_unit_density_rejected() {
        let r = InitialDensity::<2>::new(|_, _| 1.0, 6.0, 4, 16);
        assert!(matches!(r, Err(Error::BadDensity(_))));
    }

    #[test]
    fn desk_scale_guard() {
        let n0 = InitialDensity::<2>::standard_maxwellian(6.0).unwrap();
        let params = EnsembleParams {
            alpha: 100.0,
            epsilon: 1e-6,
            n0,
        };
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        assert!(matches!(
            sample_grand_canonical(&params, &mut rng),
            Err(Error::TooManyParticles(_))
        ));
    }
}
