//! Scaling-exponent fits: weighted least squares of log J against log eps
//! over a family of specs.

use crate::{estimate_j, EstimateResult, IntegralSpec, Result};

#[derive(Debug, Clone)]
pub struct ScalingFit {
    pub slope: f64,
    pub slope_std_error: f64,
    pub intercept: f64,
    pub points: Vec<(f64, EstimateResult)>,
}

#[derive(Debug, Clone)]
pub enum ScalingVerdict {
    Fitted(ScalingFit),
    /// Some estimate missed the relative-precision requirement; data, not
    /// failure.
    Inconclusive {
        reason: String,
        points: Vec<(f64, EstimateResult)>,
    },
}

/// Runs the estimator across the epsilon family and fits the log-log slope.
/// Requires at least 4 epsilon values spanning at least two decades and a
/// per-point relative standard error of at most 10%.
pub fn scaling_exponent<const D: usize, F>(
    make_spec: F,
    eps_list: &[f64],
    n_samples: u64,
    seed: u64,
) -> Result<ScalingVerdict>
where
    F: Fn(f64) -> IntegralSpec<D>,
{
    assert!(eps_list.len() >= 4, "need at least 4 epsilon values");
    let lo = eps_list.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = eps_list.iter().copied().fold(0.0f64, f64::max);
    assert!(hi / lo >= 99.0, "epsilon family must span two decades");

    let mut points = Vec::new();
    for (i, &eps) in eps_list.iter().enumerate() {
        let spec = make_spec(eps);
        let r = estimate_j(&spec, n_samples, seed.wrapping_add(i as u64))?;
        points.push((eps, r));
    }
    for (eps, r) in &points {
        if r.value <= 0.0 || r.degenerate.is_some() {
            return Ok(ScalingVerdict::Inconclusive {
                reason: format!("estimate degenerated at eps = {eps}"),
                points,
            });
        }
        if r.std_error / r.value > 0.10 {
            return Ok(ScalingVerdict::Inconclusive {
                reason: format!(
                    "relative std error {:.1}% above 10% at eps = {eps}",
                    100.0 * r.std_error / r.value
                ),
                points,
            });
        }
    }
    // weighted least squares on (log eps, log J); var(log J) ~ (sigma/J)^2
    let mut sw = 0.0;
    let mut swx = 0.0;
    let mut swy = 0.0;
    let mut swxx = 0.0;
    let mut swxy = 0.0;
    for (eps, r) in &points {
        let x = eps.ln();
        let y = r.value.ln();
        let var = (r.std_error / r.value).powi(2).max(1e-12);
        let w = 1.0 / var;
        sw += w;
        swx += w * x;
        swy += w * y;
        swxx += w * x * x;
        swxy += w * x * y;
    }
    let denom = sw * swxx - swx * swx;
    let slope = (sw * swxy - swx * swy) / denom;
    let intercept = (swy - slope * swx) / sw;
    let slope_var = sw / denom;
    Ok(ScalingVerdict::Fitted(ScalingFit {
        slope,
        slope_std_error: slope_var.sqrt(),
        intercept,
        points,
    }))
}
