//! Geometry of the unit torus `T^d = R^d/Z^d` for `d ∈ {2,3}`: canonical
//! representatives, the torus norm, minimum-image displacements and bounded
//! enumeration of periodic images.
//!
//! Everything here is pure value arithmetic; functions are safe to call
//! concurrently without coordination.

use thiserror::Error;

pub mod vec;

pub use vec::{dot, norm, norm_sq, sub};

#[derive(Debug, Error, PartialEq)]
pub enum TorusError {
    #[error("negative argument to image enumeration: v_max={v_max}, horizon={horizon}")]
    NegativeEnumerationInput { v_max: f64, horizon: f64 },
    #[error("image enumeration would produce {count} shifts (> {limit}); horizon too large")]
    TooManyImages { count: usize, limit: usize },
}

/// A point of `T^d` stored through its canonical representative: every
/// coordinate lies in `[0, 1)`.
///
/// Reduction is idempotent; constructing from an already reduced vector is
/// the identity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorusVec<const D: usize> {
    coords: [f64; D],
}

impl<const D: usize> TorusVec<D> {
    /// Reduces each coordinate into `[0, 1)` and wraps it.
    pub fn new(coords: [f64; D]) -> Self {
        let mut c = coords;
        for x in &mut c {
            *x -= x.floor();
            // `-1e-17f64.floor()` is -1 and the difference rounds to 1.0;
            // fold that single excluded endpoint back to 0.
            if *x >= 1.0 {
                *x = 0.0;
            }
        }
        Self { coords: c }
    }

    pub fn zero() -> Self {
        Self { coords: [0.0; D] }
    }

    pub fn coords(&self) -> &[f64; D] {
        &self.coords
    }

    /// Canonical representative of `self + v` (free transport by `v`).
    pub fn translate(&self, v: &[f64; D]) -> Self {
        let mut c = self.coords;
        for k in 0..D {
            c[k] += v[k];
        }
        Self::new(c)
    }

    /// Distance to the origin: `min { |x - m| : m ∈ Z^d }`.
    ///
    /// For reduced coordinates the minimum factorizes per component, so the
    /// result is `sqrt(Σ min(x_k, 1-x_k)²) ≤ sqrt(d)/2`.
    pub fn torus_norm(&self) -> f64 {
        let mut s = 0.0;
        for &x in &self.coords {
            let w = x.min(1.0 - x);
            s += w * w;
        }
        s.sqrt()
    }

    /// Torus distance between two points.
    pub fn torus_dist(&self, other: &Self) -> f64 {
        let mut s = 0.0;
        for k in 0..D {
            let d = (self.coords[k] - other.coords[k]).abs();
            let w = d.min(1.0 - d);
            s += w * w;
        }
        s.sqrt()
    }
}

/// An integer translation indexing a fundamental domain of `T^d` inside `R^d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ImageShift<const D: usize> {
    pub m: [i64; D],
}

impl<const D: usize> ImageShift<D> {
    pub fn zero() -> Self {
        Self { m: [0; D] }
    }

    pub fn norm_sq(&self) -> i64 {
        self.m.iter().map(|&x| x * x).sum()
    }

    pub fn as_f64(&self) -> [f64; D] {
        let mut out = [0.0; D];
        for k in 0..D {
            out[k] = self.m[k] as f64;
        }
        out
    }
}

/// Torus norm of an arbitrary (not necessarily reduced) difference vector.
pub fn torus_norm<const D: usize>(x: &[f64; D]) -> f64 {
    TorusVec::new(*x).torus_norm()
}

/// The Euclidean representative of `x1 - x2` of minimal norm.
///
/// When `torus_dist(x1, x2) < 1/2` the representative is unique. At ties the
/// shifts are scanned in (norm, lexicographic) order and the first strict
/// minimizer wins, so e.g. (0.75,0.25) - (0.25,0.75) maps to (0.5, -0.5).
pub fn min_image_displacement<const D: usize>(
    x1: &TorusVec<D>,
    x2: &TorusVec<D>,
) -> [f64; D] {
    let mut diff = [0.0; D];
    for k in 0..D {
        diff[k] = x1.coords[k] - x2.coords[k];
    }
    // diff components lie in (-1, 1): shifts in {-1, 0, 1}^d suffice.
    let mut best = diff;
    let mut best_norm = f64::INFINITY;
    for shift in shifts_in_box::<D>(1) {
        let mut cand = diff;
        for k in 0..D {
            cand[k] -= shift.m[k] as f64;
        }
        let n = norm_sq(&cand);
        if n < best_norm {
            best_norm = n;
            best = cand;
        }
    }
    best
}

/// All integer vectors in the box `{-radius..radius}^d`, sorted by norm then
/// lexicographically.
fn shifts_in_box<const D: usize>(radius: i64) -> Vec<ImageShift<D>> {
    let mut out = Vec::new();
    let mut m = [-radius; D];
    'outer: loop {
        out.push(ImageShift { m });
        for k in (0..D).rev() {
            if m[k] < radius {
                m[k] += 1;
                continue 'outer;
            }
            m[k] = -radius;
        }
        break;
    }
    out.sort_by_key(|s| (s.norm_sq(), s.m));
    out
}

pub const MAX_IMAGE_SHIFTS: usize = 10_000;

/// All image shifts a pair of trajectories with speeds `≤ v_max` can reach
/// within `horizon`: every `m` with `|m| ≤ 2·v_max·horizon + 2`, sorted by
/// norm then lexicographically.
pub fn enumerate_images<const D: usize>(
    v_max: f64,
    horizon: f64,
) -> Result<Vec<ImageShift<D>>, TorusError> {
    if v_max < 0.0 || horizon < 0.0 || !v_max.is_finite() || !horizon.is_finite() {
        return Err(TorusError::NegativeEnumerationInput { v_max, horizon });
    }
    let radius = 2.0 * v_max * horizon + 2.0;
    let r_int = radius.floor() as i64;
    let r2 = radius * radius;
    // Count before materializing: (2r+1)^d bounding box.
    let box_count = (2 * r_int + 1).pow(D as u32) as usize;
    if box_count > 8 * MAX_IMAGE_SHIFTS {
        return Err(TorusError::TooManyImages {
            count: box_count,
            limit: MAX_IMAGE_SHIFTS,
        });
    }
    let out: Vec<ImageShift<D>> = shifts_in_box::<D>(r_int)
        .into_iter()
        .filter(|s| (s.norm_sq() as f64) <= r2)
        .collect();
    if out.len() > MAX_IMAGE_SHIFTS {
        return Err(TorusError::TooManyImages {
            count: out.len(),
            limit: MAX_IMAGE_SHIFTS,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn torus_norm_frozen_values() {
        // wrap-around minimum
        let x = TorusVec::new([0.6, 0.0]);
        assert!((x.torus_norm() - 0.4).abs() < 1e-15);
        // corner of the fundamental cell
        let x = TorusVec::new([0.5, 0.5]);
        assert!((x.torus_norm() - 0.5f64.sqrt()).abs() < 1e-15);
        // identity
        assert_eq!(TorusVec::<2>::zero().torus_norm(), 0.0);
    }

    #[test]
    fn torus_norm_bounded_by_half_diagonal() {
        let x = TorusVec::new([0.5, 0.5, 0.5]);
        assert!(x.torus_norm() <= 3f64.sqrt() / 2.0 + 1e-15);
    }

    #[test]
    fn reduction_idempotent_on_negatives() {
        let x = TorusVec::new([-0.25, 1.75]);
        assert_eq!(x.coords(), &[0.75, 0.75]);
        let y = TorusVec::new(*x.coords());
        assert_eq!(x, y);
    }

    #[test]
    fn min_image_wrap() {
        let x1 = TorusVec::new([0.1, 0.0]);
        let x2 = TorusVec::new([0.9, 0.0]);
        let d = min_image_displacement(&x1, &x2);
        assert!((d[0] - 0.2).abs() < 1e-15);
        assert!(d[1].abs() < 1e-15);
    }

    #[test]
    fn min_image_identical_points() {
        let x = TorusVec::new([0.3, 0.7]);
        assert_eq!(min_image_displacement(&x, &x), [0.0, 0.0]);
    }

    #[test]
    fn min_image_tie_break() {
        // All four representatives of (0.5, -0.5) have norm sqrt(0.5); the
        // first minimizer in (norm, lex) shift order is m = (0,0).
        let x1 = TorusVec::new([0.75, 0.25]);
        let x2 = TorusVec::new([0.25, 0.75]);
        let d = min_image_displacement(&x1, &x2);
        assert_eq!(d, [0.5, -0.5]);
    }

    /// Independent oracle: brute-force count of lattice points in the closed
    /// disk/ball of the stated radius.
    fn lattice_ball_count(d: usize, radius: f64) -> usize {
        let r = radius.floor() as i64;
        let r2 = radius * radius;
        let range = -r..=r;
        let mut count = 0usize;
        match d {
            2 => {
                for a in range.clone() {
                    for b in range.clone() {
                        if ((a * a + b * b) as f64) <= r2 {
                            count += 1;
                        }
                    }
                }
            }
            3 => {
                for a in range.clone() {
                    for b in range.clone() {
                        for c in range.clone() {
                            if ((a * a + b * b + c * c) as f64) <= r2 {
                                count += 1;
                            }
                        }
                    }
                }
            }
            _ => unreachable!(),
        }
        count
    }

    #[test]
    fn enumerate_images_zero_speed_full_ball_of_radius_two() {
        let shifts = enumerate_images::<2>(0.0, 1.0).unwrap();
        assert_eq!(shifts.len(), lattice_ball_count(2, 2.0));
        assert_eq!(shifts.len(), 13);
        assert_eq!(shifts[0], ImageShift::zero());
        let shifts3 = enumerate_images::<3>(0.0, 1.0).unwrap();
        assert_eq!(shifts3.len(), lattice_ball_count(3, 2.0));
        assert_eq!(shifts3.len(), 33);
    }

    #[test]
    fn enumerate_images_radius_2p2() {
        // Oracle count of lattice points with |m| <= 2.2 in d=2. (The next
        // shell, norm sqrt(5) ≈ 2.236, is excluded.)
        let shifts = enumerate_images::<2>(0.1, 1.0).unwrap();
        assert_eq!(shifts.len(), lattice_ball_count(2, 2.2));
        assert_eq!(shifts.len(), 13);
    }

    #[test]
    fn enumerate_images_sorted_by_norm_then_lex() {
        let shifts = enumerate_images::<2>(1.0, 1.0).unwrap();
        for w in shifts.windows(2) {
            assert!((w[0].norm_sq(), w[0].m) < (w[1].norm_sq(), w[1].m));
        }
    }

    #[test]
    fn enumerate_images_rejects_negative_horizon() {
        assert!(matches!(
            enumerate_images::<2>(1.0, -1.0),
            Err(TorusError::NegativeEnumerationInput { .. })
        ));
    }

    #[test]
    fn enumerate_images_rejects_huge_products() {
        assert!(matches!(
            enumerate_images::<3>(100.0, 100.0),
            Err(TorusError::TooManyImages { .. })
        ));
    }

    proptest! {
        #[test]
        fn norm_symmetry(a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let x = TorusVec::new([a, b]);
            let neg = TorusVec::new([-a, -b]);
            prop_assert!((x.torus_norm() - neg.torus_norm()).abs() < 1e-12);
        }

        #[test]
        fn triangle_inequality(a in 0.0f64..1.0, b in 0.0f64..1.0,
                               c in 0.0f64..1.0, d in 0.0f64..1.0) {
            let x = TorusVec::new([a, b]);
            let y = TorusVec::new([c, d]);
            let sum = TorusVec::new([a + c, b + d]);
            prop_assert!(sum.torus_norm() <= x.torus_norm() + y.torus_norm() + 1e-12);
        }

        #[test]
        fn displacement_antisymmetry(a in 0.0f64..1.0, b in 0.0f64..1.0,
                                     c in 0.0f64..1.0, d in 0.0f64..1.0) {
            let x1 = TorusVec::new([a, b]);
            let x2 = TorusVec::new([c, d]);
            if x1.torus_dist(&x2) < 0.5 - 1e-9 {
                let fwd = min_image_displacement(&x1, &x2);
                let bwd = min_image_displacement(&x2, &x1);
                for k in 0..2 {
                    prop_assert!((fwd[k] + bwd[k]).abs() < 1e-12);
                }
            }
        }

        #[test]
        fn displacement_norm_matches_torus_dist(a in 0.0f64..1.0, b in 0.0f64..1.0,
                                                c in 0.0f64..1.0, d in 0.0f64..1.0) {
            let x1 = TorusVec::new([a, b]);
            let x2 = TorusVec::new([c, d]);
            let disp = min_image_displacement(&x1, &x2);
            prop_assert!((norm(&disp) - x1.torus_dist(&x2)).abs() < 1e-12);
        }
    }
}
