//! Small fixed-dimension vector helpers shared by the simulation crates.

#[inline]
pub fn dot<const D: usize>(a: &[f64; D], b: &[f64; D]) -> f64 {
    let mut s = 0.0;
    for k in 0..D {
        s += a[k] * b[k];
    }
    s
}

#[inline]
pub fn norm_sq<const D: usize>(a: &[f64; D]) -> f64 {
    dot(a, a)
}

#[inline]
pub fn norm<const D: usize>(a: &[f64; D]) -> f64 {
    norm_sq(a).sqrt()
}

#[inline]
pub fn sub<const D: usize>(a: &[f64; D], b: &[f64; D]) -> [f64; D] {
    let mut out = [0.0; D];
    for k in 0..D {
        out[k] = a[k] - b[k];
    }
    out
}

#[inline]
pub fn add<const D: usize>(a: &[f64; D], b: &[f64; D]) -> [f64; D] {
    let mut out = [0.0; D];
    for k in 0..D {
        out[k] = a[k] + b[k];
    }
    out
}

#[inline]
pub fn scale<const D: usize>(a: &[f64; D], s: f64) -> [f64; D] {
    let mut out = [0.0; D];
    for k in 0..D {
        out[k] = a[k] * s;
    }
    out
}

/// `a + s*b` in one pass.
#[inline]
pub fn axpy<const D: usize>(a: &[f64; D], s: f64, b: &[f64; D]) -> [f64; D] {
    let mut out = [0.0; D];
    for k in 0..D {
        out[k] = a[k] + s * b[k];
    }
    out
}
