//! Small dense vector/matrix helpers for runtime dimension `d`.
//!
//! Everything operates on `&[f64]` slices of length `d` (vectors) or
//! `d*d` (row-major matrices); `d` is small (2 or 3 in practice) so the
//! plain loops optimize well.

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    norm_sq(a).sqrt()
}

#[inline]
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// `out = a - b`.
#[inline]
pub fn sub(a: &[f64], b: &[f64], out: &mut [f64]) {
    for i in 0..out.len() {
        out[i] = a[i] - b[i];
    }
}

/// `out += s * a`.
#[inline]
pub fn axpy(s: f64, a: &[f64], out: &mut [f64]) {
    for i in 0..out.len() {
        out[i] += s * a[i];
    }
}

/// Row-major `d×d` matrix-vector product `out = m a`.
#[inline]
pub fn matvec(d: usize, m: &[f64], a: &[f64], out: &mut [f64]) {
    for r in 0..d {
        out[r] = dot(&m[r * d..(r + 1) * d], a);
    }
}

/// `m += s * (a ⊗ b)` for a row-major `d×d` matrix.
#[inline]
pub fn add_outer(d: usize, s: f64, a: &[f64], b: &[f64], m: &mut [f64]) {
    for r in 0..d {
        let sa = s * a[r];
        for c in 0..d {
            m[r * d + c] += sa * b[c];
        }
    }
}
