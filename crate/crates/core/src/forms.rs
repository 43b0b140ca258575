//! The geometric `d×d` coefficient matrices of the flows, evaluated
//! pointwise from `(a, b, c) = (x_ρ, y, y_ρ)`.
//!
//! The curve diffusion coefficient splits as `F_cd = F1 + F2` with `F1`
//! a multiple of the identity and `F2` exactly antisymmetric; elastic
//! flow adds `F3`, again a multiple of the identity. The semi-implicit
//! scheme relies on the antisymmetry of `F2` (its quadratic form
//! vanishes identically), so `f2_matrix` is assembled from explicitly
//! skew outer-product differences.

use crate::la;

/// Dense `d×d` coefficient matrix (row-major).
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl CoeffMatrix {
    fn scalar(dim: usize, s: f64) -> CoeffMatrix {
        let mut data = vec![0.0; dim * dim];
        for i in 0..dim {
            data[i * dim + i] = s;
        }
        CoeffMatrix { dim, data }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn entry(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.dim + c]
    }

    /// Row-major entries.
    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// `out = M v`.
    pub fn apply(&self, v: &[f64], out: &mut [f64]) {
        la::matvec(self.dim, &self.data, v, out);
    }
}

/// Scalar of `F1(a,b,c) = (2 a·c + |a|²|b|²) Id`.
#[inline]
pub fn f1_scalar(a: &[f64], b: &[f64], c: &[f64]) -> f64 {
    2.0 * la::dot(a, c) + la::norm_sq(a) * la::norm_sq(b)
}

/// `F1(a,b,c) = (2 a·c + |a|²|b|²) Id`.
pub fn f1_matrix(a: &[f64], b: &[f64], c: &[f64]) -> CoeffMatrix {
    CoeffMatrix::scalar(a.len(), f1_scalar(a, b, c))
}

/// Write `F2(a,b,c) = 2(c⊗a − a⊗c) + 2(a·b)(a⊗b − b⊗a)` into `out`
/// (row-major, length `d*d`).
pub fn f2_into(a: &[f64], b: &[f64], c: &[f64], out: &mut [f64]) {
    let d = a.len();
    out.fill(0.0);
    let ab2 = 2.0 * la::dot(a, b);
    for r in 0..d {
        for col in 0..d {
            out[r * d + col] = 2.0 * (c[r] * a[col] - a[r] * c[col])
                + ab2 * (a[r] * b[col] - b[r] * a[col]);
        }
    }
}

/// `F2(a,b,c) = 2(c⊗a − a⊗c) + 2(a·b)(a⊗b − b⊗a)`; exactly antisymmetric.
pub fn f2_matrix(a: &[f64], b: &[f64], c: &[f64]) -> CoeffMatrix {
    let d = a.len();
    let mut m = CoeffMatrix::scalar(d, 0.0);
    f2_into(a, b, c, &mut m.data);
    m
}

/// `out = F2(a,b,c) v` without forming the matrix:
/// `2[(a·v)c − (c·v)a] + 2(a·b)[(b·v)a − (a·v)b]`.
pub fn f2_apply(a: &[f64], b: &[f64], c: &[f64], v: &[f64], out: &mut [f64]) {
    let av = la::dot(a, v);
    let cv = la::dot(c, v);
    let ab = la::dot(a, b);
    let bv = la::dot(b, v);
    for i in 0..out.len() {
        out[i] = 2.0 * (c[i] * av - a[i] * cv) + 2.0 * ab * (a[i] * bv - b[i] * av);
    }
}

/// Scalar of `F3(a,b) = (−½(|a|²|b|² − (a·b)²) + λ|a|²) Id`.
#[inline]
pub fn f3_scalar(a: &[f64], b: &[f64], lambda: f64) -> f64 {
    let ab = la::dot(a, b);
    -0.5 * (la::norm_sq(a) * la::norm_sq(b) - ab * ab) + lambda * la::norm_sq(a)
}

/// `F3(a,b) = (−½(|a|²|b|² − (a·b)²) + λ|a|²) Id`.
pub fn f3_matrix(a: &[f64], b: &[f64], lambda: f64) -> CoeffMatrix {
    CoeffMatrix::scalar(a.len(), f3_scalar(a, b, lambda))
}
