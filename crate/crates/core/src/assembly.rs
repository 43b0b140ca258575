//! Element-wise exact assembly of the mass, stiffness, coupling and
//! load terms of the fully discrete schemes.
//!
//! Every integrand here is piecewise polynomial of degree at most 4,
//! so the 3-point Gauss rule integrates it exactly; there is no mass
//! lumping except in [`lumped_load`], which realizes the interpolated
//! forcing term. Elements are visited in ascending order so assembly
//! is bitwise reproducible.

use crate::forms;
use crate::la;
use crate::linsolve::BlockCyclicTridiag;
use crate::mesh::{quad::GAUSS3, NodalField, Partition};

/// Scalar cyclic tridiagonal matrix acting identically on every
/// component of a stacked nodal vector (a `dJ×dJ` operator with
/// `s·Id_d` blocks).
#[derive(Debug, Clone)]
pub struct ScalarCyclicTridiag {
    /// `sub[j] = A[j, j−1 mod J]`, etc.
    pub sub: Vec<f64>,
    pub diag: Vec<f64>,
    pub sup: Vec<f64>,
}

impl ScalarCyclicTridiag {
    fn zeros(j: usize) -> ScalarCyclicTridiag {
        ScalarCyclicTridiag {
            sub: vec![0.0; j],
            diag: vec![0.0; j],
            sup: vec![0.0; j],
        }
    }

    pub fn node_count(&self) -> usize {
        self.diag.len()
    }

    /// `out = A x` on a stacked nodal vector with `dim` components per node.
    pub fn apply(&self, dim: usize, x: &[f64], out: &mut [f64]) {
        let j = self.node_count();
        for k in 0..j {
            let km = if k == 0 { j - 1 } else { k - 1 };
            let kp = if k + 1 == j { 0 } else { k + 1 };
            for c in 0..dim {
                out[k * dim + c] = self.sub[k] * x[km * dim + c]
                    + self.diag[k] * x[k * dim + c]
                    + self.sup[k] * x[kp * dim + c];
            }
        }
    }

    /// Quadratic form `xᵀ A y` over stacked nodal vectors.
    pub fn quadratic(&self, dim: usize, x: &[f64], y: &[f64]) -> f64 {
        let mut ay = vec![0.0; y.len()];
        self.apply(dim, y, &mut ay);
        la::dot(x, &ay)
    }
}

/// `dJ×dJ` operator with general `d×d` blocks in a cyclic tridiagonal
/// pattern (the realization of the implicit coupling form).
#[derive(Debug, Clone)]
pub struct BlockOperator {
    pub dim: usize,
    /// Flattened `d×d` row-major blocks, one per node.
    pub sub: Vec<f64>,
    pub diag: Vec<f64>,
    pub sup: Vec<f64>,
}

impl BlockOperator {
    fn zeros(j: usize, dim: usize) -> BlockOperator {
        BlockOperator {
            dim,
            sub: vec![0.0; j * dim * dim],
            diag: vec![0.0; j * dim * dim],
            sup: vec![0.0; j * dim * dim],
        }
    }

    pub fn node_count(&self) -> usize {
        self.diag.len() / (self.dim * self.dim)
    }

    #[inline]
    pub fn block<'a>(&self, band: &'a [f64], j: usize) -> &'a [f64] {
        let d2 = self.dim * self.dim;
        &band[j * d2..(j + 1) * d2]
    }

    /// `out = A x`.
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        let j = self.node_count();
        let d = self.dim;
        out.fill(0.0);
        for k in 0..j {
            let km = if k == 0 { j - 1 } else { k - 1 };
            let kp = if k + 1 == j { 0 } else { k + 1 };
            for r in 0..d {
                let mut acc = 0.0;
                for c in 0..d {
                    acc += self.block(&self.sub, k)[r * d + c] * x[km * d + c]
                        + self.block(&self.diag, k)[r * d + c] * x[k * d + c]
                        + self.block(&self.sup, k)[r * d + c] * x[kp * d + c];
                }
                out[k * d + r] = acc;
            }
        }
    }

    pub fn quadratic(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut ay = vec![0.0; y.len()];
        self.apply(y, &mut ay);
        la::dot(x, &ay)
    }
}

/// Per-scalar-component mass matrix weighted by `|x_ρ|²`:
/// entries `∫ χ_j χ_k |x_ρ|² dρ`.
pub fn weighted_mass(x: &NodalField) -> ScalarCyclicTridiag {
    let j = x.node_count();
    let mut m = ScalarCyclicTridiag::zeros(j);
    let mut der = vec![0.0; x.dim()];
    for e in 0..j {
        let (n0, n1) = x.element_nodes(e);
        let h = x.partition().size(e);
        x.element_derivative(e, &mut der);
        let w = la::norm_sq(&der);
        // ∫ N0² = h/3, ∫ N0 N1 = h/6 against the constant weight
        m.diag[n0] += w * h / 3.0;
        m.diag[n1] += w * h / 3.0;
        m.sup[n0] += w * h / 6.0;
        m.sub[n1] += w * h / 6.0;
    }
    m
}

/// Unweighted mass matrix `∫ χ_j χ_k dρ`.
pub fn mass(p: &Partition) -> ScalarCyclicTridiag {
    let j = p.element_count();
    let mut m = ScalarCyclicTridiag::zeros(j);
    for e in 0..j {
        let h = p.size(e);
        let n0 = e;
        let n1 = if e + 1 == j { 0 } else { e + 1 };
        m.diag[n0] += h / 3.0;
        m.diag[n1] += h / 3.0;
        m.sup[n0] += h / 6.0;
        m.sub[n1] += h / 6.0;
    }
    m
}

/// Stiffness matrix `∫ χ'_j χ'_k dρ`.
pub fn stiffness(p: &Partition) -> ScalarCyclicTridiag {
    let j = p.element_count();
    let mut m = ScalarCyclicTridiag::zeros(j);
    for e in 0..j {
        let h = p.size(e);
        let n0 = e;
        let n1 = if e + 1 == j { 0 } else { e + 1 };
        m.diag[n0] += 1.0 / h;
        m.diag[n1] += 1.0 / h;
        m.sup[n0] -= 1.0 / h;
        m.sub[n1] -= 1.0 / h;
    }
    m
}

/// Implicit coupling operator `B = B(x, y)` of the curve diffusion
/// scheme, defined against a trial field `Y` and test field `χ` by
///
/// ```text
/// χᵀ B Y = 2∫(Y_ρ·x_ρ)(y·χ) + ∫|x_ρ|²(y·Y)(y·χ) + ∫ F2(x_ρ, y, y_ρ) Y·χ dρ.
/// ```
///
/// Together with the stiffness matrix it forms the nonnegative
/// quadratic form `Yᵀ(S + B)Y = ∫ |Y_ρ + (y·Y) x_ρ|² dρ` that drives
/// the unconditional stability of the scheme.
pub fn cd_implicit_coupling(x: &NodalField, y: &NodalField) -> BlockOperator {
    let j = x.node_count();
    let d = x.dim();
    assert_eq!(y.dim(), d);
    let mut op = BlockOperator::zeros(j, d);
    let d2 = d * d;

    let mut a = vec![0.0; d]; // x_ρ
    let mut c = vec![0.0; d]; // y_ρ
    let mut yg = vec![0.0; d];
    let mut f2 = vec![0.0; d2];
    let mut blk = vec![0.0; 4 * d2]; // (test node, trial node) ∈ {0,1}²

    for e in 0..j {
        let (n0, n1) = x.element_nodes(e);
        let h = x.partition().size(e);
        x.element_derivative(e, &mut a);
        y.element_derivative(e, &mut c);
        let asq = la::norm_sq(&a);
        let (y0, y1) = (y.node(n0), y.node(n1));

        blk.fill(0.0);
        for &(xi, wq) in &GAUSS3 {
            let w = wq * h;
            for i in 0..d {
                yg[i] = (1.0 - xi) * y0[i] + xi * y1[i];
            }
            forms::f2_into(&a, &yg, &c, &mut f2);
            let nb = [1.0 - xi, xi];
            let ndb = [-1.0 / h, 1.0 / h];
            for st in 0..2 {
                for tt in 0..2 {
                    let b = &mut blk[(st * 2 + tt) * d2..(st * 2 + tt + 1) * d2];
                    let w_grad = w * 2.0 * nb[st] * ndb[tt];
                    let w_mass = w * nb[st] * nb[tt];
                    for r in 0..d {
                        for cc in 0..d {
                            b[r * d + cc] += w_grad * yg[r] * a[cc]
                                + w_mass * (asq * yg[r] * yg[cc] + f2[r * d + cc]);
                        }
                    }
                }
            }
        }
        // scatter the 2×2 node-block contributions
        for (slot, dst) in [
            (0usize, (n0, 0)), // (test n0, trial n0) → diag[n0]
            (1, (n0, 1)),      // (test n0, trial n1) → sup[n0]
            (2, (n1, 2)),      // (test n1, trial n0) → sub[n1]
            (3, (n1, 3)),      // (test n1, trial n1) → diag[n1]
        ] {
            let src = &blk[slot * d2..(slot + 1) * d2];
            let (node, kind) = dst;
            let band = match kind {
                0 | 3 => &mut op.diag,
                1 => &mut op.sup,
                _ => &mut op.sub,
            };
            let tgt = &mut band[node * d2..(node + 1) * d2];
            for i in 0..d2 {
                tgt[i] += src[i];
            }
        }
    }
    op
}

/// Load vector of the explicit elastic term `∫ F3(x_ρ, y) y · χ dρ`.
pub fn f3_load(x: &NodalField, y: &NodalField, lambda: f64) -> Vec<f64> {
    let j = x.node_count();
    let d = x.dim();
    let mut load = vec![0.0; j * d];
    let mut a = vec![0.0; d];
    let mut yg = vec![0.0; d];
    for e in 0..j {
        let (n0, n1) = x.element_nodes(e);
        let h = x.partition().size(e);
        x.element_derivative(e, &mut a);
        let (y0, y1) = (y.node(n0), y.node(n1));
        for &(xi, wq) in &GAUSS3 {
            let w = wq * h;
            for i in 0..d {
                yg[i] = (1.0 - xi) * y0[i] + xi * y1[i];
            }
            let s = forms::f3_scalar(&a, &yg, lambda);
            let nb = [1.0 - xi, xi];
            for (which, node) in [(0usize, n0), (1, n1)] {
                let coeff = w * s * nb[which];
                la::axpy(coeff, &yg, &mut load[node * d..(node + 1) * d]);
            }
        }
    }
    load
}

/// Lumped load `∫ π^h[f·χ_j] dρ = f(q_j) (h_j + h_{j+1})/2` realizing
/// the interpolated forcing correction term.
pub fn lumped_load<F>(p: &Partition, dim: usize, f: F) -> Vec<f64>
where
    F: Fn(f64) -> Vec<f64>,
{
    let j = p.element_count();
    let mut load = vec![0.0; j * dim];
    for k in 0..j {
        let h_prev = if k == 0 { p.size(j - 1) } else { p.size(k - 1) };
        let weight = 0.5 * (h_prev + p.size(k));
        let v = f(p.node(k));
        assert_eq!(v.len(), dim);
        for c in 0..dim {
            load[k * dim + c] = weight * v[c];
        }
    }
    load
}

/// Lumped load from per-node samples (hot-loop variant of
/// [`lumped_load`]).
pub fn lumped_load_from_values(p: &Partition, dim: usize, values: &[f64]) -> Vec<f64> {
    let j = p.element_count();
    assert_eq!(values.len(), j * dim);
    let mut load = vec![0.0; j * dim];
    for k in 0..j {
        let h_prev = if k == 0 { p.size(j - 1) } else { p.size(k - 1) };
        let weight = 0.5 * (h_prev + p.size(k));
        for c in 0..dim {
            load[k * dim + c] = weight * values[k * dim + c];
        }
    }
    load
}

/// Assemble the coupled `2dJ` step matrix in node-major block
/// ordering: per node the `2d` unknowns `(x_j, y_j)`, rows
///
/// ```text
/// [ M_w      −Δt (S + B) ] [X]
/// [ S         M_w        ] [Y]
/// ```
///
/// with scalar matrices expanded to `s·Id_d` blocks.
pub fn coupled_step_matrix(
    mw: &ScalarCyclicTridiag,
    stiff: &ScalarCyclicTridiag,
    coupling: &BlockOperator,
    dt: f64,
) -> BlockCyclicTridiag {
    let j = mw.node_count();
    let d = coupling.dim;
    let s = 2 * d;
    let mut op = BlockCyclicTridiag::zeros(j, s);
    for k in 0..j {
        for (band_idx, (ms, ss)) in [
            (0usize, (mw.sub[k], stiff.sub[k])),
            (1, (mw.diag[k], stiff.diag[k])),
            (2, (mw.sup[k], stiff.sup[k])),
        ] {
            let bblk = match band_idx {
                0 => coupling.block(&coupling.sub, k),
                1 => coupling.block(&coupling.diag, k),
                _ => coupling.block(&coupling.sup, k),
            };
            let target = match band_idx {
                0 => op.sub_block_mut(k),
                1 => op.diag_block_mut(k),
                _ => op.sup_block_mut(k),
            };
            for r in 0..d {
                // x-row: M_w X − Δt(S + B) Y
                target[r * s + r] = ms;
                for c in 0..d {
                    target[r * s + d + c] = -dt * bblk[r * d + c];
                }
                target[r * s + d + r] += -dt * ss;
                // y-row: S X + M_w Y
                target[(d + r) * s + r] = ss;
                target[(d + r) * s + d + r] = ms;
            }
        }
    }
    op
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{self, interpolate};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn diamond() -> NodalField {
        let p = Partition::uniform(4).unwrap();
        NodalField::from_values(&p, 2, vec![1.0, 0.0, 0.0, 1.0, -1.0, 0.0, 0.0, -1.0])
    }

    fn random_field(rng: &mut ChaCha8Rng, p: &Arc<Partition>, d: usize) -> NodalField {
        let j = p.element_count();
        let values: Vec<f64> = (0..j * d).map(|_| rng.gen_range(-1.5..1.5)).collect();
        NodalField::from_values(p, d, values)
    }

    /// Adaptive Simpson quadrature on one element (the integrands are
    /// smooth inside an element).
    fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
        fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
            (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b))
        }
        fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
            let m = 0.5 * (a + b);
            let left = simpson(f, a, m);
            let right = simpson(f, m, b);
            if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
                left + right + (left + right - whole) / 15.0
            } else {
                rec(f, a, m, left, tol / 2.0, depth - 1) + rec(f, m, b, right, tol / 2.0, depth - 1)
            }
        }
        rec(f, a, b, simpson(f, a, b), tol, 30)
    }

    /// Integrate a nodal-data-driven integrand over the whole interval.
    /// The integrand receives the element index explicitly, so values at
    /// element boundaries are unambiguous.
    fn oracle_integral<F: Fn(usize, f64) -> f64>(p: &Partition, f: F) -> f64 {
        let mut acc = 0.0;
        for e in 0..p.element_count() {
            acc += adaptive_simpson(&|rho| f(e, rho), p.node(e), p.node(e + 1), 1e-13);
        }
        acc
    }

    /// Piecewise linear value of a nodal field at `rho` within element `e`.
    fn value_on(x: &NodalField, e: usize, rho: f64) -> Vec<f64> {
        let p = x.partition();
        let xi = (rho - p.node(e)) / p.size(e);
        let (n0, n1) = x.element_nodes(e);
        (0..x.dim())
            .map(|c| (1.0 - xi) * x.node(n0)[c] + xi * x.node(n1)[c])
            .collect()
    }

    fn deriv_on(x: &NodalField, e: usize) -> Vec<f64> {
        let mut out = vec![0.0; x.dim()];
        x.element_derivative(e, &mut out);
        out
    }

    /// Basis function χ_k restricted to element `e`.
    fn hat_on(p: &Partition, k: usize, e: usize, rho: f64) -> f64 {
        let j = p.element_count();
        let xi = (rho - p.node(e)) / p.size(e);
        let n1 = if e + 1 == j { 0 } else { e + 1 };
        if e == k {
            1.0 - xi
        } else if n1 == k {
            xi
        } else {
            0.0
        }
    }

    #[test]
    fn weighted_mass_diamond() {
        // |x_ρ|² = 32 on every element of the diamond
        let m = weighted_mass(&diamond());
        for k in 0..4 {
            assert!((m.diag[k] - 16.0 / 3.0).abs() < 1e-13);
            assert!((m.sup[k] - 4.0 / 3.0).abs() < 1e-13);
            assert!((m.sub[k] - 4.0 / 3.0).abs() < 1e-13);
        }
    }

    #[test]
    fn weighted_mass_constant_curve_is_zero() {
        let p = Partition::uniform(5).unwrap();
        let x = interpolate(&p, 2, |_| vec![2.0, -1.0]);
        let m = weighted_mass(&x);
        assert!(m.diag.iter().chain(&m.sub).chain(&m.sup).all(|&v| v == 0.0));
    }

    #[test]
    fn weighted_mass_row_sums_match_gauss_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = Partition::uniform(6).unwrap();
        let x = random_field(&mut rng, &p, 2);
        let m = weighted_mass(&x);
        let geo = mesh::element_geometry(&x);
        for k in 0..6 {
            let row_sum = m.sub[k] + m.diag[k] + m.sup[k];
            // ∫ χ_k |x_ρ|² via 3-point Gauss on the two adjacent elements
            let e_prev = (k + 5) % 6;
            let mut oracle = 0.0;
            for (e, rising) in [(e_prev, true), (k, false)] {
                let h = p.size(e);
                let w = geo.speeds[e] * geo.speeds[e];
                for &(xi, wq) in &GAUSS3 {
                    let basis = if rising { xi } else { 1.0 - xi };
                    oracle += wq * h * w * basis;
                }
            }
            assert!((row_sum - oracle).abs() < 1e-12 * (1.0 + oracle.abs()));
        }
    }

    #[test]
    fn stiffness_uniform_values() {
        let p = Partition::uniform(8).unwrap();
        let s = stiffness(&p);
        for k in 0..8 {
            assert!((s.diag[k] - 16.0).abs() < 1e-12);
            assert!((s.sub[k] + 8.0).abs() < 1e-12);
            assert!((s.sup[k] + 8.0).abs() < 1e-12);
            assert_eq!(s.sub[k] + s.diag[k] + s.sup[k], 0.0);
        }
        // constant nodal values are annihilated
        let v = vec![3.0; 8 * 2];
        let mut out = vec![0.0; 16];
        s.apply(2, &v, &mut out);
        assert!(out.iter().all(|&x| x.abs() < 1e-12));
    }

    #[test]
    fn coupling_vanishes_for_zero_y() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let p = Partition::uniform(5).unwrap();
        let x = random_field(&mut rng, &p, 3);
        let y = NodalField::zeros(&p, 3);
        let b = cd_implicit_coupling(&x, &y);
        assert!(b.sub.iter().chain(&b.diag).chain(&b.sup).all(|&v| v == 0.0));
    }

    #[test]
    fn coupling_plus_stiffness_is_the_dissipation_form() {
        // Yᵀ(S + B)Y = ∫ |Y_ρ + (y·Y) x_ρ|² dρ ≥ 0
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for trial in 0..100 {
            let j = 3 + (trial % 5);
            let d = 2 + (trial % 2);
            let p = Partition::uniform(j).unwrap();
            let x = random_field(&mut rng, &p, d);
            let y = random_field(&mut rng, &p, d);
            let yy = random_field(&mut rng, &p, d);

            let s = stiffness(&p);
            let b = cd_implicit_coupling(&x, &y);
            let quad_form =
                s.quadratic(d, yy.values(), yy.values()) + b.quadratic(yy.values(), yy.values());

            // exact elementwise integral of |Y_ρ + (y·Y) x_ρ|² (degree 4)
            let mut oracle = 0.0;
            let mut a = vec![0.0; d];
            let mut yr = vec![0.0; d];
            for e in 0..j {
                let (n0, n1) = x.element_nodes(e);
                let h = p.size(e);
                x.element_derivative(e, &mut a);
                yy.element_derivative(e, &mut yr);
                for &(xi, wq) in &GAUSS3 {
                    let mut dotv = 0.0;
                    for c in 0..d {
                        let yg = (1.0 - xi) * y.node(n0)[c] + xi * y.node(n1)[c];
                        let yyg = (1.0 - xi) * yy.node(n0)[c] + xi * yy.node(n1)[c];
                        dotv += yg * yyg;
                    }
                    let mut nrm = 0.0;
                    for c in 0..d {
                        let v = yr[c] + dotv * a[c];
                        nrm += v * v;
                    }
                    oracle += wq * h * nrm;
                }
            }
            assert!(quad_form >= -1e-12 * (1.0 + oracle.abs()));
            assert!(
                (quad_form - oracle).abs() < 1e-11 * (1.0 + oracle.abs()),
                "{quad_form} vs {oracle}"
            );
        }
    }

    #[test]
    fn coupling_entries_match_adaptive_quadrature() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for &d in &[2usize, 3] {
            let j = 3;
            let p = Partition::uniform(j).unwrap();
            let x = random_field(&mut rng, &p, d);
            let y = random_field(&mut rng, &p, d);
            let b = cd_implicit_coupling(&x, &y);

            // entry (test j_t·e_a, trial k·e_c): apply to unit nodal vectors
            for jt in 0..j {
                for kt in 0..j {
                    for a_c in 0..d {
                        for b_c in 0..d {
                            let mut yvec = vec![0.0; j * d];
                            yvec[kt * d + b_c] = 1.0;
                            let mut out = vec![0.0; j * d];
                            b.apply(&yvec, &mut out);
                            let assembled = out[jt * d + a_c];

                            let yfield = NodalField::from_values(&p, d, yvec.clone());
                            let oracle = oracle_integral(&p, |e, rho| {
                                let xr = deriv_on(&x, e);
                                let yv = value_on(&y, e, rho);
                                let yrv = deriv_on(&y, e);
                                let cap_y = value_on(&yfield, e, rho);
                                let cap_yr = deriv_on(&yfield, e);
                                // χ = χ_{jt} e_{a_c}
                                let chi = hat_on(&p, jt, e, rho);
                                let term1 = 2.0 * la::dot(&cap_yr, &xr) * yv[a_c] * chi;
                                let term2 =
                                    la::norm_sq(&xr) * la::dot(&yv, &cap_y) * yv[a_c] * chi;
                                let mut f2y = vec![0.0; d];
                                forms::f2_apply(&xr, &yv, &yrv, &cap_y, &mut f2y);
                                term1 + term2 + f2y[a_c] * chi
                            });
                            assert!(
                                (assembled - oracle).abs() < 1e-10 * (1.0 + oracle.abs()),
                                "d={d} ({jt},{kt},{a_c},{b_c}): {assembled} vs {oracle}"
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn f3_load_zero_y() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let p = Partition::uniform(4).unwrap();
        let x = random_field(&mut rng, &p, 2);
        let y = NodalField::zeros(&p, 2);
        let load = f3_load(&x, &y, 0.8);
        assert!(load.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn f3_load_matches_adaptive_quadrature() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for &d in &[2usize, 3] {
            let p = Partition::uniform(3).unwrap();
            let x = random_field(&mut rng, &p, d);
            let y = random_field(&mut rng, &p, d);
            let lambda = 0.6;
            let load = f3_load(&x, &y, lambda);
            for k in 0..3 {
                for c in 0..d {
                    let oracle = oracle_integral(&p, |e, rho| {
                        let xr = deriv_on(&x, e);
                        let yv = value_on(&y, e, rho);
                        forms::f3_scalar(&xr, &yv, lambda) * yv[c] * hat_on(&p, k, e, rho)
                    });
                    assert!(
                        (load[k * d + c] - oracle).abs() < 1e-10 * (1.0 + oracle.abs()),
                        "{} vs {}",
                        load[k * d + c],
                        oracle
                    );
                }
            }
        }
    }

    #[test]
    fn f3_element_contribution_vanishes_for_tangential_y() {
        // λ=0 and y parallel to x_ρ pointwise on one element of a triangle
        let p = Partition::uniform(3).unwrap();
        let x = NodalField::from_values(&p, 2, vec![0.0, 0.0, 1.0, 0.0, 0.3, 1.1]);
        let mut der = [0.0; 2];
        x.element_derivative(0, &mut der);
        let mut yv = vec![0.0; 6];
        yv[0] = der[0] * 0.25;
        yv[1] = der[1] * 0.25;
        yv[2] = der[0] * 0.25;
        yv[3] = der[1] * 0.25;
        let y = NodalField::from_values(&p, 2, yv);
        // adaptive quadrature of the F3 integrand over element 0 only
        for k in 0..2 {
            let contrib = adaptive_simpson(
                &|rho: f64| {
                    let xr = deriv_on(&x, 0);
                    let yvv = value_on(&y, 0, rho);
                    forms::f3_scalar(&xr, &yvv, 0.0) * yvv[k] * hat_on(&p, k, 0, rho)
                },
                0.0,
                1.0 / 3.0,
                1e-13,
            );
            assert!(contrib.abs() < 1e-12);
        }
        // and the assembled load receives no element-0 contribution:
        // subtracting the oracle contributions of elements 1 and 2 leaves 0
        let load = f3_load(&x, &y, 0.0);
        for k in 0..3 {
            for c in 0..2 {
                let others: f64 = [1usize, 2]
                    .iter()
                    .map(|&e| {
                        adaptive_simpson(
                            &|rho: f64| {
                                let xr = deriv_on(&x, e);
                                let yvv = value_on(&y, e, rho);
                                forms::f3_scalar(&xr, &yvv, 0.0) * yvv[c] * hat_on(&p, k, e, rho)
                            },
                            p.node(e),
                            p.node(e + 1),
                            1e-13,
                        )
                    })
                    .sum();
                assert!((load[k * 2 + c] - others).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn lumped_load_examples() {
        let p = Partition::uniform(6).unwrap();
        // constant f on a uniform mesh → f/J at every node
        let load = lumped_load(&p, 2, |_| vec![3.0, -1.0]);
        for k in 0..6 {
            assert!((load[k * 2] - 0.5).abs() < 1e-15);
            assert!((load[k * 2 + 1] + 1.0 / 6.0).abs() < 1e-15);
        }
        // f vanishing at all nodes → zero load
        let load = lumped_load(&p, 1, |rho| vec![(6.0 * PI * rho).sin()]);
        assert!(load.iter().all(|&v| v.abs() < 1e-13));
    }

    #[test]
    fn lumped_vs_consistent_load_second_order_density() {
        // nodal difference between lumped and consistent loads scales as
        // O(h²) relative to the nodal weight (h_j + h_{j+1})/2
        let f = |rho: f64| (2.0 * PI * rho).sin().exp();
        let err = |j: usize| -> f64 {
            let p = Partition::uniform(j).unwrap();
            let lumped = lumped_load(&p, 1, |rho| vec![f(rho)]);
            let mut worst: f64 = 0.0;
            for k in 0..j {
                // consistent load ∫ f χ_k via 5-point Gauss on both elements
                let e_prev = (k + j - 1) % j;
                let mut consistent = 0.0;
                for (e, rising) in [(e_prev, true), (k, false)] {
                    let h = p.size(e);
                    for &(xi, wq) in &crate::mesh::quad::GAUSS5 {
                        let basis = if rising { xi } else { 1.0 - xi };
                        consistent += wq * h * basis * f(p.node(e) + xi * h);
                    }
                }
                let weight = 1.0 / j as f64;
                worst = worst.max((lumped[k] - consistent).abs() / weight);
            }
            worst
        };
        let (e16, e32, e64) = (err(16), err(32), err(64));
        let eoc1 = (e16 / e32).log2();
        let eoc2 = (e32 / e64).log2();
        assert!((eoc1 - 2.0).abs() < 0.2, "eoc {eoc1}");
        assert!((eoc2 - 2.0).abs() < 0.2, "eoc {eoc2}");
    }

    #[test]
    fn assembly_is_rotation_equivariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let p = Partition::uniform(5).unwrap();
        let d = 2;
        let x = random_field(&mut rng, &p, d);
        let y = random_field(&mut rng, &p, d);
        let theta: f64 = 0.63;
        let q = [theta.cos(), -theta.sin(), theta.sin(), theta.cos()];
        let rotate = |f: &NodalField| -> NodalField {
            let mut vals = vec![0.0; f.values().len()];
            for k in 0..f.node_count() {
                la::matvec(d, &q, f.node(k), &mut vals[k * d..(k + 1) * d]);
            }
            NodalField::from_values(&p, d, vals)
        };
        let b = cd_implicit_coupling(&x, &y);
        let br = cd_implicit_coupling(&rotate(&x), &rotate(&y));
        // blocks conjugate: B' = Q B Qᵀ
        for (band, band_r) in [(&b.sub, &br.sub), (&b.diag, &br.diag), (&b.sup, &br.sup)] {
            for k in 0..5 {
                let blk = &band[k * d * d..(k + 1) * d * d];
                let blk_r = &band_r[k * d * d..(k + 1) * d * d];
                // Q blk Qᵀ
                let mut tmp = [0.0; 4];
                for r in 0..d {
                    for c in 0..d {
                        let mut acc = 0.0;
                        for i in 0..d {
                            for l in 0..d {
                                acc += q[r * d + i] * blk[i * d + l] * q[c * d + l];
                            }
                        }
                        tmp[r * d + c] = acc;
                    }
                }
                for i in 0..4 {
                    assert!(
                        (tmp[i] - blk_r[i]).abs() < 1e-12 * (1.0 + tmp[i].abs()),
                        "{tmp:?} vs {blk_r:?}"
                    );
                }
            }
        }
        // weighted mass is rotation invariant
        let m = weighted_mass(&x);
        let mr = weighted_mass(&rotate(&x));
        for k in 0..5 {
            assert!((m.diag[k] - mr.diag[k]).abs() < 1e-12 * (1.0 + m.diag[k].abs()));
        }
    }

    #[test]
    fn assembly_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(101);
        let p = Partition::uniform(7).unwrap();
        let x = random_field(&mut rng, &p, 3);
        let y = random_field(&mut rng, &p, 3);
        let b1 = cd_implicit_coupling(&x, &y);
        let b2 = cd_implicit_coupling(&x, &y);
        assert_eq!(b1.diag, b2.diag);
        assert_eq!(b1.sub, b2.sub);
        assert_eq!(b1.sup, b2.sup);
    }
}
