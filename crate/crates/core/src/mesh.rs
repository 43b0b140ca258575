//! Periodic partition of the parameter interval `I = ℝ/ℤ`, nodal
//! fields of periodic piecewise linear functions, interpolation, and
//! the Gauss rules used for element-wise integration.
//!
//! Indexing convention: a partition with `J` elements stores nodes
//! `q_0 < … < q_J` with `q_0 = 0`, `q_J = 1`; element `e` (0-based)
//! spans `[q_e, q_{e+1}]` and connects nodes `e` and `(e+1) mod J`.
//! Periodicity is realized by index arithmetic modulo `J`, never by a
//! duplicated node value.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::la;

/// Gauss–Legendre rules mapped to the reference element `[0, 1]`
/// (weights sum to 1).
pub mod quad {
    /// 3-point rule, exact for polynomials up to degree 5. Every
    /// integrand appearing in the scheme matrices is piecewise
    /// polynomial of degree at most 4, so assembly with this rule is
    /// exact up to rounding.
    pub const GAUSS3: [(f64, f64); 3] = [
        (0.112_701_665_379_258_31, 0.277_777_777_777_777_8),
        (0.5, 0.444_444_444_444_444_4),
        (0.887_298_334_620_741_7, 0.277_777_777_777_777_8),
    ];

    /// 5-point rule, exact up to degree 9; used for error norms against
    /// non-polynomial exact solutions.
    pub const GAUSS5: [(f64, f64); 5] = [
        (0.046_910_077_030_668_01, 0.118_463_442_528_094_54),
        (0.230_765_344_947_158_45, 0.239_314_335_249_683_24),
        (0.5, 0.284_444_444_444_444_44),
        (0.769_234_655_052_841_5, 0.239_314_335_249_683_24),
        (0.953_089_922_969_332, 0.118_463_442_528_094_54),
    ];
}

/// Periodic subdivision of `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    /// `q_0, …, q_J` (length `J + 1`, first entry 0, last entry 1).
    nodes: Vec<f64>,
    /// Element sizes `h_e = q_{e+1} - q_e` (length `J`).
    sizes: Vec<f64>,
}

impl Partition {
    /// Uniform partition with `q_j = j/J` computed by exact division,
    /// not by accumulation, so the construction is bitwise
    /// deterministic.
    pub fn uniform(j: usize) -> Result<Arc<Partition>> {
        if j < 3 {
            return Err(Error::InvalidArgument(format!(
                "a closed polygon needs at least 3 vertices, got J = {j}"
            )));
        }
        let nodes: Vec<f64> = (0..=j).map(|k| k as f64 / j as f64).collect();
        // h_e = 1/J exactly, rather than the (1-ulp different) node
        // differences
        let sizes = vec![1.0 / j as f64; j];
        Ok(Arc::new(Partition { nodes, sizes }))
    }

    /// General partition from strictly increasing nodes `q_0 = 0 < … <
    /// q_J = 1`. Supported by the data model for quasi-uniform meshes,
    /// though all shipped experiments use [`Partition::uniform`].
    pub fn from_nodes(nodes: Vec<f64>) -> Result<Arc<Partition>> {
        if nodes.len() < 4 {
            return Err(Error::InvalidArgument(
                "a partition needs at least 3 elements".into(),
            ));
        }
        Ok(Arc::new(Partition::from_node_vec(nodes)?))
    }

    fn from_node_vec(nodes: Vec<f64>) -> Result<Partition> {
        if nodes.first() != Some(&0.0) || nodes.last() != Some(&1.0) {
            return Err(Error::InvalidArgument(
                "partition nodes must start at 0 and end at 1".into(),
            ));
        }
        let sizes: Vec<f64> = nodes.windows(2).map(|w| w[1] - w[0]).collect();
        if sizes.iter().any(|&h| h <= 0.0) {
            return Err(Error::InvalidArgument(
                "partition nodes must be strictly increasing".into(),
            ));
        }
        Ok(Partition { nodes, sizes })
    }

    /// Number of elements `J`.
    #[inline]
    pub fn element_count(&self) -> usize {
        self.sizes.len()
    }

    /// Node coordinate `q_j`, `0 ≤ j ≤ J`.
    #[inline]
    pub fn node(&self, j: usize) -> f64 {
        self.nodes[j]
    }

    /// All node coordinates `q_0..q_J` (length `J + 1`).
    #[inline]
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Size `h_e` of element `e`.
    #[inline]
    pub fn size(&self, e: usize) -> f64 {
        self.sizes[e]
    }

    #[inline]
    pub fn sizes(&self) -> &[f64] {
        &self.sizes
    }

    /// Largest element size `h`.
    pub fn h_max(&self) -> f64 {
        self.sizes.iter().cloned().fold(0.0, f64::max)
    }

    /// Quasi-uniformity ratio `max h_e / min h_e`.
    pub fn quasi_uniformity(&self) -> f64 {
        let max = self.sizes.iter().cloned().fold(0.0, f64::max);
        let min = self.sizes.iter().cloned().fold(f64::INFINITY, f64::min);
        max / min
    }
}

/// Degrees of freedom of a periodic piecewise linear function
/// `I → ℝ^d`: one point per node index `0..J` (node `J ≡` node 0).
#[derive(Debug, Clone, PartialEq)]
pub struct NodalField {
    partition: Arc<Partition>,
    dim: usize,
    /// Node-major storage, `values[j*dim + a]` is component `a` at node `j`.
    values: Vec<f64>,
}

impl NodalField {
    pub fn zeros(partition: &Arc<Partition>, dim: usize) -> NodalField {
        assert!(dim >= 2, "curves live in ℝ^d with d ≥ 2");
        NodalField {
            partition: Arc::clone(partition),
            dim,
            values: vec![0.0; partition.element_count() * dim],
        }
    }

    /// Build a field from per-node values (length `J * dim`, node-major).
    pub fn from_values(partition: &Arc<Partition>, dim: usize, values: Vec<f64>) -> NodalField {
        assert_eq!(values.len(), partition.element_count() * dim);
        NodalField {
            partition: Arc::clone(partition),
            dim,
            values,
        }
    }

    #[inline]
    pub fn partition(&self) -> &Arc<Partition> {
        &self.partition
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of nodes (= number of elements `J`).
    #[inline]
    pub fn node_count(&self) -> usize {
        self.partition.element_count()
    }

    #[inline]
    pub fn node(&self, j: usize) -> &[f64] {
        &self.values[j * self.dim..(j + 1) * self.dim]
    }

    #[inline]
    pub fn node_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.values[j * self.dim..(j + 1) * self.dim]
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Node indices `(left, right)` of element `e`, with periodic wrap.
    #[inline]
    pub fn element_nodes(&self, e: usize) -> (usize, usize) {
        let j = self.node_count();
        (e, if e + 1 == j { 0 } else { e + 1 })
    }

    /// Evaluate the piecewise linear function at `rho` (wrapped into
    /// `[0, 1)`), writing the point into `out`.
    pub fn eval(&self, rho: f64, out: &mut [f64]) {
        let r = rho - rho.floor();
        let p = &self.partition;
        let j = p.element_count();
        // nodes are sorted; find element with q_e <= r < q_{e+1}
        let e = match p.nodes.binary_search_by(|q| q.partial_cmp(&r).unwrap()) {
            Ok(k) => k.min(j - 1),
            Err(k) => k - 1,
        };
        let xi = (r - p.node(e)) / p.size(e);
        let (n0, n1) = self.element_nodes(e);
        let (a, b) = (self.node(n0), self.node(n1));
        for c in 0..self.dim {
            out[c] = (1.0 - xi) * a[c] + xi * b[c];
        }
    }

    /// Constant derivative `(v_{e+1} - v_e)/h_e` on element `e`.
    #[inline]
    pub fn element_derivative(&self, e: usize, out: &mut [f64]) {
        let (n0, n1) = self.element_nodes(e);
        let h = self.partition.size(e);
        let (a, b) = (self.node(n0), self.node(n1));
        for c in 0..self.dim {
            out[c] = (b[c] - a[c]) / h;
        }
    }

    /// `∫_I |v_ρ|² dρ = Σ_e |v_{e+1} - v_e|² / h_e`.
    pub fn dirichlet_energy(&self) -> f64 {
        let j = self.node_count();
        let mut acc = 0.0;
        for e in 0..j {
            let (n0, n1) = self.element_nodes(e);
            acc += la::dist(self.node(n0), self.node(n1)).powi(2) / self.partition.size(e);
        }
        acc
    }
}

/// Lagrange interpolation `π^h f`: sample a continuous map at the
/// partition nodes.
pub fn interpolate<F>(partition: &Arc<Partition>, dim: usize, f: F) -> NodalField
where
    F: Fn(f64) -> Vec<f64>,
{
    let j = partition.element_count();
    let mut values = Vec::with_capacity(j * dim);
    for k in 0..j {
        let v = f(partition.node(k));
        assert_eq!(v.len(), dim);
        values.extend_from_slice(&v);
    }
    NodalField::from_values(partition, dim, values)
}

/// Per-element geometric quantities of a polygonal curve.
#[derive(Debug, Clone)]
pub struct ElementGeometry {
    /// Chord lengths `L_e = |x_{e+1} - x_e|`.
    pub lengths: Vec<f64>,
    /// Flattened element derivatives `x_ρ|_{I_e}` (length `J * d`).
    pub derivatives: Vec<f64>,
    /// Speeds `|x_ρ| = L_e / h_e`.
    pub speeds: Vec<f64>,
    /// True if some element has exactly zero length.
    pub degenerate: bool,
}

impl ElementGeometry {
    #[inline]
    pub fn derivative(&self, e: usize, d: usize) -> &[f64] {
        &self.derivatives[e * d..(e + 1) * d]
    }

    pub fn total_length(&self) -> f64 {
        self.lengths.iter().sum()
    }

    /// Index of the first element shorter than `threshold`, if any.
    pub fn first_shorter_than(&self, threshold: f64) -> Option<usize> {
        self.lengths.iter().position(|&l| l < threshold)
    }
}

/// Reject curves with an element shorter than `1e-12` times the mean
/// element length (the hypothesis `|x_ρ| > 0` of the schemes, made
/// scale-invariant).
pub fn check_nondegenerate(geo: &ElementGeometry) -> Result<()> {
    let total = geo.total_length();
    let threshold = crate::stepper::DEGENERACY_REL * total / geo.lengths.len() as f64;
    if let Some(e) = geo.first_shorter_than(threshold) {
        return Err(Error::DegenerateCurve {
            element: e,
            length: geo.lengths[e],
            threshold,
        });
    }
    Ok(())
}

/// Chord lengths, element derivatives and speeds of a curve.
pub fn element_geometry(x: &NodalField) -> ElementGeometry {
    let j = x.node_count();
    let d = x.dim();
    let mut lengths = Vec::with_capacity(j);
    let mut derivatives = vec![0.0; j * d];
    let mut speeds = Vec::with_capacity(j);
    let mut degenerate = false;
    for e in 0..j {
        let (n0, n1) = x.element_nodes(e);
        let h = x.partition().size(e);
        let (a, b) = (x.node(n0), x.node(n1));
        let mut len_sq = 0.0;
        for c in 0..d {
            let der = (b[c] - a[c]) / h;
            derivatives[e * d + c] = der;
            len_sq += (b[c] - a[c]) * (b[c] - a[c]);
        }
        let len = len_sq.sqrt();
        if len == 0.0 {
            degenerate = true;
        }
        lengths.push(len);
        speeds.push(len / h);
    }
    ElementGeometry {
        lengths,
        derivatives,
        speeds,
        degenerate,
    }
}
