//! Scalar and field diagnostics of a discrete curve: length, Dirichlet
//! energy, signed area, mesh ratio, discrete curvature, and the
//! discrete elastic energy.

use crate::error::Result;
use crate::la;
use crate::mesh::{self, quad::GAUSS3, NodalField};
use crate::stepper::CurveState;

/// Scalar diagnostics at one time step.
#[derive(Debug, Clone, PartialEq)]
pub struct MonitorRecord {
    pub t: f64,
    /// Polygon length `Σ L_e`.
    pub length: f64,
    /// `∫ |x_ρ|² dρ`.
    pub dirichlet: f64,
    /// Signed polygon area (planar curves only).
    pub area: Option<f64>,
    /// Element length ratio `max L / min L`.
    pub ratio: f64,
    /// Maximal discrete curvature magnitude.
    pub k_inf: f64,
    /// Discrete elastic energy (elastic runs only).
    pub elastic: Option<f64>,
}

/// Ratio between the longest and shortest element; 1 exactly for an
/// equidistributed polygon.
pub fn mesh_ratio(x: &NodalField) -> Result<f64> {
    let geo = mesh::element_geometry(x);
    mesh::check_nondegenerate(&geo)?;
    let max = geo.lengths.iter().cloned().fold(0.0, f64::max);
    let min = geo.lengths.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(max / min)
}

/// Discrete curvature vector and its maximal magnitude.
///
/// The defining lumped variational problem reduces to the closed form
/// `κ_j = (τ_next − τ_prev) / ((L_prev + L_next)/2)` with unit element
/// tangents `τ` and the element lengths `L` adjacent to node `j`.
pub fn discrete_curvature(x: &NodalField) -> Result<(NodalField, f64)> {
    let geo = mesh::element_geometry(x);
    mesh::check_nondegenerate(&geo)?;
    let j = x.node_count();
    let d = x.dim();
    let mut kappa = NodalField::zeros(x.partition(), d);
    let mut k_inf: f64 = 0.0;
    for k in 0..j {
        let e_next = k;
        let e_prev = if k == 0 { j - 1 } else { k - 1 };
        let weight = 0.5 * (geo.lengths[e_prev] + geo.lengths[e_next]);
        let node = kappa.node_mut(k);
        for c in 0..d {
            let tau_next = geo.derivatives[e_next * d + c] / geo.speeds[e_next];
            let tau_prev = geo.derivatives[e_prev * d + c] / geo.speeds[e_prev];
            node[c] = (tau_next - tau_prev) / weight;
        }
        k_inf = k_inf.max(la::norm(node));
    }
    Ok((kappa, k_inf))
}

/// Shoelace signed area of a planar polygon.
pub fn signed_area(x: &NodalField) -> Option<f64> {
    if x.dim() != 2 {
        return None;
    }
    let j = x.node_count();
    let mut acc = 0.0;
    for k in 0..j {
        let a = x.node(k);
        let b = x.node(if k + 1 == j { 0 } else { k + 1 });
        acc += a[0] * b[1] - b[0] * a[1];
    }
    Some(0.5 * acc)
}

/// Discrete elastic energy
/// `E = ½ ∫ |P y|² |x_ρ| dρ + λ ∫ |x_ρ| dρ` with the elementwise
/// normal projection `P = Id − τ⊗τ`; integrated exactly.
pub fn elastic_energy(x: &NodalField, y: &NodalField, lambda: f64) -> f64 {
    let j = x.node_count();
    let d = x.dim();
    let geo = mesh::element_geometry(x);
    let mut bending = 0.0;
    let mut py = vec![0.0; d];
    for e in 0..j {
        let (n0, n1) = x.element_nodes(e);
        let tau = geo.derivative(e, d);
        let speed = geo.speeds[e];
        let (y0, y1) = (y.node(n0), y.node(n1));
        for &(xi, wq) in &GAUSS3 {
            let mut tau_dot_y = 0.0;
            for c in 0..d {
                py[c] = (1.0 - xi) * y0[c] + xi * y1[c];
                tau_dot_y += tau[c] / speed * py[c];
            }
            let mut nrm = 0.0;
            for c in 0..d {
                let v = py[c] - tau_dot_y * tau[c] / speed;
                nrm += v * v;
            }
            bending += wq * geo.lengths[e] * nrm;
        }
    }
    0.5 * bending + lambda * geo.total_length()
}

/// All scalar monitors of a state; `lambda` selects whether the
/// elastic energy is reported.
pub fn scalar_monitors(state: &CurveState, lambda: Option<f64>) -> Result<MonitorRecord> {
    let geo = mesh::element_geometry(&state.x);
    mesh::check_nondegenerate(&geo)?;
    let (_, k_inf) = discrete_curvature(&state.x)?;
    Ok(MonitorRecord {
        t: state.t,
        length: geo.total_length(),
        dirichlet: state.x.dirichlet_energy(),
        area: signed_area(&state.x),
        ratio: mesh_ratio(&state.x)?,
        k_inf,
        elastic: lambda.map(|l| elastic_energy(&state.x, &state.y, l)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Partition;
    use crate::stepper;
    use std::f64::consts::PI;

    fn diamond() -> NodalField {
        let p = Partition::uniform(4).unwrap();
        NodalField::from_values(&p, 2, vec![1.0, 0.0, 0.0, 1.0, -1.0, 0.0, 0.0, -1.0])
    }

    fn unit_square() -> NodalField {
        let p = Partition::uniform(4).unwrap();
        NodalField::from_values(&p, 2, vec![0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0, 1.0])
    }

    fn regular_polygon(j: usize) -> NodalField {
        let p = Partition::uniform(j).unwrap();
        mesh::interpolate(&p, 2, |rho| {
            vec![(2.0 * PI * rho).cos(), (2.0 * PI * rho).sin()]
        })
    }

    #[test]
    fn mesh_ratio_examples() {
        assert!((mesh_ratio(&unit_square()).unwrap() - 1.0).abs() < 1e-15);
        // collinear polygon with element lengths {1, 1, 2}
        let p = Partition::uniform(3).unwrap();
        let tri = NodalField::from_values(&p, 2, vec![0.0, 0.0, 1.0, 0.0, 2.0, 0.0]);
        assert!((mesh_ratio(&tri).unwrap() - 2.0).abs() < 1e-15);
        for j in [5usize, 17, 64] {
            assert!((mesh_ratio(&regular_polygon(j)).unwrap() - 1.0).abs() < 1e-14);
        }
        // trig-sampled coordinates leave eps/L-level noise at large J
        for j in [128usize, 512] {
            assert!((mesh_ratio(&regular_polygon(j)).unwrap() - 1.0).abs() < 2e-13);
        }
    }

    #[test]
    fn curvature_of_regular_polygon_is_one() {
        // turning-angle identity: |κ_j| = 2 sin(π/J) / (2 sin(π/J)) = 1
        for j in [8usize, 64, 512] {
            let (kappa, k_inf) = discrete_curvature(&regular_polygon(j)).unwrap();
            // rounding in the sampled nodes perturbs κ by ~eps/L², which
            // reaches a few times 1e-13 at J = 512
            let tol = if j <= 256 { 1e-12 } else { 5e-12 };
            assert!((k_inf - 1.0).abs() < tol, "J={j}: {k_inf}");
            for k in 0..j {
                assert!((la::norm(kappa.node(k)) - 1.0).abs() < tol);
            }
        }
    }

    #[test]
    fn curvature_vanishes_on_straight_triples() {
        let p = Partition::uniform(5).unwrap();
        let x = NodalField::from_values(
            &p,
            2,
            vec![1.0, 0.0, 0.0, 1.0, -1.0, 0.0, 0.0, -1.0, 0.5, -0.5],
        );
        let (kappa, _) = discrete_curvature(&x).unwrap();
        // node 4 sits midway on the straight segment from (0,-1) to (1,0)
        assert!(la::norm(kappa.node(4)) < 1e-13);
    }

    #[test]
    fn curvature_points_inward_on_convex_polygons() {
        let (kappa, _) = discrete_curvature(&diamond()).unwrap();
        let x = diamond();
        for k in 0..4 {
            assert!(la::dot(kappa.node(k), x.node(k)) < 0.0);
        }
    }

    #[test]
    fn scalar_monitors_squares() {
        // axis-aligned unit square: length 4, |area| 1, dirichlet 16
        let s = CurveState::new(unit_square()).unwrap();
        let m = scalar_monitors(&s, None).unwrap();
        assert!((m.length - 4.0).abs() < 1e-14);
        assert!((m.area.unwrap().abs() - 1.0).abs() < 1e-14);
        assert!((m.dirichlet - 16.0).abs() < 1e-12);
        assert!(m.elastic.is_none());

        // diamond with vertices on the unit circle: sides √2
        let s = CurveState::new(diamond()).unwrap();
        let m = scalar_monitors(&s, None).unwrap();
        assert!((m.length - 4.0 * 2.0_f64.sqrt()).abs() < 1e-14);
        assert!((m.area.unwrap() - 2.0).abs() < 1e-14);
        assert!((m.dirichlet - 32.0).abs() < 1e-12);
    }

    #[test]
    fn elastic_energy_approaches_circle_limit() {
        // E → π for the unit circle (½·|κ|²·2π with |κ| = 1)
        let energies: Vec<f64> = [64usize, 128, 256]
            .iter()
            .map(|&j| {
                let x = regular_polygon(j);
                let y = stepper::initial_y(&x).unwrap();
                elastic_energy(&x, &y, 0.0)
            })
            .collect();
        let devs: Vec<f64> = energies.iter().map(|e| (e - PI).abs()).collect();
        assert!(devs[0] > devs[1] && devs[1] > devs[2], "{devs:?}");
        assert!(devs[2] < 1e-2, "E(256) = {}", energies[2]);
    }

    #[test]
    fn monitors_are_rigid_motion_invariant() {
        let p = Partition::uniform(12).unwrap();
        let x = mesh::interpolate(&p, 2, |rho| {
            let r = 1.0 + 0.2 * (4.0 * PI * rho).sin();
            vec![r * (2.0 * PI * rho).cos(), r * (2.0 * PI * rho).sin()]
        });
        let theta: f64 = 0.37;
        let q = [theta.cos(), -theta.sin(), theta.sin(), theta.cos()];
        let mut moved = NodalField::zeros(&p, 2);
        for k in 0..12 {
            la::matvec(2, &q, x.node(k), moved.node_mut(k));
            moved.node_mut(k)[0] += 3.0;
            moved.node_mut(k)[1] -= 2.5;
        }
        let a = scalar_monitors(&CurveState::new(x).unwrap(), Some(0.5)).unwrap();
        let b = scalar_monitors(&CurveState::new(moved).unwrap(), Some(0.5)).unwrap();
        assert!((a.length - b.length).abs() < 1e-12);
        assert!((a.dirichlet - b.dirichlet).abs() < 1e-11);
        assert!((a.ratio - b.ratio).abs() < 1e-12);
        assert!((a.k_inf - b.k_inf).abs() < 1e-11);
        assert!((a.area.unwrap() - b.area.unwrap()).abs() < 1e-12);
        assert!((a.elastic.unwrap() - b.elastic.unwrap()).abs() < 1e-11);
    }

    #[test]
    fn area_flips_sign_under_orientation_reversal() {
        let x = diamond();
        let p = x.partition().clone();
        let mut reversed = NodalField::zeros(&p, 2);
        for k in 0..4 {
            let src = x.node((4 - k) % 4);
            reversed.node_mut(k).copy_from_slice(src);
        }
        assert!((signed_area(&x).unwrap() + signed_area(&reversed).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn ratio_is_one_iff_equidistributed() {
        let p = Partition::uniform(3).unwrap();
        let skew = NodalField::from_values(&p, 2, vec![0.0, 0.0, 2.0, 0.0, 0.0, 1.0]);
        assert!(mesh_ratio(&skew).unwrap() > 1.0 + 1e-14);
        assert!((mesh_ratio(&regular_polygon(9)).unwrap() - 1.0).abs() < 1e-14);
    }
}
