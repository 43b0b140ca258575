//! Generators for the initial curves of the shipped experiments.
//!
//! Registered generators (dimension in parentheses):
//!
//! * `circle` (2) — reparameterized unit circle `(cos g, sin g)` with
//!   `g = 2πρ + δ sin 2πρ`, sampled at the partition nodes.
//! * `tube` (2) — 8×1 stadium: semicircular caps of radius ½ joined by
//!   straights of length 7; nodes placed with equal chord lengths.
//! * `semicircle-node` (2) — `J−1` nodes equispaced on the upper unit
//!   semicircle plus a single node at `(0, −1)`.
//! * `slit` (2) — boundary polygon of `[−1,1]²` minus the thin
//!   rectangle `[−0.01, 0.01] × [−1, 0.8]`, nodes equidistributed by
//!   arclength along the polygon.
//! * `interlocked-rings` (3) — two interlocked rings, sampled at the
//!   partition nodes.
//! * `helix` (3) — sixteen-turn helix closed by a three-segment
//!   polygon through `(0,0,1)` and the origin.
//! * `lemniscate` (2) — figure-eight with a 2:1 bounding box, nodes
//!   equispaced in the angular parameter.
//! * `hypocycloid` (3) — five-lobed hypocycloid with out-of-plane
//!   perturbation `δ sin 6πρ`; nodes placed with equal chord lengths
//!   (falling back to parameter sampling when `J` is too coarse to
//!   resolve the lobes).

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::la;
use crate::mesh::{self, NodalField, Partition};

/// The registered generator names.
pub const SCENARIO_NAMES: [&str; 8] = [
    "circle",
    "tube",
    "semicircle-node",
    "slit",
    "interlocked-rings",
    "helix",
    "lemniscate",
    "hypocycloid",
];

/// Ambient dimension of a registered generator.
pub fn curve_dim(name: &str) -> Result<usize> {
    match name {
        "circle" | "tube" | "semicircle-node" | "slit" | "lemniscate" => Ok(2),
        "interlocked-rings" | "helix" | "hypocycloid" => Ok(3),
        _ => Err(Error::InvalidArgument(format!(
            "unknown scenario generator '{name}'"
        ))),
    }
}

/// Build the named initial polygon with `J` nodes. `delta` is the
/// generator parameter of `circle` (reparameterization amplitude,
/// in `[0,1)`) and `hypocycloid` (out-of-plane amplitude, in `[0,1]`);
/// other generators reject it.
pub fn make_initial_curve(name: &str, j: usize, delta: Option<f64>) -> Result<NodalField> {
    if j < 3 {
        return Err(Error::InvalidArgument(format!(
            "a closed polygon needs at least 3 vertices, got J = {j}"
        )));
    }
    let reject_delta = || -> Result<()> {
        if delta.is_some() {
            return Err(Error::InvalidArgument(format!(
                "generator '{name}' takes no delta parameter"
            )));
        }
        Ok(())
    };
    let partition = Partition::uniform(j)?;
    match name {
        "circle" => {
            let d = delta.unwrap_or(0.1);
            if !(0.0..1.0).contains(&d) {
                return Err(Error::InvalidArgument(format!(
                    "circle delta must lie in [0, 1), got {d}"
                )));
            }
            Ok(mesh::interpolate(&partition, 2, |rho| {
                let g = 2.0 * PI * rho + d * (2.0 * PI * rho).sin();
                vec![g.cos(), g.sin()]
            }))
        }
        "tube" => {
            reject_delta()?;
            let total = 14.0 + PI;
            let point = |u: f64| stadium_point(u * total);
            let params = chord_equidistribute(&point, j)
                .ok_or_else(|| Error::Internal("tube equidistribution failed".into()))?;
            Ok(from_params(&partition, 2, &point, &params))
        }
        "semicircle-node" => {
            reject_delta()?;
            let mut values = Vec::with_capacity(2 * j);
            for i in 0..j - 1 {
                let theta = i as f64 * PI / (j - 2) as f64;
                values.push(theta.cos());
                values.push(theta.sin());
            }
            values.push(0.0);
            values.push(-1.0);
            Ok(NodalField::from_values(&partition, 2, values))
        }
        "slit" => {
            reject_delta()?;
            let corners = slit_corners();
            let total: f64 = polygon_perimeter(&corners);
            let point = |u: f64| polygon_point(&corners, u * total);
            let mut values = Vec::with_capacity(2 * j);
            for i in 0..j {
                values.extend_from_slice(&point(i as f64 / j as f64));
            }
            Ok(NodalField::from_values(&partition, 2, values))
        }
        "interlocked-rings" => {
            reject_delta()?;
            Ok(mesh::interpolate(&partition, 3, |rho| {
                let w = 2.0 * PI * rho;
                vec![
                    (10.0 * (w.cos() + (3.0 * w).cos()) + (2.0 * w).cos() + (4.0 * w).cos())
                        / 8.0,
                    (6.0 * w.sin() + 10.0 * (3.0 * w).sin()) / 8.0,
                    (4.0 * (3.0 * w).sin() * (2.5 * w).sin() + 4.0 * (4.0 * w).sin()
                        - 2.0 * (6.0 * w).sin())
                        / 8.0,
                ]
            }))
        }
        "helix" => {
            reject_delta()?;
            // open part on the first J−3 elements, then (0,1,1) → (0,0,1)
            // → (0,0,0) → back to (0,1,0)
            let mut values = Vec::with_capacity(3 * j);
            for i in 0..=j - 3 {
                let u = i as f64 / (j - 3) as f64;
                values.push((16.0 * PI * u).sin());
                values.push((16.0 * PI * u).cos());
                values.push(u);
            }
            values.extend_from_slice(&[0.0, 0.0, 1.0]);
            values.extend_from_slice(&[0.0, 0.0, 0.0]);
            Ok(NodalField::from_values(&partition, 3, values))
        }
        "lemniscate" => {
            reject_delta()?;
            // 2:1 bounding box: the vertical component carries a √2 factor
            Ok(mesh::interpolate(&partition, 2, |rho| {
                let u = 2.0 * PI * rho;
                let denom = 1.0 + u.sin() * u.sin();
                vec![
                    u.cos() / denom,
                    2.0_f64.sqrt() * u.sin() * u.cos() / denom,
                ]
            }))
        }
        "hypocycloid" => {
            let d = delta.unwrap_or(0.1);
            if !(0.0..=1.0).contains(&d) {
                return Err(Error::InvalidArgument(format!(
                    "hypocycloid delta must lie in [0, 1], got {d}"
                )));
            }
            let point = move |u: f64| hypocycloid_point(u, d);
            if j >= 64 {
                if let Some(params) = chord_equidistribute(&point, j) {
                    return Ok(from_params(&partition, 3, &point, &params));
                }
            }
            Ok(mesh::interpolate(&partition, 3, move |rho| {
                hypocycloid_point(rho, d)
            }))
        }
        _ => Err(Error::InvalidArgument(format!(
            "unknown scenario generator '{name}'"
        ))),
    }
}

/// Load a closed polygon from a CSV file with a header row and columns
/// `rho,x1..xd` (any trailing columns ignored); one row per node.
pub fn load_polyline_csv(path: &std::path::Path) -> Result<NodalField> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 || line.trim().is_empty() {
            continue; // header
        }
        let fields: Vec<f64> = line
            .split(',')
            .map(|f| f.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Config(format!("{}:{}: {e}", path.display(), i + 1)))?;
        if fields.len() < 3 {
            return Err(Error::Config(format!(
                "{}:{}: need rho plus at least two coordinates",
                path.display(),
                i + 1
            )));
        }
        rows.push(fields[1..].to_vec());
    }
    let j = rows.len();
    if j < 3 {
        return Err(Error::Config(format!(
            "{}: a polyline needs at least 3 nodes",
            path.display()
        )));
    }
    let dim = rows[0].len();
    if rows.iter().any(|r| r.len() != dim) {
        return Err(Error::Config(format!(
            "{}: inconsistent column counts",
            path.display()
        )));
    }
    let partition = Partition::uniform(j)?;
    let values: Vec<f64> = rows.into_iter().flatten().collect();
    Ok(NodalField::from_values(&partition, dim, values))
}

fn from_params(
    partition: &Arc<Partition>,
    dim: usize,
    point: &dyn Fn(f64) -> Vec<f64>,
    params: &[f64],
) -> NodalField {
    let mut values = Vec::with_capacity(dim * params.len());
    for &u in params {
        values.extend_from_slice(&point(u));
    }
    NodalField::from_values(partition, dim, values)
}

/// Point on the 8×1 stadium at arclength `s` from `(−3.5, −0.5)`,
/// walking counterclockwise; total perimeter `14 + π`.
fn stadium_point(s: f64) -> Vec<f64> {
    let total = 14.0 + PI;
    let mut s = s.rem_euclid(total);
    // bottom straight
    if s < 7.0 {
        return vec![-3.5 + s, -0.5];
    }
    s -= 7.0;
    // right cap, angle from −π/2 to π/2 around (3.5, 0); s = Δφ/2
    if s < PI / 2.0 {
        let phi = -PI / 2.0 + 2.0 * s;
        return vec![3.5 + 0.5 * phi.cos(), 0.5 * phi.sin()];
    }
    s -= PI / 2.0;
    // top straight
    if s < 7.0 {
        return vec![3.5 - s, 0.5];
    }
    s -= 7.0;
    // left cap, angle from π/2 to 3π/2 around (−3.5, 0)
    let phi = PI / 2.0 + 2.0 * s;
    vec![-3.5 + 0.5 * phi.cos(), 0.5 * phi.sin()]
}

fn hypocycloid_point(rho: f64, delta: f64) -> Vec<f64> {
    let u = 2.0 * PI * rho;
    vec![
        -2.5 * u.cos() + 4.0 * (5.0 * u).cos(),
        -2.5 * u.sin() + 4.0 * (5.0 * u).sin(),
        delta * (3.0 * u).sin(),
    ]
}

/// Corner list of the slit square, counterclockwise from the
/// bottom-edge point just right of the slit.
fn slit_corners() -> Vec<[f64; 2]> {
    vec![
        [0.01, -1.0],
        [1.0, -1.0],
        [1.0, 1.0],
        [-1.0, 1.0],
        [-1.0, -1.0],
        [-0.01, -1.0],
        [-0.01, 0.8],
        [0.01, 0.8],
    ]
}

fn polygon_perimeter(corners: &[[f64; 2]]) -> f64 {
    let n = corners.len();
    (0..n)
        .map(|i| la::dist(&corners[i], &corners[(i + 1) % n]))
        .sum()
}

/// Point at arclength `s` along a closed polygon.
fn polygon_point(corners: &[[f64; 2]], s: f64) -> Vec<f64> {
    let n = corners.len();
    let total = polygon_perimeter(corners);
    let mut s = s.rem_euclid(total);
    for i in 0..n {
        let a = &corners[i];
        let b = &corners[(i + 1) % n];
        let len = la::dist(a, b);
        if s <= len {
            let t = s / len;
            return vec![a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
        }
        s -= len;
    }
    corners[0].to_vec()
}

/// Place `j` nodes on the closed curve `point: [0,1] → ℝ^d`
/// (with `point(1) = point(0)`) so that all chord lengths are equal:
/// an inner bisection advances node by node at fixed chord length `c`,
/// an outer bisection tunes `c` until the walk closes after exactly
/// `j` chords. Returns the node parameters, or `None` when the walk
/// cannot bracket (chords too long for the curve's features).
fn chord_equidistribute(point: &dyn Fn(f64) -> Vec<f64>, j: usize) -> Option<Vec<f64>> {
    // estimate total length from a fine polyline
    let m = 256 * j;
    let mut total = 0.0;
    let mut prev = point(0.0);
    for i in 1..=m {
        let cur = point(i as f64 / m as f64);
        total += la::dist(&prev, &cur);
        prev = cur;
    }
    let c_mid = total / j as f64;

    // walk the curve with chord length c; returns the parameter after
    // j chords (should be 1 for the right c) and the visited params
    let walk = |c: f64| -> Option<(f64, Vec<f64>)> {
        let mut params = Vec::with_capacity(j);
        let mut u = 0.0;
        let mut p = point(0.0);
        let win0 = 1.0 / j as f64;
        for _ in 0..j {
            params.push(u);
            let mut win = win0;
            let mut iters = 0;
            while la::dist(&p, &point(u + win)) < c {
                win *= 1.5;
                iters += 1;
                if iters > 40 || win > 0.5 {
                    return None;
                }
            }
            let (mut lo, mut hi) = (u, u + win);
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                if la::dist(&p, &point(mid)) < c {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            u = 0.5 * (lo + hi);
            p = point(u);
        }
        Some((u, params))
    };

    let mut lo = 0.7 * c_mid;
    let mut hi = 1.3 * c_mid;
    // the parameter reached after j chords grows monotonically with the
    // chord length; bisect until the walk closes at parameter 1
    let over = |c: f64| walk(c).map(|(end, _)| end - 1.0);
    let f_lo = over(lo)?;
    let f_hi = over(hi)?;
    if f_lo > 0.0 || f_hi < 0.0 {
        return None;
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        match over(mid) {
            Some(v) if v < 0.0 => lo = mid,
            Some(_) => hi = mid,
            None => return None,
        }
    }
    let (_, params) = walk(0.5 * (lo + hi))?;
    Some(params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::monitors;

    #[test]
    fn circle_matches_reparameterized_samples() {
        let x = make_initial_curve("circle", 4, Some(0.1)).unwrap();
        for k in 0..4 {
            let g = 2.0 * PI * (k as f64 / 4.0) + 0.1 * (2.0 * PI * k as f64 / 4.0).sin();
            assert!((x.node(k)[0] - g.cos()).abs() < 1e-15);
            assert!((x.node(k)[1] - g.sin()).abs() < 1e-15);
        }
    }

    #[test]
    fn interlocked_rings_first_node() {
        let x = make_initial_curve("interlocked-rings", 16, None).unwrap();
        assert!((x.node(0)[0] - 2.75).abs() < 1e-15);
        assert!(x.node(0)[1].abs() < 1e-15);
        assert!(x.node(0)[2].abs() < 1e-15);
    }

    #[test]
    fn helix_endpoints_and_closure() {
        let j = 512;
        let x = make_initial_curve("helix", j, None).unwrap();
        // open part endpoints
        assert!(la::dist(x.node(0), &[0.0, 1.0, 0.0]) < 1e-12);
        assert!(la::dist(x.node(j - 3), &[0.0, 1.0, 1.0]) < 1e-12);
        // closing polygon through (0,0,1) and the origin
        assert_eq!(x.node(j - 2), &[0.0, 0.0, 1.0]);
        assert_eq!(x.node(j - 1), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn tube_has_stadium_perimeter_and_equal_chords() {
        let j = 512;
        let x = make_initial_curve("tube", j, None).unwrap();
        let geo = mesh::element_geometry(&x);
        assert!(
            (geo.total_length() - (14.0 + PI)).abs() < 2e-3,
            "length {}",
            geo.total_length()
        );
        let ratio = monitors::mesh_ratio(&x).unwrap();
        assert!(ratio - 1.0 <= 1e-10, "ratio − 1 = {:e}", ratio - 1.0);
        // bounding box 8 × 1
        let xs: Vec<f64> = (0..j).map(|k| x.node(k)[0]).collect();
        let ys: Vec<f64> = (0..j).map(|k| x.node(k)[1]).collect();
        let span = |v: &[f64]| v.iter().cloned().fold(f64::MIN, f64::max)
            - v.iter().cloned().fold(f64::MAX, f64::min);
        assert!((span(&xs) - 8.0).abs() < 1e-3);
        assert!((span(&ys) - 1.0).abs() < 1e-3);
    }

    #[test]
    fn equidistributed_generators_have_unit_ratio() {
        for (name, j, delta) in [
            ("circle", 256, Some(0.0)),
            ("tube", 512, None),
            ("hypocycloid", 512, Some(0.1)),
        ] {
            let x = make_initial_curve(name, j, delta).unwrap();
            let ratio = monitors::mesh_ratio(&x).unwrap();
            assert!(
                ratio - 1.0 <= 1e-10,
                "{name}: ratio − 1 = {:e}",
                ratio - 1.0
            );
        }
    }

    #[test]
    fn all_generators_return_closed_nondegenerate_polygons() {
        for (name, j) in [
            ("circle", 512),
            ("tube", 512),
            ("semicircle-node", 128),
            ("slit", 512),
            ("interlocked-rings", 512),
            ("helix", 512),
            ("lemniscate", 100),
            ("hypocycloid", 512),
        ] {
            let x = make_initial_curve(name, j, None).unwrap();
            let geo = mesh::element_geometry(&x);
            assert!(
                mesh::check_nondegenerate(&geo).is_ok(),
                "{name} has a degenerate element"
            );
            assert_eq!(x.node_count(), j);
        }
    }

    #[test]
    fn semicircle_layout() {
        let j = 128;
        let x = make_initial_curve("semicircle-node", j, None).unwrap();
        // first and last semicircle nodes at (1,0) and (−1,0)
        assert!(la::dist(x.node(0), &[1.0, 0.0]) < 1e-15);
        assert!(la::dist(x.node(j - 2), &[-1.0, 0.0]) < 1e-12);
        assert_eq!(x.node(j - 1), &[0.0, -1.0]);
        // all nodes on the unit circle
        for k in 0..j {
            assert!((la::norm(x.node(k)) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn slit_square_bounding_box() {
        let x = make_initial_curve("slit", 512, None).unwrap();
        let mut max_abs: f64 = 0.0;
        for k in 0..512 {
            max_abs = max_abs.max(x.node(k)[0].abs()).max(x.node(k)[1].abs());
        }
        assert!((max_abs - 1.0).abs() < 1e-12);
        // the slit region is empty of nodes except along its walls
        let inside = (0..512)
            .filter(|&k| {
                let p = x.node(k);
                p[0].abs() < 0.009 && p[1] > -0.99 && p[1] < 0.79
            })
            .count();
        assert_eq!(inside, 0);
    }

    #[test]
    fn lemniscate_bounding_box_is_two_to_one() {
        let x = make_initial_curve("lemniscate", 100, None).unwrap();
        let xs: Vec<f64> = (0..100).map(|k| x.node(k)[0]).collect();
        let ys: Vec<f64> = (0..100).map(|k| x.node(k)[1]).collect();
        let span = |v: &[f64]| v.iter().cloned().fold(f64::MIN, f64::max)
            - v.iter().cloned().fold(f64::MAX, f64::min);
        assert!((span(&xs) - 2.0).abs() < 1e-12);
        assert!(span(&ys) > 0.98 && span(&ys) <= 1.0);
    }

    #[test]
    fn unknown_names_and_bad_parameters_are_rejected() {
        assert!(matches!(
            make_initial_curve("moebius", 64, None),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            make_initial_curve("circle", 64, Some(1.5)),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            make_initial_curve("tube", 64, Some(0.1)),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            make_initial_curve("circle", 2, None),
            Err(Error::InvalidArgument(_))
        ));
        assert!(curve_dim("nope").is_err());
        assert_eq!(curve_dim("helix").unwrap(), 3);
    }

    #[test]
    fn generators_are_deterministic() {
        let a = make_initial_curve("tube", 128, None).unwrap();
        let b = make_initial_curve("tube", 128, None).unwrap();
        assert_eq!(a.values(), b.values());
    }

    #[test]
    fn polyline_roundtrip() {
        let dir = std::env::temp_dir().join("curveflow-polyline-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("tri.csv");
        std::fs::write(&path, "rho,x1,x2\n0,0,0\n0.33,1,0\n0.66,0,1\n").unwrap();
        let x = load_polyline_csv(&path).unwrap();
        assert_eq!(x.node_count(), 3);
        assert_eq!(x.dim(), 2);
        assert_eq!(x.node(2), &[0.0, 1.0]);
    }
}
