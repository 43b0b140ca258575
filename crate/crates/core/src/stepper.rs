//! Initial-data construction and the semi-implicit time step.
//!
//! One step solves a single coupled `2dJ` linear system for the new
//! position and second variable `(x^{m+1}, y^{m+1})`: the position row
//! block carries the weighted mass of the time difference against the
//! stiffness and implicit coupling of `y^{m+1}` (plus the explicit
//! elastic load and any forcing correction), and the second row block
//! enforces the discrete constraint tying `y^{m+1}` to `x^{m+1}`. For
//! curve diffusion without forcing the step satisfies the discrete
//! energy inequality checked by [`stability_check`].

use std::sync::Arc;

use crate::assembly;
use crate::error::{Error, Result};
use crate::la;
use crate::linsolve::{self, CyclicFactor};
use crate::mesh::{self, quad::GAUSS3, NodalField, Partition};

/// Scale-invariant degeneracy guard: an element is degenerate when its
/// length falls below `1e-12` times the mean element length.
pub const DEGENERACY_REL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowKind {
    CurveDiffusion,
    Elastic,
}

/// Which time level the forcing correction is evaluated at. The old
/// time is the default; the alternative is available as a switch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ForcingTime {
    #[default]
    Old,
    New,
}

/// Forcing field `(ρ, t) ↦ ℝ^d`, written into `out`.
pub type ForcingFn = Arc<dyn Fn(f64, f64, &mut [f64]) + Send + Sync>;

#[derive(Clone)]
pub struct FlowSpec {
    pub kind: FlowKind,
    /// Length-penalty weight of the elastic energy; ignored for curve
    /// diffusion.
    pub lambda: f64,
    pub dt: f64,
    /// Manufactured forcing; present only in verification runs.
    pub forcing: Option<ForcingFn>,
    pub forcing_time: ForcingTime,
}

impl FlowSpec {
    pub fn curve_diffusion(dt: f64) -> FlowSpec {
        FlowSpec {
            kind: FlowKind::CurveDiffusion,
            lambda: 0.0,
            dt,
            forcing: None,
            forcing_time: ForcingTime::Old,
        }
    }

    pub fn elastic(dt: f64, lambda: f64) -> FlowSpec {
        FlowSpec {
            kind: FlowKind::Elastic,
            lambda,
            dt,
            forcing: None,
            forcing_time: ForcingTime::Old,
        }
    }

    pub fn with_forcing(mut self, f: ForcingFn) -> FlowSpec {
        self.forcing = Some(f);
        self
    }
}

/// Time-stamped discrete state `(x^m, y^m)`.
#[derive(Debug, Clone)]
pub struct CurveState {
    pub step: usize,
    pub t: f64,
    pub x: NodalField,
    pub y: NodalField,
}

impl CurveState {
    /// Initial state: computes `y⁰` from `x⁰` via [`initial_y`].
    pub fn new(x0: NodalField) -> Result<CurveState> {
        let y = initial_y(&x0)?;
        Ok(CurveState {
            step: 0,
            t: 0.0,
            x: x0,
            y,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitMode {
    /// Nodal interpolant `π^h x₀` (the default in all plain runs).
    Interpolant,
    /// The projection-type initial datum `x̂⁰`, which restores the
    /// optimal convergence order of the `y` variable.
    Projected,
}

/// Smooth initial curve; `second_variable` is `y₀ = x₀''/|x₀'|²`,
/// required by the projected mode.
pub struct InitialCurve<'a> {
    pub position: &'a dyn Fn(f64) -> Vec<f64>,
    pub second_variable: Option<&'a dyn Fn(f64) -> Vec<f64>>,
}

/// Solve `A x = b` where `A` acts as the same scalar cyclic
/// tridiagonal matrix on each of the `dim` components.
fn solve_scalar_system(
    m: &assembly::ScalarCyclicTridiag,
    dim: usize,
    rhs: &[f64],
) -> Result<Vec<f64>> {
    let j = m.node_count();
    let mut op = linsolve::BlockCyclicTridiag::zeros(j, 1);
    for k in 0..j {
        op.sub_block_mut(k)[0] = m.sub[k];
        op.diag_block_mut(k)[0] = m.diag[k];
        op.sup_block_mut(k)[0] = m.sup[k];
    }
    let factor = CyclicFactor::new(&op)?;
    let mut out = vec![0.0; rhs.len()];
    let mut comp = vec![0.0; j];
    let mut sol = vec![0.0; j];
    for c in 0..dim {
        for k in 0..j {
            comp[k] = rhs[k * dim + c];
        }
        factor.solve(&comp, &mut sol)?;
        for k in 0..j {
            out[k * dim + c] = sol[k];
        }
    }
    Ok(out)
}

/// Build the discrete initial position from a smooth curve.
///
/// `Interpolant` returns the nodal samples `π^h x₀`; `Projected`
/// solves the linear problem whose solution `x̂⁰` differs from `π^h x₀`
/// by `O(h²)` in H¹ and makes the induced `y⁰` second-order accurate:
///
/// ```text
/// ∫ x̂_ρ·η_ρ + ∫ x̂·η = ∫ π^h x₀·η − ∫ π^h[y₀]·η |(π^h x₀)_ρ|²  ∀η.
/// ```
pub fn initial_position(
    curve: &InitialCurve,
    partition: &Arc<Partition>,
    dim: usize,
    mode: InitMode,
) -> Result<NodalField> {
    let px = mesh::interpolate(partition, dim, curve.position);
    match mode {
        InitMode::Interpolant => Ok(px),
        InitMode::Projected => {
            let y0 = curve.second_variable.ok_or_else(|| {
                Error::InvalidArgument(
                    "projected initial data needs y₀ = x₀''/|x₀'|² at the nodes".into(),
                )
            })?;
            let py = mesh::interpolate(partition, dim, y0);

            let mass = assembly::mass(partition);
            let wmass = assembly::weighted_mass(&px);
            let stiff = assembly::stiffness(partition);

            let n = dim * partition.element_count();
            let mut rhs = vec![0.0; n];
            let mut tmp = vec![0.0; n];
            mass.apply(dim, px.values(), &mut rhs);
            wmass.apply(dim, py.values(), &mut tmp);
            for i in 0..n {
                rhs[i] -= tmp[i];
            }

            // lhs operator S + M, coercive
            let lhs = assembly::ScalarCyclicTridiag {
                sub: stiff
                    .sub
                    .iter()
                    .zip(&mass.sub)
                    .map(|(a, b)| a + b)
                    .collect(),
                diag: stiff
                    .diag
                    .iter()
                    .zip(&mass.diag)
                    .map(|(a, b)| a + b)
                    .collect(),
                sup: stiff
                    .sup
                    .iter()
                    .zip(&mass.sup)
                    .map(|(a, b)| a + b)
                    .collect(),
            };
            let values = solve_scalar_system(&lhs, dim, &rhs).map_err(|e| {
                Error::Internal(format!("coercive initial projection failed to solve: {e}"))
            })?;
            Ok(NodalField::from_values(partition, dim, values))
        }
    }
}

/// Solve for the initial second variable `y⁰`:
/// `∫ y⁰·η |x⁰_ρ|² + ∫ x⁰_ρ·η_ρ = 0` for all `η`.
pub fn initial_y(x0: &NodalField) -> Result<NodalField> {
    let geo = mesh::element_geometry(x0);
    mesh::check_nondegenerate(&geo)?;
    let dim = x0.dim();
    let wmass = assembly::weighted_mass(x0);
    let stiff = assembly::stiffness(x0.partition());
    let n = x0.values().len();
    let mut rhs = vec![0.0; n];
    stiff.apply(dim, x0.values(), &mut rhs);
    rhs.iter_mut().for_each(|v| *v = -*v);
    let values = solve_scalar_system(&wmass, dim, &rhs)?;
    Ok(NodalField::from_values(x0.partition(), dim, values))
}

/// One semi-implicit step of the chosen flow: given `(x^m, y^m)`,
/// solve the coupled linear system for `(x^{m+1}, y^{m+1})`.
pub fn step(state: &CurveState, spec: &FlowSpec) -> Result<CurveState> {
    let x = &state.x;
    let y = &state.y;
    let dim = x.dim();
    let j = x.node_count();
    let partition = x.partition();

    let geo = mesh::element_geometry(x);
    mesh::check_nondegenerate(&geo)?;

    let wmass = assembly::weighted_mass(x);
    let stiff = assembly::stiffness(partition);
    let coupling = assembly::cd_implicit_coupling(x, y);
    let matrix = assembly::coupled_step_matrix(&wmass, &stiff, &coupling, spec.dt);

    // right-hand side, node-major (x-rows then y-rows per node)
    let n = dim * j;
    let mut row1 = vec![0.0; n];
    wmass.apply(dim, x.values(), &mut row1);
    if spec.kind == FlowKind::Elastic {
        let f3 = assembly::f3_load(x, y, spec.lambda);
        la::axpy(spec.dt, &f3, &mut row1);
    }
    if let Some(forcing) = &spec.forcing {
        let t_eval = match spec.forcing_time {
            ForcingTime::Old => state.t,
            ForcingTime::New => state.t + spec.dt,
        };
        let mut fvals = vec![0.0; n];
        for k in 0..j {
            forcing(
                partition.node(k),
                t_eval,
                &mut fvals[k * dim..(k + 1) * dim],
            );
        }
        let load = assembly::lumped_load_from_values(partition, dim, &fvals);
        la::axpy(spec.dt, &load, &mut row1);
    }

    let s = 2 * dim;
    let mut rhs = vec![0.0; s * j];
    for k in 0..j {
        rhs[k * s..k * s + dim].copy_from_slice(&row1[k * dim..(k + 1) * dim]);
    }

    let factor = CyclicFactor::new(&matrix).map_err(|e| at_step(e, state.step))?;
    let mut sol = vec![0.0; s * j];
    factor
        .solve(&rhs, &mut sol)
        .map_err(|e| at_step(e, state.step))?;

    let mut xv = vec![0.0; n];
    let mut yv = vec![0.0; n];
    for k in 0..j {
        xv[k * dim..(k + 1) * dim].copy_from_slice(&sol[k * s..k * s + dim]);
        yv[k * dim..(k + 1) * dim].copy_from_slice(&sol[k * s + dim..(k + 1) * s]);
    }
    Ok(CurveState {
        step: state.step + 1,
        t: (state.step + 1) as f64 * spec.dt,
        x: NodalField::from_values(partition, dim, xv),
        y: NodalField::from_values(partition, dim, yv),
    })
}

fn at_step(e: Error, step: usize) -> Error {
    match e {
        Error::SingularSystem {
            residual,
            tolerance,
            ..
        } => Error::SingularSystem {
            step,
            residual,
            tolerance,
        },
        other => other,
    }
}

/// Both sides of the per-step stability inequality for curve diffusion,
///
/// ```text
/// ½∫|x^{m+1}_ρ|² + Δt ∫|y^{m+1}_ρ + (y^m·y^{m+1}) x^m_ρ|²  ≤  ½∫|x^m_ρ|².
/// ```
///
/// Returns `(lhs, rhs)`; the dissipation integral is evaluated exactly
/// (the integrand is piecewise polynomial of degree 4).
pub fn stability_check(old: &CurveState, new: &CurveState, dt: f64) -> (f64, f64) {
    let dim = old.x.dim();
    let j = old.x.node_count();
    let p = old.x.partition();
    let mut a = vec![0.0; dim];
    let mut yr = vec![0.0; dim];
    let mut dissipation = 0.0;
    for e in 0..j {
        let (n0, n1) = old.x.element_nodes(e);
        let h = p.size(e);
        old.x.element_derivative(e, &mut a);
        new.y.element_derivative(e, &mut yr);
        for &(xi, wq) in &GAUSS3 {
            let mut dot_yy = 0.0;
            for c in 0..dim {
                let yo = (1.0 - xi) * old.y.node(n0)[c] + xi * old.y.node(n1)[c];
                let yn = (1.0 - xi) * new.y.node(n0)[c] + xi * new.y.node(n1)[c];
                dot_yy += yo * yn;
            }
            let mut nrm = 0.0;
            for c in 0..dim {
                let v = yr[c] + dot_yy * a[c];
                nrm += v * v;
            }
            dissipation += wq * h * nrm;
        }
    }
    let lhs = 0.5 * new.x.dirichlet_energy() + dt * dissipation;
    let rhs = 0.5 * old.x.dirichlet_energy();
    (lhs, rhs)
}
