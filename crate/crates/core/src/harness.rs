//! Error norms against the manufactured solutions and mesh-refinement
//! convergence studies.
//!
//! A convergence run couples the time step to the mesh, `Δt = h²`,
//! builds projected (or interpolated) initial data, advances the
//! forced scheme to the final time and tracks the running maximum over
//! all steps of the L² and H¹ errors in `x` and `y`. Error integrals
//! use the 5-point Gauss rule; the exact fields at the fixed quadrature
//! points are cached per level since only their time factors change.

use crate::error::Result;
use crate::manufactured::ManufacturedFamily;
use crate::mesh::{quad::GAUSS5, NodalField, Partition};
use crate::stepper::{self, CurveState, InitMode, InitialCurve};

/// The four error norms tracked by the studies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorNorms {
    pub x_l2: f64,
    pub x_h1: f64,
    pub y_l2: f64,
    pub y_h1: f64,
}

impl ErrorNorms {
    fn zero() -> ErrorNorms {
        ErrorNorms {
            x_l2: 0.0,
            x_h1: 0.0,
            y_l2: 0.0,
            y_h1: 0.0,
        }
    }

    fn max_with(&mut self, other: &ErrorNorms) {
        self.x_l2 = self.x_l2.max(other.x_l2);
        self.x_h1 = self.x_h1.max(other.x_h1);
        self.y_l2 = self.y_l2.max(other.y_l2);
        self.y_h1 = self.y_h1.max(other.y_h1);
    }

    fn as_array(&self) -> [f64; 4] {
        [self.x_l2, self.x_h1, self.y_l2, self.y_h1]
    }
}

/// One row of a convergence table.
#[derive(Debug, Clone)]
pub struct ErrorRow {
    pub j: usize,
    pub errors: ErrorNorms,
    /// EOC relative to the previous row, `log₂(e_prev/e) / log₂(J/J_prev)`;
    /// `None` on the first row.
    pub eoc: Option<[f64; 4]>,
}

/// Convergence table over a sequence of mesh levels.
#[derive(Debug, Clone)]
pub struct ErrorTable {
    pub rows: Vec<ErrorRow>,
}

impl ErrorTable {
    fn from_levels(levels: &[usize], errors: Vec<ErrorNorms>) -> ErrorTable {
        let mut rows: Vec<ErrorRow> = Vec::with_capacity(levels.len());
        for (i, (&j, e)) in levels.iter().zip(&errors).enumerate() {
            let eoc = (i > 0).then(|| {
                let prev = &rows[i - 1];
                let ratio = (j as f64 / prev.j as f64).log2();
                let pe = prev.errors.as_array();
                let ce = e.as_array();
                [
                    (pe[0] / ce[0]).log2() / ratio,
                    (pe[1] / ce[1]).log2() / ratio,
                    (pe[2] / ce[2]).log2() / ratio,
                    (pe[3] / ce[3]).log2() / ratio,
                ]
            });
            rows.push(ErrorRow { j, errors: *e, eoc });
        }
        ErrorTable { rows }
    }

    /// CSV rendering with one row per level, mirroring the printed
    /// tables: `J,e_x_L2,eoc,e_x_H1,eoc,e_y_L2,eoc,e_y_H1,eoc`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("J,e_x_L2,eoc,e_x_H1,eoc,e_y_L2,eoc,e_y_H1,eoc\n");
        for row in &self.rows {
            let e = row.errors.as_array();
            out.push_str(&row.j.to_string());
            for c in 0..4 {
                out.push(',');
                out.push_str(&format!("{:e}", e[c]));
                out.push(',');
                if let Some(eoc) = row.eoc {
                    out.push_str(&format!("{:.2}", eoc[c]));
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Pointwise exact values used by the norm integrals.
struct PointExact {
    x: [f64; 2],
    x_rho: [f64; 2],
    y: [f64; 2],
    y_rho: [f64; 2],
}

/// Time-independent factors of the exact solution at fixed sample
/// points: position/derivatives split into `e`, `e⊥` components.
struct ExactCache {
    /// Per point: cos g, sin g, g', u, u'.
    rows: Vec<[f64; 5]>,
}

impl ExactCache {
    fn new(fam: &ManufacturedFamily, rhos: impl Iterator<Item = f64>) -> ExactCache {
        use std::f64::consts::PI;
        let rows = rhos
            .map(|rho| {
                let w = 2.0 * PI * rho;
                let (sw, cw) = w.sin_cos();
                let g = w + fam.delta * sw;
                let g1 = 2.0 * PI * (1.0 + fam.delta * cw);
                let g2 = -4.0 * PI * PI * fam.delta * sw;
                let g3 = -8.0 * PI * PI * PI * fam.delta * cw;
                let u = g2 / (g1 * g1);
                let u1 = g3 / (g1 * g1) - 2.0 * g2 * g2 / (g1 * g1 * g1);
                let (sg, cg) = g.sin_cos();
                [cg, sg, g1, u, u1]
            })
            .collect();
        ExactCache { rows }
    }

    /// Exact fields at cached point `idx` for time factors `(r, c)`.
    fn eval(&self, idx: usize, r: f64, c: &[f64; 2]) -> PointExact {
        let [cg, sg, g1, u, u1] = self.rows[idx];
        let e = [cg, sg];
        let ep = [-sg, cg];
        let comb = |se: f64, sp: f64| [se * e[0] + sp * ep[0], se * e[1] + sp * ep[1]];
        PointExact {
            x: [c[0] + r * e[0], c[1] + r * e[1]],
            x_rho: comb(0.0, r * g1),
            y: comb(-1.0 / r, u / r),
            y_rho: comb(-u * g1 / r, (u1 - g1) / r),
        }
    }
}

fn radius_center(fam: &ManufacturedFamily, t: f64) -> (f64, [f64; 2]) {
    match fam.kind {
        crate::manufactured::FamilyKind::CurveDiffusion => {
            (1.0 + t * t * t, [t * t, t * t])
        }
        crate::manufactured::FamilyKind::Elastic => ((1.0 + 2.0 * t).powf(0.25), [0.0; 2]),
    }
}

/// Norm accumulation against exact fields supplied per Gauss point.
fn norms_with(
    x_h: &NodalField,
    y_h: &NodalField,
    mut exact: impl FnMut(usize, usize, f64) -> PointExact,
) -> ErrorNorms {
    let p = x_h.partition();
    let j = p.element_count();
    let mut acc = [0.0f64; 4]; // x_l2², x_semi², y_l2², y_semi²
    let mut dx = [0.0; 2];
    let mut dy = [0.0; 2];
    for e in 0..j {
        let (n0, n1) = x_h.element_nodes(e);
        let h = p.size(e);
        x_h.element_derivative(e, &mut dx);
        y_h.element_derivative(e, &mut dy);
        let (x0, x1) = (x_h.node(n0), x_h.node(n1));
        let (y0, y1) = (y_h.node(n0), y_h.node(n1));
        for (g, &(xi, wq)) in GAUSS5.iter().enumerate() {
            let rho = p.node(e) + xi * h;
            let ex = exact(e, g, rho);
            let w = wq * h;
            for c in 0..2 {
                let xv = (1.0 - xi) * x0[c] + xi * x1[c];
                let yv = (1.0 - xi) * y0[c] + xi * y1[c];
                acc[0] += w * (ex.x[c] - xv) * (ex.x[c] - xv);
                acc[1] += w * (ex.x_rho[c] - dx[c]) * (ex.x_rho[c] - dx[c]);
                acc[2] += w * (ex.y[c] - yv) * (ex.y[c] - yv);
                acc[3] += w * (ex.y_rho[c] - dy[c]) * (ex.y_rho[c] - dy[c]);
            }
        }
    }
    ErrorNorms {
        x_l2: acc[0].sqrt(),
        x_h1: (acc[0] + acc[1]).sqrt(),
        y_l2: acc[2].sqrt(),
        y_h1: (acc[2] + acc[3]).sqrt(),
    }
}

/// L² and H¹ errors of a state against the exact solution at its time.
pub fn error_norms(state: &CurveState, fam: &ManufacturedFamily) -> ErrorNorms {
    norms_with(&state.x, &state.y, |_, _, rho| {
        let s = fam.exact_state(rho, state.t);
        PointExact {
            x: s.x,
            x_rho: s.x_rho,
            y: s.y,
            y_rho: s.y_rho,
        }
    })
}

/// Run the manufactured-solution convergence study: for each level `J`
/// use `Δt = h²`, march to `t_final` and track the running maxima of
/// the four error norms over all steps.
pub fn run_convergence(
    fam: &ManufacturedFamily,
    levels: &[usize],
    t_final: f64,
    mode: InitMode,
) -> Result<ErrorTable> {
    let mut errors = Vec::with_capacity(levels.len());
    for &j in levels {
        errors.push(run_level(fam, j, t_final, mode)?);
    }
    Ok(ErrorTable::from_levels(levels, errors))
}

/// Single level of the convergence study.
pub fn run_level(
    fam: &ManufacturedFamily,
    j: usize,
    t_final: f64,
    mode: InitMode,
) -> Result<ErrorNorms> {
    let partition = Partition::uniform(j)?;
    let h = 1.0 / j as f64;
    let dt = h * h;
    let steps = (t_final / dt).round() as usize;

    let position = fam.position_at(0.0);
    let second = fam.second_variable_at(0.0);
    let x0 = stepper::initial_position(
        &InitialCurve {
            position: &position,
            second_variable: Some(&second),
        },
        &partition,
        2,
        mode,
    )?;
    let mut state = CurveState::new(x0)?;
    let spec = fam.flow_spec(dt);

    // cache the time-independent trig data at all Gauss points
    let cache = ExactCache::new(
        fam,
        (0..j).flat_map(|e| {
            GAUSS5
                .iter()
                .map(move |&(xi, _)| (e as f64 + xi) / j as f64)
        }),
    );

    let mut worst = ErrorNorms::zero();
    let eval_errors = |state: &CurveState, worst: &mut ErrorNorms| {
        let (r, c) = radius_center(fam, state.t);
        let norms = norms_with(&state.x, &state.y, |e, g, _| cache.eval(e * 5 + g, r, &c));
        worst.max_with(&norms);
    };
    eval_errors(&state, &mut worst);
    for _ in 0..steps {
        state = stepper::step(&state, &spec)?;
        eval_errors(&state, &mut worst);
    }
    Ok(worst)
}
