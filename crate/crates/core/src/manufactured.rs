//! Closed-form exact solution families for the convergence tests, and
//! the forcing fields that make the discrete schemes reproduce them.
//!
//! Both families are reparameterized circles built on
//! `g(ρ) = 2πρ + δ sin(2πρ)`: the curve diffusion family is a
//! translated, dilated circle, the elastic family an expanding circle
//! that solves the flow exactly (so its forcing is purely tangential).
//! All derivative fields are hand-derived closed forms; the tests
//! validate every one of them against high-order finite differences of
//! the position field alone before anything downstream relies on them.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::forms;
use crate::la;
use crate::stepper::{FlowKind, FlowSpec, ForcingFn};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyKind {
    CurveDiffusion,
    Elastic,
}

/// A manufactured solution family in the plane.
#[derive(Debug, Clone, Copy)]
pub struct ManufacturedFamily {
    pub kind: FamilyKind,
    /// Reparameterization amplitude of `g`; must lie in `[0, 1)` so
    /// that `g` is a diffeomorphism of the periodic interval.
    pub delta: f64,
    /// Length-penalty weight; the elastic family solves the flow with
    /// `λ = 0`.
    pub lambda: f64,
}

/// All pointwise fields of the exact solution at one `(ρ, t)`.
#[derive(Debug, Clone, Copy)]
pub struct ExactEval {
    pub x: [f64; 2],
    pub x_t: [f64; 2],
    pub x_rho: [f64; 2],
    pub x_rhorho: [f64; 2],
    pub y: [f64; 2],
    pub y_rho: [f64; 2],
    pub y_rhorho: [f64; 2],
}

impl ManufacturedFamily {
    pub fn curve_diffusion(delta: f64) -> ManufacturedFamily {
        assert!((0.0..1.0).contains(&delta));
        ManufacturedFamily {
            kind: FamilyKind::CurveDiffusion,
            delta,
            lambda: 0.0,
        }
    }

    pub fn elastic(delta: f64) -> ManufacturedFamily {
        assert!((0.0..1.0).contains(&delta));
        ManufacturedFamily {
            kind: FamilyKind::Elastic,
            delta,
            lambda: 0.0,
        }
    }

    /// Dilation factor `r(t)` and its time derivative.
    fn radius(&self, t: f64) -> (f64, f64) {
        match self.kind {
            FamilyKind::CurveDiffusion => (1.0 + t * t * t, 3.0 * t * t),
            FamilyKind::Elastic => {
                let r = (1.0 + 2.0 * t).powf(0.25);
                (r, 0.5 * (1.0 + 2.0 * t).powf(-0.75))
            }
        }
    }

    /// Translation `c(t)` and its time derivative.
    fn center(&self, t: f64) -> ([f64; 2], [f64; 2]) {
        match self.kind {
            FamilyKind::CurveDiffusion => ([t * t, t * t], [2.0 * t, 2.0 * t]),
            FamilyKind::Elastic => ([0.0; 2], [0.0; 2]),
        }
    }

    /// Exact position and all derivative fields at `(ρ, t)`.
    pub fn exact_state(&self, rho: f64, t: f64) -> ExactEval {
        let w = 2.0 * PI * rho;
        let (sw, cw) = w.sin_cos();
        let g = w + self.delta * sw;
        let g1 = 2.0 * PI * (1.0 + self.delta * cw);
        let g2 = -4.0 * PI * PI * self.delta * sw;
        let g3 = -8.0 * PI * PI * PI * self.delta * cw;
        let g4 = 16.0 * PI * PI * PI * PI * self.delta * sw;
        let (sg, cg) = g.sin_cos();
        let e = [cg, sg];
        let ep = [-sg, cg];

        let u = g2 / (g1 * g1);
        let u1 = g3 / (g1 * g1) - 2.0 * g2 * g2 / (g1 * g1 * g1);
        let u2 = g4 / (g1 * g1) - 6.0 * g2 * g3 / (g1 * g1 * g1)
            + 6.0 * g2 * g2 * g2 / (g1 * g1 * g1 * g1);

        let (r, rdot) = self.radius(t);
        let (c, cdot) = self.center(t);

        let comb = |se: f64, sp: f64| [se * e[0] + sp * ep[0], se * e[1] + sp * ep[1]];
        let x = [c[0] + r * e[0], c[1] + r * e[1]];
        let x_t = [cdot[0] + rdot * e[0], cdot[1] + rdot * e[1]];
        let x_rho = comb(0.0, r * g1);
        let x_rhorho = comb(-r * g1 * g1, r * g2);
        let y = comb(-1.0 / r, u / r);
        let y_rho = comb(-u * g1 / r, (u1 - g1) / r);
        let y_rhorho = comb(
            (g1 * g1 - 2.0 * u1 * g1 - u * g2) / r,
            (u2 - g2 - u * g1 * g1) / r,
        );

        ExactEval {
            x,
            x_t,
            x_rho,
            x_rhorho,
            y,
            y_rho,
            y_rhorho,
        }
    }

    /// Residual forcing `f = |x_ρ|² x_t + y_ρρ − F(x_ρ, y, y_ρ) y`,
    /// with `F = F_cd` or `F_el` according to the family.
    pub fn forcing(&self, rho: f64, t: f64) -> [f64; 2] {
        let s = self.exact_state(rho, t);
        forcing_from_fields(
            self.kind,
            self.lambda,
            &s.x_t,
            &s.x_rho,
            &s.y,
            &s.y_rho,
            &s.y_rhorho,
        )
    }

    /// The forcing as a shareable callback for [`FlowSpec`].
    pub fn forcing_fn(&self) -> ForcingFn {
        let fam = *self;
        Arc::new(move |rho, t, out| {
            let f = fam.forcing(rho, t);
            out[0] = f[0];
            out[1] = f[1];
        })
    }

    /// Flow specification running this family's scheme with its forcing.
    pub fn flow_spec(&self, dt: f64) -> FlowSpec {
        let kind = match self.kind {
            FamilyKind::CurveDiffusion => FlowKind::CurveDiffusion,
            FamilyKind::Elastic => FlowKind::Elastic,
        };
        FlowSpec {
            kind,
            lambda: self.lambda,
            dt,
            forcing: Some(self.forcing_fn()),
            forcing_time: Default::default(),
        }
    }

    /// Position at fixed time as a closure (for initial data).
    pub fn position_at(&self, t: f64) -> impl Fn(f64) -> Vec<f64> + '_ {
        move |rho| self.exact_state(rho, t).x.to_vec()
    }

    /// Second variable at fixed time as a closure.
    pub fn second_variable_at(&self, t: f64) -> impl Fn(f64) -> Vec<f64> + '_ {
        move |rho| self.exact_state(rho, t).y.to_vec()
    }
}

/// Forcing residual from pointwise fields (shared with the
/// finite-difference oracle in the tests).
pub(crate) fn forcing_from_fields(
    kind: FamilyKind,
    lambda: f64,
    x_t: &[f64],
    x_rho: &[f64],
    y: &[f64],
    y_rho: &[f64],
    y_rhorho: &[f64],
) -> [f64; 2] {
    let speed_sq = la::norm_sq(x_rho);
    let f1 = forms::f1_scalar(x_rho, y, y_rho);
    let mut f2y = [0.0; 2];
    forms::f2_apply(x_rho, y, y_rho, y, &mut f2y);
    let f3 = match kind {
        FamilyKind::CurveDiffusion => 0.0,
        FamilyKind::Elastic => forms::f3_scalar(x_rho, y, lambda),
    };
    let mut out = [0.0; 2];
    for c in 0..2 {
        out[c] = speed_sq * x_t[c] + y_rhorho[c] - (f1 + f3) * y[c] - f2y[c];
    }
    out
}
