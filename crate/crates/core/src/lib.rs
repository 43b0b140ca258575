//! Finite element solver for fourth order geometric evolution of closed
//! curves in `ℝ^d`: curve diffusion and elastic flow, discretized with
//! periodic piecewise linear elements and a semi-implicit time stepping
//! scheme whose built-in tangential motion drives the polygonal mesh
//! towards equidistribution.
//!
//! The crate is organized around the pipeline
//!
//! ```text
//! scenarios ──► stepper ──► monitors ──► driver (CSV output)
//!                 │
//!   manufactured ─┴─► harness (error norms, convergence tables)
//! ```
//!
//! with `mesh`, `forms`, `assembly` and `linsolve` supplying the
//! discretization building blocks underneath.

pub mod assembly;
pub mod driver;
pub mod error;
pub mod forms;
pub mod harness;
pub(crate) mod la;
pub mod linsolve;
pub mod manufactured;
pub mod mesh;
pub mod monitors;
pub mod scenarios;
pub mod stepper;

pub use error::{Error, Result};
pub use stepper::{CurveState, FlowKind, FlowSpec};
pub use mesh::{NodalField, Partition};

