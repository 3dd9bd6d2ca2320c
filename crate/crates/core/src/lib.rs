//! Volume-preserving mean curvature flow of revolution hypersurfaces.
//!
//! A hypersurface is generated by the graph of a radius function `r(z)` over
//! the axis of a rotationally symmetric ambient space with metric
//! `dr² + f(r)² dz² + h(r)² g_S`, cut by the slab `a ≤ z ≤ b` and meeting its
//! walls orthogonally. The crate provides
//!
//! * [`ambient`]: warp functions, sectional curvatures and hypothesis checks,
//! * [`hypersurface`]: discrete curvature, area, volume and critical points,
//! * [`bounds`]: the a-priori radii and the small-volume threshold,
//! * [`flow`]: the explicit time stepper with volume projection,
//! * [`cmc`]: constant-mean-curvature equilibria used as convergence oracles.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ambient;
pub mod bounds;
pub mod cmc;
pub mod expr;
pub mod flow;
pub mod hypersurface;
pub mod quadrature;

use thiserror::Error;

pub use ambient::{AmbientSpace, Preset, SectionalCurvatures, ValidationReport, WarpValues};
pub use bounds::BoundsReport;
pub use cmc::CmcProfile;
pub use flow::{DiagnosticsRecord, FlowConfig, FlowState, RunOutput, StopKind, StopReason};
pub use hypersurface::{CurvatureField, ProfileGrid};

#[derive(Debug, Error)]
pub enum Error {
    #[error("preset {preset:?} requires {expected}, got lambda = {lambda}")]
    PresetSign { preset: Preset, lambda: f64, expected: &'static str },
    #[error("dimension n = {0} is not supported (need n >= 2)")]
    Dimension(usize),
    #[error("radius {r} is outside the ambient domain (0, {r_max})")]
    OutOfDomain { r: f64, r_max: f64 },
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
    #[error(transparent)]
    Expr(#[from] expr::ExprError),
    #[error("cannot invert: target {target} is not reached on [0, {limit})")]
    Inversion { target: f64, limit: f64 },
    #[error("shooting did not converge: {0}")]
    Shooting(String),
    #[error("{0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
