//! Solvers and diagnostics for finite-dimensional variational inequalities
//! `VI(K, F)`: find `x* ∈ K` with `⟨F(x*), x − x*⟩ ≥ 0` for every `x ∈ K`.
//!
//! The crate is organised bottom-up:
//!
//! - [`sets`]: closed convex sets and Euclidean projections (closed form for the
//!   primitive sets, Dykstra's alternating projections for intersections).
//! - [`operators`]: the operator catalog together with sampling estimators for
//!   monotonicity moduli, Lipschitz constants and value bounds.
//! - [`vi`]: natural map, normal map and the residual-based error bounds.
//! - [`solvers`]: gradient projection with constant and diminishing stepsizes,
//!   plus the ball restriction used on unbounded domains.
//! - [`experiments`]: reference-solution oracles, counter-example reproductions,
//!   bound sweeps and convergence-rate studies.
//! - [`report`]: CSV/JSON serialisation helpers shared with the CLI.

pub mod error;
pub mod experiments;
pub mod operators;
pub mod point;
pub mod report;
pub mod sets;
pub mod solvers;
pub mod vi;

pub use error::{Error, Result};
pub use operators::{DeclaredConstants, LipschitzEstimate, OperatorFamily, OperatorSpec, Scaling};
pub use point::Point;
pub use sets::ConvexSet;
pub use solvers::{
    gpm_constant, gpm_unbounded, gpm_variable, DivergenceCause, SolveReport, StepsizeSchedule,
    StopCriteria, Termination, TraceRecord,
};
pub use vi::{BoundKind, ConstantSource, ErrorBoundCertificate, ViProblem};

/// Absolute constraint-violation tolerance used for "x ∈ K" preconditions.
pub const MEMBERSHIP_TOL: f64 = 1e-9;
