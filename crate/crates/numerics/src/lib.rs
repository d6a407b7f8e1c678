//! Dense numerical engines for small lifted relaxations.
//!
//! Three pieces live here:
//!
//! * [`linalg`]: symmetric eigendecomposition and PSD classification.
//! * [`qp`]: a primal-dual interior-point solver for convex quadratic programs,
//!   optionally with convex quadratic inequality constraints.
//! * [`sdp`]: a primal-dual interior-point solver (HKM direction, Mehrotra
//!   predictor-corrector) for a single semidefinite block with linear equality
//!   and inequality constraints.
//!
//! All problem sizes targeted here are dense and small (a few hundred
//! variables at most), so everything is dense and single threaded.

mod error;
pub mod linalg;
pub mod qp;
pub mod sdp;

pub use error::NumericsError;
pub use linalg::{eigen_sym, psd_status, spectral_norm, EigenResult, PsdStatus};
pub use qp::{solve_qp, LinearRow, QpModel, QpSettings, QpSolution, QpStatus, QuadraticConstraint};
pub use sdp::{
    solve_sdp, ConstraintKind, SdpConstraint, SdpProblem, SdpSettings, SdpSolution, SdpStatus,
};
