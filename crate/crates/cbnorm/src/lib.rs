//! Numerical laboratory for jointly completely bounded norms of bilinear
//! forms on matrix algebras.
//!
//! The crate builds and verifies, at finite dimension, the explicit objects
//! behind the operator-space Grothendieck inequalities:
//!
//! * [`states`] — embezzlement and maximally entangled states in Schmidt
//!   form, bilinear pairings through them, and the sorting-based
//!   distillation protocol.
//! * [`lines`] — the interval-overlap "line" matrices `L(t)`, their rank-one
//!   decomposition, heatmap exports, and the empirical decay constant of the
//!   deficit `t - <z, L(t) z>`.
//! * [`lifting`] — witness sequences under the row/column constraint, the
//!   lifting `x_i -> x_i (x) L^r(t_i)` with its verification report,
//!   truncation of extreme weights, and witness extraction from amplified
//!   pairings.
//! * [`forms`] — bilinear forms as dense coefficient tensors, their
//!   amplifications, see-saw norm estimation, constrained supremum search,
//!   and row/column inflation probes.
//! * [`randmat`] — seeded Gaussian matrix families and the Monte Carlo
//!   estimates of expected operator norms.
//! * [`numerics`] — the dense complex matrix kernels everything else rests
//!   on.
//!
//! Every estimator returns certificates (maximizers, witnesses) that can be
//! re-evaluated independently, and every random quantity derives from an
//! explicit master seed. See the `examples/` directory for one runnable
//! program per capability, and the `cbnorm` binary for the experiment
//! harness.

pub mod cli;
pub mod error;
pub mod forms;
pub mod lifting;
pub mod lines;
pub mod numerics;
pub mod randmat;
pub mod report;
pub mod rng;
pub mod states;

pub use error::{Error, Result};
pub use numerics::{C64, CMatrix};

/// Default tolerances; estimator options accept per-call overrides.
pub mod tol {
    /// Max entrywise deviation tolerated before a matrix is rejected as
    /// non-Hermitian (inputs within it are symmetrized).
    pub const HERMITICITY: f64 = 1e-12;
    /// Unit-norm defect allowed in state constructors.
    pub const UNIT_NORM: f64 = 1e-12;
    /// Slack below zero tolerated in positive-semidefinite checks.
    pub const PSD_SLACK: f64 = 1e-10;
    /// Constraint violation allowed for witnesses returned by searches.
    pub const FEASIBILITY: f64 = 1e-9;
    /// Relative error allowed in exact value identities.
    pub const IDENTITY_REL: f64 = 1e-10;
    /// Schmidt coefficients below this are treated as zero and skipped.
    pub const SCHMIDT_CUTOFF: f64 = 1e-14;
    /// Relative singular-value threshold delimiting the support in polar
    /// factors.
    pub const SUPPORT_CUTOFF: f64 = 1e-12;
    /// Relative improvement below which the see-saw stops.
    pub const SEESAW_REL_IMPROVEMENT: f64 = 1e-10;
}
