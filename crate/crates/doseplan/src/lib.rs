//! Radiotherapy source planning on a 2-D tissue domain.
//!
//! The library solves the time-dependent M1 moment approximation of
//! radiative transport with a finite volume scheme and computes optimal
//! distributed radiation sources by projected gradient descent, for two
//! objectives: quadratic dose tracking and linear-quadratic cell-survival
//! minimization.
//!
//! The main pieces:
//! - [`grid`]: Cartesian mesh over `[-1,1]²`, tumor/risk/normal regions,
//!   the void annulus, and the per-cell source cap `U(x)`.
//! - [`physics`]: material cross-sections, the Henyey-Greenstein kernel,
//!   and the M1 minimum-entropy closure (Eddington factor and tensor).
//! - [`transport`]: forward and adjoint finite volume moment solvers.
//! - [`sn`]: a small discrete-ordinates reference solver used as a
//!   validation oracle for the closure.
//! - [`objectives`]: dose operator, tracking and survival functionals,
//!   adjoint sources, reduced gradients.
//! - [`optimizer`]: projected gradient descent with Armijo backtracking.
//! - [`scenario`]: run configuration, presets, and field export.

pub mod error;
pub mod export;
pub mod grid;
pub mod objectives;
pub mod optimizer;
pub mod physics;
pub mod scenario;
pub mod sn;
pub mod transport;

pub use error::{Error, Result};
