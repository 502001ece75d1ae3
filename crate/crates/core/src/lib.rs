//! Numerical toolkit for the heterogeneous Helmholtz equation
//!
//! ```text
//!     ∇·(A∇u) + k²nu = −f   in ℝ^d,   u outgoing
//! ```
//!
//! truncated to the ball `B_R` with the exact Dirichlet-to-Neumann map.
//!
//! - [`symbol`]: coefficient fields, the semiclassical principal symbol and the
//!   closed-form constants (μ₀, Gårding pair, continuity and quasi-optimality bounds).
//! - [`split`]: smooth cutoffs, FFT Fourier multipliers splitting a function into
//!   low- and high-frequency parts, semiclassical norms and k-scaling fits.
//! - [`dtn`]: Bessel functions and the DtN operator on `∂B_R`.
//! - [`fem`]: hierarchical hp finite elements in 1D and on the disk (angular modes),
//!   banded direct solver, best approximation.
//! - [`experiments`]: solution-operator norms, adjoint approximability, and the
//!   quasi-optimality / pollution / relative-error / decomposition sweeps.

pub mod dtn;
pub mod error;
pub mod experiments;
pub mod fem;
pub mod split;
pub mod symbol;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Crate version, recorded in run manifests.
pub fn version() -> &'static str {
    env!("CARGO_PKG_VERSION")
}
