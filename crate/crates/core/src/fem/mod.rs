//! hp finite elements for the truncated Helmholtz problem.
//!
//! 1D problems live on `[−R, R]`; radially symmetric 2D problems on the disk are reduced to
//! one radial problem on `[0, R]` per angular mode `m`. Spaces use a hierarchical
//! integrated-Legendre basis of uniform degree and are solved by banded direct LU.

mod approx;
mod assembly;
mod band;
mod basis;
pub mod quadrature;
mod solution;
mod space;

pub use approx::{
    best_approximation, best_approximation_error, h1k_error, reference_h1k_norm, reference_h2_seminorm,
    GreenReference, IndicatorReference, PlaneWaveReference, Reference,
};
pub use assembly::{assemble, gram_matrix, load_l2, load_l2_piecewise, load_planewave, quadrature_points, AssembledSystem};
pub use band::{BandLu, BandMatrix, RESIDUAL_TOL};
pub use basis::{shape_functions, shape_second_derivatives};
pub use solution::{solve, solve_adjoint, DiscreteSolution, ProblemKind, SystemSolver, MAX_CONDITION};
pub use space::{build_space, HpSpace, Mesh1D, Prolongation, SpaceKind, MAX_DEGREE, MAX_QUASI_UNIFORMITY};
