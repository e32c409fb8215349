//! Moment equations, density-matrix propagation and the underlying integrators.

pub mod basis;
pub mod density;
pub mod linear;
pub mod moments;
pub mod ode;

pub use basis::{build_basis, ObservableBasis};
pub use density::{propagate_density, DensityTrajectory};
pub use linear::{DenseTrajectory, LinearSystem, Propagation};
pub use moments::{
    build_moment_matrix, build_sandwich_map, propagate_moments, MomentMatrix, MomentSystem, MomentTrajectory,
    SandwichMap,
};
pub use ode::{OdeOptions, OdeStats, DEFAULT_ATOL, DEFAULT_RTOL};
