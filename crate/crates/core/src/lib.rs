//! Joint spatial-temporal correlation and spatial degrees of freedom for
//! moving reconfigurable intelligent surfaces (RIS) under isotropic
//! scattering.
//!
//! The crate is split along the data flow:
//!
//! - [`geometry`]: element layouts, index mapping, motion vectors, rotations.
//! - [`kernel`]: the closed-form sinc correlation `sinc(2‖d_m − d_n − τv‖/λ)`,
//!   full correlation matrices, decorrelation time and distance.
//! - [`montecarlo`]: a brute-force plane-wave oracle that estimates the same
//!   correlation empirically.
//! - [`spectrum`]: eigenvalue spectra of `R(0)`, effective rank, the DoF limit,
//!   the aperture/spacing rank laws and a coefficient fitter.

// `!(x <= tol)` is deliberate: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod geometry;
pub mod kernel;
pub mod montecarlo;
pub mod spectrum;

mod budget;

pub use budget::MemoryBudget;
pub use error::{Error, Result};
pub use geometry::{
    element_index, make_grid, rotate_grid, velocity_vector, GridMeta, MotionState, RisGrid,
};
pub use kernel::{
    correlation_matrix, correlation_matrix_with_budget, correlation_slice, decorrelation_distance,
    decorrelation_distance_default, decorrelation_time, decorrelation_time_default, sinc,
    st_correlation, temporal_correlation, CorrelationMatrix, SliceTable,
};
pub use montecarlo::{
    array_response, estimate_correlation, estimate_correlation_series, sample_isotropic,
    simulate_channel, ChannelRealization, CorrelationEstimate, PlaneWaveEnsemble,
};
pub use spectrum::{
    dof_limit, effective_rank, eigen_bytes, fit_dof_coefficients, power_capture, rank_eq10,
    rank_eq11, symmetric_eigenvalues, symmetric_eigenvalues_with_budget, DofFit, DofReport,
    EigenSpectrum, RankMethod,
};

pub type Vec3 = nalgebra::Vector3<f64>;
pub type Mat3 = nalgebra::Matrix3<f64>;
