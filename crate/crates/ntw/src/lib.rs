//! Joint alignment of N time-series with a neural continuous-warping model.
//!
//! The solver relaxes multiple sequence alignment to a continuous problem:
//! each discrete warping becomes a continuous map built from an orthonormal
//! basis whose boundary behavior is pinned by construction, the coefficient
//! function is a small fully connected network, and the input series are
//! evaluated off-grid by sinc interpolation whose kernel width anneals from
//! wide (low-pass) to exact over the course of optimization. Discretizing
//! the optimized continuous warping at a fine enough grid yields integer
//! warpings that satisfy the monotonicity, continuity, and boundary
//! constraints of the discrete problem whenever the penalty residual is
//! zero.
//!
//! Modules:
//! - [`interp`] — sinc interpolation and the annealing kernel
//! - [`warp_model`] — basis construction, continuous warps, discretization,
//!   validity scores
//! - [`warp_net`] — the coefficient network and its reverse pass
//! - [`training`] — objective, Adam loop, and the end-to-end solver
//! - [`metrics`] — DTW, barycenter loss, warped average and SD
//! - [`data_io`] — UCR-style loading and result files
//! - [`synth`] — synthetic generators for tests and benches

pub mod data_io;
pub mod error;
pub mod interp;
pub mod metrics;
pub mod synth;
pub mod training;
pub mod warp_model;
pub mod warp_net;

pub use error::{NtwError, Result};
pub use interp::{interpolate, interpolate_grad, sinc_kernel, AnnealState, TimeSeries};
pub use metrics::{barycenter_loss, dtw, dtw_with_path, warped_average, warped_std, AlignedSet, DtwResult};
pub use training::{align, AlignmentResult, LossHistory, LossRecord, Metrics, NtwConfig};
pub use warp_model::{
    build_basis, check_feasibility, eval_warping, sample_warping, ContinuousWarping,
    SampledWarping, ValidityScores, WarpBasis,
};
pub use warp_net::{init_net, NetDims, NetTape, WarpNet};
