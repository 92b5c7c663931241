//! Finsler and Minkowski metric kernels.

pub mod finsler;
pub mod frame;
pub mod indicatrix;
pub mod norm;

pub use finsler::{FiberNorm, FinslerMetric, MetricJet, MetricSpec};
pub use frame::orthonormal_frame;
pub use indicatrix::{fiber_volume, fiber_volume_form, log_volume_gradient, indicatrix_param, indicatrix_point, Indicatrix, IndicatrixPoint};
pub use norm::{
    cartan_tensor_of, fundamental_tensor_of, orthonormal_frame_of, sum_norms, CartanTensor, FundamentalTensor,
    MinkowskiNorm, NormLike, OrthonormalFrame,
};
