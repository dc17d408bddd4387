//! Tubal tensor algebra for order-3 tensors under an invertible mode-3
//! transform, with a semidefinite programming layer on top.
//!
//! Everything numeric is generic over [`Scalar`] (`f64` or `f32`); the
//! aliases at the crate root fix the common double-precision choices.

pub mod algebra;
pub mod completion;
pub mod equivariance;
pub mod error;
pub mod io;
pub mod linalg;
pub mod rng;
pub mod scalar;
pub mod sdp;
pub mod semidefinite;
pub mod sos;
pub mod tensor;
pub mod transform;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Double-precision dense matrix.
pub type MatF64 = linalg::Mat<f64>;
/// Double-precision order-3 tensor.
pub type Tensor3F64 = tensor::Tensor3<f64>;
/// Double-precision tube.
pub type TubeF64 = tensor::Tube<f64>;
/// Double-precision transform.
pub type OrthoTransformF64 = transform::OrthoTransform<f64>;
/// Double-precision ring context.
pub type StarMContextF64 = algebra::StarMContext<f64>;
