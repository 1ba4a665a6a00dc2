//! Mollifier regularization: extension `E`, Gaussian convolution `C_α`,
//! difference operators and the penalty `Eᵀ(I - C_α)ᵀ D (I - C_α) E`.

pub mod convolution;
pub mod derivatives;
pub mod extension;
pub mod kernel;
pub mod kron;
pub mod penalty;

pub use convolution::{build_convolution, Convolution};
pub use derivatives::{build_derivatives, DifferenceOperators};
pub use extension::{build_extension, ExtendedGrid, Extension};
pub use kernel::GaussianKernel;
pub use penalty::{build_penalty, build_penalty_with, PenaltyWindow, RegularizerStack};
