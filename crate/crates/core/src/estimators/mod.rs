//! Density estimators built on simulated `(X, Γ[X], A[X])` and
//! `Γ[X, Γ[X]]`.
//!
//! * [`shifted_kernel_density`]: Gaussian kernel estimator with covariance
//!   `εΓ[X]` and the mean shifted by `εA[X]`; its bias is `O(ε²)`.
//! * [`plain_kernel_density`]: the same without the shift (`O(ε)` bias).
//! * [`direct_density`] and friends: the sign-weight representation
//!   `f(x) = ½ E[sign(x − X) W]` with
//!   `W = Γ[X, 1/Γ[X]] + 2A[X]/Γ[X]`, which converges at the Monte Carlo rate.

mod batch;
mod direct;
mod kernel;

pub use batch::{DensityEstimate, QuadBatch, TripleBatch};
pub use direct::{
    centered_direct_density, centered_direct_density_with, conditional_expectation, direct_density,
    direct_weight, generator_centering, ibp_residual, regularized_density, regularized_weight,
    sign, weight_centering, CenteredEstimate, CoefficientChoice, ConditionalEstimate,
};
pub use kernel::{
    gaussian_kernel, plain_kernel_density, shifted_kernel_density, DegeneratePolicy, PlainVariant,
    DEGENERATE_DET,
};
