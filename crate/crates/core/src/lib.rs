//! Simulation of random variables together with their square field operator
//! `Γ[X]` and generator `A[X]` under local Dirichlet (error) structures, and
//! density estimators built on those quantities.
//!
//! The crate is organised bottom-up:
//!
//! * [`calculus`]: product error structures over finitely many coordinates
//!   and second-order jets from which `Γ[X]`, `A[X]` and `Γ[X, Γ[X]]` are read.
//! * [`wiener`]: the extended Euler scheme for `(X, Γ[X], A[X])` of a scalar
//!   SDE under the Ornstein–Uhlenbeck structure, with a jet oracle.
//! * [`poisson`]: functionals `N(h)` of a Poisson point process under the
//!   white structure.
//! * [`estimators`]: shifted and plain kernel estimators, the sign-weight
//!   direct density formula and its relatives.
//! * [`harness`]: scenarios, quadrature oracles, sweeps and identity checks
//!   used by the `dirichlet-mc` binary.

pub mod calculus;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod poisson;
pub mod rng;
pub mod stats;
pub mod wiener;

pub use error::{Error, Result};
