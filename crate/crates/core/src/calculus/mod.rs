//! Product error structures over finitely many coordinates and the
//! second-order jet calculus used to assemble `Γ[X]`, `A[X]` and `Γ[X, Γ[X]]`.
//!
//! A functional `X = F(u_1, …, u_m)` is built by lifting coordinates of a
//! [`BasePoint`] into [`Jet2`]s and combining them. Because the structure is a
//! product, `Γ[u_i, u_j] = 0` for `i ≠ j` and
//!
//! ```text
//! Γ[X, Y] = Σ_i ∂_i X · ∂_i Y · γ_i(u_i)
//! A[X]    = Σ_i ∂_i X · a_i(u_i) + ½ ∂²_ii X · γ_i(u_i)
//! ```
//!
//! Functionals must be twice differentiable in the active coordinates.

mod coordinate;
mod jet;
mod smooth;
mod structure;

pub use coordinate::{sample_base, BasePoint, CoordinateSpec, CustomCoordinate};
pub use jet::{Jet2, MAX_COORDINATES};
pub use smooth::SmoothFn;
pub use structure::{a_of, gamma_grad, gamma_of, quad_of, AuxScalar, ErrorQuad, ErrorTriple};
