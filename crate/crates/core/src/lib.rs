//! Self-similar fragmentation processes.
//!
//! A unit particle splits after an exponential lifetime of rate `x^α` into
//! children `x ξ_j`, where `{ξ_j}` follows a reproduction law. The crate
//! evaluates the law's characteristic function and Malthusian exponent, the
//! mean power sums `m(t, β) = E Σ X_j(t)^β` and their large-time asymptotics,
//! the moments of the limit measure ρ, and simulates the process exactly to
//! check all of these by Monte Carlo.

pub mod analytics;
pub mod error;
pub mod estimators;
pub mod laws;
pub mod mp;
pub mod quadrature;
pub mod rng;
pub mod roots;
pub mod simulator;
pub mod special;

pub use error::{Error, Result};
pub use laws::{LawKind, LawSpec, ReproductionLaw};
