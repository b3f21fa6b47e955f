//! Explicit solutions of linear functional difference equations
//! (a₁σ + a₂σ^ν)·Y(z+β) − Ω(z)·Y(z) = F(z, σ) with Gamma-product coefficients.

pub mod cli;
pub mod coefficient;
pub mod error;
pub mod factorization;
pub mod homogeneous;
pub mod particular;
pub mod specfun;
pub mod transmission;

pub use error::{FdeError, Result};
pub use specfun::C64;
