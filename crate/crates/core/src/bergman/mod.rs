//! Weighted Bergman space integrals, monomial norms and the density function.

pub mod erfcx;
pub mod integrals;
pub mod kernel;
pub mod quadrature;

pub use integrals::{Weight, LogValue};
pub use quadrature::QuadResult;
