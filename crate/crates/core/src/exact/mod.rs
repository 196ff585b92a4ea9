//! Exact symbolic verification of the metric, curvature and balance identities.

pub mod gcd;
pub mod poly;
pub mod ratfunc;
pub mod scalar;
pub mod verify;
