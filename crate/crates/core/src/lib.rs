//! Verification toolkit for the LeBrun family of Ricci-flat Kähler metrics on C².

pub mod bergman;
pub mod coords;
pub mod error;
pub mod exact;
pub mod expansion;
pub mod geometry;
pub mod series;
pub mod suite;

pub use error::{Error, Result};
