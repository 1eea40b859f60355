//! Exact sum-of-squares certificates for property T and higher property T.

pub mod ball;
pub mod certify;
pub mod error;
pub mod group;
pub mod linalg;
pub mod oracle;
pub mod presets;
pub mod rat;
pub mod resolution;
pub mod ring;
pub mod sdpa;
pub mod solver;
pub mod sos;

pub use error::{Error, Result};
