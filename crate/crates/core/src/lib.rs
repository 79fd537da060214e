//! Largest root of a black-box real-rooted polynomial.
pub mod accel;
pub mod bench;
pub mod detpoly;
pub mod eigen;
pub mod error;
pub mod newton;
pub mod normalize;
pub mod oracle;
pub mod scalar;

pub use error::{Error, Result};
pub use rug::{Integer, Rational};
