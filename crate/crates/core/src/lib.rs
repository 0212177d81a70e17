//! Computational divergences between quantum states.
//!
//! Divergences are optimized only over binary measurements that a bounded
//! number of gates can implement. The crate builds those measurement
//! families by exhaustive circuit enumeration and evaluates distinguishability,
//! hypothesis-testing and resource quantities over them.

pub mod approx;
pub mod circuits;
pub mod divergences;
pub mod error;
pub mod hyptest;
pub mod qmatrix;
pub mod random;
pub mod resources;

pub use error::{Error, Result};
