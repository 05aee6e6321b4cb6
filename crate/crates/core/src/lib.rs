//! Sparse sensor arrays for active sensing.
//!
//! * [`geometry`]: array constructors (ULA, nested, symmetric, concatenated
//!   nested, non-overlapping MRA) and Tx/Rx overlap classification.
//! * [`coarray`]: sum and difference co-arrays, redundancy and the
//!   redundancy pattern matrix.
//! * [`mra`]: exact minimum-redundancy array search.
//! * [`manifold`]: steering matrices and the angle-only MIMO measurement model.
//! * [`beamform`]: Tx/Rx beampatterns and image-addition synthesis.
//! * [`formats`]: JSON/CSV interchange types shared by the CLI and the demo.

pub mod beamform;
mod bits;
pub mod coarray;
pub mod error;
pub mod formats;
pub mod geometry;
pub mod linalg;
pub mod manifold;
pub mod mra;

pub use error::{Error, Result};
pub use geometry::{ActiveArrayPair, ArrayConfig};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
