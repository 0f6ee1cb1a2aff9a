//! Compression of black-box real-valued functions on `[0,1]^d` into
//! quantized tensor trains (QTTs) by multiscale Chebyshev interpolation,
//! recovery of grid samples back from QTTs, and smoothness-based rank and
//! error bounds with brute-force verification oracles.

pub mod bounds;
pub mod cheb;
pub mod construct;
pub mod cores;
pub mod error;
pub mod invert;
pub mod linalg;
pub mod oracle;
pub mod tt;

pub use bounds::SmoothnessSpec;
pub use cheb::{ChebSystem, LocalInterpSystem};
pub use construct::{BitOrder, BuildReport, PolicyMode, TruncationPolicy};
pub use cores::{DangerTree, DecaySchedule};
pub use error::{Error, Result};
pub use invert::GridSamples;
pub use oracle::FunctionOracle;
pub use tt::{DenseQuantizedTensor, NormKind, TensorTrain};
