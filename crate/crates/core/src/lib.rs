//! Mutual-impedance channel model for RIS-assisted MIMO interference
//! networks, with weighted sum-rate optimization of precoders and RIS loads.

pub mod array_factor;
pub mod channel;
pub mod em;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod optimizer;
pub mod quadrature;
pub mod scenario;

pub use error::{Error, Result};
