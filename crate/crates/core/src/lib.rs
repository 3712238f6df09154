//! Polyperspective quantum states for subsystems on worldlines.
//!
//! A scenario places local quantum systems on timelike worldlines in flat
//! spacetime and pins local operations to proper times. The polystate assigns
//! every group of subsystems, each at its own proper time, the state obtained
//! by applying all operations in the union of their causal pasts.

pub mod audit;
pub mod ensemble;
pub mod error;
pub mod fixtures;
pub mod linalg;
pub mod polystate;
pub mod scenario;
pub mod spacetime;

pub use error::{Error, Result};
