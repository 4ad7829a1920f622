//! Phase retrieval by projections: building subspace families whose
//! squared projection norms determine a real signal up to sign, certifying
//! or refuting injectivity, and reconstructing signals.

pub mod cli;
pub mod designs;
pub mod error;
pub mod family;
pub mod frames;
pub mod io;
pub mod linalg;
pub mod reconstruct;
pub mod rng;
pub mod verify;

pub use error::{Error, Result};
