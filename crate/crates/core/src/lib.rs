//! Multiple rank-1 lattice shifts for reconstructing functions in weighted Korobov spaces.

pub mod bench;
pub mod cbc;
pub mod cosine;
pub mod error;
pub mod fibers;
pub mod korobov;
pub mod reconstruct;
pub mod shifts;

pub use error::{Error, Result};
