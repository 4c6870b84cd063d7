pub mod dirac;
pub mod eikonal;
pub mod error;
pub mod harness;
pub mod numerics;
pub mod oracles;
pub mod potential;
pub mod riccati;
pub mod spectral;
pub mod wkb;

pub use error::{Error, Result};
