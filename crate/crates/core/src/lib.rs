//! k-positivity certification and generation of non-decomposable positive maps.

pub mod certify;
pub mod config;
pub mod error;
pub mod linalg;
pub mod qmaps;
pub mod rng;
pub mod sdp;
pub mod seeds;
pub mod semigroup;

pub use config::{Budget, Tolerances};
pub use error::{Error, Result};
