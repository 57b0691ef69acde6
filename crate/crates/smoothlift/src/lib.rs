pub mod catalog;
pub mod checker;
pub mod cones;
pub mod error;
pub mod experiment;
pub mod lift;
pub mod manifold;
pub mod numerics;
pub mod optimize;

pub use error::{LiftError, Result};
