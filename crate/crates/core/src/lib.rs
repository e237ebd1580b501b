pub mod complexes;
pub mod covers;
pub mod error;
pub mod geometry;
pub mod homology;
pub mod rational;
pub mod scenarios;
pub mod towers;

pub use error::{Error, Result};
