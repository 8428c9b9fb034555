pub mod error;
pub mod graph;
pub mod model;

pub use error::{Error, Result};
pub mod grecursion;
pub mod stability;
pub mod admissible;
pub mod optimize;
pub mod data;
pub mod format;
pub mod random;
pub mod cli;
