pub mod applications;
pub mod error;
pub mod filtering;
pub mod generators;
pub mod graph;
pub mod io;
pub mod linalg;
pub mod spectral;

pub use error::{GspError, Result};
