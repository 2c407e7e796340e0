pub mod cli;
pub mod error;
pub mod field;
pub mod levy;
pub mod measure;
pub mod quadrature;
pub mod stable;
pub mod streams;
pub mod verify;

pub use error::{Error, Result};
