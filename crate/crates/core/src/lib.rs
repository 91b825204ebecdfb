pub mod boundary;
pub mod cli;
pub mod error;
pub mod hilbert;
pub mod histories;
pub mod random;
pub mod scenarios;

pub use error::{Error, Result};
