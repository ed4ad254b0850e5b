pub mod dno;
pub mod eigen;
pub mod error;
pub mod expansion;
pub mod ballfield;
pub mod cli;
pub mod harmonics;
pub mod sensitivity;
pub mod shape;

pub use error::{Error, Result};
