pub mod compare;
pub mod config;
pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod io;
pub mod potential;
pub mod spectral;
pub mod timestepper;
pub mod transform;
pub mod verify;

pub use error::{Error, Result};
