//! Coupled low-Earth-orbit debris and launch-demand model.

pub mod choice;
pub mod count;
pub mod domain;
pub mod econ;
pub mod error;
pub mod io;
pub mod optim;
pub mod pib;
pub mod scenario;
pub mod synthetic;

pub use error::{Error, Result};
