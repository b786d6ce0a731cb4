//! Fisher information capacity of multi-channel statistical models, with
//! grid and momentum-space evaluations of the same quantity.

pub mod dft;
pub mod error;
pub mod fisher;
pub mod fourier;
pub mod grid;
pub mod io;
pub mod kinematic;
pub mod metric;
pub mod quadrature;
pub mod report;
pub mod statmodel;
pub mod stats;
pub mod verify;

pub use error::{Error, Result};
