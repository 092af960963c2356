//! Linearized compressible flow coupled to a clamped beam on a rectangle.

pub mod ambient;
pub mod analyze;
pub mod calculus;
pub mod config;
pub mod elliptic;
pub mod error;
pub mod evolve;
pub mod generator;
pub mod grid;
pub mod init;
pub mod run;
pub mod sparse;
pub mod state_io;

pub use error::{FsiError, Result};
