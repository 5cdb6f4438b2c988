//! Fuzzy-torus spectral triples: Dirac spectra, multiplicities, functional
//! calculus, spectral actions and Monge-Kantorovich distances.

pub mod acceptance;
pub mod calculus;
pub mod cli;
pub mod error;
pub mod matrix;
pub mod metric;
pub mod spectrum;
pub mod torus;

pub use error::{Error, Result};
