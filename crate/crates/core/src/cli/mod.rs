//! Command-line layer: configuration, eigendecomposition cache, verbs and
//! result bundles.

pub mod bundle;
pub mod cache;
pub mod commands;
pub mod config;

pub use bundle::ResultBundle;
pub use commands::Runner;
pub use config::RunConfig;
