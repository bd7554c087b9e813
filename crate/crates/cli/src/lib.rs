//! Command-line front end for the minislot scheduling library: single-run
//! simulations from JSON configs, the packaged experiment presets, and the
//! structural/solver verification suites.

pub mod checks;
pub mod error;
pub mod experiments;
pub mod presets;
pub mod simspec;
