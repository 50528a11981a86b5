//! Command-line front end for the stickslip solver: configuration
//! parsing, shipped presets, scenario construction, and the file writers
//! behind the `stickslip` binary. Kept as a library so integration tests
//! can drive the same code paths the binary uses.

pub mod commands;
pub mod config;
pub mod output;
pub mod presets;
pub mod scenario;
