//! Configuration, file output, and plotting for the `ipm1d` binary.
//!
//! The library half of the driver exists so integration tests can exercise
//! config resolution and the output formats without spawning a process.

pub mod config;
pub mod output;
pub mod plot;
