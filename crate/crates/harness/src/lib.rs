//! Command-line driver for the random-field Ising lab: configuration,
//! persisted records and summaries, reports and the acceptance suite.

pub mod cli;
pub mod config;
pub mod error;
pub mod output;
pub mod report;
pub mod verify;

pub use error::{HarnessError, Result};
