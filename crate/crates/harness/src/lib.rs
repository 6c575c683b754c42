//! Command-line harness: scenario suites, training, evaluation and reports
//! on top of `cablebot-core`.

pub mod cli;
pub mod config;
pub mod error;
pub mod io;
pub mod model;
pub mod plot;
pub mod report;
pub mod scenarios;
