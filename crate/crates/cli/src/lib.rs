//! Batch front-end: parse model and correlation files, run one verification
//! command, and emit a deterministic JSON report.

pub mod canonical;
pub mod cli;
pub mod commands;
pub mod corpus;
pub mod io;
pub mod report;

pub use commands::{run, Command, RunConfig};
pub use report::{Outcome, Report};
