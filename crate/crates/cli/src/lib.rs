//! Command-line front end for the `dyadic-morrey` toolkit.

pub mod commands;
pub mod error;
pub mod io;
pub mod report;
pub mod suites;
