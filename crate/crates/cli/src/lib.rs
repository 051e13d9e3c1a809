//! Command-line front end: corpus file parsing and the `ctsfeat` subcommands.

pub mod app;
pub mod corpus;
pub mod error;
pub mod output;

pub use app::{run, Cli};
pub use error::{CliError, CliResult};
