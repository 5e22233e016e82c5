//! Library side of the `energy-share` command: scenario files, result files and commands.

pub mod commands;
pub mod error;
pub mod input;
pub mod output;

pub use commands::{run, Cli};
pub use error::{CliError, CliResult};
