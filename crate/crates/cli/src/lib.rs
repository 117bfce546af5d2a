//! Library side of the `hyperwalk` command-line tool: config parsing, the
//! subcommands and the validation suites.

pub mod commands;
pub mod config;
pub mod validate;

pub use commands::{execute, Invocation, EXIT_ERROR};
pub use config::{parse_config, Command, ConfigError, RunConfig};
