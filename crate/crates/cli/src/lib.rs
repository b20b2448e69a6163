//! Scenario runner for the `coldplasma` library: manifest handling, the
//! experiments behind each subcommand, CSV output and plot scripts.

pub mod cli;
pub mod error;
pub mod manifest;
pub mod output;
pub mod plots;
pub mod scenarios;
pub mod table;

pub use error::{CliError, Result};
pub use manifest::{Kind, Manifest};
