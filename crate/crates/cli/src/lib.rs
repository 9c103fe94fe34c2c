//! Command-line front end: file I/O, the synthetic experiment harness and
//! the subcommand drivers behind the `idt` binary.

pub mod commands;
pub mod harness;
pub mod io;

pub use commands::{run, Cli};
