//! Library side of the `qsync` command-line tool.

pub mod config;
pub mod output;
pub mod run;
