//! Problem registry, trace files and the `compgn` command-line front end.

pub mod commands;
pub mod registry;
pub mod spec;
pub mod trace;
