//! File formats, the parallel experiment runner and the command line for
//! `rmfs-core`.

pub mod config;
pub mod results;
pub mod runner;
pub mod trace;
