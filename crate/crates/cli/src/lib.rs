//! Command-line front end for the star-shaped curvature flow solver:
//! configuration files, output formats and the subcommands.

pub mod commands;
pub mod config;
pub mod formats;
pub mod selftest;
