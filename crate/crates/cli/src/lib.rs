//! IO, file formats and the command-line front end for the lexi-morl toolkit.

pub mod ckpt;
pub mod config;
pub mod evalrun;
pub mod manifest;
pub mod report;
pub mod runner;
pub mod selftest;
pub mod traces;
