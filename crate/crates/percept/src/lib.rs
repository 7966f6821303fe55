//! Command line, model gateway and file formats for the perception-dialogue toolkit.

pub mod adapters;
pub mod cli;
pub mod config;
pub mod gateway;
pub mod io;
pub mod manifest;
pub mod run;
pub mod transcript;
