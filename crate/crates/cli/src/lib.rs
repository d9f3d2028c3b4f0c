//! Support code for the `handwash` command-line tool: configuration files
//! and the HTTP status service.

pub mod config_file;
pub mod server;
