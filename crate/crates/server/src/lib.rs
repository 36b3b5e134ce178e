//! Command line entry points and the HTTP scene service.

pub mod cli;
pub mod http;
