//! Command-line tool and HTTP service over a cardlake index.

pub mod api;
pub mod cli;
pub mod http;
pub mod index;
