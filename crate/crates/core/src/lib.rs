//! Item-level exploration traffic allocation for cold-start items.

pub mod allocator;
pub mod cli;
pub mod config;
pub mod domain;
pub mod error;
pub mod io;
pub mod metrics;
pub mod model;
pub mod sim;

pub use error::{Error, Result};
