pub mod config;
pub mod diagnostics;
pub mod engine;
pub mod ensemble;
pub mod error;
pub mod exact;
pub mod experiments;
pub mod fields;
pub mod grid;
pub mod kernel;
pub mod output;
pub mod simulation;
pub mod treecode;

pub use error::{Error, Result};
