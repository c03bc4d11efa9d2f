pub mod cli;
pub mod config;
pub mod error;
pub mod flat;
pub mod implicit;
pub mod kernel;
pub mod polytope;
pub mod runtime;
pub mod sim;
pub mod synth;

pub use error::{Error, Result};
