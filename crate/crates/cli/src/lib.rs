//! Configuration-driven experiment drivers on top of `rbgrf`.

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;
pub mod timing;

pub use config::{Experiment, RunConfig};
pub use error::{CliError, Result};
pub use experiments::run;
