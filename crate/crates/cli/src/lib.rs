//! Command line front end: scenario files, simulation output, spectral
//! analysis and self-verification.

pub mod analyze;
pub mod error;
pub mod output;
pub mod scenario;
pub mod simulate;
pub mod verify;

pub use error::CliError;
pub use scenario::Scenario;
