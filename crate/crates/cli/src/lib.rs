//! Configuration and experiment drivers behind the `bofem` binary.

pub mod args;
pub mod error;
pub mod experiment;
pub mod spec;

pub use error::CliError;
pub use spec::RunSpec;
