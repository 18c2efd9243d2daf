//! Feature transplantation for C codebases.
//!
//! The pipeline extracts a feature from a donor program by slicing its
//! dependency graph, reduces and adapts it to a host with a test-guided
//! genetic search, and implants it without duplicating code the host
//! already has.

pub mod adaptation;
pub mod depgraph;
pub mod extractor;
pub mod frontend;
pub mod implantation;
pub mod platform;
pub mod postop;
pub mod reconfigurator;
pub mod sandbox;
pub mod suite;

mod error;
#[cfg(test)]
mod testkit;

pub use error::Error;
