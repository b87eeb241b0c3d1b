//! Library surface of the experiment harness: configuration, the fixture
//! zoo, the runner, and report emission. The `lsvp` binary is a thin shell
//! over these.

pub mod config;
pub mod report;
pub mod runner;
pub mod zoo;
