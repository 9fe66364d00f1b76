//! Library surface of the `renorm` harness: configuration loading, report
//! serialization, and the self-test battery, shared between the binary and
//! the integration tests.

pub mod config;
pub mod report;
pub mod selftest;
