//! Library surface of the `pedmr` batch runner: run configuration and the
//! experiment pipelines, shared between the binary and the acceptance tests.

pub mod config;
pub mod experiments;
