//! Attribution evaluation for cross-lingual question answering.

pub mod aggregate;
pub mod cli;
pub mod error;
pub mod evaluate;
pub mod fixtures;
pub mod http;
pub mod ingest;
pub mod metrics;
pub mod mine;
pub mod mock_server;
pub mod model;
pub mod report;
pub mod rerank;
pub mod scorer;
pub mod translate;

pub use error::{Error, Result};
