//! Command-level stages: provenance manifests, score ingestion and tidy output.

pub mod commands;
pub mod manifest;
pub mod output;
pub mod scores;

pub use commands::UsageError;
pub use manifest::{RunManifest, TOOL_VERSION};
pub use scores::{ScoreRecord, ScoreStore};
