//! HTTP service and offline pipeline over `molscape-core`.

pub mod api;
pub mod artifacts;
pub mod config;
pub mod engine;
pub mod error;
pub mod pipeline;
pub mod table;

pub use api::{router, AppState};
pub use config::PipelineConfig;
pub use engine::Engine;
pub use error::{ApiError, PipelineError};

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/service.md")]
mod book {}
