//! File formats, experiment plans, the replication harness and the
//! acceptance suite built on `plis-core`.

pub mod acceptance;
pub mod cli;
pub mod error;
pub mod harness;
pub mod io;
pub mod plan;

pub use error::{AppError, AppResult};
