//! Gaussian-state and Fisher-information toolkit for thermal-light imaging.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod bayescrb;
pub mod exec;
pub mod fisher;
pub mod gstate;
pub mod linalg;
pub mod measure;
pub mod superres;

pub use error::{Error, Result};
pub use exec::Execution;
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
