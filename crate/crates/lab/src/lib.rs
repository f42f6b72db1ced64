//! Parameter sweeps, Monte Carlo checks and result emission on top of
//! `gimlab-core`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod mc;
pub mod rng;
pub mod sweeps;
pub mod table;

pub use config::{Experiment, Format, SweepConfig};
pub use error::{LabError, LabResult};
pub use sweeps::run_sweep;
pub use table::{emit, Cell, Check, RunReport, Table};
