pub mod bayes;
pub mod interferometric;
pub mod single_lens;
pub mod superres;

use gimlab_core::Execution;

use crate::config::{Experiment, SweepConfig};
use crate::error::LabResult;
use crate::mc;
use crate::table::RunReport;

pub(crate) fn relative_difference(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale < f64::MIN_POSITIVE {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Validates `config` and runs its experiment.
pub fn run_sweep(config: &SweepConfig, exec: Execution) -> LabResult<RunReport> {
    config.validate()?;
    let tol = &config.tolerances;
    let seed = config.seed;
    match &config.experiment {
        Experiment::Interferometric(c) => interferometric::run(c, tol, seed, exec),
        Experiment::SingleLens(c) => single_lens::run(c, tol, seed, exec),
        Experiment::Superres(c) => superres::run(c, tol, seed, exec),
        Experiment::Bayes(c) => bayes::run(c, exec),
        Experiment::Mc(c) => mc::run(c, tol, seed, exec),
    }
}
