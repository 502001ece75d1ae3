//! Solution-operator diagnostics and the sweep drivers built on them.
//!
//! Rows of a sweep are independent and run on the current rayon pool; wrap calls in
//! [`with_jobs`] to bound the worker count. Results are ordered by `k` and do not depend
//! on the number of workers.

mod config;
mod decomposition;
mod estimators;
mod sweeps;
mod trapping;

pub use config::{geometric_ks, MeshRule, SweepConfig, DEFAULT_C1, DEFAULT_C2};
pub use decomposition::{decomposition_sweep, DecompositionConfig, DecompositionReport, DecompositionRun, PARTITION_TOL};
pub use estimators::{
    csol_of_system, default_modes, estimate_csol, estimate_csol_modes, estimate_eta, NormEstimate,
    MAX_FINE_RESOLUTION, POWER_MAX_ITER, POWER_TOL,
};
pub use sweeps::{
    diagnostic_space, plateau_reduction, pollution_sweep, quasiopt_sweep, relative_error_planewave, FittedConstants,
    SweepReport, SweepRow, SWEEP_COLUMNS,
};
pub use trapping::{scan_space, trapping_scan, TrappingReport, TrappingRow, TrappingScanConfig};

use crate::error::{Error, Result};

/// Runs `f` on a dedicated pool of `jobs` workers (`None`: rayon default).
pub fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match jobs {
        None => Ok(f()),
        Some(0) => Err(Error::InvalidArgument("jobs must be positive".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Numeric(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}
