//! Run configuration shared by the CLI and the Python bindings.

use std::path::PathBuf;

use crate::dirichlet::{DEFAULT_PRIME_CUTOFF, DEFAULT_SERIES_CUTOFF};
use crate::error::{Error, Result};
use crate::report::OutputFormat;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub x_max: u64,
    pub q_max: u64,
    pub prime_cutoff: u64,
    pub series_cutoff: u64,
    pub tolerance: f64,
    pub cache_path: PathBuf,
    pub output_format: OutputFormat,
    /// 0 lets rayon choose.
    pub threads: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            x_max: 1_000_000,
            q_max: 2000,
            prime_cutoff: DEFAULT_PRIME_CUTOFF,
            series_cutoff: DEFAULT_SERIES_CUTOFF,
            tolerance: 1e-6,
            cache_path: PathBuf::from("r3.cache"),
            output_format: OutputFormat::Json,
            threads: 0,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("x_max", self.x_max),
            ("q_max", self.q_max),
            ("prime_cutoff", self.prime_cutoff),
            ("series_cutoff", self.series_cutoff),
        ] {
            if v < 1 {
                return Err(Error::InvalidArgument(format!("{name} must be at least 1")));
            }
        }
        if self.tolerance.is_nan() || self.tolerance <= 0.0 {
            return Err(Error::InvalidArgument("tolerance must be positive".into()));
        }
        Ok(())
    }

    /// A thread pool with the configured worker count.
    pub fn thread_pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.threads)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))
    }
}
