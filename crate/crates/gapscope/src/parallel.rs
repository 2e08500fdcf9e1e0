use gapscope_core::spectra::GridExecutor;
use rayon::prelude::*;

use crate::error::{CliError, Result};

/// Grid executor backed by a rayon pool.
#[derive(Debug, Default)]
pub struct Rayon {
    pool: Option<rayon::ThreadPool>,
}

impl Rayon {
    /// `workers = 0` uses the global pool.
    pub fn new(workers: usize) -> Result<Self> {
        if workers == 0 {
            return Ok(Self { pool: None });
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| CliError::usage(format!("cannot start {workers} workers: {e}")))?;
        Ok(Self { pool: Some(pool) })
    }
}

impl GridExecutor for Rayon {
    fn map<R, F>(&self, len: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        let run = || (0..len).into_par_iter().map(&f).collect();
        match &self.pool {
            Some(p) => p.install(run),
            None => run(),
        }
    }
}
