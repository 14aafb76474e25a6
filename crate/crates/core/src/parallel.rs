use rayon::prelude::*;

use crate::error::{Error, Result};

/// `f(0..n)` on `jobs` worker threads, results in index order.
pub fn map_indexed<T, F>(jobs: usize, n: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    if jobs <= 1 {
        return Ok((0..n).map(f).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {jobs} workers: {e}")))?;
    Ok(pool.install(|| (0..n).into_par_iter().map(f).collect()))
}
