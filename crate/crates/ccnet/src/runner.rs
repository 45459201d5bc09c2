//! Thread-pool trial runner.

use ccnet_core::mc::TrialRunner;
use rayon::prelude::*;

/// Environment variable that overrides the default worker count.
pub const WORKERS_ENV: &str = "CCNET_WORKERS";

/// Runs trials on a dedicated rayon pool. Results come back in trial order.
pub struct Parallel {
    pool: rayon::ThreadPool,
}

impl Parallel {
    pub fn new(workers: usize) -> Result<Self, rayon::ThreadPoolBuildError> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers.max(1))
            .build()?;
        Ok(Parallel { pool })
    }

    pub fn workers(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl TrialRunner for Parallel {
    fn run<T, F>(&self, trials: u64, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(u64) -> T + Sync + Send,
    {
        self.pool
            .install(|| (0..trials).into_par_iter().map(&f).collect())
    }
}

/// `CCNET_WORKERS` if set to a positive integer, otherwise the available parallelism.
pub fn default_workers() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keeps_trial_order() {
        let r = Parallel::new(3).unwrap();
        assert_eq!(r.workers(), 3);
        let out = r.run(100, |i| i * i);
        assert_eq!(out, (0..100).map(|i| i * i).collect::<Vec<_>>());
    }
}
