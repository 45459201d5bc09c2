//! Monte Carlo plumbing: trial execution and estimators.

use crate::seed::trial_seed;
use alloc::vec::Vec;
#[allow(unused_imports)] // unused when std is linked and inherent float methods win
use num_traits::Float;

/// Executes independent trials. Implementations must return results in trial
/// order, so that any reduction over them is independent of scheduling.
pub trait TrialRunner {
    fn run<T, F>(&self, trials: u64, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(u64) -> T + Sync + Send;
}

/// Runs trials one after another on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl TrialRunner for Sequential {
    fn run<T, F>(&self, trials: u64, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(u64) -> T + Sync + Send,
    {
        (0..trials).map(f).collect()
    }
}

/// Runs `trials` trials, handing each its counter-derived disorder seed.
pub fn run_seeded<R, T, F>(runner: &R, master: u64, trials: u64, f: F) -> Vec<T>
where
    R: TrialRunner + ?Sized,
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    runner.run(trials, |i| f(trial_seed(master, i)))
}

/// Mean with a standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
}

/// Sample mean and the standard error of the mean.
pub fn mean_stderr(values: &[f64]) -> Estimate {
    let n = values.len();
    if n == 0 {
        return Estimate {
            mean: f64::NAN,
            stderr: f64::NAN,
            samples: 0,
        };
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let stderr = if n > 1 {
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    } else {
        f64::NAN
    };
    Estimate {
        mean,
        stderr,
        samples: n,
    }
}

/// Mean with the standard error from `batches` contiguous batch means.
/// Falls back to the plain standard error when there are fewer values than batches.
pub fn batch_means(values: &[f64], batches: usize) -> Estimate {
    let n = values.len();
    if batches < 2 || n < 2 * batches {
        return mean_stderr(values);
    }
    let size = n / batches;
    let means: Vec<f64> = (0..batches)
        .map(|b| {
            let end = if b + 1 == batches { n } else { (b + 1) * size };
            let chunk = &values[b * size..end];
            chunk.iter().sum::<f64>() / chunk.len() as f64
        })
        .collect();
    let mean = values.iter().sum::<f64>() / n as f64;
    let spread = mean_stderr(&means);
    Estimate {
        mean,
        stderr: spread.stderr,
        samples: n,
    }
}

/// Binomial frequency `hits / trials` with `sqrt(p(1 − p)/n)`.
pub fn binomial(hits: usize, trials: usize) -> Estimate {
    let p = hits as f64 / trials as f64;
    Estimate {
        mean: p,
        stderr: (p * (1.0 - p) / trials as f64).sqrt(),
        samples: trials,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn estimators() {
        let e = mean_stderr(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(e.mean, 2.5);
        assert!((e.stderr - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
        let b = batch_means(&[1.0; 100], 10);
        assert_eq!(b.mean, 1.0);
        assert_eq!(b.stderr, 0.0);
        let p = binomial(25, 100);
        assert_eq!(p.mean, 0.25);
        assert!((p.stderr - (0.25f64 * 0.75 / 100.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn sequential_preserves_order() {
        let v = Sequential.run(5, |i| i * i);
        assert_eq!(v, [0, 1, 4, 9, 16]);
        let a = run_seeded(&Sequential, 3, 4, |s| s);
        assert_eq!(a, run_seeded(&Sequential, 3, 4, |s| s));
        assert_eq!(a[1], trial_seed(3, 1));
    }
}
