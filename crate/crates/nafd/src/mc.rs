//! Trial loop shared by every Monte-Carlo estimator.

use serde::Serialize;

use crate::rng::{Stream, Streams};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    /// Sample standard deviation over `sqrt(trials)`.
    pub stderr: f64,
    pub trials: usize,
    pub skipped: usize,
}

impl McEstimate {
    pub fn from_samples(xs: &[f64], skipped: usize) -> Self {
        let n = xs.len();
        let mean = xs.iter().sum::<f64>() / n.max(1) as f64;
        let var = if n > 1 {
            xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        Self {
            mean,
            stderr: (var / n.max(1) as f64).sqrt(),
            trials: n,
            skipped,
        }
    }
}

/// Outcome of one trial: `None` marks a skipped (ill-conditioned) draw.
pub type TrialResult = Result<Option<Vec<f64>>>;

/// Runs `trials` independent trials, trial `t` drawing from `streams.trial(t)`,
/// and averages each of the `metrics` outputs. Results do not depend on the
/// number of worker threads.
pub fn run_trials<F>(
    trials: usize,
    streams: &Streams,
    metrics: usize,
    f: F,
) -> Result<Vec<McEstimate>>
where
    F: Fn(&mut Stream) -> TrialResult + Sync,
{
    if trials == 0 {
        return Err(Error::config("trials", "must be at least 1"));
    }
    let one = |t: usize| {
        let mut rng = streams.trial(t as u64);
        f(&mut rng)
    };
    #[cfg(feature = "parallel")]
    let outcomes: Vec<TrialResult> = {
        use rayon::prelude::*;
        (0..trials).into_par_iter().map(one).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let outcomes: Vec<TrialResult> = (0..trials).map(one).collect();

    let mut cols = vec![Vec::with_capacity(trials); metrics];
    let mut skipped = 0;
    for o in outcomes {
        match o? {
            Some(v) => {
                debug_assert_eq!(v.len(), metrics);
                for (c, x) in cols.iter_mut().zip(v) {
                    c.push(x);
                }
            }
            None => skipped += 1,
        }
    }
    if skipped * 100 > trials {
        return Err(Error::TooManySkipped { skipped, trials });
    }
    Ok(cols
        .iter()
        .map(|c| McEstimate::from_samples(c, skipped))
        .collect())
}
