//! Percentile bootstrap for differences in group squared error.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::kde::quantile_sorted;
use crate::error::{Error, Result};
use crate::model::Criterion;
use crate::rng::substream;

pub const MIN_REPLICATIONS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BootstrapConfig {
    pub replications: usize,
    pub seed: u64,
    /// Two-sided coverage of the percentile interval.
    pub level: f64,
}

impl BootstrapConfig {
    pub fn new(replications: usize, seed: u64) -> Self {
        Self {
            replications,
            seed,
            level: 0.95,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BootstrapResult {
    /// GSE(a) - GSE(b) on the observed samples.
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub p_value: f64,
}

fn resampled_gse<R: Rng>(sample: &[f64], y: f64, rng: &mut R) -> f64 {
    let n = sample.len();
    let total = crate::numeric::sum((0..n).map(|_| sample[rng.random_range(0..n)]));
    let e = total / n as f64 - y;
    e * e
}

fn gse(sample: &[f64], y: f64) -> f64 {
    let e = crate::numeric::sum(sample.iter().copied()) / sample.len() as f64 - y;
    e * e
}

/// Resamples each crowd independently with replacement and reports the
/// percentile interval and two-sided bootstrap p-value for
/// `GSE(a) - GSE(b)`.
///
/// Replication `r` draws from its own stream `(seed, r)`, so the first `R`
/// replicates are the same whatever the total count or thread count.
pub fn bootstrap_gse_diff(
    sample_a: &[f64],
    sample_b: &[f64],
    criterion: &Criterion,
    config: &BootstrapConfig,
) -> Result<BootstrapResult> {
    if sample_a.is_empty() || sample_b.is_empty() {
        return Err(Error::EmptyInput("bootstrap sample"));
    }
    if config.replications < MIN_REPLICATIONS {
        return Err(Error::InvalidParameter(format!(
            "bootstrap needs at least {MIN_REPLICATIONS} replications, got {}",
            config.replications
        )));
    }
    if !(config.level > 0.0 && config.level < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "confidence level must lie in (0, 1), got {}",
            config.level
        )));
    }
    let y = criterion.true_value;
    let mut diffs: Vec<f64> = (0..config.replications as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = substream(config.seed, r);
            resampled_gse(sample_a, y, &mut rng) - resampled_gse(sample_b, y, &mut rng)
        })
        .collect();
    diffs.sort_by(f64::total_cmp);

    let alpha = 1.0 - config.level;
    let r = diffs.len() as f64;
    let at_or_below = diffs.iter().filter(|&&d| d <= 0.0).count() as f64;
    let at_or_above = diffs.iter().filter(|&&d| d >= 0.0).count() as f64;
    Ok(BootstrapResult {
        estimate: gse(sample_a, y) - gse(sample_b, y),
        ci_low: quantile_sorted(&diffs, alpha / 2.0),
        ci_high: quantile_sorted(&diffs, 1.0 - alpha / 2.0),
        p_value: (2.0 * at_or_below.min(at_or_above) / r).min(1.0),
    })
}
