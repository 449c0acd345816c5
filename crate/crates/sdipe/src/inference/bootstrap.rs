//! Percentile bootstrap over the full estimation pipeline.

use crate::datamodel::Dataset;
use crate::error::{Error, Result};
use crate::numstat::RngStream;

/// An estimator rerun on each resample: full pipeline, imputation
/// included.
pub type EstimatorFn<'a> = dyn Fn(&Dataset, &mut RngStream) -> Result<f64> + Sync + 'a;

/// Fraction of resamples that may fail (single-arm strata and the like)
/// before the interval is declared unstable.
const MAX_FAIL_FRACTION: f64 = 0.2;

/// 1-based order-statistic indices of the symmetric type-1 percentile
/// interval: lower = ⌈(α/2)·b⌉, upper = b + 1 - lower.
pub(crate) fn percentile_indices(b: usize, level: f64) -> (usize, usize) {
    let alpha = 1.0 - level;
    // tolerance keeps exact products like 0.025·200 from ceiling to 6
    let lo = ((alpha / 2.0) * b as f64 - 1e-9).ceil() as usize;
    let lo = lo.clamp(1, b);
    (lo, b + 1 - lo)
}

/// Percentile confidence interval from `b` row-resampled re-estimations.
///
/// Resample `j` runs on `rng.substream(j)`: the resampled row indices
/// and the estimator's own draws all come from that substream, so the
/// interval is a pure function of (dataset, estimator, b, level, stream).
/// Failed resamples are skipped; more than 20% failing is an error.
pub fn bootstrap_ci(
    ds: &Dataset,
    estimator: &EstimatorFn<'_>,
    b: usize,
    level: f64,
    rng: &RngStream,
) -> Result<(f64, f64)> {
    if b < 2 {
        return Err(Error::Config(format!("bootstrap needs b >= 2, got {b}")));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Config(format!("ci level must lie in (0,1), got {level}")));
    }
    let n = ds.n();
    let mut stats = Vec::with_capacity(b);
    let mut failed = 0usize;
    for j in 0..b {
        let mut stream = rng.substream(j as u64);
        let indices: Vec<usize> = (0..n).map(|_| stream.resample_index(n)).collect();
        let resampled = ds.resample(&indices)?;
        match estimator(&resampled, &mut stream) {
            Ok(tau) => stats.push(tau),
            Err(_) => failed += 1,
        }
    }
    if (failed as f64) > MAX_FAIL_FRACTION * b as f64 || stats.is_empty() {
        return Err(Error::UnstableBootstrap { failed, total: b });
    }
    stats.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let (lo, hi) = percentile_indices(stats.len(), level);
    Ok((stats[lo - 1], stats[hi - 1]))
}
