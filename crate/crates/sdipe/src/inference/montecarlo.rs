//! Monte Carlo study harness: relative bias, averaged confidence
//! intervals and coverage over replicates, plus the delta-sensitivity
//! sweep.
//!
//! Substream discipline: replicate r runs on `master.substream(r)`,
//! with generation on its substream 0, estimation on 1, and the
//! bootstrap parent on 2 (resample j then uses substream j of that).
//! Reductions run in replicate order, so parallel and serial execution
//! produce identical reports.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bootstrap::{bootstrap_ci, EstimatorFn};
use crate::error::{Error, Result};
use crate::estimators::{estimate, EstimatorKind};
use crate::impute::ImputationConfig;
use crate::numstat::RngStream;
use crate::simgen::{generate_masked, SimConfig};

/// One Monte Carlo scenario.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct McScenario {
    pub sim: SimConfig,
    pub icfg: ImputationConfig,
    pub replicates: usize,
    pub bootstrap_b: usize,
    pub ci_level: f64,
    pub estimator: EstimatorKind,
}

impl McScenario {
    pub fn validate(&self) -> Result<()> {
        self.sim.validate()?;
        self.icfg.validate()?;
        if self.replicates < 1 {
            return Err(Error::Config("replicates must be at least 1".into()));
        }
        if self.bootstrap_b < 2 {
            return Err(Error::Config("bootstrap_b must be at least 2".into()));
        }
        if !(self.ci_level > 0.0 && self.ci_level < 1.0) {
            return Err(Error::Config(format!("ci_level must lie in (0,1), got {}", self.ci_level)));
        }
        Ok(())
    }
}

/// One row of the simulation report.
#[derive(Clone, Debug, Serialize)]
pub struct SimReportRow {
    pub method: EstimatorKind,
    pub n: usize,
    pub prevalence: f64,
    pub missing_pct: f64,
    pub delta: f64,
    /// |mean estimate - true ATE| / true ATE x 100.
    pub relative_bias_pct: f64,
    pub ci_lo_mean: f64,
    pub ci_hi_mean: f64,
    pub coverage: f64,
    /// mean estimate - true ATE (sign retained).
    pub signed_bias: f64,
    pub failed_replicates: usize,
    /// Per-replicate estimates, in replicate order, failures skipped.
    pub raw_estimates: Vec<f64>,
}

struct ReplicateOutcome {
    tau: f64,
    ci: Option<(f64, f64)>,
}

fn run_replicate(
    sc: &McScenario,
    master: &RngStream,
    est: &EstimatorFn<'_>,
    r: usize,
    with_ci: bool,
) -> Result<ReplicateOutcome> {
    let rep = master.substream(r as u64);
    let mut gen_rng = rep.substream(0);
    let (ds, _z_true) = generate_masked(&sc.sim, &mut gen_rng)?;
    let mut est_rng = rep.substream(1);
    let tau = est(&ds, &mut est_rng)?;
    let ci = if with_ci {
        let boot_parent = rep.substream(2);
        Some(bootstrap_ci(&ds, est, sc.bootstrap_b, sc.ci_level, &boot_parent)?)
    } else {
        None
    };
    Ok(ReplicateOutcome { tau, ci })
}

pub(crate) fn run_monte_carlo_with(
    sc: &McScenario,
    master: &RngStream,
    est: &EstimatorFn<'_>,
    parallel: bool,
    with_ci: bool,
) -> Result<SimReportRow> {
    sc.validate()?;
    let outcomes: Vec<Result<ReplicateOutcome>> = if parallel {
        (0..sc.replicates)
            .into_par_iter()
            .map(|r| run_replicate(sc, master, est, r, with_ci))
            .collect()
    } else {
        (0..sc.replicates)
            .map(|r| run_replicate(sc, master, est, r, with_ci))
            .collect()
    };

    let truth = sc.sim.beta1;
    let mut raw = Vec::with_capacity(sc.replicates);
    let mut lo_sum = 0.0;
    let mut hi_sum = 0.0;
    let mut covered = 0usize;
    let mut ci_count = 0usize;
    let mut failed = 0usize;
    for outcome in outcomes {
        match outcome {
            Ok(o) => {
                raw.push(o.tau);
                if let Some((lo, hi)) = o.ci {
                    lo_sum += lo;
                    hi_sum += hi;
                    if lo <= truth && truth <= hi {
                        covered += 1;
                    }
                    ci_count += 1;
                }
            }
            Err(_) => failed += 1,
        }
    }
    if raw.is_empty() {
        return Err(Error::ReplicateFailures {
            failed,
            total: sc.replicates,
        });
    }

    let mean = raw.iter().sum::<f64>() / raw.len() as f64;
    let signed_bias = mean - truth;
    Ok(SimReportRow {
        method: sc.estimator,
        n: sc.sim.n,
        prevalence: sc.sim.prevalence_target,
        missing_pct: sc.sim.missing_target * 100.0,
        delta: sc.icfg.delta,
        relative_bias_pct: signed_bias.abs() / truth * 100.0,
        ci_lo_mean: if ci_count > 0 { lo_sum / ci_count as f64 } else { f64::NAN },
        ci_hi_mean: if ci_count > 0 { hi_sum / ci_count as f64 } else { f64::NAN },
        coverage: if ci_count > 0 { covered as f64 / ci_count as f64 } else { f64::NAN },
        signed_bias,
        failed_replicates: failed,
        raw_estimates: raw,
    })
}

fn kind_estimator(sc: &McScenario) -> impl Fn(&crate::datamodel::Dataset, &mut RngStream) -> Result<f64> + Sync + '_ {
    move |ds, rng| estimate(sc.estimator, ds, &sc.icfg, rng).map(|e| e.tau_hat)
}

/// Run the scenario's estimator over all replicates with bootstrap CIs,
/// parallelized across replicates.
pub fn run_monte_carlo(sc: &McScenario, master: &RngStream) -> Result<SimReportRow> {
    let est = kind_estimator(sc);
    run_monte_carlo_with(sc, master, &est, true, true)
}

/// Serial variant; bit-identical to [`run_monte_carlo`].
pub fn run_monte_carlo_serial(sc: &McScenario, master: &RngStream) -> Result<SimReportRow> {
    let est = kind_estimator(sc);
    run_monte_carlo_with(sc, master, &est, false, true)
}

/// One point of the delta-sensitivity sweep.
#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub delta: f64,
    pub missing_pct: f64,
    pub n: usize,
    /// mean estimate - true ATE, sign retained.
    pub avg_bias: f64,
}

/// Average signed bias per δ on a shared set of replicate seeds;
/// confidence intervals are skipped for speed.
pub fn sensitivity_sweep(sc: &McScenario, delta_grid: &[f64], master: &RngStream) -> Result<Vec<SweepRow>> {
    if delta_grid.is_empty() {
        return Err(Error::Config("delta grid must not be empty".into()));
    }
    let mut rows = Vec::with_capacity(delta_grid.len());
    for &delta in delta_grid {
        let mut scenario = sc.clone();
        scenario.icfg.delta = delta;
        let est = kind_estimator(&scenario);
        let row = run_monte_carlo_with(&scenario, master, &est, true, false)?;
        rows.push(SweepRow {
            delta,
            missing_pct: sc.sim.missing_target * 100.0,
            n: sc.sim.n,
            avg_bias: row.signed_bias,
        });
    }
    Ok(rows)
}
