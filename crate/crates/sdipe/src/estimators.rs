//! Propensity scoring, stabilized inverse-probability weights, the Hájek
//! weighted ATE, the stratified delta-imputed propensity estimator, and
//! the single-model multiple-imputation comparator.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::datamodel::{stratify, Dataset};
use crate::error::{Error, Result};
use crate::impute::{impute_multiply, ImputationConfig};
use crate::numstat::{expit_unchecked, fit_logistic, RngStream};

/// Propensity clipping bound: fitted scores are forced into
/// [CLIP, 1 - CLIP] to guard positivity on degenerate resamples.
pub const PROPENSITY_CLIP: f64 = 0.01;

const IRLS_MAX_ITER: usize = 50;
const IRLS_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct PropensityFit {
    /// Clipped fitted probabilities.
    pub scores: Vec<f64>,
    /// How many scores hit the clipping bound.
    pub clip_count: usize,
    pub converged: bool,
}

/// Fit treatment on (1, covariates) by logistic regression and return
/// clipped fitted probabilities.
pub fn propensity_scores(covariates: &DMatrix<f64>, a: &[u8]) -> Result<PropensityFit> {
    let n = covariates.nrows();
    let k = covariates.ncols();
    let design = DMatrix::from_fn(n, k + 1, |i, j| if j == 0 { 1.0 } else { covariates[(i, j - 1)] });
    let fit = fit_logistic(&design, a, IRLS_MAX_ITER, IRLS_TOL)?;
    let eta = design * &fit.coefficients;
    let mut clip_count = 0;
    let scores = eta
        .iter()
        .map(|&e| {
            let p = expit_unchecked(e);
            if p < PROPENSITY_CLIP {
                clip_count += 1;
                PROPENSITY_CLIP
            } else if p > 1.0 - PROPENSITY_CLIP {
                clip_count += 1;
                1.0 - PROPENSITY_CLIP
            } else {
                p
            }
        })
        .collect();
    Ok(PropensityFit {
        scores,
        clip_count,
        converged: fit.converged,
    })
}

#[derive(Clone, Debug)]
pub struct WeightVector {
    pub sw: Vec<f64>,
    /// Propensities clipped upstream of these weights.
    pub clip_count: usize,
}

/// Stabilized weights: p̄/ê for treated rows, (1-p̄)/(1-ê) for controls,
/// with p̄ the treated fraction of the rows at hand.
pub fn stabilized_weights(a: &[u8], fit: &PropensityFit) -> WeightVector {
    let n = a.len();
    let p_bar = a.iter().map(|&v| f64::from(v)).sum::<f64>() / n as f64;
    let sw = a
        .iter()
        .zip(&fit.scores)
        .map(|(&ai, &e)| if ai == 1 { p_bar / e } else { (1.0 - p_bar) / (1.0 - e) })
        .collect();
    WeightVector {
        sw,
        clip_count: fit.clip_count,
    }
}

/// Hájek contrast of weighted arm means.
pub fn ate_sw(y: &[f64], a: &[u8], weights: &WeightVector) -> Result<f64> {
    let mut sums = [0.0f64; 2];
    let mut wsum = [0.0f64; 2];
    for ((&yi, &ai), &wi) in y.iter().zip(a).zip(&weights.sw) {
        let arm = usize::from(ai);
        sums[arm] += wi * yi;
        wsum[arm] += wi;
    }
    if wsum[0] == 0.0 || wsum[1] == 0.0 {
        return Err(Error::SingleArm {
            stratum: "sample".into(),
        });
    }
    Ok(sums[1] / wsum[1] - sums[0] / wsum[0])
}

/// Summary statistics of one weight vector.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WeightSummary {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub clip_count: usize,
}

impl WeightSummary {
    fn from_weights(w: &WeightVector) -> Self {
        let n = w.sw.len().max(1) as f64;
        WeightSummary {
            mean: w.sw.iter().sum::<f64>() / n,
            min: w.sw.iter().copied().fold(f64::INFINITY, f64::min),
            max: w.sw.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            clip_count: w.clip_count,
        }
    }

    fn merge(items: &[WeightSummary]) -> Option<WeightSummary> {
        if items.is_empty() {
            return None;
        }
        Some(WeightSummary {
            mean: items.iter().map(|s| s.mean).sum::<f64>() / items.len() as f64,
            min: items.iter().map(|s| s.min).fold(f64::INFINITY, f64::min),
            max: items.iter().map(|s| s.max).fold(f64::NEG_INFINITY, f64::max),
            clip_count: items.iter().map(|s| s.clip_count).sum(),
        })
    }

    /// Under a correctly specified model the mean stabilized weight sits
    /// near 1; outside [0.5, 2] is a diagnostic red flag, not an error.
    pub fn in_diagnostic_band(&self) -> bool {
        self.mean >= 0.5 && self.mean <= 2.0
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct WeightDiagnostics {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub observed: Option<WeightSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub missing: Option<WeightSummary>,
}

/// Combined ATE estimate with its stratum components.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AteEstimate {
    pub tau_hat: f64,
    /// SW-weighted ATE among rows with the confounder observed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau_obs: Option<f64>,
    /// SW-weighted ATE among rows with the confounder missing, pooled
    /// over imputations.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau_miss: Option<f64>,
    pub p_obs: f64,
    /// Per-imputation estimates behind the pooled component:
    /// missing-stratum τ̂ for SDIPE, full-sample τ̂ for the comparator.
    pub per_imputation_tau: Vec<f64>,
    pub diagnostics: WeightDiagnostics,
}

/// Which estimator to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorKind {
    Sdipe,
    Baseline,
}

impl std::fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EstimatorKind::Sdipe => write!(f, "sdipe"),
            EstimatorKind::Baseline => write!(f, "baseline"),
        }
    }
}

impl std::str::FromStr for EstimatorKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sdipe" => Ok(EstimatorKind::Sdipe),
            "baseline" => Ok(EstimatorKind::Baseline),
            other => Err(Error::Config(format!("unknown estimator '{other}'"))),
        }
    }
}

/// Covariate matrix (z-column, W columns) over the given rows; the
/// intercept is added by `propensity_scores`.
fn stratum_covariates(ds: &Dataset, rows: &[usize], z_at: impl Fn(usize) -> f64) -> DMatrix<f64> {
    let p = ds.n_covariates();
    DMatrix::from_fn(rows.len(), p + 1, |r, c| {
        let i = rows[r];
        if c == 0 {
            z_at(i)
        } else {
            ds.w_column(c - 1)[i]
        }
    })
}

fn gather_u8(src: &[u8], rows: &[usize]) -> Vec<u8> {
    rows.iter().map(|&i| src[i]).collect()
}

fn gather_f64(src: &[f64], rows: &[usize]) -> Vec<f64> {
    rows.iter().map(|&i| src[i]).collect()
}

fn name_stratum(err: Error, stratum: &str) -> Error {
    match err {
        Error::Separation | Error::SingleArm { .. } => Error::SingleArm {
            stratum: stratum.to_string(),
        },
        other => other,
    }
}

fn stratum_ate(
    ds: &Dataset,
    rows: &[usize],
    z_at: impl Fn(usize) -> f64,
    stratum: &str,
) -> Result<(f64, WeightSummary)> {
    let covs = stratum_covariates(ds, rows, z_at);
    let a = gather_u8(ds.a(), rows);
    let y = gather_f64(ds.y(), rows);
    let fit = propensity_scores(&covs, &a).map_err(|e| name_stratum(e, stratum))?;
    let weights = stabilized_weights(&a, &fit);
    let tau = ate_sw(&y, &a, &weights).map_err(|e| name_stratum(e, stratum))?;
    Ok((tau, WeightSummary::from_weights(&weights)))
}

/// Stratified delta-imputed propensity estimator.
///
/// The observed stratum is weighted with a propensity model on the
/// measured confounder; the missing stratum refits the propensity on
/// each imputed confounder within the stratum; the two ATEs combine
/// weighted by the stratum proportions. With nothing missing this is
/// exactly full-data SW-IPW and the stream is untouched.
pub fn sdipe(ds: &Dataset, icfg: &ImputationConfig, rng: &mut RngStream) -> Result<AteEstimate> {
    icfg.validate()?;
    let sv = stratify(ds);
    if sv.observed.is_empty() {
        return Err(Error::InsufficientData("no rows with the confounder observed".into()));
    }

    let (tau_obs, obs_summary) = stratum_ate(ds, &sv.observed, |i| ds.z_observed(i), "observed")?;

    if sv.missing.is_empty() {
        return Ok(AteEstimate {
            tau_hat: tau_obs,
            tau_obs: Some(tau_obs),
            tau_miss: None,
            p_obs: 1.0,
            per_imputation_tau: Vec::new(),
            diagnostics: WeightDiagnostics {
                observed: Some(obs_summary),
                missing: None,
            },
        });
    }

    let stack = impute_multiply(ds, icfg, rng)?;
    let mut taus = Vec::with_capacity(stack.m());
    let mut summaries = Vec::with_capacity(stack.m());
    for j in 0..stack.m() {
        let col = stack.column(j);
        let (tau, summary) = stratum_ate(ds, &sv.missing, |i| col[i], "missing")?;
        taus.push(tau);
        summaries.push(summary);
    }
    let tau_miss = taus.iter().sum::<f64>() / taus.len() as f64;
    let tau_hat = tau_obs * sv.p_obs + tau_miss * (1.0 - sv.p_obs);

    Ok(AteEstimate {
        tau_hat,
        tau_obs: Some(tau_obs),
        tau_miss: Some(tau_miss),
        p_obs: sv.p_obs,
        per_imputation_tau: taus,
        diagnostics: WeightDiagnostics {
            observed: Some(obs_summary),
            missing: WeightSummary::merge(&summaries),
        },
    })
}

/// Comparator: delta-adjusted MI followed by one propensity model over
/// all rows per imputation, pooled by averaging the m estimates.
pub fn baseline_mi_sw(ds: &Dataset, icfg: &ImputationConfig, rng: &mut RngStream) -> Result<AteEstimate> {
    icfg.validate()?;
    let sv = stratify(ds);
    let all_rows: Vec<usize> = (0..ds.n()).collect();

    if sv.missing.is_empty() {
        // reduction: identical to full-data SW-IPW, no imputation draws
        let (tau, summary) = stratum_ate(ds, &all_rows, |i| ds.z_observed(i), "full")?;
        return Ok(AteEstimate {
            tau_hat: tau,
            tau_obs: Some(tau),
            tau_miss: None,
            p_obs: 1.0,
            per_imputation_tau: Vec::new(),
            diagnostics: WeightDiagnostics {
                observed: Some(summary),
                missing: None,
            },
        });
    }

    let stack = impute_multiply(ds, icfg, rng)?;
    let mut taus = Vec::with_capacity(stack.m());
    let mut summaries = Vec::with_capacity(stack.m());
    for j in 0..stack.m() {
        let col = stack.column(j);
        let (tau, summary) = stratum_ate(ds, &all_rows, |i| col[i], "full")?;
        taus.push(tau);
        summaries.push(summary);
    }
    let tau_hat = taus.iter().sum::<f64>() / taus.len() as f64;

    Ok(AteEstimate {
        tau_hat,
        tau_obs: None,
        tau_miss: None,
        p_obs: sv.p_obs,
        per_imputation_tau: taus,
        diagnostics: WeightDiagnostics {
            observed: WeightSummary::merge(&summaries),
            missing: None,
        },
    })
}

/// Dispatch on the estimator kind.
pub fn estimate(
    kind: EstimatorKind,
    ds: &Dataset,
    icfg: &ImputationConfig,
    rng: &mut RngStream,
) -> Result<AteEstimate> {
    match kind {
        EstimatorKind::Sdipe => sdipe(ds, icfg, rng),
        EstimatorKind::Baseline => baseline_mi_sw(ds, icfg, rng),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simgen::{generate_complete, generate_masked, SimConfig};
    use approx::assert_abs_diff_eq;

    fn masked_fixture(n: usize, seed: u64) -> Dataset {
        let cfg = SimConfig { n, seed, ..SimConfig::default() };
        generate_masked(&cfg, &mut RngStream::new(seed)).unwrap().0
    }

    #[test]
    fn null_dgp_scores_near_marginal_rate() {
        let n = 10_000;
        let mut rng = RngStream::new(21);
        let covs = DMatrix::from_fn(n, 2, |_, _| rng.normal());
        let a: Vec<u8> = (0..n).map(|_| u8::from(rng.bernoulli(0.35))).collect();
        let fit = propensity_scores(&covs, &a).unwrap();
        let a_bar = a.iter().map(|&v| f64::from(v)).sum::<f64>() / n as f64;
        let se_bar = (a_bar * (1.0 - a_bar) / n as f64).sqrt();
        // slopes are O(n^{-1/2}); with |x| up to ~4 the fitted scores sit
        // within a few joint standard errors of the marginal rate
        for &s in &fit.scores {
            assert!(
                (s - a_bar).abs() < 12.0 * se_bar,
                "score {s} far from marginal {a_bar}"
            );
        }
    }

    #[test]
    fn dgp_scores_calibrate_by_decile() {
        let cfg = SimConfig { n: 100_000, ..SimConfig::default() };
        let (ds, z_true) = generate_complete(&cfg, &mut RngStream::new(22)).unwrap();
        let rows: Vec<usize> = (0..ds.n()).collect();
        let covs = stratum_covariates(&ds, &rows, |i| z_true[i]);
        let fit = propensity_scores(&covs, ds.a()).unwrap();

        let mut order: Vec<usize> = (0..ds.n()).collect();
        order.sort_by(|&i, &j| fit.scores[i].partial_cmp(&fit.scores[j]).unwrap());
        for chunk in order.chunks(ds.n() / 10) {
            let mean_score: f64 =
                chunk.iter().map(|&i| fit.scores[i]).sum::<f64>() / chunk.len() as f64;
            let mean_a: f64 =
                chunk.iter().map(|&i| f64::from(ds.a()[i])).sum::<f64>() / chunk.len() as f64;
            let se = (mean_score * (1.0 - mean_score) / chunk.len() as f64).sqrt();
            assert!(
                (mean_a - mean_score).abs() < 4.0 * se + 0.005,
                "decile calibration: {mean_a} vs {mean_score}"
            );
        }
    }

    #[test]
    fn scores_respect_clipping_bounds() {
        let n = 2000;
        let mut rng = RngStream::new(23);
        let x: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
        let a: Vec<u8> = x
            .iter()
            .map(|&xi| u8::from(rng.bernoulli(expit_unchecked(4.0 * xi))))
            .collect();
        let covs = DMatrix::from_fn(n, 1, |i, _| x[i]);
        let fit = propensity_scores(&covs, &a).unwrap();
        assert!(fit.scores.iter().all(|&s| (PROPENSITY_CLIP..=1.0 - PROPENSITY_CLIP).contains(&s)));
        assert!(fit.clip_count > 0);
    }

    #[test]
    fn null_stabilization_gives_unit_weights() {
        let a = vec![1u8, 0, 1, 0];
        let fit = PropensityFit {
            scores: vec![0.5; 4],
            clip_count: 0,
            converged: true,
        };
        let w = stabilized_weights(&a, &fit);
        assert!(w.sw.iter().all(|&x| x == 1.0));
    }

    #[test]
    fn two_row_hand_computation() {
        let a = vec![1u8, 0];
        let fit = PropensityFit {
            scores: vec![0.8, 0.2],
            clip_count: 0,
            converged: true,
        };
        let w = stabilized_weights(&a, &fit);
        assert_abs_diff_eq!(w.sw[0], 0.625, epsilon = 1e-15);
        assert_abs_diff_eq!(w.sw[1], 0.625, epsilon = 1e-15);
    }

    #[test]
    fn mean_weight_near_one_on_dgp() {
        let cfg = SimConfig { n: 100_000, ..SimConfig::default() };
        let (ds, z_true) = generate_complete(&cfg, &mut RngStream::new(24)).unwrap();
        let rows: Vec<usize> = (0..ds.n()).collect();
        let covs = stratum_covariates(&ds, &rows, |i| z_true[i]);
        let fit = propensity_scores(&covs, ds.a()).unwrap();
        let w = stabilized_weights(ds.a(), &fit);
        let mean = w.sw.iter().sum::<f64>() / w.sw.len() as f64;
        assert!((mean - 1.0).abs() < 0.02, "mean weight {mean}");
    }

    #[test]
    fn equal_weights_reduce_to_mean_difference() {
        let y = vec![1.0, 2.0, 3.0, 10.0, 20.0];
        let a = vec![0u8, 0, 0, 1, 1];
        let w = WeightVector { sw: vec![2.5; 5], clip_count: 0 };
        let tau = ate_sw(&y, &a, &w).unwrap();
        assert_abs_diff_eq!(tau, 15.0 - 2.0, epsilon = 1e-12);
    }

    #[test]
    fn constant_outcome_gives_zero() {
        let y = vec![3.25; 6];
        let a = vec![0u8, 1, 0, 1, 0, 1];
        let w = WeightVector {
            sw: vec![0.3, 1.7, 0.9, 1.1, 2.0, 0.5],
            clip_count: 0,
        };
        assert_eq!(ate_sw(&y, &a, &w).unwrap(), 0.0);
    }

    #[test]
    fn six_row_hand_oracle() {
        let y = vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let a = vec![1u8, 1, 1, 0, 0, 0];
        let sw = vec![0.5, 1.0, 1.5, 0.5, 1.0, 1.5];
        let w = WeightVector { sw: sw.clone(), clip_count: 0 };
        // treated: (0.5·1 + 1·2 + 1.5·3)/3 = 7/3; control: (0.5·4 + 1·5 + 1.5·6)/3 = 16/3
        let oracle = (0.5 * 1.0 + 1.0 * 2.0 + 1.5 * 3.0) / (0.5 + 1.0 + 1.5)
            - (0.5 * 4.0 + 1.0 * 5.0 + 1.5 * 6.0) / (0.5 + 1.0 + 1.5);
        let tau = ate_sw(&y, &a, &w).unwrap();
        assert_abs_diff_eq!(tau, oracle, epsilon = 1e-12);
        assert_abs_diff_eq!(tau, -3.0, epsilon = 1e-12);
    }

    #[test]
    fn empty_arm_is_an_error() {
        let y = vec![1.0, 2.0];
        let a = vec![1u8, 1];
        let w = WeightVector { sw: vec![1.0, 1.0], clip_count: 0 };
        assert!(matches!(ate_sw(&y, &a, &w), Err(Error::SingleArm { .. })));
    }

    #[test]
    fn no_missing_reduces_to_full_data_sw_ipw() {
        let cfg = SimConfig { n: 800, seed: 31, ..SimConfig::default() };
        let (ds, z_true) = generate_complete(&cfg, &mut RngStream::new(31)).unwrap();
        let icfg = ImputationConfig::default();

        let mut rng = RngStream::new(1);
        let est = sdipe(&ds, &icfg, &mut rng).unwrap();

        // manual full-data SW-IPW
        let rows: Vec<usize> = (0..ds.n()).collect();
        let covs = stratum_covariates(&ds, &rows, |i| z_true[i]);
        let fit = propensity_scores(&covs, ds.a()).unwrap();
        let w = stabilized_weights(ds.a(), &fit);
        let tau = ate_sw(ds.y(), ds.a(), &w).unwrap();

        assert_eq!(est.tau_hat.to_bits(), tau.to_bits());
        assert_eq!(est.p_obs, 1.0);
        assert!(est.tau_miss.is_none());

        // the baseline collapses to the same computation, bit for bit,
        // with the same (unconsumed) stream
        let mut rng2 = RngStream::new(1);
        let base = baseline_mi_sw(&ds, &icfg, &mut rng2).unwrap();
        assert_eq!(base.tau_hat.to_bits(), est.tau_hat.to_bits());
        assert_eq!(rng.uniform().to_bits(), rng2.uniform().to_bits());
    }

    #[test]
    fn combination_identity_holds() {
        for seed in [41, 42, 43, 44] {
            let ds = masked_fixture(400, seed);
            let est = sdipe(&ds, &ImputationConfig::default(), &mut RngStream::new(seed)).unwrap();
            let combined = est.tau_obs.unwrap() * est.p_obs
                + est.tau_miss.unwrap() * (1.0 - est.p_obs);
            assert!((est.tau_hat - combined).abs() < 1e-12);
            let pooled =
                est.per_imputation_tau.iter().sum::<f64>() / est.per_imputation_tau.len() as f64;
            assert_eq!(est.tau_miss.unwrap().to_bits(), pooled.to_bits());
        }
    }

    #[test]
    fn single_arm_stratum_names_the_stratum() {
        // missing stratum entirely treated
        let n = 40;
        let mut rng = RngStream::new(51);
        let w: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
        let z: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
        let mut a = vec![0u8; n];
        let mut r_z = vec![1u8; n];
        for i in 0..n {
            if i % 2 == 0 {
                a[i] = 1;
            }
        }
        for i in 30..n {
            r_z[i] = 0;
            a[i] = 1; // single arm among missing rows
        }
        let ds = Dataset::new(y, a, vec![w], z, r_z).unwrap();
        match sdipe(&ds, &ImputationConfig::default(), &mut RngStream::new(0)) {
            Err(Error::SingleArm { stratum }) => assert_eq!(stratum, "missing"),
            other => panic!("expected single-arm error, got {other:?}"),
        }
    }

    #[test]
    fn translation_equivariance() {
        let ds = masked_fixture(500, 61);
        for icfg in [
            ImputationConfig { proper: false, ..ImputationConfig::default() },
            ImputationConfig { proper: false, deterministic: true, ..ImputationConfig::default() },
        ] {
            let base = sdipe(&ds, &icfg, &mut RngStream::new(7)).unwrap();
            let shifted_y: Vec<f64> = ds.y().iter().map(|v| v + 11.25).collect();
            let shifted = Dataset::new(
                shifted_y,
                ds.a().to_vec(),
                vec![ds.w_column(0).to_vec()],
                (0..ds.n()).map(|i| ds.z(i).unwrap_or(f64::NAN)).collect(),
                ds.r_z().to_vec(),
            )
            .unwrap();
            let est = sdipe(&shifted, &icfg, &mut RngStream::new(7)).unwrap();
            assert_abs_diff_eq!(est.tau_hat, base.tau_hat, epsilon = 1e-10);
        }
    }

    #[test]
    fn treatment_label_symmetry() {
        let ds = masked_fixture(500, 62);
        let icfg = ImputationConfig { proper: false, ..ImputationConfig::default() };
        let base = sdipe(&ds, &icfg, &mut RngStream::new(8)).unwrap();

        let flipped = Dataset::new(
            ds.y().iter().map(|v| -v).collect(),
            ds.a().iter().map(|&v| 1 - v).collect(),
            vec![ds.w_column(0).to_vec()],
            (0..ds.n()).map(|i| ds.z(i).unwrap_or(f64::NAN)).collect(),
            ds.r_z().to_vec(),
        )
        .unwrap();
        let est = sdipe(&flipped, &icfg, &mut RngStream::new(8)).unwrap();
        assert_abs_diff_eq!(est.tau_hat, base.tau_hat, epsilon = 1e-10);
    }

    #[test]
    fn weight_means_in_diagnostic_band_on_dgp() {
        for seed in [71, 72] {
            let ds = masked_fixture(600, seed);
            let est = sdipe(&ds, &ImputationConfig::default(), &mut RngStream::new(seed)).unwrap();
            assert!(est.diagnostics.observed.as_ref().unwrap().in_diagnostic_band());
            assert!(est.diagnostics.missing.as_ref().unwrap().in_diagnostic_band());
        }
    }

    #[test]
    fn large_sample_consistency() {
        let cfg = SimConfig { n: 100_000, seed: 81, ..SimConfig::default() };
        let (ds, _) = generate_masked(&cfg, &mut RngStream::new(81)).unwrap();
        let est = sdipe(&ds, &ImputationConfig::default(), &mut RngStream::new(82)).unwrap();
        assert!(
            (est.tau_hat - 1.5).abs() < 0.05,
            "large-n SDIPE estimate {} should be within 0.05 of 1.5",
            est.tau_hat
        );
    }

    #[test]
    fn baseline_more_biased_than_sdipe_paired() {
        // paired replicates on the self-masking DGP at 30% missingness
        let reps = 50;
        let master = RngStream::new(90);
        let mut sdipe_sum = 0.0;
        let mut base_sum = 0.0;
        let icfg = ImputationConfig::default();
        for r in 0..reps {
            let mut gen_rng = master.substream(r).substream(0);
            let cfg = SimConfig { n: 10_000, ..SimConfig::default() };
            let (ds, _) = generate_masked(&cfg, &mut gen_rng).unwrap();
            let mut est_rng = master.substream(r).substream(1);
            sdipe_sum += sdipe(&ds, &icfg, &mut est_rng).unwrap().tau_hat;
            let mut est_rng2 = master.substream(r).substream(2);
            base_sum += baseline_mi_sw(&ds, &icfg, &mut est_rng2).unwrap().tau_hat;
        }
        let sdipe_bias = (sdipe_sum / reps as f64 - 1.5).abs();
        let base_bias = (base_sum / reps as f64 - 1.5).abs();
        assert!(
            base_bias > sdipe_bias,
            "baseline bias {base_bias} should exceed SDIPE bias {sdipe_bias}"
        );
    }
}
