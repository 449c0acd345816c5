//! Delta-adjusted multiple imputation of the missing confounder from a
//! linear model of the observed confounder on (A, W, Y). The shift δ is
//! added to every imputed value, never to observed ones.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::datamodel::{stratify, Dataset};
use crate::error::{Error, Result};
use crate::numstat::{draw_linear_posterior, fit_ols, FittedLinearModel, RngStream};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ImputationConfig {
    /// Number of imputations.
    pub m: usize,
    /// Location shift applied to imputed values.
    pub delta: f64,
    /// Draw model parameters from their sampling distribution before
    /// each imputation (proper MI) instead of plugging in the estimates.
    pub proper: bool,
    /// Test mode: plug-in coefficients and no residual noise.
    pub deterministic: bool,
}

impl Default for ImputationConfig {
    fn default() -> Self {
        ImputationConfig {
            m: 10,
            delta: 0.0,
            proper: true,
            deterministic: false,
        }
    }
}

impl ImputationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m < 1 {
            return Err(Error::Config("m must be at least 1".into()));
        }
        if self.deterministic && self.proper {
            return Err(Error::Config(
                "deterministic imputation implies plug-in parameters (proper = false)".into(),
            ));
        }
        if !self.delta.is_finite() {
            return Err(Error::Config(format!("delta must be finite, got {}", self.delta)));
        }
        Ok(())
    }
}

/// M completed confounder columns under one δ.
#[derive(Clone, Debug)]
pub struct ImputedStack {
    columns: Vec<Vec<f64>>,
    mask: Vec<u8>,
    delta: f64,
}

impl ImputedStack {
    fn new(columns: Vec<Vec<f64>>, ds: &Dataset, delta: f64) -> Result<Self> {
        for col in &columns {
            if col.len() != ds.n() {
                return Err(Error::InvalidData("imputed column length mismatch".into()));
            }
            for (i, &v) in col.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::InvalidData(format!("imputed value not finite at row {i}")));
                }
                if ds.r_z()[i] == 1 && v != ds.z_observed(i) {
                    return Err(Error::InvalidData(format!(
                        "imputed column altered an observed value at row {i}"
                    )));
                }
            }
        }
        Ok(ImputedStack {
            columns,
            mask: ds.r_z().to_vec(),
            delta,
        })
    }

    pub fn m(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j]
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn mask(&self) -> &[u8] {
        &self.mask
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Per-row mean of the completed columns (equals the observed value
    /// on observed rows).
    pub fn mean_column(&self) -> Vec<f64> {
        let n = self.mask.len();
        let m = self.columns.len() as f64;
        (0..n)
            .map(|i| self.columns.iter().map(|c| c[i]).sum::<f64>() / m)
            .collect()
    }
}

/// Design matrix (1, A, W…, Y) over the given rows.
fn imputation_design(ds: &Dataset, rows: &[usize]) -> DMatrix<f64> {
    let p = ds.n_covariates();
    DMatrix::from_fn(rows.len(), p + 3, |r, c| {
        let i = rows[r];
        match c {
            0 => 1.0,
            1 => f64::from(ds.a()[i]),
            c if c <= p + 1 => ds.w_column(c - 2)[i],
            _ => ds.y()[i],
        }
    })
}

/// OLS of the observed confounder on (1, A, W…, Y) over observed rows.
pub fn fit_imputation_model(ds: &Dataset) -> Result<FittedLinearModel> {
    let sv = stratify(ds);
    let k = ds.n_covariates() + 3;
    if sv.observed.len() < k + 2 {
        return Err(Error::InsufficientData(format!(
            "imputation model needs at least {} observed rows, found {}",
            k + 2,
            sv.observed.len()
        )));
    }
    let design = imputation_design(ds, &sv.observed);
    let z_obs = DVector::from_fn(sv.observed.len(), |r, _| ds.z_observed(sv.observed[r]));
    fit_ols(&design, &z_obs)
}

/// One completed confounder column: observed rows copied verbatim,
/// missing rows filled with x'β* + δ + e.
///
/// Draw order: one posterior parameter draw (proper mode), then one
/// noise draw per missing row in row order.
pub fn impute_once(
    ds: &Dataset,
    model: &FittedLinearModel,
    cfg: &ImputationConfig,
    rng: &mut RngStream,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    let sv = stratify(ds);
    let mut completed = ds.z_raw().to_vec();
    if sv.missing.is_empty() {
        return Ok(completed);
    }

    let (coef, sigma) = if cfg.proper {
        draw_linear_posterior(model, rng)
    } else {
        (model.coefficients.clone(), model.residual_variance.sqrt())
    };

    let design = imputation_design(ds, &sv.missing);
    let mean = design * coef;
    for (r, &i) in sv.missing.iter().enumerate() {
        let noise = if cfg.deterministic { 0.0 } else { sigma * rng.normal() };
        completed[i] = mean[r] + cfg.delta + noise;
    }
    Ok(completed)
}

/// M independent completed columns, each on its own substream (indexed
/// by imputation number). When nothing is missing the stack is M copies
/// of the observed column and the stream is not consumed.
pub fn impute_multiply(ds: &Dataset, cfg: &ImputationConfig, rng: &mut RngStream) -> Result<ImputedStack> {
    cfg.validate()?;
    let sv = stratify(ds);
    if sv.missing.is_empty() {
        let columns = vec![ds.z_raw().to_vec(); cfg.m];
        return ImputedStack::new(columns, ds, cfg.delta);
    }

    let model = fit_imputation_model(ds)?;
    let base = rng.split();
    let mut columns = Vec::with_capacity(cfg.m);
    for j in 0..cfg.m {
        let mut stream = base.substream(j as u64);
        columns.push(impute_once(ds, &model, cfg, &mut stream)?);
    }
    ImputedStack::new(columns, ds, cfg.delta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simgen::{generate_complete, generate_masked, SimConfig};
    use approx::assert_abs_diff_eq;

    fn fixture(n: usize, seed: u64, missing: f64) -> Dataset {
        let cfg = SimConfig {
            n,
            seed,
            missing_target: missing,
            ..SimConfig::default()
        };
        generate_masked(&cfg, &mut RngStream::new(seed)).unwrap().0
    }

    fn plugin() -> ImputationConfig {
        ImputationConfig {
            proper: false,
            ..ImputationConfig::default()
        }
    }

    fn deterministic() -> ImputationConfig {
        ImputationConfig {
            proper: false,
            deterministic: true,
            ..ImputationConfig::default()
        }
    }

    #[test]
    fn config_invariants() {
        assert!(ImputationConfig { m: 0, ..ImputationConfig::default() }.validate().is_err());
        assert!(ImputationConfig {
            deterministic: true,
            proper: true,
            ..ImputationConfig::default()
        }
        .validate()
        .is_err());
        assert!(deterministic().validate().is_ok());
    }

    #[test]
    fn exactly_linear_confounder_has_zero_residual() {
        // z = 0.3 + 0.2 a + 0.5 w - 0.1 y on observed rows
        let n = 60;
        let mut rng = RngStream::new(10);
        let a: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
        let w: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
        let z: Vec<f64> = (0..n)
            .map(|i| 0.3 + 0.2 * f64::from(a[i]) + 0.5 * w[i] - 0.1 * y[i])
            .collect();
        let mut r_z = vec![1u8; n];
        r_z[5] = 0;
        r_z[17] = 0;
        let ds = Dataset::new(y, a, vec![w], z, r_z).unwrap();
        let model = fit_imputation_model(&ds).unwrap();
        assert!(model.residual_variance < 1e-18);
    }

    #[test]
    fn coefficients_match_normal_equations_oracle() {
        let ds = fixture(50, 71, 0.3);
        let model = fit_imputation_model(&ds).unwrap();

        // independent oracle: explicit normal equations on observed rows
        let sv = stratify(&ds);
        let rows = &sv.observed;
        let k = 4;
        let x = DMatrix::from_fn(rows.len(), k, |r, c| {
            let i = rows[r];
            match c {
                0 => 1.0,
                1 => f64::from(ds.a()[i]),
                2 => ds.w_column(0)[i],
                _ => ds.y()[i],
            }
        });
        let z = DVector::from_fn(rows.len(), |r, _| ds.z_observed(rows[r]));
        let xtx = x.transpose() * &x;
        let xty = x.transpose() * z;
        let beta = xtx.try_inverse().unwrap() * xty;
        for j in 0..k {
            assert_abs_diff_eq!(model.coefficients[j], beta[j], epsilon = 1e-8);
        }
    }

    #[test]
    fn permuting_rows_leaves_fit_unchanged() {
        let ds = fixture(80, 72, 0.3);
        let model = fit_imputation_model(&ds).unwrap();
        let mut perm: Vec<usize> = (0..ds.n()).collect();
        // deterministic shuffle
        let mut rng = RngStream::new(5);
        for i in (1..perm.len()).rev() {
            perm.swap(i, rng.resample_index(i + 1));
        }
        let permuted = ds.subset(&perm).unwrap();
        let model_p = fit_imputation_model(&permuted).unwrap();
        for j in 0..4 {
            assert_abs_diff_eq!(model.coefficients[j], model_p.coefficients[j], epsilon = 1e-10);
        }
    }

    #[test]
    fn too_few_observed_rows_errors() {
        let n = 8;
        let y: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let a: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
        let w = vec![(0..n).map(|i| (i as f64).sin()).collect()];
        let z: Vec<f64> = (0..n).map(|i| i as f64 * 0.3).collect();
        let r_z = vec![1, 1, 1, 1, 1, 0, 0, 0]; // 5 observed < k + 2 = 6
        let ds = Dataset::new(y, a, w, z, r_z).unwrap();
        assert!(matches!(fit_imputation_model(&ds), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn deterministic_mode_is_the_fitted_mean() {
        let ds = fixture(200, 73, 0.3);
        let model = fit_imputation_model(&ds).unwrap();
        let cfg = deterministic();
        let col = impute_once(&ds, &model, &cfg, &mut RngStream::new(0)).unwrap();
        let sv = stratify(&ds);
        let design = imputation_design(&ds, &sv.missing);
        let mean = design * &model.coefficients;
        for (r, &i) in sv.missing.iter().enumerate() {
            assert_eq!(col[i], mean[r]);
        }
    }

    #[test]
    fn delta_shifts_deterministic_imputations() {
        let ds = fixture(200, 74, 0.3);
        let model = fit_imputation_model(&ds).unwrap();
        let base = deterministic();
        let shifted = ImputationConfig { delta: 0.4, ..deterministic() };
        let col0 = impute_once(&ds, &model, &base, &mut RngStream::new(0)).unwrap();
        let col4 = impute_once(&ds, &model, &shifted, &mut RngStream::new(0)).unwrap();
        for i in 0..ds.n() {
            if ds.r_z()[i] == 0 {
                assert_abs_diff_eq!(col4[i] - col0[i], 0.4, epsilon = 1e-12);
            } else {
                assert_eq!(col4[i], col0[i]);
            }
        }
    }

    #[test]
    fn proper_mode_unbiased_at_a_fixed_row() {
        let ds = fixture(300, 75, 0.3);
        let model = fit_imputation_model(&ds).unwrap();
        let sv = stratify(&ds);
        let row = sv.missing[0];
        let design = imputation_design(&ds, &[row]);
        let target = (design.clone() * &model.coefficients)[0];

        let cfg = ImputationConfig::default();
        let mut rng = RngStream::new(123);
        let reps = 10_000;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for _ in 0..reps {
            let col = impute_once(&ds, &model, &cfg, &mut rng).unwrap();
            sum += col[row];
            sumsq += col[row] * col[row];
        }
        let mean = sum / reps as f64;
        let var = sumsq / reps as f64 - mean * mean;
        let se = (var / reps as f64).sqrt();
        assert!(
            (mean - target).abs() < 4.0 * se,
            "mean {mean} vs {target} (4se = {})",
            4.0 * se
        );
    }

    #[test]
    fn no_missing_rows_short_circuits() {
        let cfg = SimConfig { n: 100, seed: 8, ..SimConfig::default() };
        let (ds, _) = generate_complete(&cfg, &mut RngStream::new(8)).unwrap();
        let mut rng = RngStream::new(55);
        let fingerprint = rng.clone().uniform();
        let stack = impute_multiply(&ds, &ImputationConfig::default(), &mut rng).unwrap();
        assert_eq!(stack.m(), 10);
        for j in 0..10 {
            for i in 0..ds.n() {
                assert_eq!(stack.column(j)[i], ds.z_observed(i));
            }
        }
        // the stream was not consumed
        assert_eq!(rng.uniform().to_bits(), fingerprint.to_bits());
    }

    #[test]
    fn m_one_reduces_to_impute_once() {
        let ds = fixture(150, 76, 0.3);
        let cfg = ImputationConfig { m: 1, ..ImputationConfig::default() };
        let mut rng = RngStream::new(9);
        let stack = impute_multiply(&ds, &cfg, &mut rng).unwrap();

        let model = fit_imputation_model(&ds).unwrap();
        let mut rng2 = RngStream::new(9);
        let mut sub = rng2.split().substream(0);
        let col = impute_once(&ds, &model, &cfg, &mut sub).unwrap();
        assert_eq!(stack.column(0), col.as_slice());
    }

    #[test]
    fn between_imputation_variance_sign() {
        let ds = fixture(150, 77, 0.3);
        let sv = stratify(&ds);
        let row = sv.missing[0];

        let proper_stack =
            impute_multiply(&ds, &ImputationConfig::default(), &mut RngStream::new(3)).unwrap();
        let values: Vec<f64> = (0..proper_stack.m()).map(|j| proper_stack.column(j)[row]).collect();
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>();
        assert!(var > 0.0, "proper mode should vary between imputations");

        let det_stack = impute_multiply(&ds, &deterministic(), &mut RngStream::new(3)).unwrap();
        let det_values: Vec<f64> = (0..det_stack.m()).map(|j| det_stack.column(j)[row]).collect();
        assert!(det_values.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn observed_values_preserved_exactly() {
        for seed in [80, 81, 82] {
            let ds = fixture(120, seed, 0.4);
            let stack =
                impute_multiply(&ds, &ImputationConfig::default(), &mut RngStream::new(seed)).unwrap();
            for j in 0..stack.m() {
                for i in 0..ds.n() {
                    if let Some(z) = ds.z(i) {
                        assert_eq!(stack.column(j)[i], z);
                    }
                }
            }
        }
    }

    #[test]
    fn shift_equivariance_in_deterministic_mode() {
        let ds = fixture(150, 83, 0.3);
        let d1 = ImputationConfig { delta: -0.7, ..deterministic() };
        let d2 = ImputationConfig { delta: 0.9, ..deterministic() };
        let s1 = impute_multiply(&ds, &d1, &mut RngStream::new(4)).unwrap();
        let s2 = impute_multiply(&ds, &d2, &mut RngStream::new(4)).unwrap();
        for i in 0..ds.n() {
            if ds.r_z()[i] == 0 {
                assert_abs_diff_eq!(s2.column(0)[i] - s1.column(0)[i], 1.6, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn mar_fixture_recovers_conditional_mean() {
        // mask independently of Z (MCAR fixture): with δ = 0 the imputed
        // mean over masked rows converges to the true masked-row mean
        let cfg = SimConfig { n: 20_000, seed: 91, ..SimConfig::default() };
        let (complete, z_true) = generate_complete(&cfg, &mut RngStream::new(91)).unwrap();
        let mut rng = RngStream::new(92);
        let r_z: Vec<u8> = (0..complete.n()).map(|_| u8::from(!rng.bernoulli(0.3))).collect();
        let w = vec![complete.w_column(0).to_vec()];
        let ds = Dataset::new(
            complete.y().to_vec(),
            complete.a().to_vec(),
            w,
            z_true.clone(),
            r_z,
        )
        .unwrap();

        let stack = impute_multiply(&ds, &ImputationConfig::default(), &mut RngStream::new(93)).unwrap();
        let sv = stratify(&ds);
        let m_rows = &sv.missing;
        let imputed_mean: f64 = stack
            .columns()
            .iter()
            .map(|c| m_rows.iter().map(|&i| c[i]).sum::<f64>() / m_rows.len() as f64)
            .sum::<f64>()
            / stack.m() as f64;
        let true_mean: f64 = m_rows.iter().map(|&i| z_true[i]).sum::<f64>() / m_rows.len() as f64;
        // 4 standard errors of a mean of ~6000 unit-variance-ish values
        let se = 1.0 / (m_rows.len() as f64).sqrt();
        assert!(
            (imputed_mean - true_mean).abs() < 4.0 * se,
            "imputed {imputed_mean} vs true {true_mean}"
        );
    }
}
