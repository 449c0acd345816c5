//! Covariate-balance diagnostics: weighted mean differences between
//! arms within the observed and missing subgroups, under each method's
//! own weights.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::datamodel::{stratify, Dataset};
use crate::error::{Error, Result};
use crate::estimators::{propensity_scores, stabilized_weights, EstimatorKind, WeightVector};
use crate::impute::{impute_multiply, ImputationConfig};
use crate::numstat::RngStream;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Confounder {
    W,
    Z,
}

impl std::fmt::Display for Confounder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Confounder::W => write!(f, "W"),
            Confounder::Z => write!(f, "Z"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Subgroup {
    Observed,
    Missing,
}

impl std::fmt::Display for Subgroup {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Subgroup::Observed => write!(f, "observed"),
            Subgroup::Missing => write!(f, "missing"),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BalanceRow {
    pub confounder: Confounder,
    pub subgroup: Subgroup,
    pub method: EstimatorKind,
    pub abs_diff: f64,
}

/// |weighted treated mean - weighted control mean| of `values` over the
/// given rows, with per-row weights aligned to `rows`.
pub(crate) fn weighted_abs_diff(
    values: &[f64],
    a: &[u8],
    weights: &[f64],
    rows: &[usize],
) -> Result<f64> {
    let mut sums = [0.0f64; 2];
    let mut wsum = [0.0f64; 2];
    for (k, &i) in rows.iter().enumerate() {
        let arm = usize::from(a[i]);
        sums[arm] += weights[k] * values[i];
        wsum[arm] += weights[k];
    }
    if wsum[0] == 0.0 || wsum[1] == 0.0 {
        return Err(Error::SingleArm {
            stratum: "balance subgroup".into(),
        });
    }
    Ok((sums[1] / wsum[1] - sums[0] / wsum[0]).abs())
}

fn covariates(ds: &Dataset, rows: &[usize], z_at: impl Fn(usize) -> f64) -> DMatrix<f64> {
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

fn subgroup_weights(ds: &Dataset, rows: &[usize], z_at: impl Fn(usize) -> f64) -> Result<WeightVector> {
    let covs = covariates(ds, rows, z_at);
    let a: Vec<u8> = rows.iter().map(|&i| ds.a()[i]).collect();
    let fit = propensity_scores(&covs, &a)?;
    Ok(stabilized_weights(&a, &fit))
}

/// Balance rows for one method on one dataset: the absolute SW-weighted
/// mean difference of W and of Z between arms, within each subgroup.
///
/// The observed subgroup uses the measured confounder; the missing
/// subgroup uses the per-row mean of the imputed columns. SDIPE weights
/// come from each subgroup's own propensity fit; the comparator's come
/// from one global fit, restricted to the subgroup.
pub fn balance_report(
    ds: &Dataset,
    icfg: &ImputationConfig,
    method: EstimatorKind,
    rng: &mut RngStream,
) -> Result<Vec<BalanceRow>> {
    icfg.validate()?;
    let sv = stratify(ds);
    if sv.observed.is_empty() || sv.missing.is_empty() {
        return Err(Error::InsufficientData(
            "balance report needs both observed and missing rows".into(),
        ));
    }
    let stack = impute_multiply(ds, icfg, rng)?;
    let z_bar = stack.mean_column();

    // per-subgroup weights, aligned to the subgroup row lists
    let (w_obs, w_mis) = match method {
        EstimatorKind::Sdipe => {
            let obs = subgroup_weights(ds, &sv.observed, |i| ds.z_observed(i))
                .map_err(|e| name(e, "observed"))?;
            let mis = subgroup_weights(ds, &sv.missing, |i| z_bar[i]).map_err(|e| name(e, "missing"))?;
            (obs.sw, mis.sw)
        }
        EstimatorKind::Baseline => {
            let all: Vec<usize> = (0..ds.n()).collect();
            let global = subgroup_weights(ds, &all, |i| z_bar[i]).map_err(|e| name(e, "full"))?;
            let obs = sv.observed.iter().map(|&i| global.sw[i]).collect();
            let mis = sv.missing.iter().map(|&i| global.sw[i]).collect();
            (obs, mis)
        }
    };

    let w_col = ds.w_column(0);
    let z_obs_values: Vec<f64> = (0..ds.n()).map(|i| ds.z(i).unwrap_or(f64::NAN)).collect();

    let mut rows = Vec::with_capacity(4);
    for (subgroup, idx, weights) in [
        (Subgroup::Observed, &sv.observed, &w_obs),
        (Subgroup::Missing, &sv.missing, &w_mis),
    ] {
        let z_values: &[f64] = match subgroup {
            Subgroup::Observed => &z_obs_values,
            Subgroup::Missing => &z_bar,
        };
        for (confounder, values) in [(Confounder::W, w_col), (Confounder::Z, z_values)] {
            let abs_diff = weighted_abs_diff(values, ds.a(), weights, idx)
                .map_err(|e| name(e, &subgroup.to_string()))?;
            rows.push(BalanceRow {
                confounder,
                subgroup,
                method,
                abs_diff,
            });
        }
    }
    Ok(rows)
}

fn name(err: Error, stratum: &str) -> Error {
    match err {
        Error::Separation | Error::SingleArm { .. } => Error::SingleArm {
            stratum: stratum.to_string(),
        },
        other => other,
    }
}
