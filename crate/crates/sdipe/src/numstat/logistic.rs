//! Logistic regression by iteratively reweighted least squares with
//! step-halving, and a norm clip for separated fits.

use nalgebra::{DMatrix, DVector};

use super::expit_unchecked;
use crate::error::{Error, Result};

/// Coefficient norm beyond which a non-converged fit is treated as
/// separated: the fit is clipped and flagged.
const DIVERGENCE_NORM: f64 = 30.0;

#[derive(Clone, Debug)]
pub struct FittedLogisticModel {
    /// Coefficients, intercept first when the design has one.
    pub coefficients: DVector<f64>,
    pub converged: bool,
    pub iterations: usize,
}

impl FittedLogisticModel {
    /// Fitted probabilities expit(Xβ̂).
    pub fn predict_proba(&self, design: &DMatrix<f64>) -> Vec<f64> {
        let eta = design * &self.coefficients;
        eta.iter().map(|&e| expit_unchecked(e)).collect()
    }
}

fn log_likelihood(eta: &DVector<f64>, labels: &[u8]) -> f64 {
    eta.iter()
        .zip(labels)
        .map(|(&e, &y)| {
            let softplus = if e > 0.0 { e + (-e).exp().ln_1p() } else { e.exp().ln_1p() };
            f64::from(y) * e - softplus
        })
        .sum()
}

/// Fit a logistic regression of `labels` on `design` by IRLS.
///
/// Stops when the score infinity norm drops below `tol` or after
/// `max_iter` iterations. A fit whose coefficient norm passes 30 without
/// converging is clipped to that norm and flagged not-converged.
pub fn fit_logistic(
    design: &DMatrix<f64>,
    labels: &[u8],
    max_iter: usize,
    tol: f64,
) -> Result<FittedLogisticModel> {
    let n = design.nrows();
    let k = design.ncols();
    if labels.len() != n {
        return Err(Error::InvalidData(format!(
            "design has {n} rows but labels has {}",
            labels.len()
        )));
    }
    let ones = labels.iter().filter(|&&y| y == 1).count();
    if ones == 0 || ones == n {
        return Err(Error::Separation);
    }
    if n <= k {
        return Err(Error::InsufficientData(format!(
            "need more rows ({n}) than columns ({k}) for logistic regression"
        )));
    }

    let mut beta = DVector::zeros(k);
    let mut eta = design * &beta;
    let mut ll = log_likelihood(&eta, labels);

    for iter in 1..=max_iter {
        let p: Vec<f64> = eta.iter().map(|&e| expit_unchecked(e)).collect();
        let resid = DVector::from_fn(n, |i, _| f64::from(labels[i]) - p[i]);
        let score = design.transpose() * &resid;
        if score.amax() < tol {
            return Ok(FittedLogisticModel {
                coefficients: beta,
                converged: true,
                iterations: iter - 1,
            });
        }

        let mut weighted = design.clone();
        for i in 0..n {
            let w = (p[i] * (1.0 - p[i])).max(1e-10);
            weighted.row_mut(i).scale_mut(w);
        }
        let info = design.transpose() * weighted;
        let step = match info.clone().cholesky() {
            Some(chol) => chol.solve(&score),
            None => info
                .lu()
                .solve(&score)
                .ok_or(Error::SingularDesign { column: 0 })?,
        };

        // step halving on log-likelihood decrease
        let mut t = 1.0;
        let mut cand = &beta + &step * t;
        let mut cand_eta = design * &cand;
        let mut cand_ll = log_likelihood(&cand_eta, labels);
        for _ in 0..30 {
            if cand_ll >= ll - 1e-12 && cand_ll.is_finite() {
                break;
            }
            t *= 0.5;
            cand = &beta + &step * t;
            cand_eta = design * &cand;
            cand_ll = log_likelihood(&cand_eta, labels);
        }
        beta = cand;
        eta = cand_eta;
        ll = cand_ll;

        if beta.norm() > DIVERGENCE_NORM {
            beta *= DIVERGENCE_NORM / beta.norm();
            return Ok(FittedLogisticModel {
                coefficients: beta,
                converged: false,
                iterations: iter,
            });
        }
    }

    Ok(FittedLogisticModel {
        coefficients: beta,
        converged: false,
        iterations: max_iter,
    })
}
