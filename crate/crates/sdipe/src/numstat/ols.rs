//! Ordinary least squares via QR, plus posterior parameter draws used by
//! proper multiple imputation.

use nalgebra::{DMatrix, DVector};

use super::RngStream;
use crate::error::{Error, Result};

/// Relative threshold on the R diagonal below which a column is treated
/// as linearly dependent.
const RANK_TOL: f64 = 1e-10;

/// A fitted linear model together with the pieces needed for proper
/// imputation: `(XᵀX)⁻¹`, the residual variance and its degrees of freedom.
#[derive(Clone, Debug)]
pub struct FittedLinearModel {
    /// Coefficients, intercept first when the design has one.
    pub coefficients: DVector<f64>,
    /// RSS / (n - k).
    pub residual_variance: f64,
    /// `(XᵀX)⁻¹`, reconstructed from the QR factor.
    pub design_crossprod_inverse: DMatrix<f64>,
    /// n - k.
    pub degrees_of_freedom: usize,
}

impl FittedLinearModel {
    /// Linear predictor Xβ̂ for a design with matching column count.
    pub fn linear_predictor(&self, design: &DMatrix<f64>) -> DVector<f64> {
        design * &self.coefficients
    }

    /// Check the type invariants: symmetric PSD crossprod inverse,
    /// nonnegative residual variance, positive degrees of freedom.
    pub fn validate(&self) -> Result<()> {
        let m = &self.design_crossprod_inverse;
        if m.nrows() != m.ncols() || m.nrows() != self.coefficients.len() {
            return Err(Error::InvalidData("crossprod inverse shape mismatch".into()));
        }
        for i in 0..m.nrows() {
            for j in 0..i {
                if (m[(i, j)] - m[(j, i)]).abs() > 1e-10 {
                    return Err(Error::InvalidData("crossprod inverse not symmetric".into()));
                }
            }
        }
        let eig = m.clone().symmetric_eigen();
        if eig.eigenvalues.iter().any(|&l| l < -1e-8) {
            return Err(Error::InvalidData("crossprod inverse not PSD".into()));
        }
        if self.residual_variance < 0.0 {
            return Err(Error::InvalidData("negative residual variance".into()));
        }
        if self.degrees_of_freedom == 0 {
            return Err(Error::InvalidData("zero degrees of freedom".into()));
        }
        Ok(())
    }
}

/// Least-squares fit of `response` on `design` using a QR decomposition.
///
/// The normal-equations inverse is rebuilt as R⁻¹R⁻ᵀ rather than by
/// inverting XᵀX directly.
pub fn fit_ols(design: &DMatrix<f64>, response: &DVector<f64>) -> Result<FittedLinearModel> {
    let n = design.nrows();
    let k = design.ncols();
    if response.len() != n {
        return Err(Error::InvalidData(format!(
            "design has {n} rows but response has {}",
            response.len()
        )));
    }
    if n <= k {
        return Err(Error::InsufficientData(format!(
            "need more rows ({n}) than columns ({k}) for least squares"
        )));
    }

    let qr = design.clone().qr();
    let r = qr.r();
    let max_diag = (0..k).map(|j| r[(j, j)].abs()).fold(0.0f64, f64::max);
    for j in 0..k {
        if r[(j, j)].abs() <= RANK_TOL * max_diag {
            return Err(Error::SingularDesign { column: j });
        }
    }

    let qty = qr.q().transpose() * response;
    let coefficients = r
        .solve_upper_triangular(&qty)
        .ok_or(Error::SingularDesign { column: 0 })?;

    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(k, k))
        .ok_or(Error::SingularDesign { column: 0 })?;
    let mut crossprod_inv = &r_inv * r_inv.transpose();
    // kill round-off asymmetry
    for i in 0..k {
        for j in 0..i {
            let s = 0.5 * (crossprod_inv[(i, j)] + crossprod_inv[(j, i)]);
            crossprod_inv[(i, j)] = s;
            crossprod_inv[(j, i)] = s;
        }
    }

    let residuals = response - design * &coefficients;
    let dof = n - k;
    let residual_variance = residuals.norm_squared() / dof as f64;

    Ok(FittedLinearModel {
        coefficients,
        residual_variance,
        design_crossprod_inverse: crossprod_inv,
        degrees_of_freedom: dof,
    })
}

/// Draw (β*, σ*) from the standard normal-inverse-chi-square posterior of
/// the linear model: σ*² ~ df·σ̂²/χ²_df, β* ~ N(β̂, σ*²(XᵀX)⁻¹).
///
/// Consumes one chi-square draw and k normal draws; a zero-residual model
/// is returned as-is without touching the stream.
pub fn draw_linear_posterior(model: &FittedLinearModel, rng: &mut RngStream) -> (DVector<f64>, f64) {
    if model.residual_variance == 0.0 {
        return (model.coefficients.clone(), 0.0);
    }
    let df = model.degrees_of_freedom as f64;
    let sigma2 = df * model.residual_variance / rng.chi_square(df);
    let sigma = sigma2.sqrt();

    let k = model.coefficients.len();
    let chol = cholesky_with_jitter(&model.design_crossprod_inverse);
    let u = DVector::from_fn(k, |_, _| rng.normal());
    let coef = &model.coefficients + chol * u * sigma;
    (coef, sigma)
}

fn cholesky_with_jitter(m: &DMatrix<f64>) -> DMatrix<f64> {
    let k = m.nrows();
    let mut jitter = 0.0;
    let scale = m.trace().abs().max(1e-300) / k as f64;
    for _ in 0..12 {
        let mut attempt = m.clone();
        if jitter > 0.0 {
            for i in 0..k {
                attempt[(i, i)] += jitter;
            }
        }
        if let Some(c) = attempt.cholesky() {
            return c.l();
        }
        jitter = if jitter == 0.0 { scale * 1e-12 } else { jitter * 10.0 };
    }
    // trace-scaled identity as a last resort; PSD inputs never get here
    DMatrix::from_diagonal_element(k, k, scale.sqrt())
}
