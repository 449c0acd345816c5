//! Synthetic data generation: standard-normal confounders, a logistic
//! treatment model, a linear outcome model, and a self-masking
//! missingness mechanism. Intercepts are calibrated by quadrature so the
//! generated data hit target treatment prevalence and missingness rates.

use std::collections::HashMap;
use std::sync::{LazyLock, Mutex};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::datamodel::Dataset;
use crate::error::{Error, Result};
use crate::numstat::RngStream;

/// Parameters of the data-generating process.
///
/// Treatment: `A ~ Bernoulli(expit(α₁ + α₂ W + α₃ Z))` with `α₁`
/// calibrated to `prevalence_target`. Outcome:
/// `Y = β₀ + β₁ A + β₂ W + β₃ Z + ε`, `ε ~ N(0, noise_sd²)`.
/// Missingness: `P(R_Z = 0 | Z) = expit(a + Z)` with `a` calibrated to
/// `missing_target`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SimConfig {
    pub n: usize,
    pub prevalence_target: f64,
    pub missing_target: f64,
    pub alpha2: f64,
    pub alpha3: f64,
    pub beta0: f64,
    /// True average treatment effect.
    pub beta1: f64,
    pub beta2: f64,
    pub beta3: f64,
    pub noise_sd: f64,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n: 500,
            prevalence_target: 0.2,
            missing_target: 0.3,
            alpha2: 0.5,
            alpha3: 0.5,
            beta0: 0.0,
            beta1: 1.5,
            beta2: 0.8,
            beta3: 0.7,
            noise_sd: 1.0,
            seed: 0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::Config(format!("n must be at least 2, got {}", self.n)));
        }
        for (name, v) in [
            ("prevalence", self.prevalence_target),
            ("missing", self.missing_target),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::Config(format!("{name} target must lie in (0,1), got {v}")));
            }
        }
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) {
            return Err(Error::Config(format!("noise_sd must be nonnegative, got {}", self.noise_sd)));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------
// Gauss–Hermite quadrature (Golub–Welsch on the Jacobi matrix)
// ---------------------------------------------------------------------

const GH_NODES: usize = 64;

/// Nodes and weights for ∫ f(x) e^{-x²} dx ≈ Σ wᵢ f(xᵢ).
fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut jacobi = DMatrix::zeros(n, n);
    for i in 1..n {
        let b = (i as f64 / 2.0).sqrt();
        jacobi[(i, i - 1)] = b;
        jacobi[(i - 1, i)] = b;
    }
    let eig = jacobi.symmetric_eigen();
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|j| {
            let node = eig.eigenvalues[j];
            let first = eig.eigenvectors[(0, j)];
            (node, std::f64::consts::PI.sqrt() * first * first)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    pairs.into_iter().unzip()
}

/// E[f(U)] for U ~ N(0,1) by Gauss–Hermite quadrature.
fn normal_expectation(f: impl Fn(f64) -> f64) -> f64 {
    static TABLE: LazyLock<(Vec<f64>, Vec<f64>)> = LazyLock::new(|| gauss_hermite(GH_NODES));
    let (nodes, weights) = &*TABLE;
    let scale = std::f64::consts::PI.sqrt();
    nodes
        .iter()
        .zip(weights)
        .map(|(&x, &w)| w * f(std::f64::consts::SQRT_2 * x))
        .sum::<f64>()
        / scale
}

fn bisect(mut f: impl FnMut(f64) -> f64, mut lo: f64, mut hi: f64) -> Result<f64> {
    let flo = f(lo);
    let fhi = f(hi);
    if flo > 0.0 || fhi < 0.0 {
        return Err(Error::Calibration(format!(
            "root not bracketed in [{lo}, {hi}] (f(lo)={flo}, f(hi)={fhi})"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm.abs() < 1e-13 || hi - lo < 1e-12 {
            return Ok(mid);
        }
        if fm < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

static TREAT_CACHE: LazyLock<Mutex<HashMap<(u64, u64, u64), f64>>> =
    LazyLock::new(|| Mutex::new(HashMap::new()));
static MISS_CACHE: LazyLock<Mutex<HashMap<u64, f64>>> = LazyLock::new(|| Mutex::new(HashMap::new()));

fn check_target(target: f64) -> Result<()> {
    if !(target > 0.01 && target < 0.99) {
        return Err(Error::Calibration(format!(
            "calibration target must lie in (0.01, 0.99), got {target}"
        )));
    }
    Ok(())
}

/// Solve E[expit(α₁ + α₂ W + α₃ Z)] = target over W, Z iid N(0,1).
///
/// α₂W + α₃Z is N(0, α₂² + α₃²), so the expectation reduces to a
/// one-dimensional quadrature inside a bisection root-finder.
pub fn calibrate_treatment_intercept(target: f64, alpha2: f64, alpha3: f64) -> Result<f64> {
    check_target(target)?;
    let key = (target.to_bits(), alpha2.to_bits(), alpha3.to_bits());
    if let Some(&v) = TREAT_CACHE.lock().unwrap().get(&key) {
        return Ok(v);
    }
    let spread = alpha2.hypot(alpha3);
    let value = bisect(
        |a1| normal_expectation(|u| crate::numstat::expit_unchecked(a1 + spread * u)) - target,
        -20.0,
        20.0,
    )?;
    TREAT_CACHE.lock().unwrap().insert(key, value);
    Ok(value)
}

/// Solve E[expit(a + Z)] = target over Z ~ N(0,1), where expit(a + Z) is
/// the per-row probability that Z goes missing.
pub fn calibrate_missingness_intercept(target: f64) -> Result<f64> {
    check_target(target)?;
    let key = target.to_bits();
    if let Some(&v) = MISS_CACHE.lock().unwrap().get(&key) {
        return Ok(v);
    }
    let value = bisect(
        |a| normal_expectation(|z| crate::numstat::expit_unchecked(a + z)) - target,
        -20.0,
        20.0,
    )?;
    MISS_CACHE.lock().unwrap().insert(key, value);
    Ok(value)
}

// ---------------------------------------------------------------------
// Generation
// ---------------------------------------------------------------------

/// Generate a complete dataset (no missingness applied): returns the
/// dataset with `r_z ≡ 1` and a copy of the true confounder column for
/// oracle checks.
///
/// Draw order is fixed: all W, all Z, all treatment uniforms, all noise.
pub fn generate_complete(cfg: &SimConfig, rng: &mut RngStream) -> Result<(Dataset, Vec<f64>)> {
    cfg.validate()?;
    let n = cfg.n;
    let alpha1 = calibrate_treatment_intercept(cfg.prevalence_target, cfg.alpha2, cfg.alpha3)?;

    let w: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
    let z: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
    let a: Vec<u8> = (0..n)
        .map(|i| {
            let p = crate::numstat::expit_unchecked(alpha1 + cfg.alpha2 * w[i] + cfg.alpha3 * z[i]);
            u8::from(rng.bernoulli(p))
        })
        .collect();
    let y: Vec<f64> = (0..n)
        .map(|i| {
            cfg.beta0
                + cfg.beta1 * f64::from(a[i])
                + cfg.beta2 * w[i]
                + cfg.beta3 * z[i]
                + cfg.noise_sd * rng.normal()
        })
        .collect();

    let z_true = z.clone();
    let ds = Dataset::new(y, a, vec![w], z, vec![1; n])?;
    Ok((ds, z_true))
}

/// Apply the self-masking mechanism: each row's confounder goes missing
/// independently with probability expit(a + zᵢ), `a` calibrated to the
/// target rate. Y, A, W are untouched.
pub fn apply_self_masking(ds: &Dataset, missing_target: f64, rng: &mut RngStream) -> Result<Dataset> {
    if ds.r_z().iter().any(|&r| r == 0) {
        return Err(Error::InvalidData(
            "self-masking expects a complete dataset (r_z all ones)".into(),
        ));
    }
    let intercept = calibrate_missingness_intercept(missing_target)?;
    mask_with_intercept(ds, intercept, rng)
}

fn mask_with_intercept(ds: &Dataset, intercept: f64, rng: &mut RngStream) -> Result<Dataset> {
    let n = ds.n();
    let mut z = Vec::with_capacity(n);
    let mut r_z = Vec::with_capacity(n);
    for i in 0..n {
        let zi = ds.z_observed(i);
        let mask = rng.bernoulli(crate::numstat::expit_unchecked(intercept + zi));
        if mask {
            z.push(f64::NAN);
            r_z.push(0);
        } else {
            z.push(zi);
            r_z.push(1);
        }
    }
    let w = (0..ds.n_covariates()).map(|j| ds.w_column(j).to_vec()).collect();
    Dataset::new(ds.y().to_vec(), ds.a().to_vec(), w, z, r_z)
}

/// Generate a masked dataset in one step; returns the true confounder
/// column alongside so oracle estimators can run in tests.
pub fn generate_masked(cfg: &SimConfig, rng: &mut RngStream) -> Result<(Dataset, Vec<f64>)> {
    let (complete, z_true) = generate_complete(cfg, rng)?;
    let masked = apply_self_masking(&complete, cfg.missing_target, rng)?;
    Ok((masked, z_true))
}

/// Masked generation seeded from the config itself.
pub fn generate_seeded(cfg: &SimConfig) -> Result<(Dataset, Vec<f64>)> {
    let mut rng = RngStream::new(cfg.seed);
    generate_masked(cfg, &mut rng)
}
