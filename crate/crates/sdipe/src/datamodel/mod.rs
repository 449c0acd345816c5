//! Canonical dataset representation: outcome, binary treatment, fully
//! observed covariates, and one partially observed confounder with its
//! missingness indicator.

mod csvio;

pub use csvio::{load_csv, write_csv, ColumnRoles};

use crate::error::{Error, Result};

/// Sentinel stored in the confounder column where it is unobserved.
/// Estimators never read it; access goes through [`Dataset::z`] or the
/// stratified row sets.
const MASKED: f64 = f64::NAN;

/// An immutable dataset with one self-masking confounder `z`.
#[derive(Clone, Debug)]
pub struct Dataset {
    y: Vec<f64>,
    a: Vec<u8>,
    w: Vec<Vec<f64>>, // column major
    z: Vec<f64>,
    r_z: Vec<u8>,
}

impl Dataset {
    /// Build a dataset, validating every type invariant. Entries of `z`
    /// where `r_z == 0` are ignored and replaced by the masking sentinel.
    pub fn new(
        y: Vec<f64>,
        a: Vec<u8>,
        w: Vec<Vec<f64>>,
        z: Vec<f64>,
        r_z: Vec<u8>,
    ) -> Result<Self> {
        let n = y.len();
        if a.len() != n || z.len() != n || r_z.len() != n || w.iter().any(|col| col.len() != n) {
            return Err(Error::InvalidData("column lengths differ".into()));
        }
        if let Some(i) = a.iter().position(|&v| v > 1) {
            return Err(Error::InvalidData(format!("treatment not binary at row {i}")));
        }
        if let Some(i) = r_z.iter().position(|&v| v > 1) {
            return Err(Error::InvalidData(format!("missingness indicator not binary at row {i}")));
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidData(format!("outcome not finite at row {i}")));
        }
        for (j, col) in w.iter().enumerate() {
            if let Some(i) = col.iter().position(|v| !v.is_finite()) {
                return Err(Error::InvalidData(format!(
                    "covariate column {j} not finite at row {i}"
                )));
            }
        }
        let mut z = z;
        for i in 0..n {
            if r_z[i] == 1 {
                if !z[i].is_finite() {
                    return Err(Error::InvalidData(format!(
                        "confounder marked observed but not finite at row {i}"
                    )));
                }
            } else {
                z[i] = MASKED;
            }
        }
        Ok(Dataset { y, a, w, z, r_z })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    /// Number of fully observed covariate columns.
    pub fn n_covariates(&self) -> usize {
        self.w.len()
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn a(&self) -> &[u8] {
        &self.a
    }

    pub fn r_z(&self) -> &[u8] {
        &self.r_z
    }

    pub fn w_column(&self, j: usize) -> &[f64] {
        &self.w[j]
    }

    /// Confounder value at `row`, `None` where unobserved.
    pub fn z(&self, row: usize) -> Option<f64> {
        (self.r_z[row] == 1).then(|| self.z[row])
    }

    /// Confounder value at a row known to be observed.
    ///
    /// Panics if the row is masked: estimators must never read the
    /// sentinel.
    pub fn z_observed(&self, row: usize) -> f64 {
        assert_eq!(self.r_z[row], 1, "read of masked confounder at row {row}");
        self.z[row]
    }

    /// Raw confounder storage, sentinel included. Imputation overwrites
    /// the masked entries, so the sentinel is never interpreted.
    pub(crate) fn z_raw(&self) -> &[f64] {
        &self.z
    }

    /// Row projection onto a set of distinct indices.
    pub fn subset(&self, rows: &[usize]) -> Result<Dataset> {
        let n = self.n();
        let mut seen = vec![false; n];
        for &i in rows {
            if i >= n {
                return Err(Error::Bounds { index: i, len: n });
            }
            if seen[i] {
                return Err(Error::InvalidData(format!("duplicate row index {i} in subset")));
            }
            seen[i] = true;
        }
        Ok(self.take_rows(rows))
    }

    /// Row projection allowing repeats, for bootstrap resampling.
    pub fn resample(&self, rows: &[usize]) -> Result<Dataset> {
        let n = self.n();
        if let Some(&bad) = rows.iter().find(|&&i| i >= n) {
            return Err(Error::Bounds { index: bad, len: n });
        }
        Ok(self.take_rows(rows))
    }

    fn take_rows(&self, rows: &[usize]) -> Dataset {
        Dataset {
            y: rows.iter().map(|&i| self.y[i]).collect(),
            a: rows.iter().map(|&i| self.a[i]).collect(),
            w: self
                .w
                .iter()
                .map(|col| rows.iter().map(|&i| col[i]).collect())
                .collect(),
            z: rows.iter().map(|&i| self.z[i]).collect(),
            r_z: rows.iter().map(|&i| self.r_z[i]).collect(),
        }
    }
}

/// Partition of the rows by the missingness indicator.
#[derive(Clone, Debug)]
pub struct StratifiedView {
    /// Rows with `r_z == 1`, ascending.
    pub observed: Vec<usize>,
    /// Rows with `r_z == 0`, ascending.
    pub missing: Vec<usize>,
    /// |observed| / n.
    pub p_obs: f64,
}

/// Split the rows of `ds` by whether the confounder is observed.
pub fn stratify(ds: &Dataset) -> StratifiedView {
    let mut observed = Vec::new();
    let mut missing = Vec::new();
    for (i, &r) in ds.r_z().iter().enumerate() {
        if r == 1 {
            observed.push(i);
        } else {
            missing.push(i);
        }
    }
    let p_obs = if ds.n() == 0 {
        0.0
    } else {
        observed.len() as f64 / ds.n() as f64
    };
    StratifiedView {
        observed,
        missing,
        p_obs,
    }
}
