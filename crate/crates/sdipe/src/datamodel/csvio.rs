//! CSV ingestion and emission for datasets with a partially observed
//! confounder. RFC-4180-style, header required, '.' decimal separator.

use std::path::Path;

use super::Dataset;
use crate::error::{Error, Result};

/// Maps header names onto dataset roles. Cells in the MNAR column that
/// are empty or equal to `na_token` are treated as missing.
#[derive(Clone, Debug)]
pub struct ColumnRoles {
    pub outcome: String,
    pub treatment: String,
    pub mnar: String,
    pub covariates: Vec<String>,
    pub na_token: String,
}

impl ColumnRoles {
    pub fn new(
        outcome: impl Into<String>,
        treatment: impl Into<String>,
        mnar: impl Into<String>,
        covariates: Vec<String>,
    ) -> Self {
        ColumnRoles {
            outcome: outcome.into(),
            treatment: treatment.into(),
            mnar: mnar.into(),
            covariates,
            na_token: "NA".to_string(),
        }
    }

    pub fn with_na_token(mut self, token: impl Into<String>) -> Self {
        self.na_token = token.into();
        self
    }

    fn is_missing(&self, cell: &str) -> bool {
        cell.is_empty() || cell == self.na_token
    }
}

fn find_column(headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| Error::MissingColumn(name.to_string()))
}

fn parse_cell(cell: &str, row: usize, column: &str) -> Result<f64> {
    cell.trim().parse::<f64>().map_err(|e| Error::Parse {
        row,
        column: column.to_string(),
        message: format!("'{cell}': {e}"),
    })
}

/// Load a dataset from a CSV file, deriving the missingness indicator
/// from cell emptiness in the MNAR column. Rows are numbered from 1
/// (first data row) in errors.
pub fn load_csv(path: &Path, roles: &ColumnRoles) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new().flexible(false).from_path(path)?;
    let headers = reader.headers()?.clone();
    let y_idx = find_column(&headers, &roles.outcome)?;
    let a_idx = find_column(&headers, &roles.treatment)?;
    let z_idx = find_column(&headers, &roles.mnar)?;
    let w_idx: Vec<usize> = roles
        .covariates
        .iter()
        .map(|c| find_column(&headers, c))
        .collect::<Result<_>>()?;

    let mut y = Vec::new();
    let mut a = Vec::new();
    let mut z = Vec::new();
    let mut r_z = Vec::new();
    let mut w: Vec<Vec<f64>> = vec![Vec::new(); w_idx.len()];

    for (rec_no, record) in reader.records().enumerate() {
        let row = rec_no + 1;
        let record = record?;

        let y_cell = record.get(y_idx).unwrap_or("");
        if roles.is_missing(y_cell) {
            return Err(Error::Schema {
                row,
                column: roles.outcome.clone(),
                message: "outcome may not be missing".into(),
            });
        }
        y.push(parse_cell(y_cell, row, &roles.outcome)?);

        let a_cell = record.get(a_idx).unwrap_or("");
        if roles.is_missing(a_cell) {
            return Err(Error::Schema {
                row,
                column: roles.treatment.clone(),
                message: "treatment may not be missing".into(),
            });
        }
        let a_val = parse_cell(a_cell, row, &roles.treatment)?;
        if a_val == 0.0 {
            a.push(0);
        } else if a_val == 1.0 {
            a.push(1);
        } else {
            return Err(Error::Schema {
                row,
                column: roles.treatment.clone(),
                message: format!("treatment must be 0 or 1, got '{a_cell}'"),
            });
        }

        for (slot, (&idx, name)) in w.iter_mut().zip(w_idx.iter().zip(&roles.covariates)) {
            let cell = record.get(idx).unwrap_or("");
            if roles.is_missing(cell) {
                return Err(Error::Schema {
                    row,
                    column: name.clone(),
                    message: "covariate may not be missing".into(),
                });
            }
            slot.push(parse_cell(cell, row, name)?);
        }

        let z_cell = record.get(z_idx).unwrap_or("");
        if roles.is_missing(z_cell) {
            z.push(f64::NAN);
            r_z.push(0);
        } else {
            z.push(parse_cell(z_cell, row, &roles.mnar)?);
            r_z.push(1);
        }
    }

    Dataset::new(y, a, w, z, r_z)
}

/// Write a dataset to CSV with the given role names as headers. Masked
/// confounder cells are written empty.
pub fn write_csv(ds: &Dataset, path: &Path, roles: &ColumnRoles) -> Result<()> {
    if roles.covariates.len() != ds.n_covariates() {
        return Err(Error::Config(format!(
            "{} covariate names for {} columns",
            roles.covariates.len(),
            ds.n_covariates()
        )));
    }
    let mut writer = csv::Writer::from_path(path)?;
    let mut header = vec![roles.outcome.clone(), roles.treatment.clone()];
    header.extend(roles.covariates.iter().cloned());
    header.push(roles.mnar.clone());
    writer.write_record(&header)?;

    for i in 0..ds.n() {
        let mut record = vec![format!("{}", ds.y()[i]), format!("{}", ds.a()[i])];
        for j in 0..ds.n_covariates() {
            record.push(format!("{}", ds.w_column(j)[i]));
        }
        record.push(match ds.z(i) {
            Some(v) => format!("{v}"),
            None => String::new(),
        });
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}
