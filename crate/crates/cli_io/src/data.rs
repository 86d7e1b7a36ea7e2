use std::path::Path;

use cwm_engine::Dataset;
use nalgebra::DMatrix;

use crate::CliError;

/// A CSV file held as text cells, header first.
#[derive(Debug, Clone)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(false)
            .from_path(path)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        let headers = reader
            .headers()
            .map_err(|e| CliError::Data(e.to_string()))?
            .iter()
            .map(|h| h.trim().to_string())
            .collect();
        let mut rows = Vec::new();
        for rec in reader.records() {
            let rec = rec.map_err(|e| CliError::Data(e.to_string()))?;
            rows.push(rec.iter().map(|c| c.trim().to_string()).collect());
        }
        Ok(Self { headers, rows })
    }

    pub fn column_index(&self, name: &str) -> Result<usize, CliError> {
        self.headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Data(format!("column '{name}' not found")))
    }

    pub fn strings(&self, name: &str) -> Result<Vec<String>, CliError> {
        let j = self.column_index(name)?;
        Ok(self.rows.iter().map(|r| r[j].clone()).collect())
    }

    /// Numeric matrix of the named columns; line numbers in errors count
    /// the header as line 1.
    pub fn numeric(&self, names: &[String]) -> Result<DMatrix<f64>, CliError> {
        let idx: Vec<usize> = names.iter().map(|n| self.column_index(n)).collect::<Result<_, _>>()?;
        let mut m = DMatrix::zeros(self.rows.len(), idx.len());
        for (i, row) in self.rows.iter().enumerate() {
            for (k, &j) in idx.iter().enumerate() {
                let cell = &row[j];
                if cell.is_empty() {
                    return Err(CliError::Data(format!("row {} column '{}' is empty", i + 2, names[k])));
                }
                m[(i, k)] = cell
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| CliError::Data(format!("row {} column '{}': '{cell}' is not numeric", i + 2, names[k])))?;
            }
        }
        Ok(m)
    }
}

pub fn load_csv(path: &Path, responses: &[String], covariates: &[String]) -> Result<Dataset, CliError> {
    if responses.is_empty() || covariates.is_empty() {
        return Err(CliError::Usage("responses and covariates must both be nonempty".into()));
    }
    if responses.iter().any(|r| covariates.contains(r)) {
        return Err(CliError::Usage("a column cannot be both response and covariate".into()));
    }
    let t = Table::read(path)?;
    let y = t.numeric(responses)?;
    let x = t.numeric(covariates)?;
    Dataset::new(x, y).map_err(|e| CliError::Data(e.to_string()))
}

/// Per-column `(mean, sd)` of the responses followed by the covariates.
#[derive(Debug, Clone, PartialEq)]
pub struct Scaling {
    pub y: Vec<(f64, f64)>,
    pub x: Vec<(f64, f64)>,
}

fn column_stats(m: &DMatrix<f64>) -> Vec<(f64, f64)> {
    let n = m.nrows() as f64;
    m.column_iter()
        .map(|c| {
            let mean = c.sum() / n;
            let sd = (c.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0)).sqrt();
            (mean, if sd > 0.0 { sd } else { 1.0 })
        })
        .collect()
}

fn rescale(m: &DMatrix<f64>, stats: &[(f64, f64)]) -> DMatrix<f64> {
    let mut out = m.clone();
    for (mut c, &(mean, sd)) in out.column_iter_mut().zip(stats) {
        c.iter_mut().for_each(|v| *v = (*v - mean) / sd);
    }
    out
}

impl Scaling {
    pub fn of(data: &Dataset) -> Self {
        Self { y: column_stats(data.y()), x: column_stats(data.x()) }
    }

    pub fn apply(&self, data: &Dataset) -> Result<Dataset, CliError> {
        if self.x.len() != data.d_x() || self.y.len() != data.d_y() {
            return Err(CliError::Data("scaling does not match the data dimensions".into()));
        }
        Dataset::new(rescale(data.x(), &self.x), rescale(data.y(), &self.y))
            .map_err(|e| CliError::Data(e.to_string()))
    }
}

/// Columns centred and scaled to unit sample standard deviation.
pub fn standardize(data: &Dataset) -> (Dataset, Scaling) {
    let s = Scaling::of(data);
    let out = s.apply(data).expect("scaling keeps the dimensions and values finite");
    (out, s)
}
