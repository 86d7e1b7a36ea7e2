use nalgebra::DMatrix;

use crate::FitError;

/// Covariates `x` (n x d_X) and responses `y` (n x d_Y), with row-major
/// copies kept for the per-observation loops.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: DMatrix<f64>,
    y: DMatrix<f64>,
    x_rows: Vec<f64>,
    y_rows: Vec<f64>,
}

impl Dataset {
    pub fn new(x: DMatrix<f64>, y: DMatrix<f64>) -> Result<Self, FitError> {
        if x.nrows() != y.nrows() {
            return Err(FitError::InvalidData(format!(
                "x has {} rows but y has {}",
                x.nrows(),
                y.nrows()
            )));
        }
        if x.nrows() == 0 || x.ncols() == 0 || y.ncols() == 0 {
            return Err(FitError::InvalidData("empty dataset".into()));
        }
        if let Some(i) = (0..x.nrows())
            .find(|&i| x.row(i).iter().chain(y.row(i).iter()).any(|v| !v.is_finite()))
        {
            return Err(FitError::InvalidData(format!("row {i} has a non-finite value")));
        }
        let x_rows = x.transpose().as_slice().to_vec();
        let y_rows = y.transpose().as_slice().to_vec();
        Ok(Self { x, y, x_rows, y_rows })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn d_x(&self) -> usize {
        self.x.ncols()
    }

    pub fn d_y(&self) -> usize {
        self.y.ncols()
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &DMatrix<f64> {
        &self.y
    }

    pub fn x_row(&self, i: usize) -> &[f64] {
        let d = self.d_x();
        &self.x_rows[i * d..(i + 1) * d]
    }

    pub fn y_row(&self, i: usize) -> &[f64] {
        let d = self.d_y();
        &self.y_rows[i * d..(i + 1) * d]
    }

    /// `[x | y]`, the matrix clustered at initialization.
    pub fn joint(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n(), self.d_x() + self.d_y());
        m.columns_mut(0, self.d_x()).copy_from(&self.x);
        m.columns_mut(self.d_x(), self.d_y()).copy_from(&self.y);
        m
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        Self::new(self.x.select_rows(rows), self.y.select_rows(rows))
            .expect("a row subset of a valid dataset is valid")
    }
}
