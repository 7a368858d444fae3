//! Design matrices with the leading-intercept convention.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// A regression design matrix whose first column is the intercept.
///
/// The convention throughout the crate is that covariate vectors x carry a
/// leading 1, so coefficient vectors have length p + 1 for p covariates.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    values: DMatrix<f64>,
}

impl DesignMatrix {
    /// Wraps an existing matrix, validating the intercept column,
    /// the shape, and finiteness of every entry.
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        let (rows, cols) = values.shape();
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidDesign { reason: "matrix is empty".into() });
        }
        if rows < cols {
            return Err(Error::InvalidDesign {
                reason: format!("{rows} rows is fewer than {cols} columns"),
            });
        }
        for i in 0..rows {
            if values[(i, 0)] != 1.0 {
                return Err(Error::InvalidDesign {
                    reason: format!("first column must be the intercept; row {i} has {}", values[(i, 0)]),
                });
            }
            for j in 1..cols {
                if !values[(i, j)].is_finite() {
                    return Err(Error::InvalidDesign {
                        reason: format!("non-finite entry at row {i}, column {j}"),
                    });
                }
            }
        }
        Ok(DesignMatrix { values })
    }

    /// Builds a design from raw covariate columns by prepending the intercept.
    ///
    /// `covariates` holds the columns without the intercept; an empty slice
    /// yields the intercept-only design.
    pub fn from_covariates(rows: usize, covariates: &[Vec<f64>]) -> Result<Self> {
        let cols = covariates.len() + 1;
        let mut values = DMatrix::zeros(rows, cols);
        for i in 0..rows {
            values[(i, 0)] = 1.0;
        }
        for (j, column) in covariates.iter().enumerate() {
            if column.len() != rows {
                return Err(Error::InvalidDesign {
                    reason: format!(
                        "covariate column {j} has {} entries, expected {rows}",
                        column.len()
                    ),
                });
            }
            for i in 0..rows {
                values[(i, j + 1)] = column[i];
            }
        }
        DesignMatrix::new(values)
    }

    pub fn rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn cols(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    /// The i-th covariate vector, including the leading 1.
    pub fn row(&self, i: usize) -> DVector<f64> {
        self.values.row(i).transpose()
    }

    /// Rows selected by a mask, as a new matrix (the mask length must match).
    pub fn select_rows(&self, keep: &[bool]) -> DMatrix<f64> {
        let indices: Vec<usize> =
            keep.iter().enumerate().filter(|(_, &k)| k).map(|(i, _)| i).collect();
        self.values.select_rows(&indices)
    }

    /// Column means, a vector of length `cols`.
    pub fn column_means(&self) -> DVector<f64> {
        self.values.row_mean().transpose()
    }

    /// X' 1, the vector of column sums.
    pub fn column_sums(&self) -> DVector<f64> {
        self.values.row_sum().transpose() * 1.0
    }

    /// X beta for a conforming coefficient vector.
    pub fn linear_predictor(&self, beta: &DVector<f64>) -> DVector<f64> {
        &self.values * beta
    }
}
