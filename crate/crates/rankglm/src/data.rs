//! Input containers: the dataset and a coefficient vector.

use crate::error::{Error, Result};
use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

/// A regression sample: responses `y`, covariates `X`, and an optional
/// observation indicator `delta`.
///
/// Covariates are always fully observed; `delta_i = 0` marks a response that
/// was not observed (or not selected). Pair sums weight each pair by
/// `delta_i * delta_j`, so unobserved responses never enter any computation —
/// their stored `y` values are sentinels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    y: Array1<f64>,
    x: Array2<f64>,
    delta: Option<Array1<u8>>,
}

impl Dataset {
    /// Complete-data constructor. Validates shapes, finiteness, and rejects
    /// constant covariate columns (their pair differences vanish, making the
    /// corresponding coefficient unidentifiable).
    pub fn new(y: Array1<f64>, x: Array2<f64>) -> Result<Self> {
        Self::build(y, x, None)
    }

    /// Constructor with an observation indicator (entries must be 0 or 1).
    pub fn with_delta(y: Array1<f64>, x: Array2<f64>, delta: Array1<u8>) -> Result<Self> {
        Self::build(y, x, Some(delta))
    }

    fn build(y: Array1<f64>, x: Array2<f64>, delta: Option<Array1<u8>>) -> Result<Self> {
        let n = y.len();
        if n < 2 {
            return Err(Error::InvalidInput(format!(
                "need at least 2 samples, got {n}"
            )));
        }
        if x.nrows() != n {
            return Err(Error::DimensionMismatch(format!(
                "X has {} rows but y has length {n}",
                x.nrows()
            )));
        }
        if x.ncols() == 0 {
            return Err(Error::InvalidInput("X must have at least 1 column".into()));
        }
        if let Some(bad) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "y[{bad}] is not finite: {}",
                y[bad]
            )));
        }
        for ((i, j), v) in x.indexed_iter() {
            if !v.is_finite() {
                return Err(Error::InvalidInput(format!("X[{i},{j}] is not finite: {v}")));
            }
        }
        if let Some(d) = &delta {
            if d.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "delta has length {} but y has length {n}",
                    d.len()
                )));
            }
            if let Some(bad) = d.iter().position(|&v| v > 1) {
                return Err(Error::InvalidInput(format!(
                    "delta[{bad}] = {} is not in {{0,1}}",
                    d[bad]
                )));
            }
        }
        for j in 0..x.ncols() {
            let col = x.column(j);
            let first = col[0];
            if col.iter().all(|&v| v == first) {
                return Err(Error::InvalidInput(format!(
                    "covariate column {j} is constant ({first}); constant columns are \
                     unidentifiable under pairwise differencing"
                )));
            }
        }
        Ok(Self { y, x, delta })
    }

    /// Number of samples.
    #[inline]
    pub fn n(&self) -> usize {
        self.y.len()
    }

    /// Number of covariates.
    #[inline]
    pub fn dim(&self) -> usize {
        self.x.ncols()
    }

    /// Total pair count `n(n-1)/2` — the normalization constant for every
    /// pair sum, with or without missingness.
    #[inline]
    pub fn total_pairs(&self) -> usize {
        self.n() * (self.n() - 1) / 2
    }

    /// Number of observed samples (all of them when `delta` is absent).
    pub fn n_observed(&self) -> usize {
        match &self.delta {
            None => self.n(),
            Some(d) => d.iter().filter(|&&v| v == 1).count(),
        }
    }

    #[inline]
    pub fn y(&self) -> &Array1<f64> {
        &self.y
    }

    #[inline]
    pub fn x(&self) -> &Array2<f64> {
        &self.x
    }

    #[inline]
    pub fn delta(&self) -> Option<&Array1<u8>> {
        self.delta.as_ref()
    }

    /// True when sample `i` is observed.
    #[inline]
    pub fn observed(&self, i: usize) -> bool {
        match &self.delta {
            None => true,
            Some(d) => d[i] == 1,
        }
    }

    /// Row subset in the given index order, keeping `delta` aligned.
    ///
    /// Used by cross-validation folds; skips re-validation because a subset
    /// of valid rows can only fail the constant-column check, which is a
    /// non-issue for the internal fits (the coordinate simply carries no
    /// signal).
    pub(crate) fn subset_rows(&self, idx: &[usize]) -> Dataset {
        let y = Array1::from_iter(idx.iter().map(|&i| self.y[i]));
        let mut x = Array2::zeros((idx.len(), self.dim()));
        for (r, &i) in idx.iter().enumerate() {
            x.row_mut(r).assign(&self.x.row(i));
        }
        let delta = self
            .delta
            .as_ref()
            .map(|d| Array1::from_iter(idx.iter().map(|&i| d[i])));
        Dataset { y, x, delta }
    }
}

/// A coefficient vector, validated to be finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Beta {
    values: Array1<f64>,
}

impl Beta {
    pub fn new(values: Array1<f64>) -> Result<Self> {
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "beta[{bad}] is not finite: {}",
                values[bad]
            )));
        }
        Ok(Self { values })
    }

    pub fn from_slice(v: &[f64]) -> Result<Self> {
        Self::new(Array1::from_iter(v.iter().copied()))
    }

    pub fn zeros(d: usize) -> Self {
        Self {
            values: Array1::zeros(d),
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn values(&self) -> &Array1<f64> {
        &self.values
    }

    pub fn into_values(self) -> Array1<f64> {
        self.values
    }
}

impl std::ops::Index<usize> for Beta {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.values[i]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn small_x() -> Array2<f64> {
        array![[1.0, 0.5], [2.0, -0.5], [3.0, 0.25]]
    }

    #[test]
    fn valid_dataset_passes() {
        let d = Dataset::new(array![1.0, 2.0, 3.0], small_x()).unwrap();
        assert_eq!(d.n(), 3);
        assert_eq!(d.dim(), 2);
        assert_eq!(d.total_pairs(), 3);
        assert_eq!(d.n_observed(), 3);
    }

    #[test]
    fn rejects_too_few_samples() {
        let err = Dataset::new(array![1.0], array![[1.0]]).unwrap_err();
        assert!(matches!(err, Error::InvalidInput(_)));
    }

    #[test]
    fn rejects_shape_mismatch() {
        let err = Dataset::new(array![1.0, 2.0], small_x()).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch(_)));
    }

    #[test]
    fn rejects_non_finite() {
        let err = Dataset::new(array![1.0, f64::NAN, 3.0], small_x()).unwrap_err();
        assert!(matches!(err, Error::InvalidInput(_)));
        let mut x = small_x();
        x[[1, 1]] = f64::INFINITY;
        let err = Dataset::new(array![1.0, 2.0, 3.0], x).unwrap_err();
        assert!(matches!(err, Error::InvalidInput(_)));
    }

    #[test]
    fn rejects_constant_column_naming_it() {
        let x = array![[1.0, 7.0], [2.0, 7.0], [3.0, 7.0]];
        let err = Dataset::new(array![1.0, 2.0, 3.0], x).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("column 1"), "got: {msg}");
    }

    #[test]
    fn delta_validation() {
        let y = array![1.0, 2.0, 3.0];
        let d = Dataset::with_delta(y.clone(), small_x(), array![1, 0, 1]).unwrap();
        assert_eq!(d.n_observed(), 2);
        assert!(d.observed(0) && !d.observed(1));
        let err = Dataset::with_delta(y.clone(), small_x(), array![1, 2, 1]).unwrap_err();
        assert!(matches!(err, Error::InvalidInput(_)));
        let err = Dataset::with_delta(y, small_x(), array![1, 0]).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch(_)));
    }

    #[test]
    fn subset_keeps_alignment() {
        let d = Dataset::with_delta(array![1.0, 2.0, 3.0], small_x(), array![1, 0, 1]).unwrap();
        let s = d.subset_rows(&[2, 0]);
        assert_eq!(s.y()[0], 3.0);
        assert_eq!(s.x()[[0, 0]], 3.0);
        assert_eq!(s.delta().unwrap()[1], 1);
    }

    #[test]
    fn beta_validation() {
        assert!(Beta::from_slice(&[0.0, -1.5]).is_ok());
        assert!(Beta::from_slice(&[f64::INFINITY]).is_err());
        assert_eq!(Beta::zeros(3).len(), 3);
    }
}
