//! Test-set metrics: Euclidean mean squared error, error-vector tables,
//! and exact-match classification rate for training-drawn predictors.

use crate::data::Mat;
use crate::error::{Error, Result};

/// Evaluation summary for one prediction run.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub emse: f64,
    /// N_test×q matrix of prediction errors, `pred - true`.
    pub per_sample_errors: Mat,
    pub mean_radial_error: Option<f64>,
    pub match_rate: Option<f64>,
}

fn check_same_shape(y_true: &Mat, y_pred: &Mat) -> Result<()> {
    if y_true.shape() != y_pred.shape() {
        return Err(Error::DimensionMismatch {
            context: "prediction matrix shape".into(),
            expected: y_true.nrows() * y_true.ncols(),
            got: y_pred.nrows() * y_pred.ncols(),
        });
    }
    if y_true.nrows() == 0 {
        return Err(Error::EmptyMatrix {
            context: "evaluation".into(),
        });
    }
    Ok(())
}

/// Euclidean mean squared error: the squared error norm summed over
/// response coordinates, averaged over samples.
pub fn emse(y_true: &Mat, y_pred: &Mat) -> Result<f64> {
    check_same_shape(y_true, y_pred)?;
    let n = y_true.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for c in 0..y_true.ncols() {
            let e = y_pred[(i, c)] - y_true[(i, c)];
            acc += e * e;
        }
    }
    Ok(acc / n as f64)
}

/// Per-sample error matrix, `pred - true`.
pub fn error_matrix(y_true: &Mat, y_pred: &Mat) -> Result<Mat> {
    check_same_shape(y_true, y_pred)?;
    Ok(y_pred - y_true)
}

/// Plot-ready error vectors in a coordinate plane: one row
/// `(true_i, true_j, err_i, err_j)` per test sample.
pub fn error_vectors_projection(
    y_true: &Mat,
    y_pred: &Mat,
    dims: (usize, usize),
) -> Result<Mat> {
    check_same_shape(y_true, y_pred)?;
    let q = y_true.ncols();
    if dims.0 >= q || dims.1 >= q {
        return Err(Error::InvalidArgument(format!(
            "projection dims {:?} out of range for q={q}",
            dims
        )));
    }
    let n = y_true.nrows();
    let mut out = Mat::zeros(n, 4);
    for i in 0..n {
        out[(i, 0)] = y_true[(i, dims.0)];
        out[(i, 1)] = y_true[(i, dims.1)];
        out[(i, 2)] = y_pred[(i, dims.0)] - y_true[(i, dims.0)];
        out[(i, 3)] = y_pred[(i, dims.1)] - y_true[(i, dims.1)];
    }
    Ok(out)
}

/// Fraction of predictions whose matched training row carries the true
/// label. Applies only to predictors that return training responses
/// verbatim (nearest neighbor, kernel argmax); any prediction that equals
/// no training row is an error. Rows are matched by exact equality, lowest
/// training index first.
pub fn match_rate(
    y_pred: &Mat,
    y_train: &Mat,
    labels_train: &[f64],
    labels_true: &[f64],
) -> Result<f64> {
    if y_pred.ncols() != y_train.ncols() {
        return Err(Error::DimensionMismatch {
            context: "prediction vs training response width".into(),
            expected: y_train.ncols(),
            got: y_pred.ncols(),
        });
    }
    if labels_train.len() != y_train.nrows() {
        return Err(Error::DimensionMismatch {
            context: "training labels".into(),
            expected: y_train.nrows(),
            got: labels_train.len(),
        });
    }
    if labels_true.len() != y_pred.nrows() {
        return Err(Error::DimensionMismatch {
            context: "true labels".into(),
            expected: y_pred.nrows(),
            got: labels_true.len(),
        });
    }
    if y_pred.nrows() == 0 {
        return Err(Error::EmptyMatrix {
            context: "match rate".into(),
        });
    }
    let mut hits = 0usize;
    for i in 0..y_pred.nrows() {
        let matched = (0..y_train.nrows())
            .find(|&j| (0..y_train.ncols()).all(|c| y_pred[(i, c)] == y_train[(j, c)]))
            .ok_or(Error::PredictionNotInTrainingSet { row: i })?;
        if labels_train[matched] == labels_true[i] {
            hits += 1;
        }
    }
    Ok(hits as f64 / y_pred.nrows() as f64)
}
