//! Core numeric containers: input/response/distance matrices and CSV I/O.
//!
//! All matrices are dense double precision at desk scale (a few thousand
//! rows). Types are immutable after construction and safe to share
//! read-only across threads.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Dense double-precision matrix used throughout the crate.
pub type Mat = DMatrix<f64>;

/// Diagonal entries of a distance matrix must be zero within this tolerance.
pub const DIAGONAL_TOL: f64 = 1e-12;
/// Asymmetry up to this tolerance is repaired by averaging; larger is an error.
pub const SYMMETRY_TOL: f64 = 1e-9;

fn check_finite(values: &Mat, context: &str) -> Result<()> {
    for j in 0..values.ncols() {
        for i in 0..values.nrows() {
            if !values[(i, j)].is_finite() {
                let _ = context;
                return Err(Error::NonFiniteEntry { row: i, col: j });
            }
        }
    }
    Ok(())
}

/// N×p matrix of input observations, one row per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct InputMatrix {
    values: Mat,
}

impl InputMatrix {
    pub fn new(values: Mat) -> Result<Self> {
        if values.nrows() == 0 || values.ncols() == 0 {
            return Err(Error::EmptyMatrix {
                context: "input matrix".into(),
            });
        }
        check_finite(&values, "input matrix")?;
        Ok(Self { values })
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    /// Number of input features.
    pub fn p(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &Mat {
        &self.values
    }

    /// Copies row `i` into a plain vector.
    pub fn row_vec(&self, i: usize) -> Vec<f64> {
        self.values.row(i).iter().copied().collect()
    }
}

/// N×q matrix of response representations, one row per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseMatrix {
    values: Mat,
}

impl ResponseMatrix {
    pub fn new(values: Mat) -> Result<Self> {
        if values.nrows() == 0 || values.ncols() == 0 {
            return Err(Error::EmptyMatrix {
                context: "response matrix".into(),
            });
        }
        check_finite(&values, "response matrix")?;
        Ok(Self { values })
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    /// Dimension of the response representation space.
    pub fn q(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &Mat {
        &self.values
    }

    pub fn row_vec(&self, i: usize) -> Vec<f64> {
        self.values.row(i).iter().copied().collect()
    }
}

/// Validated N×N matrix of pairwise response distances: symmetric,
/// nonnegative, zero diagonal, all entries finite.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    values: Mat,
}

impl DistanceMatrix {
    /// Validates a square matrix of distances.
    ///
    /// Asymmetry up to [`SYMMETRY_TOL`] is repaired by averaging the matrix
    /// with its transpose, so files that went through lossy text round trips
    /// still load. Diagonal entries within [`DIAGONAL_TOL`] of zero are
    /// snapped to exactly zero. Validation is idempotent: a matrix that
    /// already passed comes back bit-identical.
    pub fn validate(values: Mat) -> Result<Self> {
        let (rows, cols) = values.shape();
        if rows != cols {
            return Err(Error::NonSquare { rows, cols });
        }
        if rows == 0 {
            return Err(Error::EmptyMatrix {
                context: "distance matrix".into(),
            });
        }
        check_finite(&values, "distance matrix")?;
        for i in 0..rows {
            for j in 0..cols {
                let v = values[(i, j)];
                if v < 0.0 {
                    return Err(Error::NegativeEntry {
                        row: i,
                        col: j,
                        value: v,
                    });
                }
            }
        }
        for i in 0..rows {
            let v = values[(i, i)];
            if v.abs() > DIAGONAL_TOL {
                return Err(Error::NonzeroDiagonal { index: i, value: v });
            }
        }
        let mut repaired = values;
        for i in 0..rows {
            for j in (i + 1)..cols {
                let a = repaired[(i, j)];
                let b = repaired[(j, i)];
                let gap = (a - b).abs();
                if gap > SYMMETRY_TOL {
                    return Err(Error::AsymmetryTooLarge {
                        row: i,
                        col: j,
                        max_abs: gap,
                        tolerance: SYMMETRY_TOL,
                    });
                }
                // (a + a) / 2 == a exactly, which keeps validation idempotent.
                let avg = (a + b) / 2.0;
                repaired[(i, j)] = avg;
                repaired[(j, i)] = avg;
            }
            repaired[(i, i)] = 0.0;
        }
        Ok(Self { values: repaired })
    }

    /// Wraps a matrix that is symmetric with a zero diagonal by construction.
    pub(crate) fn from_symmetric_unchecked(values: Mat) -> Self {
        debug_assert_eq!(values.nrows(), values.ncols());
        Self { values }
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn values(&self) -> &Mat {
        &self.values
    }

    /// Smallest off-diagonal entry; `None` for a 1×1 matrix.
    pub fn min_off_diagonal(&self) -> Option<f64> {
        let n = self.n();
        if n < 2 {
            return None;
        }
        let mut min = f64::INFINITY;
        for i in 0..n {
            for j in 0..n {
                if i != j && self.values[(i, j)] < min {
                    min = self.values[(i, j)];
                }
            }
        }
        Some(min)
    }

    /// Largest off-diagonal entry; `None` for a 1×1 matrix.
    pub fn max_off_diagonal(&self) -> Option<f64> {
        let n = self.n();
        if n < 2 {
            return None;
        }
        let mut max = f64::NEG_INFINITY;
        for i in 0..n {
            for j in 0..n {
                if i != j && self.values[(i, j)] > max {
                    max = self.values[(i, j)];
                }
            }
        }
        Some(max)
    }

    /// Matrix of squared distances.
    pub fn squared(&self) -> Mat {
        self.values.map(|v| v * v)
    }
}

/// Validates a raw square matrix as a [`DistanceMatrix`].
pub fn validate_distance_matrix(values: Mat) -> Result<DistanceMatrix> {
    DistanceMatrix::validate(values)
}

/// A training set: inputs, optional response representations, and the
/// pairwise response distances the forest trains on.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub inputs: InputMatrix,
    pub responses: Option<ResponseMatrix>,
    pub distances: DistanceMatrix,
}

impl Dataset {
    pub fn new(
        inputs: InputMatrix,
        responses: Option<ResponseMatrix>,
        distances: DistanceMatrix,
    ) -> Result<Self> {
        let n = inputs.n();
        if let Some(resp) = &responses {
            if resp.n() != n {
                return Err(Error::DimensionMismatch {
                    context: "dataset response rows".into(),
                    expected: n,
                    got: resp.n(),
                });
            }
        }
        if distances.n() != n {
            return Err(Error::DimensionMismatch {
                context: "dataset distance rows".into(),
                expected: n,
                got: distances.n(),
            });
        }
        Ok(Self {
            inputs,
            responses,
            distances,
        })
    }

    pub fn n(&self) -> usize {
        self.inputs.n()
    }
}

/// Reads a rectangular numeric CSV into a row-major matrix.
///
/// A single header row is detected automatically: if any token in the first
/// row fails to parse as a float, that row is skipped. `expected_cols`
/// enforces a column count when the caller knows it.
pub fn load_matrix_csv(path: impl AsRef<Path>, expected_cols: Option<usize>) -> Result<Mat> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(BufReader::new(file));

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut ncols: Option<usize> = None;
    let mut skipped_header = false;

    for (raw_idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| {
            Error::io(
                path.display().to_string(),
                std::io::Error::new(std::io::ErrorKind::InvalidData, e),
            )
        })?;
        if record.iter().all(|t| t.is_empty()) {
            continue; // ignore blank lines, including a trailing newline
        }
        let parsed: std::result::Result<Vec<f64>, (usize, String)> = record
            .iter()
            .enumerate()
            .map(|(col, tok)| tok.parse::<f64>().map_err(|_| (col, tok.to_string())))
            .collect();
        match parsed {
            Ok(values) => {
                if let Some(nc) = ncols {
                    if values.len() != nc {
                        return Err(Error::RaggedRows {
                            row: raw_idx,
                            expected: nc,
                            got: values.len(),
                        });
                    }
                } else {
                    ncols = Some(values.len());
                }
                rows.push(values);
            }
            Err((col, token)) => {
                if raw_idx == 0 && !skipped_header {
                    skipped_header = true;
                    continue;
                }
                return Err(Error::NonNumericCell {
                    row: raw_idx,
                    col,
                    token,
                });
            }
        }
    }

    let ncols = ncols.ok_or_else(|| Error::EmptyMatrix {
        context: path.display().to_string(),
    })?;
    if let Some(expected) = expected_cols {
        if ncols != expected {
            return Err(Error::DimensionMismatch {
                context: format!("columns in {}", path.display()),
                expected,
                got: ncols,
            });
        }
    }
    let nrows = rows.len();
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    Ok(Mat::from_row_slice(nrows, ncols, &flat))
}

/// Writes a matrix as comma-separated rows with `\n` line endings.
///
/// Values are printed in shortest round-trip form, so reading the file back
/// reproduces every entry bit-exactly.
pub fn write_matrix_csv(path: impl AsRef<Path>, values: &Mat) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut out = BufWriter::new(file);
    for i in 0..values.nrows() {
        let mut line = String::new();
        for j in 0..values.ncols() {
            if j > 0 {
                line.push(',');
            }
            line.push_str(&format_float(values[(i, j)]));
        }
        line.push('\n');
        out.write_all(line.as_bytes())
            .map_err(|e| Error::io(path.display().to_string(), e))?;
    }
    out.flush()
        .map_err(|e| Error::io(path.display().to_string(), e))
}

/// Shortest representation that parses back to the same bits.
pub fn format_float(v: f64) -> String {
    format!("{v:e}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use tempfile::tempdir;

    #[test]
    fn validates_single_point() {
        let d = validate_distance_matrix(Mat::from_row_slice(1, 1, &[0.0])).unwrap();
        assert_eq!(d.n(), 1);
        assert_eq!(d.min_off_diagonal(), None);
    }

    #[test]
    fn validates_symmetric_pair() {
        let d = validate_distance_matrix(Mat::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])).unwrap();
        assert_eq!(d.values()[(0, 1)], 1.0);
    }

    #[test]
    fn rejects_negative_entries() {
        let err = validate_distance_matrix(Mat::from_row_slice(2, 2, &[0.0, -1.0, -1.0, 0.0]))
            .unwrap_err();
        assert!(matches!(err, Error::NegativeEntry { .. }));
    }

    #[test]
    fn rejects_non_square() {
        let err = validate_distance_matrix(Mat::from_row_slice(1, 2, &[0.0, 1.0])).unwrap_err();
        assert!(matches!(err, Error::NonSquare { .. }));
    }

    #[test]
    fn rejects_nonzero_diagonal() {
        let err =
            validate_distance_matrix(Mat::from_row_slice(2, 2, &[0.5, 1.0, 1.0, 0.0])).unwrap_err();
        assert!(matches!(err, Error::NonzeroDiagonal { .. }));
    }

    #[test]
    fn rejects_large_asymmetry_repairs_small() {
        let err = validate_distance_matrix(Mat::from_row_slice(2, 2, &[0.0, 1.0, 1.5, 0.0]))
            .unwrap_err();
        assert!(matches!(err, Error::AsymmetryTooLarge { .. }));

        let d = validate_distance_matrix(Mat::from_row_slice(2, 2, &[0.0, 1.0, 1.0 + 1e-10, 0.0]))
            .unwrap();
        assert_eq!(d.values()[(0, 1)], d.values()[(1, 0)]);
    }

    #[test]
    fn validation_is_idempotent() {
        let raw = Mat::from_row_slice(3, 3, &[0.0, 1.25, 2.5, 1.25 + 3e-10, 0.0, 0.75, 2.5, 0.75, 1e-13]);
        let once = validate_distance_matrix(raw).unwrap();
        let twice = validate_distance_matrix(once.values().clone()).unwrap();
        assert_eq!(once.values().as_slice(), twice.values().as_slice());
    }

    #[test]
    fn csv_round_trip_basic() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("m.csv");
        std::fs::write(&path, "0,1\n1,0\n").unwrap();
        let m = load_matrix_csv(&path, None).unwrap();
        assert_eq!(m.shape(), (2, 2));
        assert_eq!(m[(0, 1)], 1.0);
    }

    #[test]
    fn csv_header_skipped() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("m.csv");
        std::fs::write(&path, "a,b\n0,1\n1,0\n").unwrap();
        let m = load_matrix_csv(&path, None).unwrap();
        assert_eq!(m.shape(), (2, 2));
    }

    #[test]
    fn csv_ragged_rows_error() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("m.csv");
        std::fs::write(&path, "0,1\n1\n").unwrap();
        let err = load_matrix_csv(&path, None).unwrap_err();
        assert!(matches!(err, Error::RaggedRows { .. }));
    }

    #[test]
    fn csv_non_numeric_cell_outside_header() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("m.csv");
        std::fs::write(&path, "0,1\n1,oops\n").unwrap();
        let err = load_matrix_csv(&path, None).unwrap_err();
        assert!(matches!(err, Error::NonNumericCell { .. }));
    }

    proptest! {
        #[test]
        fn csv_write_read_is_identity(values in proptest::collection::vec(-1e12f64..1e12, 1..40)) {
            let dir = tempdir().unwrap();
            let path = dir.path().join("m.csv");
            let cols = if values.len() % 2 == 0 { 2 } else { 1 };
            let rows = values.len() / cols;
            let m = Mat::from_row_slice(rows, cols, &values[..rows * cols]);
            write_matrix_csv(&path, &m).unwrap();
            let back = load_matrix_csv(&path, Some(cols)).unwrap();
            prop_assert_eq!(m, back);
        }
    }
}
