//! Model persistence: one self-describing JSON document per model.
//!
//! Matrices are stored as base64-encoded little-endian IEEE-754 doubles in
//! row-major order; scalars and small vectors are plain JSON numbers
//! (shortest round-trip formatting, so every value reloads bit-exactly;
//! this relies on serde_json's `float_roundtrip` feature for correctly
//! rounded parsing). Saving the same model twice produces byte-identical
//! files.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use serde::{Deserialize, Serialize};

use crate::backscore::Backscorer;
use crate::data::{validate_distance_matrix, InputMatrix, Mat};
use crate::error::{Error, Result};
use crate::forest::Forest;
use crate::mds::MdsModel;
use crate::pipeline::{PipelineConfig, PipelineModel};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct MatrixSchema {
    rows: usize,
    cols: usize,
    data: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct MdsSchema {
    z: MatrixSchema,
    eigenvalues: Vec<f64>,
    eigenvectors: MatrixSchema,
    d2_row_sums: Vec<f64>,
    d2_total: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct ModelSchema {
    format_version: u32,
    config: PipelineConfig,
    x_train: MatrixSchema,
    d_train: MatrixSchema,
    forest: Forest,
    mds: MdsSchema,
    backscorer_c: MatrixSchema,
}

fn encode_matrix(m: &Mat) -> MatrixSchema {
    let mut bytes = Vec::with_capacity(m.nrows() * m.ncols() * 8);
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            bytes.extend_from_slice(&m[(i, j)].to_le_bytes());
        }
    }
    MatrixSchema {
        rows: m.nrows(),
        cols: m.ncols(),
        data: BASE64.encode(bytes),
    }
}

fn decode_matrix(s: &MatrixSchema, what: &str) -> Result<Mat> {
    let bytes = BASE64
        .decode(&s.data)
        .map_err(|e| Error::CorruptModel(format!("{what}: bad base64: {e}")))?;
    if bytes.len() != s.rows * s.cols * 8 {
        return Err(Error::CorruptModel(format!(
            "{what}: expected {} bytes for {}x{}, got {}",
            s.rows * s.cols * 8,
            s.rows,
            s.cols,
            bytes.len()
        )));
    }
    let values: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(Mat::from_row_slice(s.rows, s.cols, &values))
}

/// Serializes a fitted model to pretty-printed JSON.
pub fn save_model(model: &PipelineModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let schema = ModelSchema {
        format_version: FORMAT_VERSION,
        config: model.config.clone(),
        x_train: encode_matrix(model.x_train.values()),
        d_train: encode_matrix(model.d_train.values()),
        forest: model.forest.clone(),
        mds: MdsSchema {
            z: encode_matrix(model.mds.z()),
            eigenvalues: model.mds.eigenvalues().to_vec(),
            eigenvectors: encode_matrix(model.mds.eigenvectors()),
            d2_row_sums: model.mds.d2_row_sums().to_vec(),
            d2_total: model.mds.d2_total(),
        },
        backscorer_c: encode_matrix(model.backscorer.coefficients()),
    };
    let file = File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut out = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut out, &schema)
        .map_err(|e| Error::CorruptModel(format!("serialization failed: {e}")))?;
    out.write_all(b"\n")
        .map_err(|e| Error::io(path.display().to_string(), e))?;
    out.flush()
        .map_err(|e| Error::io(path.display().to_string(), e))
}

/// Loads a model saved by [`save_model`]; the reloaded model predicts
/// bit-identically to the original.
pub fn load_model(path: impl AsRef<Path>) -> Result<PipelineModel> {
    let path = path.as_ref();
    let mut text = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|e| Error::io(path.display().to_string(), e))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| Error::CorruptModel(format!("not valid JSON: {e}")))?;
    let found = value
        .get("format_version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| Error::CorruptModel("missing format_version".into()))? as u32;
    if found != FORMAT_VERSION {
        return Err(Error::VersionMismatch {
            found,
            expected: FORMAT_VERSION,
        });
    }
    let schema: ModelSchema = serde_json::from_value(value)
        .map_err(|e| Error::CorruptModel(format!("schema mismatch: {e}")))?;

    let x_train = InputMatrix::new(decode_matrix(&schema.x_train, "x_train")?)
        .map_err(|e| Error::CorruptModel(format!("stored input matrix invalid: {e}")))?;
    let d_train = validate_distance_matrix(decode_matrix(&schema.d_train, "d_train")?)
        .map_err(|e| Error::CorruptModel(format!("stored distance matrix invalid: {e}")))?;
    let mds = MdsModel::from_parts(
        decode_matrix(&schema.mds.z, "mds.z")?,
        schema.mds.eigenvalues,
        decode_matrix(&schema.mds.eigenvectors, "mds.eigenvectors")?,
        schema.mds.d2_row_sums,
        schema.mds.d2_total,
    )?;
    let backscorer = Backscorer::from_parts(
        decode_matrix(&schema.backscorer_c, "backscorer_c")?,
        mds.z().clone(),
        schema.config.backscore,
    )?;
    let model = PipelineModel {
        forest: schema.forest,
        d_train,
        mds,
        backscorer,
        x_train,
        config: schema.config,
    };
    model.check_consistent()?;
    Ok(model)
}
