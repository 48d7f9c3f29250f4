//! Command-line front end: dataset simulation, image half-splitting, model
//! fitting, batch prediction, and evaluation.
//!
//! Every command writes a manifest next to its outputs with the resolved
//! configuration, seeds, input digests, and tool version, so any run can be
//! reproduced from the manifest alone.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::backscore::BackscorerConfig;
use crate::data::{
    load_matrix_csv, validate_distance_matrix, write_matrix_csv, InputMatrix, Mat, ResponseMatrix,
};
use crate::error::{Error, Result};
use crate::eval::{emse, error_vectors_projection, match_rate};
use crate::forest::ForestConfig;
use crate::model_io::{load_model, save_model};
use crate::pipeline::{fit, predict_batch, Metric, PipelineConfig};
use crate::simulate::{gen_swiss_roll, radial_error};

#[derive(Debug, Parser)]
#[command(name = "drforest", version, about = "Distance random forest regression for manifold-valued responses")]
pub struct Cli {
    /// Worker threads; defaults to DRFOREST_THREADS or all cores.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic swiss-roll dataset.
    Simulate(SimulateArgs),
    /// Split image rows into upper-half inputs and lower-half responses.
    SplitImages(SplitImagesArgs),
    /// Fit a model from CSV inputs and responses.
    Fit(Box<FitArgs>),
    /// Batch-predict responses for new inputs.
    Predict(PredictArgs),
    /// Evaluate predictions against ground truth.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Number of samples.
    #[arg(long)]
    pub n: usize,
    /// Response noise standard deviation per coordinate.
    #[arg(long, default_value_t = std::f64::consts::FRAC_1_SQRT_2)]
    pub noise_sd: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Directory for inputs.csv, responses.csv, latents.csv, manifest.json.
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct SplitImagesArgs {
    /// CSV with one image per row, rows*cols pixel columns, row-major.
    #[arg(long)]
    pub images: PathBuf,
    /// Image height in pixels; must be even.
    #[arg(long)]
    pub rows: usize,
    /// Image width in pixels.
    #[arg(long)]
    pub cols: usize,
    /// Directory for inputs.csv (upper half) and responses.csv (lower half).
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, ValueEnum)]
pub enum MetricArg {
    Euclidean,
    Isomap,
    Precomputed,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub inputs: PathBuf,
    #[arg(long)]
    pub responses: PathBuf,
    /// Precomputed response distance matrix (metric = precomputed only).
    #[arg(long)]
    pub distances: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = MetricArg::Euclidean)]
    pub metric: MetricArg,
    /// Neighborhood size for the isomap metric.
    #[arg(long, default_value_t = 5)]
    pub isomap_k: usize,
    #[arg(long, default_value_t = 100)]
    pub trees: usize,
    /// Candidate split features per node; defaults to max(1, p/3).
    #[arg(long)]
    pub mtry: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub min_leaf: usize,
    #[arg(long, default_value_t = 2)]
    pub embed_dim: usize,
    #[arg(long, default_value_t = 100.0)]
    pub sigma_g: f64,
    #[arg(long, default_value_t = 200.0)]
    pub gamma_g: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub model_out: PathBuf,
    /// Hold out this fraction of rows as a test set before fitting.
    #[arg(long)]
    pub holdout_fraction: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub split_seed: u64,
    /// 0-based inputs column holding a group id; the column is excluded
    /// from the features and holdout splitting keeps groups intact.
    #[arg(long)]
    pub group_column: Option<usize>,
    /// Extra per-sample CSV (e.g. latents or labels) split alongside the
    /// data when holding out.
    #[arg(long)]
    pub aux: Option<PathBuf>,
    /// Directory for train_*/test_* CSVs; defaults to the model directory.
    #[arg(long)]
    pub split_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub inputs: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Predictions CSV.
    #[arg(long)]
    pub pred: PathBuf,
    /// Ground-truth responses CSV.
    #[arg(long)]
    pub truth: PathBuf,
    /// Latents CSV (t in column 0); enables radial metrics and the
    /// error-vector table.
    #[arg(long)]
    pub latents: Option<PathBuf>,
    /// True labels CSV (one column); enables match-rate evaluation.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Training responses CSV, required for match-rate evaluation.
    #[arg(long)]
    pub train_responses: Option<PathBuf>,
    /// Training labels CSV (one column), required for match-rate evaluation.
    #[arg(long)]
    pub train_labels: Option<PathBuf>,
    /// Coordinate plane for the error-vector table, e.g. "0,2".
    #[arg(long, default_value = "0,2")]
    pub proj_dims: String,
    #[arg(long)]
    pub report_out: PathBuf,
}

/// Reproducibility record written next to every command output.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    pub config: serde_json::Value,
    /// Input path -> SHA-256 of the file contents.
    pub input_digests: BTreeMap<String, String>,
    pub outputs: Vec<String>,
}

pub fn run(cli: Cli) -> Result<()> {
    init_threads(cli.threads)?;
    match cli.command {
        Command::Simulate(args) => cmd_simulate(&args),
        Command::SplitImages(args) => cmd_split_images(&args),
        Command::Fit(args) => cmd_fit(&args),
        Command::Predict(args) => cmd_predict(&args),
        Command::Eval(args) => cmd_eval(&args),
    }
}

fn init_threads(flag: Option<usize>) -> Result<()> {
    let threads = flag.or_else(|| {
        std::env::var("DRFOREST_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(n) = threads {
        if n == 0 {
            return Err(Error::InvalidArgument("thread count must be positive".into()));
        }
        // Ignore the error from a pool that is already initialized.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

fn file_digest(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    let mut hex = String::with_capacity(64);
    for byte in hasher.finalize() {
        hex.push_str(&format!("{byte:02x}"));
    }
    Ok(hex)
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::CorruptModel(format!("serialization failed: {e}")))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path.display().to_string(), e))
}

fn write_manifest(
    path: &Path,
    command: &str,
    config: serde_json::Value,
    inputs: &[&Path],
    outputs: &[&Path],
) -> Result<()> {
    let mut digests = BTreeMap::new();
    for p in inputs {
        digests.insert(p.display().to_string(), file_digest(p)?);
    }
    let manifest = RunManifest {
        command: command.to_string(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config,
        input_digests: digests,
        outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
    };
    write_json(path, &manifest)
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))
}

fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let roll = gen_swiss_roll(args.n, args.noise_sd, args.seed)?;
    ensure_dir(&args.out_dir)?;
    let inputs = args.out_dir.join("inputs.csv");
    let responses = args.out_dir.join("responses.csv");
    let latents = args.out_dir.join("latents.csv");
    write_matrix_csv(&inputs, &roll.inputs)?;
    write_matrix_csv(&responses, &roll.responses)?;
    write_matrix_csv(&latents, &roll.latents())?;
    write_manifest(
        &args.out_dir.join("manifest.json"),
        "simulate",
        serde_json::json!({
            "n": args.n,
            "noise_sd": args.noise_sd,
            "seed": args.seed,
        }),
        &[],
        &[&inputs, &responses, &latents],
    )
}

fn cmd_split_images(args: &SplitImagesArgs) -> Result<()> {
    if args.rows == 0 || args.rows % 2 != 0 {
        return Err(Error::BadDimensions(format!(
            "image height {} must be even and positive",
            args.rows
        )));
    }
    if args.cols == 0 {
        return Err(Error::BadDimensions("image width must be positive".into()));
    }
    let expected = args.rows * args.cols;
    let images = load_matrix_csv(&args.images, None)?;
    if images.ncols() != expected {
        return Err(Error::BadDimensions(format!(
            "each image row needs {} pixel columns for {}x{} images, found {}",
            expected,
            args.rows,
            args.cols,
            images.ncols()
        )));
    }
    let half = expected / 2;
    let upper = images.columns(0, half).into_owned();
    let lower = images.columns(half, half).into_owned();
    ensure_dir(&args.out_dir)?;
    let inputs = args.out_dir.join("inputs.csv");
    let responses = args.out_dir.join("responses.csv");
    write_matrix_csv(&inputs, &upper)?;
    write_matrix_csv(&responses, &lower)?;
    write_manifest(
        &args.out_dir.join("manifest.json"),
        "split-images",
        serde_json::json!({
            "rows": args.rows,
            "cols": args.cols,
        }),
        &[&args.images],
        &[&inputs, &responses],
    )
}

/// Group-respecting holdout: returns (train rows, test rows), both sorted.
fn holdout_split(
    n: usize,
    fraction: f64,
    split_seed: u64,
    groups: Option<&[f64]>,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(0.0..1.0).contains(&fraction) || fraction <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "holdout fraction {fraction} must lie strictly between 0 and 1"
        )));
    }
    let target = ((n as f64) * fraction).floor() as usize;
    if target == 0 || target >= n {
        return Err(Error::InvalidArgument(format!(
            "holdout fraction {fraction} leaves an empty train or test set at N={n}"
        )));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(split_seed);
    let mut test = Vec::new();
    match groups {
        None => {
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut rng);
            test.extend_from_slice(&order[..target]);
        }
        Some(ids) => {
            let mut unique: Vec<f64> = Vec::new();
            for &g in ids {
                if !unique.iter().any(|&u| u == g) {
                    unique.push(g);
                }
            }
            let mut order: Vec<usize> = (0..unique.len()).collect();
            order.shuffle(&mut rng);
            for gi in order {
                if test.len() >= target {
                    break;
                }
                let g = unique[gi];
                test.extend((0..n).filter(|&i| ids[i] == g));
            }
            if test.len() >= n {
                return Err(Error::InvalidArgument(
                    "group-respecting holdout consumed every sample; lower the fraction".into(),
                ));
            }
        }
    }
    test.sort_unstable();
    let test_set: Vec<bool> = {
        let mut mask = vec![false; n];
        for &i in &test {
            mask[i] = true;
        }
        mask
    };
    let train: Vec<usize> = (0..n).filter(|&i| !test_set[i]).collect();
    Ok((train, test))
}

fn take_rows(m: &Mat, rows: &[usize]) -> Mat {
    Mat::from_fn(rows.len(), m.ncols(), |i, j| m[(rows[i], j)])
}

fn take_square(m: &Mat, rows: &[usize]) -> Mat {
    Mat::from_fn(rows.len(), rows.len(), |i, j| m[(rows[i], rows[j])])
}

fn drop_column(m: &Mat, col: usize) -> Mat {
    Mat::from_fn(m.nrows(), m.ncols() - 1, |i, j| {
        m[(i, if j < col { j } else { j + 1 })]
    })
}

fn cmd_fit(args: &FitArgs) -> Result<()> {
    let raw_inputs = load_matrix_csv(&args.inputs, None)?;
    let responses_raw = load_matrix_csv(&args.responses, None)?;
    if raw_inputs.nrows() != responses_raw.nrows() {
        return Err(Error::DimensionMismatch {
            context: "response rows vs input rows".into(),
            expected: raw_inputs.nrows(),
            got: responses_raw.nrows(),
        });
    }

    let (features, groups): (Mat, Option<Vec<f64>>) = match args.group_column {
        Some(col) => {
            if col >= raw_inputs.ncols() {
                return Err(Error::InvalidArgument(format!(
                    "group column {col} out of range for {} input columns",
                    raw_inputs.ncols()
                )));
            }
            let ids: Vec<f64> = (0..raw_inputs.nrows()).map(|i| raw_inputs[(i, col)]).collect();
            (drop_column(&raw_inputs, col), Some(ids))
        }
        None => (raw_inputs.clone(), None),
    };

    let metric = match args.metric {
        MetricArg::Euclidean => Metric::Euclidean,
        MetricArg::Isomap => Metric::Isomap { k: args.isomap_k },
        MetricArg::Precomputed => Metric::Precomputed,
    };
    if metric == Metric::Precomputed && args.distances.is_none() {
        return Err(Error::InvalidConfig(
            "--metric precomputed requires --distances".into(),
        ));
    }
    if metric != Metric::Precomputed && args.distances.is_some() {
        return Err(Error::InvalidConfig(
            "--distances is only valid with --metric precomputed".into(),
        ));
    }
    let distances_full = match &args.distances {
        Some(path) => Some(load_matrix_csv(path, None)?),
        None => None,
    };

    let aux_full = match &args.aux {
        Some(path) => {
            let m = load_matrix_csv(path, None)?;
            if m.nrows() != raw_inputs.nrows() {
                return Err(Error::DimensionMismatch {
                    context: "aux rows vs input rows".into(),
                    expected: raw_inputs.nrows(),
                    got: m.nrows(),
                });
            }
            Some(m)
        }
        None => None,
    };

    let mut split_outputs: Vec<PathBuf> = Vec::new();
    let (x_train_mat, y_train_mat, d_train_mat) = match args.holdout_fraction {
        None => (features.clone(), responses_raw.clone(), distances_full),
        Some(fraction) => {
            let (train, test) =
                holdout_split(features.nrows(), fraction, args.split_seed, groups.as_deref())?;
            let split_dir = match &args.split_out {
                Some(d) => d.clone(),
                None => args
                    .model_out
                    .parent()
                    .map(Path::to_path_buf)
                    .unwrap_or_else(|| PathBuf::from(".")),
            };
            ensure_dir(&split_dir)?;
            let pairs: [(&str, Mat); 4] = [
                ("train_inputs.csv", take_rows(&features, &train)),
                ("train_responses.csv", take_rows(&responses_raw, &train)),
                ("test_inputs.csv", take_rows(&features, &test)),
                ("test_responses.csv", take_rows(&responses_raw, &test)),
            ];
            for (name, m) in &pairs {
                let p = split_dir.join(name);
                write_matrix_csv(&p, m)?;
                split_outputs.push(p);
            }
            if let Some(aux) = &aux_full {
                for (name, rows) in [("train_aux.csv", &train), ("test_aux.csv", &test)] {
                    let p = split_dir.join(name);
                    write_matrix_csv(&p, &take_rows(aux, rows))?;
                    split_outputs.push(p);
                }
            }
            let d = distances_full.map(|m| take_square(&m, &train));
            (
                take_rows(&features, &train),
                take_rows(&responses_raw, &train),
                d,
            )
        }
    };

    let config = PipelineConfig {
        forest: ForestConfig {
            n_trees: args.trees,
            mtry: args.mtry,
            min_leaf: args.min_leaf,
            bootstrap: true,
            seed: args.seed,
        },
        metric,
        embedding_dim: args.embed_dim,
        backscore: BackscorerConfig {
            sigma_g: args.sigma_g,
            gamma_g: args.gamma_g,
        },
    };

    let x = InputMatrix::new(x_train_mat)?;
    let y = ResponseMatrix::new(y_train_mat)?;
    let d = d_train_mat.map(validate_distance_matrix).transpose()?;
    let model = fit(&x, &y, d, &config)?;
    if let Some(parent) = args.model_out.parent() {
        if !parent.as_os_str().is_empty() {
            ensure_dir(parent)?;
        }
    }
    save_model(&model, &args.model_out)?;

    let mut manifest_inputs: Vec<&Path> = vec![args.inputs.as_path(), args.responses.as_path()];
    if let Some(d) = &args.distances {
        manifest_inputs.push(d.as_path());
    }
    if let Some(a) = &args.aux {
        manifest_inputs.push(a.as_path());
    }
    let mut manifest_outputs: Vec<&Path> = vec![args.model_out.as_path()];
    for p in &split_outputs {
        manifest_outputs.push(p.as_path());
    }
    let manifest_path = manifest_sibling(&args.model_out);
    write_manifest(
        &manifest_path,
        "fit",
        serde_json::json!({
            "pipeline": serde_json::to_value(&config)
                .map_err(|e| Error::CorruptModel(e.to_string()))?,
            "holdout_fraction": args.holdout_fraction,
            "split_seed": args.split_seed,
            "group_column": args.group_column,
        }),
        &manifest_inputs,
        &manifest_outputs,
    )
}

fn manifest_sibling(output: &Path) -> PathBuf {
    let mut name = output
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "output".to_string());
    name.push_str(".manifest.json");
    output.with_file_name(name)
}

fn cmd_predict(args: &PredictArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let inputs = load_matrix_csv(&args.inputs, None)?;
    let predictions = predict_batch(&model, &inputs)?;
    if let Some(parent) = args.out.parent() {
        if !parent.as_os_str().is_empty() {
            ensure_dir(parent)?;
        }
    }
    write_matrix_csv(&args.out, &predictions)?;
    write_manifest(
        &manifest_sibling(&args.out),
        "predict",
        serde_json::json!({}),
        &[args.model.as_path(), args.inputs.as_path()],
        &[args.out.as_path()],
    )
}

#[derive(Debug, Serialize)]
struct EvalReportJson {
    emse: f64,
    n_test: usize,
    mean_radial_error: Option<f64>,
    match_rate: Option<f64>,
    error_vectors_csv: Option<String>,
}

fn parse_proj_dims(text: &str) -> Result<(usize, usize)> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() == 2 {
        if let (Ok(a), Ok(b)) = (parts[0].trim().parse(), parts[1].trim().parse()) {
            return Ok((a, b));
        }
    }
    Err(Error::InvalidArgument(format!(
        "projection dims '{text}' must be two comma-separated column indices"
    )))
}

fn load_label_column(path: &Path) -> Result<Vec<f64>> {
    let m = load_matrix_csv(path, Some(1))?;
    Ok(m.column(0).iter().copied().collect())
}

fn cmd_eval(args: &EvalArgs) -> Result<()> {
    let pred = load_matrix_csv(&args.pred, None)?;
    let truth = load_matrix_csv(&args.truth, None)?;
    let emse_value = emse(&truth, &pred)?;

    let mut mean_radial = None;
    let mut error_vectors_csv = None;
    if let Some(latents_path) = &args.latents {
        let latents = load_matrix_csv(latents_path, None)?;
        if latents.nrows() != pred.nrows() {
            return Err(Error::DimensionMismatch {
                context: "latent rows vs prediction rows".into(),
                expected: pred.nrows(),
                got: latents.nrows(),
            });
        }
        if pred.ncols() < 3 {
            return Err(Error::InvalidArgument(
                "radial metrics need 3-D response predictions".into(),
            ));
        }
        let mut acc = 0.0;
        for i in 0..pred.nrows() {
            let row = [pred[(i, 0)], pred[(i, 1)], pred[(i, 2)]];
            acc += radial_error(&row, latents[(i, 0)]);
        }
        mean_radial = Some(acc / pred.nrows() as f64);

        let dims = parse_proj_dims(&args.proj_dims)?;
        let table = error_vectors_projection(&truth, &pred, dims)?;
        let table_path = manifest_suffix(&args.report_out, ".error_vectors.csv");
        write_matrix_csv(&table_path, &table)?;
        error_vectors_csv = Some(table_path.display().to_string());
    }

    let mut rate = None;
    if let Some(labels_path) = &args.labels {
        let (train_responses_path, train_labels_path) =
            match (&args.train_responses, &args.train_labels) {
                (Some(r), Some(l)) => (r, l),
                _ => {
                    return Err(Error::InvalidArgument(
                        "--labels needs --train-responses and --train-labels".into(),
                    ))
                }
            };
        let labels_true = load_label_column(labels_path)?;
        let labels_train = load_label_column(train_labels_path)?;
        let y_train = load_matrix_csv(train_responses_path, None)?;
        rate = Some(match_rate(&pred, &y_train, &labels_train, &labels_true)?);
    }

    if let Some(parent) = args.report_out.parent() {
        if !parent.as_os_str().is_empty() {
            ensure_dir(parent)?;
        }
    }
    let report = EvalReportJson {
        emse: emse_value,
        n_test: pred.nrows(),
        mean_radial_error: mean_radial,
        match_rate: rate,
        error_vectors_csv,
    };
    write_json(&args.report_out, &report)?;

    let mut manifest_inputs: Vec<&Path> = vec![args.pred.as_path(), args.truth.as_path()];
    for opt in [
        &args.latents,
        &args.labels,
        &args.train_responses,
        &args.train_labels,
    ] {
        if let Some(p) = opt {
            manifest_inputs.push(p.as_path());
        }
    }
    write_manifest(
        &manifest_sibling(&args.report_out),
        "eval",
        serde_json::json!({ "proj_dims": args.proj_dims }),
        &manifest_inputs,
        &[args.report_out.as_path()],
    )
}

fn manifest_suffix(output: &Path, suffix: &str) -> PathBuf {
    let mut name = output
        .file_stem()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "report".to_string());
    name.push_str(suffix);
    output.with_file_name(name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn proj_dims_parse() {
        assert_eq!(parse_proj_dims("0,2").unwrap(), (0, 2));
        assert_eq!(parse_proj_dims(" 1 , 3 ").unwrap(), (1, 3));
        assert!(parse_proj_dims("1").is_err());
        assert!(parse_proj_dims("a,b").is_err());
    }

    #[test]
    fn holdout_split_is_deterministic_and_disjoint() {
        let (train_a, test_a) = holdout_split(10, 0.3, 42, None).unwrap();
        let (train_b, test_b) = holdout_split(10, 0.3, 42, None).unwrap();
        assert_eq!(train_a, train_b);
        assert_eq!(test_a, test_b);
        assert_eq!(test_a.len(), 3);
        let mut all: Vec<usize> = train_a.iter().chain(&test_a).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn group_split_keeps_groups_together() {
        let groups: Vec<f64> = (0..12).map(|i| (i / 3) as f64).collect(); // 4 groups of 3
        let (train, test) = holdout_split(12, 0.25, 7, Some(&groups)).unwrap();
        assert!(!test.is_empty() && !train.is_empty());
        for g in 0..4 {
            let members: Vec<usize> = (0..12).filter(|&i| groups[i] == g as f64).collect();
            let in_test = members.iter().filter(|i| test.contains(i)).count();
            assert!(
                in_test == 0 || in_test == members.len(),
                "group {g} split across train and test"
            );
        }
    }

    #[test]
    fn holdout_rejects_degenerate_fractions() {
        assert!(holdout_split(10, 0.0, 1, None).is_err());
        assert!(holdout_split(10, 1.0, 1, None).is_err());
        assert!(holdout_split(3, 0.05, 1, None).is_err());
    }

    #[test]
    fn column_dropping_preserves_order() {
        let m = Mat::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let d = drop_column(&m, 1);
        assert_eq!(d, Mat::from_row_slice(2, 2, &[1.0, 3.0, 4.0, 6.0]));
    }
}
