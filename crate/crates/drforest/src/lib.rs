//! Distance random forest regression for manifold-valued responses.
//!
//! Trains regression forests whose split criterion depends only on pairwise
//! response distances, predicts distances from unseen responses to the
//! training set, embeds them with classical MDS plus an out-of-sample
//! extension, and maps embeddings back to response space through
//! regularized kernel interpolation. Includes Euclidean and Isomap response
//! metrics, baseline predictors (k-nearest-neighbor, mean-leaf forest,
//! kernel forest), a swiss-roll simulator, evaluation metrics, model
//! serialization, and a command-line front end.
//!
//! ```
//! use drforest::{
//!     fit, predict, BackscorerConfig, ForestConfig, InputMatrix, Mat, Metric,
//!     PipelineConfig, ResponseMatrix,
//! };
//!
//! let x = InputMatrix::new(Mat::from_fn(20, 2, |i, j| (i + j) as f64)).unwrap();
//! let y = ResponseMatrix::new(Mat::from_fn(20, 1, |i, _| (i as f64).sqrt())).unwrap();
//! let config = PipelineConfig {
//!     forest: ForestConfig { n_trees: 20, seed: 1, ..Default::default() },
//!     metric: Metric::Euclidean,
//!     embedding_dim: 1,
//!     backscore: BackscorerConfig { sigma_g: 10.0, gamma_g: 50.0 },
//! };
//! let model = fit(&x, &y, None, &config).unwrap();
//! let y_hat = predict(&model, &[3.0, 4.0]).unwrap();
//! assert_eq!(y_hat.len(), 1);
//! ```

pub mod backscore;
pub mod cli;
pub mod data;
pub mod distance_prediction;
pub mod distances;
pub mod error;
pub mod eval;
pub mod forest;
pub mod mds;
pub mod model_io;
pub mod pipeline;
pub mod simulate;

pub use backscore::{backscore, fit_backscorer, gaussian_gram, Backscorer, BackscorerConfig};
pub use data::{
    load_matrix_csv, validate_distance_matrix, write_matrix_csv, Dataset, DistanceMatrix,
    InputMatrix, Mat, ResponseMatrix,
};
pub use distance_prediction::{predict_distances, PredictedDistances};
pub use distances::{euclidean_distances, isomap_distances, knn_neighbors, NeighborhoodGraph};
pub use error::{Error, Result};
pub use forest::{
    best_split, draw_bootstrap, draw_feature_subset, fit_forest, node_dispersion,
    populate_leaf_means, split_gain, stream_rng, sweep_feature_gains, AffinityVector, Forest,
    ForestConfig, SplitRule, Tree, GAIN_TIE_TOLERANCE,
};
pub use mds::{double_center, fit_mds, oos_embed, oos_kernel_row, EmbeddedPoint, MdsModel};
pub use model_io::{load_model, save_model, FORMAT_VERSION};
pub use pipeline::{
    fit, knn_predict, krf_predict, predict, predict_batch, rf_mean_predict, Metric,
    PipelineConfig, PipelineModel,
};
pub use simulate::{gen_swiss_roll, radial_error, SwissRoll};
