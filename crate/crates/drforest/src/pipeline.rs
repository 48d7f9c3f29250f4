//! End-to-end orchestration: distance construction, forest training, MDS,
//! backscoring, and the baseline predictors used for comparison.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::backscore::{backscore, fit_backscorer, Backscorer, BackscorerConfig};
use crate::data::{DistanceMatrix, InputMatrix, Mat, ResponseMatrix};
use crate::distance_prediction::predict_distances;
use crate::distances::{euclidean_distances, isomap_distances};
use crate::error::{Error, Result};
use crate::forest::{fit_forest, populate_leaf_means, Forest, ForestConfig, Node};
use crate::mds::{fit_mds, oos_embed, oos_kernel_row, MdsModel};

/// How training response distances are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Metric {
    /// Euclidean distances between response rows.
    Euclidean,
    /// Geodesic distances through the k-nearest-neighbor graph of the
    /// response rows.
    Isomap { k: usize },
    /// A caller-supplied distance matrix.
    Precomputed,
}

/// Full method configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub forest: ForestConfig,
    pub metric: Metric,
    pub embedding_dim: usize,
    pub backscore: BackscorerConfig,
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.embedding_dim == 0 {
            return Err(Error::InvalidConfig(
                "embedding_dim must be at least 1".into(),
            ));
        }
        if let Metric::Isomap { k } = self.metric {
            if k == 0 {
                return Err(Error::InvalidConfig(
                    "isomap neighborhood size must be at least 1".into(),
                ));
            }
        }
        self.backscore.validate()
    }
}

/// A trained end-to-end predictor.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineModel {
    pub forest: Forest,
    pub d_train: DistanceMatrix,
    pub mds: MdsModel,
    pub backscorer: Backscorer,
    pub x_train: InputMatrix,
    pub config: PipelineConfig,
}

impl PipelineModel {
    pub fn n_train(&self) -> usize {
        self.x_train.n()
    }

    pub fn p(&self) -> usize {
        self.x_train.p()
    }

    pub fn q(&self) -> usize {
        self.backscorer.q()
    }

    /// Cross-checks component dimensions; used after deserialization.
    pub fn check_consistent(&self) -> Result<()> {
        let n = self.x_train.n();
        let consistent = self.forest.n_train == n
            && self.forest.n_features == self.x_train.p()
            && self.d_train.n() == n
            && self.mds.n() == n
            && self.backscorer.n() == n
            && self.mds.m() == self.backscorer.m()
            && self.mds.m() == self.config.embedding_dim;
        if consistent {
            Ok(())
        } else {
            Err(Error::CorruptModel(
                "model components disagree on dimensions".into(),
            ))
        }
    }
}

/// Builds the training distance matrix according to the configured metric.
fn build_distances(
    y: &ResponseMatrix,
    metric: Metric,
    precomputed: Option<DistanceMatrix>,
) -> Result<DistanceMatrix> {
    match (metric, precomputed) {
        (Metric::Euclidean, None) => euclidean_distances(y.values()),
        (Metric::Isomap { k }, None) => isomap_distances(y.values(), k),
        (Metric::Precomputed, Some(d)) => {
            if d.n() != y.n() {
                return Err(Error::DimensionMismatch {
                    context: "precomputed distance rows".into(),
                    expected: y.n(),
                    got: d.n(),
                });
            }
            Ok(d)
        }
        (Metric::Precomputed, None) => Err(Error::InvalidConfig(
            "precomputed metric requires a distance matrix".into(),
        )),
        (_, Some(_)) => Err(Error::InvalidConfig(
            "a distance matrix was supplied but the metric is not precomputed".into(),
        )),
    }
}

/// Fits the full pipeline. `precomputed` is required iff the metric is
/// `Precomputed`; responses are always required since backscoring maps into
/// response space.
pub fn fit(
    x: &InputMatrix,
    y: &ResponseMatrix,
    precomputed: Option<DistanceMatrix>,
    config: &PipelineConfig,
) -> Result<PipelineModel> {
    config.validate()?;
    if y.n() != x.n() {
        return Err(Error::DimensionMismatch {
            context: "response rows vs input rows".into(),
            expected: x.n(),
            got: y.n(),
        });
    }
    let d_train = build_distances(y, config.metric, precomputed)?;
    let mut forest = fit_forest(x, &d_train, &config.forest)?;
    populate_leaf_means(&mut forest, y)?;
    let mds = fit_mds(&d_train, config.embedding_dim)?;
    let backscorer = fit_backscorer(mds.z(), y, config.backscore)?;
    Ok(PipelineModel {
        forest,
        d_train,
        mds,
        backscorer,
        x_train: x.clone(),
        config: config.clone(),
    })
}

/// Predicts the response for one input: forest affinities, induced
/// distances, out-of-sample embedding, backscoring.
pub fn predict(model: &PipelineModel, x_new: &[f64]) -> Result<Vec<f64>> {
    let a = model.forest.affinity(x_new)?;
    let d_hat = predict_distances(&a, &model.d_train)?;
    let k_hat = oos_kernel_row(&d_hat.squared(), &model.mds)?;
    let z_hat = oos_embed(&k_hat, &model.mds)?;
    backscore(&model.backscorer, &z_hat.z_hat)
}

/// Batch prediction, one input per row; rows are processed in parallel and
/// results are identical at any thread count.
pub fn predict_batch(model: &PipelineModel, x: &Mat) -> Result<Mat> {
    if x.ncols() != model.p() {
        return Err(Error::DimensionMismatch {
            context: "prediction input width".into(),
            expected: model.p(),
            got: x.ncols(),
        });
    }
    let rows: Vec<Vec<f64>> = (0..x.nrows())
        .into_par_iter()
        .map(|i| {
            let row: Vec<f64> = x.row(i).iter().copied().collect();
            predict(model, &row)
        })
        .collect::<Result<_>>()?;
    let q = model.q();
    let mut out = Mat::zeros(x.nrows(), q);
    for (i, row) in rows.iter().enumerate() {
        for (c, &v) in row.iter().enumerate() {
            out[(i, c)] = v;
        }
    }
    Ok(out)
}

/// k-nearest-neighbor baseline: mean of the k training responses whose
/// inputs are closest to `x_new` in Euclidean distance, ties broken by
/// lower training index.
pub fn knn_predict(
    x_train: &InputMatrix,
    y_train: &ResponseMatrix,
    x_new: &[f64],
    k: usize,
) -> Result<Vec<f64>> {
    let n = x_train.n();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!(
            "k={k} must satisfy 1 <= k <= N (N={n})"
        )));
    }
    if x_new.len() != x_train.p() {
        return Err(Error::DimensionMismatch {
            context: "query length".into(),
            expected: x_train.p(),
            got: x_new.len(),
        });
    }
    let xv = x_train.values();
    let mut order: Vec<(f64, usize)> = (0..n)
        .map(|i| {
            let mut acc = 0.0;
            for c in 0..x_train.p() {
                let diff = xv[(i, c)] - x_new[c];
                acc += diff * diff;
            }
            (acc, i)
        })
        .collect();
    order.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    let q = y_train.q();
    let yv = y_train.values();
    let mut mean = vec![0.0f64; q];
    for &(_, i) in order.iter().take(k) {
        for (c, m) in mean.iter_mut().enumerate() {
            *m += yv[(i, c)];
        }
    }
    for m in &mut mean {
        *m /= k as f64;
    }
    Ok(mean)
}

/// Mean-leaf random forest baseline: averages, over trees, the mean in-bag
/// response of the leaf `x_new` falls into. Requires leaf means populated.
pub fn rf_mean_predict(forest: &Forest, x_new: &[f64]) -> Result<Vec<f64>> {
    if x_new.len() != forest.n_features {
        return Err(Error::DimensionMismatch {
            context: "query length".into(),
            expected: forest.n_features,
            got: x_new.len(),
        });
    }
    let mut mean: Option<Vec<f64>> = None;
    for tree in &forest.trees {
        let leaf = tree.leaf_for(x_new);
        let leaf_mean = match &tree.nodes[leaf] {
            Node::Leaf {
                leaf_mean: Some(m), ..
            } => m,
            Node::Leaf { leaf_mean: None, .. } => return Err(Error::LeafMeansMissing),
            Node::Internal { .. } => unreachable!("leaf_for returns a leaf"),
        };
        match &mut mean {
            None => mean = Some(leaf_mean.clone()),
            Some(acc) => {
                for (a, v) in acc.iter_mut().zip(leaf_mean) {
                    *a += v;
                }
            }
        }
    }
    let mut mean = mean.expect("forest has at least one tree");
    let inv = 1.0 / forest.trees.len() as f64;
    for v in &mut mean {
        *v *= inv;
    }
    Ok(mean)
}

/// Kernel random forest baseline: returns the training response maximizing
/// `Σ_i a_i exp(-||y_j - y_i||² / (2σ²))`, ties broken by lower index.
pub fn krf_predict(
    forest: &Forest,
    y_train: &ResponseMatrix,
    x_new: &[f64],
    sigma: f64,
) -> Result<Vec<f64>> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "sigma = {sigma} must be positive and finite"
        )));
    }
    if y_train.n() != forest.n_train {
        return Err(Error::DimensionMismatch {
            context: "training responses vs forest".into(),
            expected: forest.n_train,
            got: y_train.n(),
        });
    }
    let a = forest.affinity(x_new)?;
    let yv = y_train.values();
    let n = y_train.n();
    let q = y_train.q();
    let denom = 2.0 * sigma * sigma;
    let mut best_j = 0;
    let mut best_score = f64::NEG_INFINITY;
    for j in 0..n {
        let mut score = 0.0;
        for i in 0..n {
            let ai = a.values()[i];
            if ai == 0.0 {
                continue;
            }
            let mut d2 = 0.0;
            for c in 0..q {
                let diff = yv[(j, c)] - yv[(i, c)];
                d2 += diff * diff;
            }
            score += ai * (-d2 / denom).exp();
        }
        if score > best_score {
            best_score = score;
            best_j = j;
        }
    }
    Ok(y_train.row_vec(best_j))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn small_config(seed: u64, m: usize) -> PipelineConfig {
        PipelineConfig {
            forest: ForestConfig {
                n_trees: 25,
                mtry: None,
                min_leaf: 1,
                bootstrap: true,
                seed,
            },
            metric: Metric::Euclidean,
            embedding_dim: m,
            backscore: BackscorerConfig {
                sigma_g: 2.0,
                gamma_g: 2000.0,
            },
        }
    }

    fn toy_dataset(n: usize, seed: u64) -> (InputMatrix, ResponseMatrix) {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let mut x = Mat::zeros(n, 2);
        let mut y = Mat::zeros(n, 3);
        for i in 0..n {
            let a: f64 = rng.random_range(0.0..2.0);
            let b: f64 = rng.random_range(0.0..2.0);
            x[(i, 0)] = a;
            x[(i, 1)] = b;
            y[(i, 0)] = a + b;
            y[(i, 1)] = a - b;
            y[(i, 2)] = 0.5 * a;
        }
        (InputMatrix::new(x).unwrap(), ResponseMatrix::new(y).unwrap())
    }

    #[test]
    fn minimal_two_sample_fit() {
        let x = InputMatrix::new(Mat::from_row_slice(2, 1, &[0.0, 1.0])).unwrap();
        let y = ResponseMatrix::new(Mat::from_row_slice(2, 1, &[0.0, 2.0])).unwrap();
        let model = fit(&x, &y, None, &small_config(1, 1)).unwrap();
        let pred = predict(&model, &[0.0]).unwrap();
        assert_eq!(pred.len(), 1);
        assert!(pred[0].is_finite());
    }

    #[test]
    fn identical_responses_are_rejected() {
        let x = InputMatrix::new(Mat::from_row_slice(3, 1, &[0.0, 1.0, 2.0])).unwrap();
        let y = ResponseMatrix::new(Mat::from_row_slice(3, 1, &[5.0, 5.0, 5.0])).unwrap();
        let err = fit(&x, &y, None, &small_config(1, 1)).unwrap_err();
        assert!(matches!(
            err,
            Error::InsufficientPositiveEigenvalues { .. }
        ));
    }

    #[test]
    fn precomputed_metric_requires_distances() {
        let (x, y) = toy_dataset(5, 2);
        let mut config = small_config(1, 1);
        config.metric = Metric::Precomputed;
        assert!(matches!(
            fit(&x, &y, None, &config),
            Err(Error::InvalidConfig(_))
        ));
        // and a supplied matrix with a non-precomputed metric is also an error
        let d = euclidean_distances(y.values()).unwrap();
        let config2 = small_config(1, 1);
        assert!(fit(&x, &y, Some(d), &config2).is_err());
    }

    #[test]
    fn predictions_are_finite_and_deterministic() {
        let (x, y) = toy_dataset(40, 3);
        let config = small_config(7, 2);
        let model_a = fit(&x, &y, None, &config).unwrap();
        let model_b = fit(&x, &y, None, &config).unwrap();
        let probe = [0.4, 1.3];
        let pa = predict(&model_a, &probe).unwrap();
        let pb = predict(&model_b, &probe).unwrap();
        assert_eq!(pa, pb);
        for v in &pa {
            assert!(v.is_finite());
        }
    }

    #[test]
    fn batch_prediction_matches_single_calls() {
        let (x, y) = toy_dataset(30, 4);
        let model = fit(&x, &y, None, &small_config(9, 2)).unwrap();
        let probes = Mat::from_row_slice(3, 2, &[0.1, 0.2, 1.0, 1.5, 1.9, 0.3]);
        let batch = predict_batch(&model, &probes).unwrap();
        for i in 0..3 {
            let row: Vec<f64> = probes.row(i).iter().copied().collect();
            let single = predict(&model, &row).unwrap();
            for c in 0..3 {
                assert_eq!(batch[(i, c)], single[c]);
            }
        }
    }

    #[test]
    fn stump_forest_prediction_stays_in_response_range() {
        let (x, y) = toy_dataset(10, 5);
        let mut config = small_config(11, 1);
        config.forest.min_leaf = 10; // every tree is a single leaf
        let model = fit(&x, &y, None, &config).unwrap();
        let probe = x.row_vec(0);
        let pred = predict(&model, &probe).unwrap();
        let max_d = model.d_train.max_off_diagonal().unwrap();
        let nearest = (0..10)
            .map(|i| {
                let yr = y.row_vec(i);
                let d2: f64 = yr
                    .iter()
                    .zip(&pred)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                d2.sqrt()
            })
            .fold(f64::INFINITY, f64::min);
        assert!(
            nearest <= max_d,
            "prediction strayed {nearest} from the nearest response (max pairwise {max_d})"
        );
    }

    #[test]
    fn knn_baseline_edge_cases() {
        let (x, y) = toy_dataset(12, 6);
        // k = 1 returns the nearest response verbatim
        let probe = x.row_vec(3);
        let p1 = knn_predict(&x, &y, &probe, 1).unwrap();
        assert_eq!(p1, y.row_vec(3));
        // k = N returns the global mean
        let pn = knn_predict(&x, &y, &probe, 12).unwrap();
        for c in 0..3 {
            let mean = y.values().column(c).sum() / 12.0;
            assert_relative_eq!(pn[c], mean, max_relative = 1e-12);
        }
        assert!(knn_predict(&x, &y, &probe, 0).is_err());
        assert!(knn_predict(&x, &y, &probe, 13).is_err());
    }

    #[test]
    fn knn_matches_sort_oracle() {
        let (x, y) = toy_dataset(25, 7);
        let probe = [0.77, 1.01];
        let pred = knn_predict(&x, &y, &probe, 5).unwrap();

        let mut order: Vec<(f64, usize)> = (0..25)
            .map(|i| {
                let dx = x.values()[(i, 0)] - probe[0];
                let dy = x.values()[(i, 1)] - probe[1];
                (dx * dx + dy * dy, i)
            })
            .collect();
        order.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut expect = vec![0.0; 3];
        for &(_, i) in order.iter().take(5) {
            for (c, e) in expect.iter_mut().enumerate() {
                *e += y.values()[(i, c)] / 5.0;
            }
        }
        for c in 0..3 {
            assert_relative_eq!(pred[c], expect[c], max_relative = 1e-12);
        }
    }

    #[test]
    fn rf_mean_traces_through_leaves() {
        use crate::forest::{Node, SplitRule, Tree};
        let forest = Forest {
            trees: vec![
                Tree {
                    nodes: vec![
                        Node::Internal {
                            split: SplitRule {
                                feature: 0,
                                threshold: 0.5,
                            },
                            left: 1,
                            right: 2,
                        },
                        Node::Leaf {
                            sample_indices: vec![0],
                            leaf_mean: Some(vec![1.0, 10.0]),
                        },
                        Node::Leaf {
                            sample_indices: vec![1],
                            leaf_mean: Some(vec![3.0, 30.0]),
                        },
                    ],
                },
                Tree {
                    nodes: vec![Node::Leaf {
                        sample_indices: vec![0, 1],
                        leaf_mean: Some(vec![2.0, 20.0]),
                    }],
                },
            ],
            config: ForestConfig::default(),
            n_train: 2,
            n_features: 1,
        };
        let pred = rf_mean_predict(&forest, &[0.0]).unwrap();
        assert_eq!(pred, vec![1.5, 15.0]);
        let pred = rf_mean_predict(&forest, &[1.0]).unwrap();
        assert_eq!(pred, vec![2.5, 25.0]);
    }

    #[test]
    fn rf_mean_requires_populated_means() {
        use crate::forest::{Node, Tree};
        let forest = Forest {
            trees: vec![Tree {
                nodes: vec![Node::Leaf {
                    sample_indices: vec![0],
                    leaf_mean: None,
                }],
            }],
            config: ForestConfig::default(),
            n_train: 1,
            n_features: 1,
        };
        assert!(matches!(
            rf_mean_predict(&forest, &[0.0]),
            Err(Error::LeafMeansMissing)
        ));
    }

    #[test]
    fn krf_concentrated_affinity_returns_that_sample() {
        use crate::forest::{Node, Tree};
        // single tree whose leaf for any query contains only sample 2
        let forest = Forest {
            trees: vec![Tree {
                nodes: vec![Node::Leaf {
                    sample_indices: vec![2],
                    leaf_mean: None,
                }],
            }],
            config: ForestConfig::default(),
            n_train: 4,
            n_features: 1,
        };
        let y = ResponseMatrix::new(Mat::from_row_slice(
            4,
            1,
            &[0.0, 1.0, 2.0, 3.0],
        ))
        .unwrap();
        let pred = krf_predict(&forest, &y, &[0.0], 1.0).unwrap();
        assert_eq!(pred, vec![2.0]);
    }

    #[test]
    fn krf_huge_bandwidth_ties_to_lowest_index() {
        use crate::forest::{Node, Tree};
        let forest = Forest {
            trees: vec![Tree {
                nodes: vec![Node::Leaf {
                    sample_indices: vec![1, 3],
                    leaf_mean: None,
                }],
            }],
            config: ForestConfig::default(),
            n_train: 4,
            n_features: 1,
        };
        let y = ResponseMatrix::new(Mat::from_row_slice(4, 1, &[5.0, 6.0, 7.0, 8.0])).unwrap();
        // sigma so large all kernel values are 1: every candidate scores the
        // same, so the lowest index wins
        let pred = krf_predict(&forest, &y, &[0.0], 1e12).unwrap();
        assert_eq!(pred, vec![5.0]);
    }

    #[test]
    fn krf_matches_exhaustive_scan() {
        let (x, y) = toy_dataset(20, 8);
        let config = small_config(13, 2);
        let model = fit(&x, &y, None, &config).unwrap();
        let probe = [1.1, 0.4];
        let sigma = 0.8;
        let pred = krf_predict(&model.forest, &y, &probe, sigma).unwrap();

        let a = model.forest.affinity(&probe).unwrap();
        let yv = y.values();
        let mut best = (0usize, f64::NEG_INFINITY);
        for j in 0..20 {
            let mut score = 0.0;
            for i in 0..20 {
                let mut d2 = 0.0;
                for c in 0..3 {
                    let diff = yv[(j, c)] - yv[(i, c)];
                    d2 += diff * diff;
                }
                score += a.values()[i] * (-d2 / (2.0 * sigma * sigma)).exp();
            }
            if score > best.1 {
                best = (j, score);
            }
        }
        assert_eq!(pred, y.row_vec(best.0));
    }

    #[test]
    fn drf_and_rf_mean_agree_on_linear_toy() {
        let (x, y) = toy_dataset(80, 10);
        let (xt, yt) = toy_dataset(20, 99);
        let config = small_config(17, 2);
        let model = fit(&x, &y, None, &config).unwrap();

        let mut drf_err = 0.0;
        let mut rf_err = 0.0;
        for i in 0..20 {
            let probe = xt.row_vec(i);
            let truth = yt.row_vec(i);
            let drf = predict(&model, &probe).unwrap();
            let rf = rf_mean_predict(&model.forest, &probe).unwrap();
            for c in 0..3 {
                drf_err += (drf[c] - truth[c]).powi(2);
                rf_err += (rf[c] - truth[c]).powi(2);
            }
        }
        assert!(
            drf_err <= 2.0 * rf_err && rf_err <= 2.0 * drf_err,
            "EMSE gap exceeded factor 2: dRF {drf_err:.4} vs RF {rf_err:.4}"
        );
    }
}
