//! Distance random forest: regression trees whose split gain depends only
//! on pairwise response distances, plus forest affinities for new inputs.
//!
//! For a node w with samples S_w the dispersion is
//! (1 / 2|S_w|) Σ_{i∈S_w} Σ_{j∈S_w} D_ij², and a split's gain is the parent
//! dispersion minus the two child dispersions. With Euclidean distances this
//! reduces to the classical variance-reduction criterion.
//!
//! ## Reproducibility protocol
//!
//! Randomness comes from ChaCha12 seeded with the forest seed; tree `t` uses
//! stream `t` of that generator ([`stream_rng`]). Within a tree the draw
//! order is fixed: first the bootstrap sample (`n` draws of
//! `random_range(0..n)`), then, growing depth-first left-first, one feature
//! subset per node via `rand::seq::index::sample` (sorted ascending). A node
//! draws features iff it holds at least `2·min_leaf` samples. Training is
//! parallel across trees and gives identical forests at any thread count.

use rand::seq::index;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{DistanceMatrix, InputMatrix, Mat, ResponseMatrix};
use crate::error::{Error, Result};

/// Forest hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// Candidate split features per node; `None` means max(1, p/3).
    pub mtry: Option<usize>,
    /// Minimum samples per leaf produced by a split. 1 means no pruning.
    pub min_leaf: usize,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_trees: 100,
            mtry: None,
            min_leaf: 1,
            bootstrap: true,
            seed: 0,
        }
    }
}

impl ForestConfig {
    pub fn validate(&self, p: usize) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::InvalidConfig("n_trees must be at least 1".into()));
        }
        if self.min_leaf == 0 {
            return Err(Error::InvalidConfig("min_leaf must be at least 1".into()));
        }
        if let Some(mtry) = self.mtry {
            if mtry == 0 || mtry > p {
                return Err(Error::InvalidConfig(format!(
                    "mtry={mtry} must satisfy 1 <= mtry <= p (p={p})"
                )));
            }
        }
        Ok(())
    }

    pub fn resolved_mtry(&self, p: usize) -> usize {
        self.mtry.unwrap_or_else(|| (p / 3).max(1))
    }
}

/// Axis-aligned split: a sample goes left iff `x[feature] <= threshold`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitRule {
    pub feature: usize,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Internal {
        split: SplitRule,
        left: usize,
        right: usize,
    },
    Leaf {
        /// In-bag training indices reaching this leaf, with bootstrap
        /// multiplicity, in draw order.
        sample_indices: Vec<usize>,
        /// Mean in-bag response; populated by [`populate_leaf_means`].
        leaf_mean: Option<Vec<f64>>,
    },
}

/// A single distance-split tree; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    /// Index of the leaf an input row falls into.
    pub fn leaf_for(&self, x_row: &[f64]) -> usize {
        let mut idx = 0;
        loop {
            match &self.nodes[idx] {
                Node::Internal { split, left, right } => {
                    idx = if x_row[split.feature] <= split.threshold {
                        *left
                    } else {
                        *right
                    };
                }
                Node::Leaf { .. } => return idx,
            }
        }
    }

    /// Iterator over the tree's leaves.
    pub fn leaves(&self) -> impl Iterator<Item = &Node> {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. }))
    }
}

/// A trained distance random forest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub trees: Vec<Tree>,
    pub config: ForestConfig,
    pub n_train: usize,
    pub n_features: usize,
}

/// Per-training-sample leaf co-occurrence frequencies for one query input.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityVector {
    a: Vec<f64>,
}

impl AffinityVector {
    pub fn new(a: Vec<f64>) -> Result<Self> {
        for (i, &v) in a.iter().enumerate() {
            if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidArgument(format!(
                    "affinity entry {i} = {v} outside [0, 1]"
                )));
            }
        }
        Ok(Self { a })
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.a
    }

    /// Index of the largest affinity, lowest index on ties; `None` when all
    /// entries are zero.
    pub fn argmax(&self) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (i, &v) in self.a.iter().enumerate() {
            if v > 0.0 && best.map_or(true, |(_, bv)| v > bv) {
                best = Some((i, v));
            }
        }
        best.map(|(i, _)| i)
    }
}

/// The per-tree generator: ChaCha12 seeded with the forest seed, on stream
/// `tree_index`. Exposed so reference implementations can replay the exact
/// draw sequence of any tree.
pub fn stream_rng(seed: u64, tree_index: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(tree_index);
    rng
}

/// Bootstrap sample: `n` uniform draws from `0..n`, with replacement, kept
/// in draw order.
pub fn draw_bootstrap(rng: &mut ChaCha12Rng, n: usize) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

/// `mtry` distinct feature indices drawn without replacement, sorted.
pub fn draw_feature_subset(rng: &mut ChaCha12Rng, p: usize, mtry: usize) -> Vec<usize> {
    let mut features = index::sample(rng, p, mtry).into_vec();
    features.sort_unstable();
    features
}

/// Dispersion of a node: (1 / 2n) Σ_i Σ_j D_ij² over the sample multiset.
/// With Euclidean distances this equals Σ_i ||y_i − ȳ||².
pub fn node_dispersion(indices: &[usize], d: &DistanceMatrix) -> Result<f64> {
    if indices.is_empty() {
        return Err(Error::EmptyNode);
    }
    let dm = d.values();
    for &i in indices {
        if i >= d.n() {
            return Err(Error::DimensionMismatch {
                context: "node sample index".into(),
                expected: d.n(),
                got: i,
            });
        }
    }
    let mut acc = 0.0;
    for &i in indices {
        for &j in indices {
            let v = dm[(i, j)];
            acc += v * v;
        }
    }
    Ok(acc / (2.0 * indices.len() as f64))
}

/// Gain of a partition: dispersion(parent) − dispersion(left) − dispersion(right).
pub fn split_gain(
    parent: &[usize],
    left: &[usize],
    right: &[usize],
    d: &DistanceMatrix,
) -> Result<f64> {
    if left.is_empty() || right.is_empty() {
        return Err(Error::InvalidPartition(
            "both sides of a split must be nonempty".into(),
        ));
    }
    let mut combined: Vec<usize> = left.iter().chain(right.iter()).copied().collect();
    combined.sort_unstable();
    let mut parent_sorted = parent.to_vec();
    parent_sorted.sort_unstable();
    if combined != parent_sorted {
        return Err(Error::InvalidPartition(
            "left and right must partition the parent sample multiset".into(),
        ));
    }
    Ok(node_dispersion(parent, d)? - node_dispersion(left, d)? - node_dispersion(right, d)?)
}

/// A candidate threshold on one feature with its gain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitCandidate {
    pub threshold: f64,
    /// Samples that would go left (those with value <= threshold).
    pub n_left: usize,
    pub gain: f64,
}

/// Gains at every midpoint between consecutive distinct values of one
/// feature, computed with an incremental boundary sweep.
///
/// Samples are sorted by (feature value, training index) and moved left one
/// at a time while the left/right pair sums are maintained through per-index
/// row sums: O(n) per move instead of re-summing both sides. Results equal
/// the naive double-sum evaluation of the gain at every boundary.
pub fn sweep_feature_gains(
    node_indices: &[usize],
    x: &Mat,
    d: &DistanceMatrix,
    feature: usize,
) -> Vec<SplitCandidate> {
    let n = node_indices.len();
    if n < 2 {
        return Vec::new();
    }
    let dm = d.values();
    let mut order = node_indices.to_vec();
    order.sort_by(|&a, &b| {
        x[(a, feature)]
            .partial_cmp(&x[(b, feature)])
            .unwrap()
            .then(a.cmp(&b))
    });
    let mut distinct = order.clone();
    distinct.sort_unstable();
    distinct.dedup();

    // Row sums are keyed by training index; duplicates from the bootstrap
    // share one entry because their distance rows are identical.
    let mut row_l = vec![0.0f64; d.n()];
    let mut row_r = vec![0.0f64; d.n()];
    for &t in &distinct {
        let mut s = 0.0;
        for &j in &order {
            let v = dm[(t, j)];
            s += v * v;
        }
        row_r[t] = s;
    }
    let mut w_l = 0.0f64;
    let mut w_r: f64 = order.iter().map(|&i| row_r[i]).sum();
    let parent_term = w_r / (2.0 * n as f64);

    let mut out = Vec::new();
    for boundary in 1..n {
        let m = order[boundary - 1];
        // Moving one occurrence of m across the boundary changes each pair
        // sum by twice its row sum on that side (the diagonal term is zero).
        w_r -= 2.0 * row_r[m];
        w_l += 2.0 * row_l[m];
        for &t in &distinct {
            let v = dm[(t, m)];
            let v2 = v * v;
            row_r[t] -= v2;
            row_l[t] += v2;
        }
        let lo = x[(m, feature)];
        let hi = x[(order[boundary], feature)];
        if hi > lo {
            let n_l = boundary as f64;
            let n_r = (n - boundary) as f64;
            let gain = parent_term - w_l / (2.0 * n_l) - w_r / (2.0 * n_r);
            let mid = lo + (hi - lo) / 2.0;
            // Adjacent floats can round the midpoint up to hi; fall back to
            // lo so the left side keeps exactly the swept samples.
            let threshold = if mid < hi { mid } else { lo };
            out.push(SplitCandidate {
                threshold,
                n_left: boundary,
                gain,
            });
        }
    }
    out
}

/// Relative slack used to detect tied gains: two candidates whose gains
/// differ by at most this fraction of the parent dispersion count as tied.
///
/// The same partition of a node is often reachable through several features
/// (isolating one extreme sample, for instance); its gain is then
/// mathematically identical but lands on different floats because the sweep
/// accumulates in feature-sorted order. Raw comparison would let that
/// rounding noise pick the winner, so ties are detected up to this slack
/// and resolved to the lower feature index, then the lower threshold.
/// Sweep rounding is below 1e-12 of the parent dispersion while genuinely
/// different gains separate by far more on continuous data.
pub const GAIN_TIE_TOLERANCE: f64 = 1e-9;

/// Best split over a fresh draw of `mtry` candidate features.
///
/// Ties in gain (within [`GAIN_TIE_TOLERANCE`] of the parent dispersion)
/// resolve to the lower feature index, then the lower threshold. Returns
/// `None` when no candidate leaves both children with at least `min_leaf`
/// samples or the best gain is not strictly positive.
pub fn best_split(
    node_indices: &[usize],
    x: &Mat,
    d: &DistanceMatrix,
    mtry: usize,
    min_leaf: usize,
    rng: &mut ChaCha12Rng,
) -> Option<(SplitRule, f64)> {
    let features = draw_feature_subset(rng, x.ncols(), mtry.min(x.ncols()));
    let Ok(scale) = node_dispersion(node_indices, d) else {
        return None;
    };
    let tie_slack = GAIN_TIE_TOLERANCE * scale;
    let mut best: Option<(SplitRule, f64)> = None;
    for f in features {
        for cand in sweep_feature_gains(node_indices, x, d, f) {
            if cand.n_left < min_leaf || node_indices.len() - cand.n_left < min_leaf {
                continue;
            }
            if best.as_ref().map_or(true, |&(_, g)| cand.gain > g + tie_slack) {
                best = Some((
                    SplitRule {
                        feature: f,
                        threshold: cand.threshold,
                    },
                    cand.gain,
                ));
            }
        }
    }
    best.filter(|&(_, g)| g > 0.0)
}

fn grow_node(
    x: &Mat,
    d: &DistanceMatrix,
    samples: Vec<usize>,
    mtry: usize,
    min_leaf: usize,
    rng: &mut ChaCha12Rng,
    nodes: &mut Vec<Node>,
) -> usize {
    let idx = nodes.len();
    if samples.len() >= 2 * min_leaf {
        if let Some((split, _)) = best_split(&samples, x, d, mtry, min_leaf, rng) {
            nodes.push(Node::Internal {
                split: split.clone(),
                left: 0,
                right: 0,
            });
            let (left_samples, right_samples): (Vec<usize>, Vec<usize>) = samples
                .iter()
                .partition(|&&i| x[(i, split.feature)] <= split.threshold);
            let left = grow_node(x, d, left_samples, mtry, min_leaf, rng, nodes);
            let right = grow_node(x, d, right_samples, mtry, min_leaf, rng, nodes);
            if let Node::Internal {
                left: l, right: r, ..
            } = &mut nodes[idx]
            {
                *l = left;
                *r = right;
            }
            return idx;
        }
    }
    nodes.push(Node::Leaf {
        sample_indices: samples,
        leaf_mean: None,
    });
    idx
}

fn grow_tree(
    x: &Mat,
    d: &DistanceMatrix,
    samples: Vec<usize>,
    mtry: usize,
    min_leaf: usize,
    rng: &mut ChaCha12Rng,
) -> Tree {
    let mut nodes = Vec::new();
    grow_node(x, d, samples, mtry, min_leaf, rng, &mut nodes);
    Tree { nodes }
}

/// Trains the forest. Trees are grown in parallel on independent RNG
/// streams, so results are identical at any thread count.
pub fn fit_forest(x: &InputMatrix, d: &DistanceMatrix, config: &ForestConfig) -> Result<Forest> {
    config.validate(x.p())?;
    if x.n() != d.n() {
        return Err(Error::DimensionMismatch {
            context: "distance matrix rows vs input rows".into(),
            expected: x.n(),
            got: d.n(),
        });
    }
    let n = x.n();
    let mtry = config.resolved_mtry(x.p());
    let xv = x.values();
    let trees: Vec<Tree> = (0..config.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream_rng(config.seed, t as u64);
            let samples = if config.bootstrap {
                draw_bootstrap(&mut rng, n)
            } else {
                (0..n).collect()
            };
            grow_tree(xv, d, samples, mtry, config.min_leaf, &mut rng)
        })
        .collect();
    Ok(Forest {
        trees,
        config: config.clone(),
        n_train: n,
        n_features: x.p(),
    })
}

impl Forest {
    /// Affinity of a new input to each training sample: the fraction of
    /// trees whose leaf for `x_new` contains that sample. A sample counts
    /// at most once per tree regardless of bootstrap multiplicity.
    pub fn affinity(&self, x_new: &[f64]) -> Result<AffinityVector> {
        if x_new.len() != self.n_features {
            return Err(Error::DimensionMismatch {
                context: "affinity query length".into(),
                expected: self.n_features,
                got: x_new.len(),
            });
        }
        let mut counts = vec![0u32; self.n_train];
        let mut stamp = vec![usize::MAX; self.n_train];
        for (t, tree) in self.trees.iter().enumerate() {
            let leaf = tree.leaf_for(x_new);
            if let Node::Leaf { sample_indices, .. } = &tree.nodes[leaf] {
                for &i in sample_indices {
                    if stamp[i] != t {
                        stamp[i] = t;
                        counts[i] += 1;
                    }
                }
            }
        }
        let scale = 1.0 / self.trees.len() as f64;
        AffinityVector::new(counts.into_iter().map(|c| c as f64 * scale).collect())
    }
}

/// Fills every leaf's `leaf_mean` with the mean of its in-bag responses
/// (bootstrap multiplicity included). Required by the mean-leaf RF baseline.
pub fn populate_leaf_means(forest: &mut Forest, y: &ResponseMatrix) -> Result<()> {
    if y.n() != forest.n_train {
        return Err(Error::DimensionMismatch {
            context: "response rows vs forest training size".into(),
            expected: forest.n_train,
            got: y.n(),
        });
    }
    let q = y.q();
    let yv = y.values();
    for tree in &mut forest.trees {
        for node in &mut tree.nodes {
            if let Node::Leaf {
                sample_indices,
                leaf_mean,
            } = node
            {
                let mut mean = vec![0.0f64; q];
                for &i in sample_indices.iter() {
                    for (c, m) in mean.iter_mut().enumerate() {
                        *m += yv[(i, c)];
                    }
                }
                let inv = 1.0 / sample_indices.len() as f64;
                for m in &mut mean {
                    *m *= inv;
                }
                *leaf_mean = Some(mean);
            }
        }
    }
    Ok(())
}
