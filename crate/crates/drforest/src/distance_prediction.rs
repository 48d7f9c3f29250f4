//! Predicts the distances from an unseen response to every training
//! response, given only the forest affinity vector.
//!
//! The procedure anchors on the most-affine training sample, assigns it the
//! smallest observed pairwise distance, and then fills in the remaining
//! samples in decreasing order of their distance from the anchor, each as a
//! min-max combination of already-assigned values and observed distances.
//! The construction keeps every value inside the observed distance range
//! and respects the triangle inequality against assigned neighbors.

use crate::data::DistanceMatrix;
use crate::error::{Error, Result};
use crate::forest::AffinityVector;

/// Predicted distances from a new response to each training response.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictedDistances {
    d_hat: Vec<f64>,
}

impl PredictedDistances {
    pub fn values(&self) -> &[f64] {
        &self.d_hat
    }

    pub fn len(&self) -> usize {
        self.d_hat.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d_hat.is_empty()
    }

    /// Squared entries, as consumed by the out-of-sample embedding.
    pub fn squared(&self) -> Vec<f64> {
        self.d_hat.iter().map(|v| v * v).collect()
    }
}

/// Runs the distance-induction procedure.
///
/// Steps, with all argmax ties resolved to the lowest index:
/// 1. Anchor `l` = argmax of the affinity vector; `d_hat[l]` = smallest
///    off-diagonal entry of `D`. The diagonal is excluded: including it
///    would pin the anchor distance to zero every time.
/// 2. While unassigned samples remain, pick `p` = the unassigned sample
///    farthest from the anchor, and set
///    `d_hat[p] = min over assigned i of max(d_hat[i], D[i][p])`.
///
/// The anchor never changes during step 2.
pub fn predict_distances(a: &AffinityVector, d: &DistanceMatrix) -> Result<PredictedDistances> {
    let n = d.n();
    if a.len() != n {
        return Err(Error::DimensionMismatch {
            context: "affinity length vs distance matrix".into(),
            expected: n,
            got: a.len(),
        });
    }
    if n == 1 {
        return Err(Error::DegenerateTrainingSet);
    }
    let anchor = a.argmax().ok_or(Error::AllZeroAffinity)?;
    let dm = d.values();

    let mut d_hat = vec![f64::NAN; n];
    let mut assigned = vec![false; n];
    d_hat[anchor] = d.min_off_diagonal().expect("n >= 2");
    assigned[anchor] = true;

    for _ in 1..n {
        // farthest unassigned sample from the anchor, lowest index on ties
        let mut p = usize::MAX;
        let mut best = f64::NEG_INFINITY;
        for i in 0..n {
            if !assigned[i] && dm[(i, anchor)] > best {
                best = dm[(i, anchor)];
                p = i;
            }
        }
        let mut value = f64::INFINITY;
        for i in 0..n {
            if assigned[i] {
                value = value.min(d_hat[i].max(dm[(i, p)]));
            }
        }
        d_hat[p] = value;
        assigned[p] = true;
    }
    Ok(PredictedDistances { d_hat })
}
