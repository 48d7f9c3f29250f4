//! Classical multidimensional scaling on a training distance matrix, plus
//! out-of-sample embedding of a new point from its predicted distances.

use nalgebra::SymmetricEigen;

use crate::data::{DistanceMatrix, Mat};
use crate::error::{Error, Result};

/// Relative cutoff below which an eigenvalue does not count as positive.
const EIG_REL_TOL: f64 = 1e-9;

/// A fitted classical MDS embedding.
///
/// Coordinates satisfy `z[(i, l)] = sqrt(eigenvalues[l]) * eigenvectors[(i, l)]`
/// with eigenvalues sorted descending and eigenvectors unit norm. The squared
/// row sums and total of the training distance matrix are cached for the
/// out-of-sample kernel estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct MdsModel {
    z: Mat,
    eigenvalues: Vec<f64>,
    eigenvectors: Mat,
    d2_row_sums: Vec<f64>,
    d2_total: f64,
}

impl MdsModel {
    pub fn n(&self) -> usize {
        self.z.nrows()
    }

    pub fn m(&self) -> usize {
        self.z.ncols()
    }

    /// N×m embedding coordinates.
    pub fn z(&self) -> &Mat {
        &self.z
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// N×m matrix whose columns are the retained eigenvectors.
    pub fn eigenvectors(&self) -> &Mat {
        &self.eigenvectors
    }

    pub fn d2_row_sums(&self) -> &[f64] {
        &self.d2_row_sums
    }

    pub fn d2_total(&self) -> f64 {
        self.d2_total
    }

    pub fn row_z(&self, i: usize) -> Vec<f64> {
        self.z.row(i).iter().copied().collect()
    }

    /// Reassembles a model from stored fields; used by model deserialization.
    pub fn from_parts(
        z: Mat,
        eigenvalues: Vec<f64>,
        eigenvectors: Mat,
        d2_row_sums: Vec<f64>,
        d2_total: f64,
    ) -> Result<Self> {
        let n = z.nrows();
        let m = z.ncols();
        if eigenvalues.len() != m
            || eigenvectors.shape() != (n, m)
            || d2_row_sums.len() != n
        {
            return Err(Error::CorruptModel(
                "inconsistent MDS component dimensions".into(),
            ));
        }
        Ok(Self {
            z,
            eigenvalues,
            eigenvectors,
            d2_row_sums,
            d2_total,
        })
    }
}

/// A point embedded into MDS coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedPoint {
    pub z_hat: Vec<f64>,
}

/// Double-centers the squared distance matrix:
/// `K_ij = -1/2 (D²_ij - S_i/N - S_j/N + S/N²)` with `S_i` the row sums and
/// `S` the total of D². K is exactly symmetric and its rows sum to ~0.
pub fn double_center(d: &DistanceMatrix) -> Mat {
    let n = d.n();
    let d2 = d.squared();
    let nf = n as f64;
    let row_sums: Vec<f64> = (0..n).map(|i| d2.row(i).sum()).collect();
    let total: f64 = row_sums.iter().sum();
    let mut k = Mat::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = -0.5 * (d2[(i, j)] - row_sums[i] / nf - row_sums[j] / nf + total / (nf * nf));
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

/// Fits classical MDS with `m` components.
///
/// Eigenpairs of the double-centered kernel are sorted by descending
/// eigenvalue; only eigenvalues above `1e-9 * lambda_max` count as positive
/// and are eligible, so `m` can never exceed N-1 (centering removes one
/// dimension) and is further capped by the positive spectrum. Negative
/// eigenvalues, unavoidable when the distances are not exactly
/// Euclidean-embeddable, are dropped. Each retained eigenvector is oriented
/// so its largest-magnitude entry is positive, making coordinates
/// reproducible across runs.
pub fn fit_mds(d: &DistanceMatrix, m: usize) -> Result<MdsModel> {
    let n = d.n();
    if m == 0 {
        return Err(Error::InvalidConfig(
            "embedding dimension m must be at least 1".into(),
        ));
    }
    let k = double_center(d);
    let eig = SymmetricEigen::new(k);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap()
            .then(a.cmp(&b))
    });
    let lambda_max = eig.eigenvalues[order[0]].max(0.0);
    let eps = EIG_REL_TOL * lambda_max;
    let available = order
        .iter()
        .filter(|&&i| eig.eigenvalues[i] > eps)
        .count();
    if available < m {
        return Err(Error::InsufficientPositiveEigenvalues {
            available,
            requested: m,
        });
    }

    let mut eigenvalues = Vec::with_capacity(m);
    let mut eigenvectors = Mat::zeros(n, m);
    let mut z = Mat::zeros(n, m);
    for l in 0..m {
        let src = order[l];
        let lambda = eig.eigenvalues[src];
        let mut u: Vec<f64> = (0..n).map(|i| eig.eigenvectors[(i, src)]).collect();
        let mut arg = 0;
        for (i, v) in u.iter().enumerate().skip(1) {
            if v.abs() > u[arg].abs() {
                arg = i;
            }
        }
        if u[arg] < 0.0 {
            for v in &mut u {
                *v = -*v;
            }
        }
        let scale = lambda.sqrt();
        for i in 0..n {
            eigenvectors[(i, l)] = u[i];
            z[(i, l)] = scale * u[i];
        }
        eigenvalues.push(lambda);
    }

    let d2 = d.squared();
    let d2_row_sums: Vec<f64> = (0..n).map(|i| d2.row(i).sum()).collect();
    let d2_total = d2_row_sums.iter().sum();
    Ok(MdsModel {
        z,
        eigenvalues,
        eigenvectors,
        d2_row_sums,
        d2_total,
    })
}

/// Out-of-sample centered-kernel row from cached squared-distance sums.
///
/// Mean estimate over the dataset augmented with the new point:
/// `k_i = -1/2 d²(new,i) + c1·Σ_j d²(new,j) + c1·(S_i + d²(new,i))
///        - c2·(S + 2 Σ_j d²(new,j))`
/// with `c1 = 1/(2(N+1))` and `c2 = 1/(2(N+1)²)`.
pub fn kernel_row_from_sums(d2_new: &[f64], d2_row_sums: &[f64], d2_total: f64) -> Vec<f64> {
    let n = d2_row_sums.len();
    debug_assert_eq!(d2_new.len(), n);
    let np1 = (n + 1) as f64;
    let c1 = 1.0 / (2.0 * np1);
    let c2 = 1.0 / (2.0 * np1 * np1);
    let d2_new_sum: f64 = d2_new.iter().sum();
    (0..n)
        .map(|i| {
            -0.5 * d2_new[i] + c1 * d2_new_sum + c1 * (d2_row_sums[i] + d2_new[i])
                - c2 * (d2_total + 2.0 * d2_new_sum)
        })
        .collect()
}

/// Centered-kernel row for a new point given its predicted squared
/// distances to the training samples.
pub fn oos_kernel_row(d2_new: &[f64], mds: &MdsModel) -> Result<Vec<f64>> {
    if d2_new.len() != mds.n() {
        return Err(Error::DimensionMismatch {
            context: "predicted squared distances".into(),
            expected: mds.n(),
            got: d2_new.len(),
        });
    }
    for (i, &v) in d2_new.iter().enumerate() {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "squared distance {i} = {v} must be finite and nonnegative"
            )));
        }
    }
    Ok(kernel_row_from_sums(d2_new, &mds.d2_row_sums, mds.d2_total))
}

/// Embeds a kernel row: `z_hat_l = (1/sqrt(lambda_l)) Σ_i u_il k_i`.
pub fn oos_embed(k_hat: &[f64], mds: &MdsModel) -> Result<EmbeddedPoint> {
    if k_hat.len() != mds.n() {
        return Err(Error::DimensionMismatch {
            context: "kernel row length".into(),
            expected: mds.n(),
            got: k_hat.len(),
        });
    }
    let z_hat = (0..mds.m())
        .map(|l| {
            let mut acc = 0.0;
            for i in 0..mds.n() {
                acc += mds.eigenvectors[(i, l)] * k_hat[i];
            }
            acc / mds.eigenvalues[l].sqrt()
        })
        .collect();
    Ok(EmbeddedPoint { z_hat })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::validate_distance_matrix;
    use crate::distances::euclidean_distances;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn two_point() -> DistanceMatrix {
        validate_distance_matrix(Mat::from_row_slice(2, 2, &[0.0, 2.0, 2.0, 0.0])).unwrap()
    }

    #[test]
    fn double_center_hand_case() {
        let k = double_center(&two_point());
        assert_relative_eq!(k[(0, 0)], 1.0);
        assert_relative_eq!(k[(0, 1)], -1.0);
        assert_relative_eq!(k[(1, 0)], -1.0);
        assert_relative_eq!(k[(1, 1)], 1.0);
    }

    #[test]
    fn double_center_zero_distances() {
        let d = validate_distance_matrix(Mat::zeros(3, 3)).unwrap();
        assert_eq!(double_center(&d), Mat::zeros(3, 3));
    }

    #[test]
    fn fit_mds_hand_case() {
        let model = fit_mds(&two_point(), 1).unwrap();
        assert_relative_eq!(model.eigenvalues()[0], 2.0, max_relative = 1e-12);
        assert_relative_eq!(model.z()[(0, 0)], 1.0, max_relative = 1e-10);
        assert_relative_eq!(model.z()[(1, 0)], -1.0, max_relative = 1e-10);
    }

    #[test]
    fn euclidean_distances_are_reconstructed() {
        let pts = Mat::from_row_slice(
            5,
            3,
            &[
                0.0, 0.0, 0.0, 1.0, 2.0, -1.0, -2.0, 0.5, 3.0, 4.0, -1.5, 0.2, 0.3, 2.2, 1.1,
            ],
        );
        let d = euclidean_distances(&pts).unwrap();
        let model = fit_mds(&d, 3).unwrap();
        let z = model.z();
        for i in 0..5 {
            for j in 0..5 {
                let mut acc = 0.0;
                for l in 0..3 {
                    let diff = z[(i, l)] - z[(j, l)];
                    acc += diff * diff;
                }
                assert_relative_eq!(
                    acc.sqrt(),
                    d.values()[(i, j)],
                    max_relative = 1e-8,
                    epsilon = 1e-8
                );
            }
        }
        // Gram identity: Z Zᵀ reproduces K at full rank.
        let k = double_center(&d);
        let gram = z * z.transpose();
        for i in 0..5 {
            for j in 0..5 {
                assert_relative_eq!(gram[(i, j)], k[(i, j)], epsilon = 1e-8, max_relative = 1e-8);
            }
        }
    }

    #[test]
    fn centering_caps_the_rank() {
        let pts = Mat::from_row_slice(3, 1, &[0.0, 1.0, 5.0]);
        let d = euclidean_distances(&pts).unwrap();
        // centering forces rank <= N-1, so m = N can never be served
        let err = fit_mds(&d, 3).unwrap_err();
        assert!(matches!(
            err,
            Error::InsufficientPositiveEigenvalues { requested: 3, .. }
        ));
        // collinear points leave a single positive eigenvalue
        let err = fit_mds(&d, 2).unwrap_err();
        match err {
            Error::InsufficientPositiveEigenvalues {
                available,
                requested,
            } => {
                assert_eq!(available, 1);
                assert_eq!(requested, 2);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn eigenvectors_are_orthonormal() {
        let pts = Mat::from_row_slice(6, 2, &[0.0, 0.0, 1.0, 0.5, 2.0, -1.0, 3.5, 2.0, -1.0, 1.0, 0.5, -2.0]);
        let d = euclidean_distances(&pts).unwrap();
        let model = fit_mds(&d, 2).unwrap();
        let u = model.eigenvectors();
        for a in 0..2 {
            for b in 0..2 {
                let dot: f64 = (0..6).map(|i| u[(i, a)] * u[(i, b)]).sum();
                let expect = if a == b { 1.0 } else { 0.0 };
                assert_relative_eq!(dot, expect, epsilon = 1e-8);
            }
        }
        // z_il = sqrt(lambda_l) u_il
        for l in 0..2 {
            let s = model.eigenvalues()[l].sqrt();
            for i in 0..6 {
                assert_relative_eq!(model.z()[(i, l)], s * u[(i, l)], epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn exact_kernel_row_recovers_training_point() {
        let pts = Mat::from_row_slice(4, 2, &[0.0, 0.0, 2.0, 0.0, 0.0, 3.0, 1.0, 1.0]);
        let d = euclidean_distances(&pts).unwrap();
        let model = fit_mds(&d, 2).unwrap();
        let k = double_center(&d);
        for i in 0..4 {
            let row: Vec<f64> = (0..4).map(|j| k[(i, j)]).collect();
            let emb = oos_embed(&row, &model).unwrap();
            for l in 0..2 {
                assert_relative_eq!(emb.z_hat[l], model.z()[(i, l)], epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn zero_kernel_row_embeds_to_origin() {
        let model = fit_mds(&two_point(), 1).unwrap();
        let emb = oos_embed(&[0.0, 0.0], &model).unwrap();
        assert_eq!(emb.z_hat, vec![0.0]);
    }

    #[test]
    fn zero_distances_give_zero_kernel_row() {
        let k = kernel_row_from_sums(&[0.0, 0.0, 0.0], &[0.0, 0.0, 0.0], 0.0);
        assert_eq!(k, vec![0.0, 0.0, 0.0]);
    }

    /// Literal transcription of the augmented mean-kernel formula.
    fn naive_kernel_row(d2_new: &[f64], d: &DistanceMatrix) -> Vec<f64> {
        let n = d.n();
        let d2 = d.squared();
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let sum_new: f64 = d2_new.iter().sum();
            let s_i: f64 = (0..n).map(|j| d2[(j, i)]).collect::<Vec<_>>().iter().sum();
            let s_total: f64 = (0..n)
                .flat_map(|a| (0..n).map(move |b| (a, b)))
                .map(|(a, b)| d2[(a, b)])
                .sum();
            let np1 = (n + 1) as f64;
            out.push(
                -0.5 * d2_new[i]
                    + sum_new / (2.0 * np1)
                    + (s_i + d2_new[i]) / (2.0 * np1)
                    - (s_total + 2.0 * sum_new) / (2.0 * np1 * np1),
            );
        }
        out
    }

    proptest! {
        #[test]
        fn double_center_rows_sum_to_zero(
            raw in proptest::collection::vec(0.0f64..10.0, 6..45),
        ) {
            // build a symmetric distance matrix from the raw upper triangle
            let n = ((1.0 + (1.0 + 8.0 * raw.len() as f64).sqrt()) / 2.0).floor() as usize;
            let need = n * (n - 1) / 2;
            prop_assume!(need <= raw.len() && n >= 2);
            let mut m = Mat::zeros(n, n);
            let mut k = 0;
            for i in 0..n {
                for j in (i + 1)..n {
                    m[(i, j)] = raw[k];
                    m[(j, i)] = raw[k];
                    k += 1;
                }
            }
            let d = validate_distance_matrix(m).unwrap();
            let kmat = double_center(&d);
            for i in 0..n {
                let row_sum: f64 = kmat.row(i).sum();
                prop_assert!(row_sum.abs() < 1e-8, "row {} sums to {}", i, row_sum);
            }
            for i in 0..n {
                for j in 0..n {
                    prop_assert_eq!(kmat[(i, j)], kmat[(j, i)]);
                }
            }
        }

        #[test]
        fn kernel_row_matches_literal_formula(
            flat in proptest::collection::vec(-5.0f64..5.0, 8..40),
            d2_seed in proptest::collection::vec(0.0f64..25.0, 4..20),
        ) {
            let n = (flat.len() / 2).min(d2_seed.len());
            let pts = Mat::from_row_slice(n, 2, &flat[..n * 2]);
            let d = euclidean_distances(&pts).unwrap();
            let d2_new = &d2_seed[..n];
            let model = fit_mds(&d, 1);
            prop_assume!(model.is_ok());
            let model = model.unwrap();
            let ours = oos_kernel_row(d2_new, &model).unwrap();
            let naive = naive_kernel_row(d2_new, &d);
            for i in 0..n {
                prop_assert!((ours[i] - naive[i]).abs() <= 1e-12 * naive[i].abs().max(1.0));
            }
        }

        #[test]
        fn oos_embed_is_linear(
            k_row in proptest::collection::vec(-3.0f64..3.0, 2),
            alpha in -4.0f64..4.0,
        ) {
            let model = fit_mds(&two_point(), 1).unwrap();
            let base = oos_embed(&k_row, &model).unwrap();
            let scaled_input: Vec<f64> = k_row.iter().map(|v| alpha * v).collect();
            let scaled = oos_embed(&scaled_input, &model).unwrap();
            for l in 0..1 {
                prop_assert!((scaled.z_hat[l] - alpha * base.z_hat[l]).abs() <= 1e-12);
            }
        }
    }
}
