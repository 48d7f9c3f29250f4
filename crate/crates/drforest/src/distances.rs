//! Pairwise distance construction: Euclidean and Isomap geodesic.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;

use crate::data::{DistanceMatrix, Mat};
use crate::error::{Error, Result};

/// Pairwise Euclidean distances between the rows of `points`.
pub fn euclidean_distances(points: &Mat) -> Result<DistanceMatrix> {
    let n = points.nrows();
    if n == 0 || points.ncols() == 0 {
        return Err(Error::EmptyMatrix {
            context: "euclidean distances".into(),
        });
    }
    let mut d = Mat::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let dist = row_distance(points, i, j);
            d[(i, j)] = dist;
            d[(j, i)] = dist;
        }
    }
    Ok(DistanceMatrix::from_symmetric_unchecked(d))
}

fn row_distance(points: &Mat, i: usize, j: usize) -> f64 {
    let mut acc = 0.0;
    for c in 0..points.ncols() {
        let diff = points[(i, c)] - points[(j, c)];
        acc += diff * diff;
    }
    acc.sqrt()
}

/// Indices of the `k` nearest rows to row `i` (excluding `i` itself),
/// ordered by ascending distance with ties broken by lower index.
pub fn knn_neighbors(points: &Mat, i: usize, k: usize) -> Vec<usize> {
    let n = points.nrows();
    let mut order: Vec<(f64, usize)> = (0..n)
        .filter(|&j| j != i)
        .map(|j| (row_distance(points, i, j), j))
        .collect();
    order.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    order.truncate(k);
    order.into_iter().map(|(_, j)| j).collect()
}

/// Undirected weighted graph over sample indices, stored as adjacency lists.
#[derive(Debug, Clone)]
pub struct NeighborhoodGraph {
    adjacency: Vec<Vec<(usize, f64)>>,
}

impl NeighborhoodGraph {
    /// Builds the symmetrized k-nearest-neighbor graph: an edge joins `i`
    /// and `j` when either is among the other's `k` nearest, weighted by
    /// Euclidean distance. Duplicate points produce zero-weight edges,
    /// which is fine for shortest paths.
    pub fn knn(points: &Mat, k: usize) -> Result<Self> {
        let n = points.nrows();
        if n == 0 || points.ncols() == 0 {
            return Err(Error::EmptyMatrix {
                context: "neighborhood graph".into(),
            });
        }
        if k == 0 || k >= n {
            return Err(Error::InvalidConfig(format!(
                "neighborhood size k={k} must satisfy 1 <= k <= n-1 (n={n})"
            )));
        }
        let mut adjacency: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for i in 0..n {
            for j in knn_neighbors(points, i, k) {
                let w = row_distance(points, i, j);
                add_edge(&mut adjacency, i, j, w);
            }
        }
        for list in &mut adjacency {
            list.sort_by(|a, b| a.0.cmp(&b.0));
        }
        Ok(Self { adjacency })
    }

    pub fn n(&self) -> usize {
        self.adjacency.len()
    }

    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.adjacency[i]
    }

    /// Sizes of the connected components, largest first.
    pub fn component_sizes(&self) -> Vec<usize> {
        let n = self.n();
        let mut seen = vec![false; n];
        let mut sizes = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut stack = vec![start];
            seen[start] = true;
            let mut size = 0usize;
            while let Some(v) = stack.pop() {
                size += 1;
                for &(u, _) in &self.adjacency[v] {
                    if !seen[u] {
                        seen[u] = true;
                        stack.push(u);
                    }
                }
            }
            sizes.push(size);
        }
        sizes.sort_unstable_by(|a, b| b.cmp(a));
        sizes
    }

    /// Single-source shortest path lengths via Dijkstra's algorithm.
    /// Unreachable vertices come back as `f64::INFINITY`.
    pub fn shortest_paths_from(&self, source: usize) -> Vec<f64> {
        let n = self.n();
        let mut dist = vec![f64::INFINITY; n];
        dist[source] = 0.0;
        let mut heap = BinaryHeap::new();
        heap.push(HeapEntry {
            cost: 0.0,
            vertex: source,
        });
        while let Some(HeapEntry { cost, vertex }) = heap.pop() {
            if cost > dist[vertex] {
                continue;
            }
            for &(next, weight) in &self.adjacency[vertex] {
                let candidate = cost + weight;
                if candidate < dist[next] {
                    dist[next] = candidate;
                    heap.push(HeapEntry {
                        cost: candidate,
                        vertex: next,
                    });
                }
            }
        }
        dist
    }
}

fn add_edge(adjacency: &mut [Vec<(usize, f64)>], i: usize, j: usize, w: f64) {
    if !adjacency[i].iter().any(|&(v, _)| v == j) {
        adjacency[i].push((j, w));
    }
    if !adjacency[j].iter().any(|&(v, _)| v == i) {
        adjacency[j].push((i, w));
    }
}

/// Min-heap entry; reversed ordering because `BinaryHeap` is a max-heap.
#[derive(Debug, Clone, Copy, PartialEq)]
struct HeapEntry {
    cost: f64,
    vertex: usize,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .partial_cmp(&self.cost)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.vertex.cmp(&self.vertex))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Isomap geodesic distances: shortest paths through the symmetrized
/// k-nearest-neighbor graph of `points`.
///
/// Fails with [`Error::DisconnectedGraph`] when the graph has more than one
/// connected component; the error carries the component sizes so callers
/// can tell whether a larger `k` would help.
pub fn isomap_distances(points: &Mat, k: usize) -> Result<DistanceMatrix> {
    let graph = NeighborhoodGraph::knn(points, k)?;
    let sizes = graph.component_sizes();
    if sizes.len() > 1 {
        return Err(Error::DisconnectedGraph {
            component_sizes: sizes,
        });
    }
    let n = graph.n();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| graph.shortest_paths_from(i))
        .collect();
    let mut d = Mat::zeros(n, n);
    for (i, row) in rows.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            d[(i, j)] = v;
        }
    }
    // Per-source runs can disagree in the last ulp when path sums reorder;
    // average with the transpose to restore exact symmetry.
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = (d[(i, j)] + d[(j, i)]) / 2.0;
            d[(i, j)] = avg;
            d[(j, i)] = avg;
        }
        d[(i, i)] = 0.0;
    }
    Ok(DistanceMatrix::from_symmetric_unchecked(d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn line_points(n: usize) -> Mat {
        Mat::from_fn(n, 1, |i, _| i as f64)
    }

    #[test]
    fn euclidean_matches_hand_computation() {
        let pts = Mat::from_row_slice(3, 2, &[0.0, 0.0, 3.0, 4.0, 0.0, 1.0]);
        let d = euclidean_distances(&pts).unwrap();
        assert_relative_eq!(d.values()[(0, 1)], 5.0);
        assert_relative_eq!(d.values()[(0, 2)], 1.0);
        assert_relative_eq!(d.values()[(1, 2)], (9.0f64 + 9.0).sqrt());
        assert_eq!(d.values()[(0, 0)], 0.0);
    }

    #[test]
    fn knn_breaks_ties_by_lower_index() {
        // Points 1 and 2 are equidistant from point 0.
        let pts = Mat::from_row_slice(4, 1, &[0.0, 1.0, -1.0, 5.0]);
        let nn = knn_neighbors(&pts, 0, 1);
        assert_eq!(nn, vec![1]);
        let nn2 = knn_neighbors(&pts, 0, 2);
        assert_eq!(nn2, vec![1, 2]);
    }

    #[test]
    fn chain_geodesics_sum_segment_lengths() {
        // Four collinear points, k=1 links each to its nearest; the union
        // symmetrization chains them together.
        let pts = line_points(4);
        let d = isomap_distances(&pts, 1).unwrap();
        assert_relative_eq!(d.values()[(0, 3)], 3.0);
        assert_relative_eq!(d.values()[(1, 3)], 2.0);
    }

    #[test]
    fn disconnected_graph_reports_component_sizes() {
        // Two tight clusters far apart; k=1 cannot bridge them.
        let pts = Mat::from_row_slice(4, 1, &[0.0, 0.1, 100.0, 100.1]);
        let err = isomap_distances(&pts, 1).unwrap_err();
        match err {
            Error::DisconnectedGraph { component_sizes } => {
                assert_eq!(component_sizes, vec![2, 2]);
            }
            other => panic!("expected DisconnectedGraph, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_points_allowed() {
        let pts = Mat::from_row_slice(3, 1, &[0.0, 0.0, 1.0]);
        let d = isomap_distances(&pts, 1).unwrap();
        assert_eq!(d.values()[(0, 1)], 0.0);
        assert_relative_eq!(d.values()[(0, 2)], 1.0);
    }

    #[test]
    fn rejects_bad_k() {
        let pts = line_points(3);
        assert!(NeighborhoodGraph::knn(&pts, 0).is_err());
        assert!(NeighborhoodGraph::knn(&pts, 3).is_err());
    }

    proptest! {
        #[test]
        fn geodesic_at_least_euclidean(
            flat in proptest::collection::vec(-10.0f64..10.0, 10..30),
            k in 2usize..5,
        ) {
            let n = flat.len() / 2;
            let pts = Mat::from_row_slice(n, 2, &flat[..n * 2]);
            let euclid = euclidean_distances(&pts).unwrap();
            if let Ok(geo) = isomap_distances(&pts, k.min(n - 1)) {
                for i in 0..n {
                    for j in 0..n {
                        prop_assert!(
                            geo.values()[(i, j)] >= euclid.values()[(i, j)] - 1e-12,
                            "geodesic ({}, {}) shorter than straight line",
                            i, j
                        );
                    }
                }
            }
        }

        #[test]
        fn geodesic_triangle_inequality(
            flat in proptest::collection::vec(-5.0f64..5.0, 12..24),
        ) {
            let n = flat.len() / 2;
            let pts = Mat::from_row_slice(n, 2, &flat[..n * 2]);
            if let Ok(geo) = isomap_distances(&pts, 3.min(n - 1)) {
                let d = geo.values();
                for i in 0..n {
                    for j in 0..n {
                        for l in 0..n {
                            prop_assert!(
                                d[(i, j)] <= d[(i, l)] + d[(l, j)] + 1e-9,
                                "triangle inequality violated at ({}, {}, {})",
                                i, j, l
                            );
                        }
                    }
                }
            }
        }
    }
}
