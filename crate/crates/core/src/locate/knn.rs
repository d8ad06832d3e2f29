use rayon::prelude::*;

/// Euclidean k-nearest-neighbour floor classifier.
///
/// Neighbours are ordered by `(squared distance, training row)`, so equal
/// distances resolve to the earlier training row. A vote tie goes to the
/// tied class whose member ranks nearest.
#[derive(Debug, Clone)]
pub struct KnnClassifier {
    k: usize,
    features: Vec<f64>,
    n_features: usize,
    labels: Vec<usize>,
    n_classes: usize,
}

impl KnnClassifier {
    pub fn fit(
        k: usize,
        features: Vec<f64>,
        n_features: usize,
        labels: Vec<usize>,
        n_classes: usize,
    ) -> Self {
        debug_assert_eq!(features.len(), labels.len() * n_features);
        KnnClassifier {
            k: k.min(labels.len()).max(1),
            features,
            n_features,
            labels,
            n_classes,
        }
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    /// Nearest `k` training rows as `(squared distance, row)`, ascending.
    pub fn neighbors(&self, query: &[f64]) -> Vec<(f64, usize)> {
        let d = self.n_features;
        let mut best: Vec<(f64, usize)> = Vec::with_capacity(self.k + 1);
        for (row, train) in self.features.chunks_exact(d).enumerate() {
            let worst = if best.len() == self.k {
                best[self.k - 1].0
            } else {
                f64::INFINITY
            };
            let Some(dist) = bounded_sq_distance(query, train, worst) else {
                continue;
            };
            // rows arrive in increasing order, so an equal distance never displaces
            let pos = best.partition_point(|&(bd, _)| bd <= dist);
            if pos < self.k {
                best.insert(pos, (dist, row));
                best.truncate(self.k);
            }
        }
        best
    }

    pub fn predict_one(&self, query: &[f64]) -> usize {
        let neighbors = self.neighbors(query);
        let mut votes = vec![0usize; self.n_classes];
        for &(_, row) in &neighbors {
            votes[self.labels[row]] += 1;
        }
        let top = votes.iter().copied().max().unwrap_or(0);
        neighbors
            .iter()
            .map(|&(_, row)| self.labels[row])
            .find(|&c| votes[c] == top)
            .unwrap_or(0)
    }

    /// Predicts every row of a row-major feature matrix.
    pub fn predict(&self, features: &[f64]) -> Vec<usize> {
        features
            .par_chunks(self.n_features)
            .map(|q| self.predict_one(q))
            .collect()
    }
}

/// Squared distance, or `None` once the partial sum reaches `bound`.
/// Partial sums of non-negative terms never decrease, so abandoning early
/// rejects exactly the rows the full sum would.
#[inline]
fn bounded_sq_distance(a: &[f64], b: &[f64], bound: f64) -> Option<f64> {
    const CHUNK: usize = 32;
    let mut sum = 0.0;
    for (ca, cb) in a.chunks(CHUNK).zip(b.chunks(CHUNK)) {
        for (x, y) in ca.iter().zip(cb) {
            let diff = x - y;
            sum += diff * diff;
        }
        if sum >= bound {
            return None;
        }
    }
    Some(sum)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nearest_of_itself() {
        let feats = vec![0.0, 0.0, 10.0, 10.0, 20.0, 0.0];
        let knn = KnnClassifier::fit(1, feats.clone(), 2, vec![0, 1, 2], 3);
        assert_eq!(knn.predict(&feats), vec![0, 1, 2]);
    }

    #[test]
    fn equal_distances_prefer_earlier_rows() {
        let knn = KnnClassifier::fit(1, vec![-1.0, 1.0], 1, vec![1, 0], 2);
        assert_eq!(knn.neighbors(&[0.0]), vec![(1.0, 0)]);
        assert_eq!(knn.predict_one(&[0.0]), 1);
    }

    #[test]
    fn vote_tie_goes_to_nearest_class() {
        // k=2, one neighbour of each class: the closer one wins
        let knn = KnnClassifier::fit(2, vec![0.0, 3.0, 10.0], 1, vec![1, 0, 0], 2);
        assert_eq!(knn.predict_one(&[1.0]), 1);
        assert_eq!(knn.predict_one(&[2.5]), 0);
    }

    #[test]
    fn majority_vote() {
        let knn = KnnClassifier::fit(3, vec![0.0, 1.0, 1.5, 100.0], 1, vec![0, 1, 1, 0], 2);
        assert_eq!(knn.predict_one(&[0.1]), 1);
    }
}
