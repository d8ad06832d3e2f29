use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForestParams {
    pub trees: usize,
    /// `None` grows until leaves are pure.
    pub max_depth: Option<usize>,
    /// Features tried per split; `None` means `floor(sqrt(n_features))`.
    pub max_features: Option<usize>,
    pub seed: u64,
}

#[derive(Debug, Clone)]
enum Node {
    Leaf(usize),
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone)]
struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    fn predict(&self, row: &[f64]) -> usize {
        let mut idx = 0;
        loop {
            match &self.nodes[idx] {
                Node::Leaf(c) => return *c,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    idx = if row[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    }
                }
            }
        }
    }
}

/// Bagged CART trees with Gini splits and per-split feature subsampling.
#[derive(Debug, Clone)]
pub struct ForestClassifier {
    trees: Vec<Tree>,
    n_features: usize,
    n_classes: usize,
}

struct TreeBuilder<'a> {
    features: &'a [f64],
    n_features: usize,
    labels: &'a [usize],
    n_classes: usize,
    max_depth: Option<usize>,
    mtry: usize,
    nodes: Vec<Node>,
}

impl TreeBuilder<'_> {
    fn value(&self, sample: usize, feature: usize) -> f64 {
        self.features[sample * self.n_features + feature]
    }

    fn class_counts(&self, samples: &[usize]) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes];
        for &s in samples {
            counts[self.labels[s]] += 1;
        }
        counts
    }

    fn build(&mut self, samples: &mut [usize], depth: usize, rng: &mut ChaCha8Rng) -> usize {
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf(0));
        let counts = self.class_counts(samples);
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        let depth_reached = self.max_depth.is_some_and(|d| depth >= d);
        if pure || depth_reached || samples.len() < 2 {
            self.nodes[id] = Node::Leaf(argmax(&counts));
            return id;
        }
        match self.best_split(samples, &counts, rng) {
            None => {
                self.nodes[id] = Node::Leaf(argmax(&counts));
            }
            Some((feature, threshold)) => {
                let mut split_at = 0;
                for i in 0..samples.len() {
                    if self.value(samples[i], feature) <= threshold {
                        samples.swap(i, split_at);
                        split_at += 1;
                    }
                }
                let (l, r) = samples.split_at_mut(split_at);
                let left = self.build(l, depth + 1, rng);
                let right = self.build(r, depth + 1, rng);
                self.nodes[id] = Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                };
            }
        }
        id
    }

    /// Tries features in random order until `mtry` non-constant ones have
    /// been scored. Returns the best `(feature, threshold)` by weighted Gini.
    fn best_split(
        &self,
        samples: &[usize],
        counts: &[usize],
        rng: &mut ChaCha8Rng,
    ) -> Option<(usize, f64)> {
        let n = samples.len() as f64;
        let parent = gini(counts, samples.len());
        let mut order: Vec<usize> = (0..self.n_features).collect();
        order.shuffle(rng);
        let mut scored = 0;
        let mut best: Option<(f64, usize, f64)> = None;
        let mut column: Vec<(f64, usize)> = Vec::with_capacity(samples.len());
        for &feature in &order {
            if scored >= self.mtry {
                break;
            }
            column.clear();
            column.extend(
                samples
                    .iter()
                    .map(|&s| (self.value(s, feature), self.labels[s])),
            );
            column.sort_by(|a, b| a.0.total_cmp(&b.0));
            if column[0].0 == column[column.len() - 1].0 {
                continue;
            }
            scored += 1;
            let mut left = vec![0usize; self.n_classes];
            let mut right = counts.to_vec();
            for i in 0..column.len() - 1 {
                let (v, c) = column[i];
                left[c] += 1;
                right[c] -= 1;
                let next = column[i + 1].0;
                if v == next {
                    continue;
                }
                let nl = i + 1;
                let nr = column.len() - nl;
                let impurity = (nl as f64 * gini(&left, nl) + nr as f64 * gini(&right, nr)) / n;
                let gain = parent - impurity;
                if best.is_none_or(|(g, _, _)| gain > g) {
                    best = Some((gain, feature, 0.5 * (v + next)));
                }
            }
        }
        best.filter(|&(g, _, _)| g > 0.0).map(|(_, f, t)| (f, t))
    }
}

fn gini(counts: &[usize], total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let t = total as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / t).powi(2)).sum::<f64>()
}

fn argmax(counts: &[usize]) -> usize {
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    best
}

impl ForestClassifier {
    pub fn fit(
        params: &ForestParams,
        features: &[f64],
        n_features: usize,
        labels: &[usize],
        n_classes: usize,
    ) -> Self {
        let m = labels.len();
        let mtry = params
            .max_features
            .unwrap_or_else(|| (n_features as f64).sqrt().floor() as usize)
            .clamp(1, n_features.max(1));
        let trees = (0..params.trees)
            .into_par_iter()
            .map(|t| {
                let mut rng = ChaCha8Rng::seed_from_u64(params.seed.wrapping_add(t as u64));
                let mut samples: Vec<usize> = (0..m).map(|_| rng.random_range(0..m)).collect();
                let mut builder = TreeBuilder {
                    features,
                    n_features,
                    labels,
                    n_classes,
                    max_depth: params.max_depth,
                    mtry,
                    nodes: Vec::new(),
                };
                builder.build(&mut samples, 0, &mut rng);
                Tree {
                    nodes: builder.nodes,
                }
            })
            .collect();
        ForestClassifier {
            trees,
            n_features,
            n_classes,
        }
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    /// Majority vote over trees; ties go to the smaller class code.
    pub fn predict_one(&self, row: &[f64]) -> usize {
        let mut votes = vec![0usize; self.n_classes];
        for tree in &self.trees {
            votes[tree.predict(row)] += 1;
        }
        argmax(&votes)
    }

    pub fn predict(&self, features: &[f64]) -> Vec<usize> {
        features
            .par_chunks(self.n_features)
            .map(|r| self.predict_one(r))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(seed: u64) -> ForestParams {
        ForestParams {
            trees: 15,
            max_depth: None,
            max_features: None,
            seed,
        }
    }

    #[test]
    fn learns_threshold() {
        let feats: Vec<f64> = (0..40).flat_map(|i| [i as f64, (i % 3) as f64]).collect();
        let labels: Vec<usize> = (0..40).map(|i| usize::from(i >= 20)).collect();
        let f = ForestClassifier::fit(&params(1), &feats, 2, &labels, 2);
        assert_eq!(f.predict_one(&[2.0, 0.0]), 0);
        assert_eq!(f.predict_one(&[37.0, 1.0]), 1);
    }

    #[test]
    fn deterministic_for_seed() {
        let feats: Vec<f64> = (0..60)
            .flat_map(|i| [((i * 7) % 13) as f64, (i % 5) as f64, i as f64])
            .collect();
        let labels: Vec<usize> = (0..60).map(|i| (i * 7) % 3).collect();
        let a = ForestClassifier::fit(&params(9), &feats, 3, &labels, 3).predict(&feats);
        let b = ForestClassifier::fit(&params(9), &feats, 3, &labels, 3).predict(&feats);
        assert_eq!(a, b);
    }

    #[test]
    fn depth_limit_makes_stumps() {
        let feats: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let labels: Vec<usize> = (0..20).map(|i| i % 2).collect();
        let p = ForestParams {
            max_depth: Some(0),
            ..params(3)
        };
        let f = ForestClassifier::fit(&p, &feats, 1, &labels, 2);
        assert!(f.trees.iter().all(|t| t.nodes.len() == 1));
    }
}
