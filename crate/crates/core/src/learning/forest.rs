//! CART trees with Gini impurity, bagged into a random forest.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::matrix::Rows;

/// Above this many cells the training data is read through the row view
/// instead of being copied column-major.
const MAX_COLUMN_CACHE: usize = 1 << 23;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub min_leaf: usize,
    /// Candidate columns per split; `None` means `ceil(sqrt(d))`.
    pub max_features: Option<usize>,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            min_leaf: 1,
            max_features: None,
        }
    }
}

pub fn default_max_features(n_cols: usize) -> usize {
    ((n_cols as f64).sqrt().ceil() as usize).max(1)
}

/// A tree node. Leaves have `feature == None`; `value` is the positive
/// fraction of training samples that reached the node and `gain` is the
/// sample-weighted Gini decrease of the split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub feature: Option<u32>,
    pub threshold: f64,
    pub left: u32,
    pub right: u32,
    pub value: f64,
    pub gain: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict_with(&self, value: impl Fn(usize) -> f64) -> f64 {
        let mut i = 0usize;
        loop {
            let node = &self.nodes[i];
            match node.feature {
                None => return node.value,
                Some(f) => {
                    i = if value(f as usize) <= node.threshold {
                        node.left as usize
                    } else {
                        node.right as usize
                    };
                }
            }
        }
    }

    /// Per-column Gini decrease of this tree, normalized to sum to 1 unless
    /// the tree never split.
    pub fn importances(&self, n_cols: usize) -> Vec<f64> {
        let mut imp = vec![0.0; n_cols];
        for n in &self.nodes {
            if let Some(f) = n.feature {
                imp[f as usize] += n.gain;
            }
        }
        let total: f64 = imp.iter().sum();
        if total > 0.0 {
            imp.iter_mut().for_each(|v| *v /= total);
        }
        imp
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub n_cols: usize,
    pub max_features: usize,
    pub trees: Vec<Tree>,
}

enum Columns<'a, R: Rows + ?Sized> {
    Cached(Vec<Vec<f64>>),
    View(&'a R),
}

impl<R: Rows + ?Sized> Columns<'_, R> {
    #[inline]
    fn get(&self, row: usize, col: usize) -> f64 {
        match self {
            Columns::Cached(c) => c[col][row],
            Columns::View(r) => r.value(row, col),
        }
    }
}

fn gini(pos: f64, n: f64) -> f64 {
    if n == 0.0 {
        return 0.0;
    }
    let p = pos / n;
    2.0 * p * (1.0 - p)
}

struct Split {
    feature: usize,
    threshold: f64,
    children_impurity: f64,
}

struct TreeBuilder<'a, R: Rows + ?Sized> {
    cols: &'a Columns<'a, R>,
    labels: &'a [bool],
    n_cols: usize,
    max_features: usize,
    min_leaf: usize,
    total: f64,
}

impl<R: Rows + ?Sized> TreeBuilder<'_, R> {
    fn best_split(&self, samples: &[usize], rng: &mut ChaCha8Rng) -> Option<Split> {
        let n = samples.len();
        let pos_total = samples.iter().filter(|&&s| self.labels[s]).count() as f64;
        let mut order: Vec<usize> = (0..self.n_cols).collect();
        order.shuffle(rng);
        let mut best: Option<Split> = None;
        let mut evaluated = 0;
        let mut pairs: Vec<(f64, bool)> = Vec::with_capacity(n);
        for feature in order {
            if evaluated >= self.max_features {
                break;
            }
            pairs.clear();
            pairs.extend(samples.iter().map(|&s| (self.cols.get(s, feature), self.labels[s])));
            let first = pairs[0].0;
            if pairs.iter().all(|p| p.0 == first) {
                // constant here: does not count towards the candidate budget
                continue;
            }
            evaluated += 1;
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut left_pos = 0.0;
            for i in 0..n - 1 {
                left_pos += f64::from(u8::from(pairs[i].1));
                if pairs[i].0 == pairs[i + 1].0 {
                    continue;
                }
                let nl = (i + 1) as f64;
                let nr = (n - i - 1) as f64;
                if i + 1 < self.min_leaf || n - i - 1 < self.min_leaf {
                    continue;
                }
                let impurity = nl * gini(left_pos, nl) + nr * gini(pos_total - left_pos, nr);
                if best.as_ref().is_none_or(|b| impurity < b.children_impurity) {
                    let (lo, hi) = (pairs[i].0, pairs[i + 1].0);
                    let mid = lo + (hi - lo) / 2.0;
                    let threshold = if mid < hi { mid } else { lo };
                    best = Some(Split {
                        feature,
                        threshold,
                        children_impurity: impurity,
                    });
                }
            }
        }
        best
    }

    fn build(&self, samples: Vec<usize>, rng: &mut ChaCha8Rng) -> Tree {
        let mut nodes: Vec<Node> = Vec::new();
        // (samples, node index)
        let mut stack = vec![(samples, 0u32)];
        nodes.push(Node {
            feature: None,
            threshold: 0.0,
            left: 0,
            right: 0,
            value: 0.0,
            gain: 0.0,
        });
        while let Some((samples, id)) = stack.pop() {
            let n = samples.len() as f64;
            let pos = samples.iter().filter(|&&s| self.labels[s]).count() as f64;
            nodes[id as usize].value = if n > 0.0 { pos / n } else { 0.0 };
            if pos == 0.0 || pos == n || samples.len() < 2 * self.min_leaf {
                continue;
            }
            let Some(split) = self.best_split(&samples, rng) else {
                continue;
            };
            let (left, right): (Vec<usize>, Vec<usize>) = samples
                .iter()
                .partition(|&&s| self.cols.get(s, split.feature) <= split.threshold);
            let left_id = nodes.len() as u32;
            let right_id = left_id + 1;
            for _ in 0..2 {
                nodes.push(Node {
                    feature: None,
                    threshold: 0.0,
                    left: 0,
                    right: 0,
                    value: 0.0,
                    gain: 0.0,
                });
            }
            let node = &mut nodes[id as usize];
            node.feature = Some(split.feature as u32);
            node.threshold = split.threshold;
            node.left = left_id;
            node.right = right_id;
            node.gain = (n * gini(pos, n) - split.children_impurity) / self.total;
            stack.push((right, right_id));
            stack.push((left, left_id));
        }
        Tree { nodes }
    }
}

impl RandomForest {
    /// Fits `params.n_trees` trees on bootstrap samples. Deterministic for a
    /// given seed regardless of thread count.
    pub fn fit<R: Rows + ?Sized>(rows: &R, labels: &[bool], params: &ForestParams, seed: u64) -> Self {
        let n = rows.n_rows();
        let d = rows.n_cols();
        let cols: Columns<'_, R> = if n.saturating_mul(d) <= MAX_COLUMN_CACHE {
            Columns::Cached((0..d).map(|c| (0..n).map(|r| rows.value(r, c)).collect()).collect())
        } else {
            Columns::View(rows)
        };
        let max_features = params
            .max_features
            .unwrap_or_else(|| default_max_features(d))
            .min(d.max(1));
        let builder = TreeBuilder {
            cols: &cols,
            labels,
            n_cols: d,
            max_features,
            min_leaf: params.min_leaf.max(1),
            total: n as f64,
        };
        let mut master = ChaCha8Rng::seed_from_u64(seed);
        let tree_seeds: Vec<u64> = (0..params.n_trees).map(|_| master.gen()).collect();
        let trees = tree_seeds
            .into_par_iter()
            .map(|s| {
                let mut rng = ChaCha8Rng::seed_from_u64(s);
                let sample: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
                builder.build(sample, &mut rng)
            })
            .collect();
        RandomForest {
            n_cols: d,
            max_features,
            trees,
        }
    }

    pub fn predict_one(&self, value: impl Fn(usize) -> f64 + Copy) -> f64 {
        let sum: f64 = self.trees.iter().map(|t| t.predict_with(value)).sum();
        sum / self.trees.len() as f64
    }

    /// Mean of per-tree normalized Gini importances, renormalized; uniform
    /// when no tree ever split.
    pub fn feature_importances(&self) -> Vec<f64> {
        let mut acc = vec![0.0; self.n_cols];
        for t in &self.trees {
            for (a, v) in acc.iter_mut().zip(t.importances(self.n_cols)) {
                *a += v;
            }
        }
        let total: f64 = acc.iter().sum();
        if total > 0.0 {
            acc.iter_mut().for_each(|v| *v /= total);
        } else if self.n_cols > 0 {
            acc.iter_mut().for_each(|v| *v = 1.0 / self.n_cols as f64);
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::DenseMatrix;

    #[test]
    fn single_tree_separates_xor_like_data() {
        let rows = DenseMatrix::from_rows(&[[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]]);
        let labels = [false, true, true, false];
        let params = ForestParams {
            n_trees: 1,
            min_leaf: 1,
            max_features: Some(2),
        };
        let cols: Columns<'_, DenseMatrix> = Columns::View(&rows);
        let b = TreeBuilder {
            cols: &cols,
            labels: &labels,
            n_cols: 2,
            max_features: params.max_features.unwrap(),
            min_leaf: 1,
            total: 4.0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let tree = b.build(vec![0, 1, 2, 3], &mut rng);
        for (i, &y) in labels.iter().enumerate() {
            let p = tree.predict_with(|c| rows.value(i, c));
            assert_eq!(p, f64::from(u8::from(y)));
        }
    }

    #[test]
    fn constant_columns_get_no_importance() {
        let rows = DenseMatrix::from_rows(&[[0.0, 3.0], [1.0, 3.0], [2.0, 3.0], [3.0, 3.0]]);
        let f = RandomForest::fit(&rows, &[false, false, true, true], &ForestParams::default(), 3);
        let imp = f.feature_importances();
        assert_eq!(imp[1], 0.0);
        assert!((imp.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn threshold_midpoint() {
        let rows = DenseMatrix::from_rows(&[[1.0], [3.0]]);
        let f = RandomForest::fit(
            &rows,
            &[false, true],
            &ForestParams {
                n_trees: 20,
                ..ForestParams::default()
            },
            9,
        );
        let split = f
            .trees
            .iter()
            .flat_map(|t| &t.nodes)
            .find(|n| n.feature.is_some())
            .unwrap();
        assert_eq!(split.threshold, 2.0);
    }
}
