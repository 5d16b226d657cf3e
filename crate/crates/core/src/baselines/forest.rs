use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
    /// Features tried per split; `None` means `ceil(sqrt(d))`.
    pub mtry: Option<usize>,
    pub seed: u64,
    /// Grow each tree on a resample drawn with replacement; otherwise on
    /// the rows as given.
    pub bootstrap: bool,
    /// Fit trees on the rayon pool. The result does not depend on it.
    pub parallel: bool,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 100,
            max_depth: 8,
            min_leaf: 2,
            mtry: None,
            seed: 0,
            bootstrap: true,
            parallel: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Node {
    Leaf {
        value: f64,
    },
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    /// Index of the tree within its forest; selects its random stream.
    pub stream: u64,
    /// Node 0 is the root.
    pub nodes: Vec<Node>,
}

impl RegressionTree {
    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf { value } => return value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if row[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], at: usize) -> usize {
            match nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, left).max(go(nodes, right)),
            }
        }
        go(&self.nodes, 0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    /// Column names, in row order.
    pub schema: Vec<String>,
    pub seed: u64,
    pub trees: Vec<RegressionTree>,
}

impl RandomForest {
    pub fn n_features(&self) -> usize {
        self.schema.len()
    }
}

/// Random stream for one node. It depends only on the node's position in
/// the tree, so trees grown with a larger depth limit extend, rather than
/// reshuffle, shallower ones.
fn node_rng(seed: u64, tree: u64, path: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&tree.to_le_bytes());
    key[16..24].copy_from_slice(&path.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

struct Grower<'a> {
    rows: &'a [Vec<f64>],
    targets: &'a [f64],
    config: &'a ForestConfig,
    mtry: usize,
    tree: u64,
    nodes: Vec<Node>,
}

impl Grower<'_> {
    fn leaf(&mut self, idx: &[usize]) -> usize {
        let value = idx.iter().map(|&i| self.targets[i]).sum::<f64>() / idx.len() as f64;
        self.nodes.push(Node::Leaf { value });
        self.nodes.len() - 1
    }

    /// Best `(feature, threshold, gain)` over the sampled features.
    fn best_split(&self, idx: &[usize], path: u64) -> Option<(usize, f64, f64)> {
        let d = self.rows[0].len();
        let mut rng = node_rng(self.config.seed, self.tree, path);
        let features = sample(&mut rng, d, self.mtry.min(d));
        let n = idx.len();
        let total: f64 = idx.iter().map(|&i| self.targets[i]).sum();
        let parent = total * total / n as f64;
        let min_leaf = self.config.min_leaf.max(1);
        let mut best: Option<(usize, f64, f64)> = None;
        let mut order = idx.to_vec();
        for f in features.iter() {
            order.sort_by(|&a, &b| self.rows[a][f].total_cmp(&self.rows[b][f]));
            let mut left_sum = 0.0;
            for k in 0..n - 1 {
                left_sum += self.targets[order[k]];
                let (lo, hi) = (self.rows[order[k]][f], self.rows[order[k + 1]][f]);
                let n_left = k + 1;
                if lo == hi || n_left < min_leaf || n - n_left < min_leaf {
                    continue;
                }
                let right_sum = total - left_sum;
                // Reduction in squared error relative to the parent.
                let gain = left_sum * left_sum / n_left as f64 + right_sum * right_sum / (n - n_left) as f64 - parent;
                if gain > best.map_or(1e-12 * parent.abs(), |b| b.2) {
                    let mut threshold = lo + (hi - lo) / 2.0;
                    if threshold >= hi {
                        threshold = lo;
                    }
                    best = Some((f, threshold, gain));
                }
            }
        }
        best
    }

    /// `path` numbers nodes heap-style: the root is 1, children of `k` are
    /// `2k` and `2k + 1`.
    fn grow(&mut self, idx: &[usize], depth: usize, path: u64) -> usize {
        let first = self.targets[idx[0]];
        let pure = idx.iter().all(|&i| self.targets[i] == first);
        if depth >= self.config.max_depth || pure || idx.len() < 2 * self.config.min_leaf.max(1) {
            return self.leaf(idx);
        }
        let Some((feature, threshold, _)) = self.best_split(idx, path) else {
            return self.leaf(idx);
        };
        let (left_idx, right_idx): (Vec<usize>, Vec<usize>) =
            idx.iter().partition(|&&i| self.rows[i][feature] <= threshold);
        let at = self.nodes.len();
        self.nodes.push(Node::Leaf { value: f64::NAN });
        let left = self.grow(&left_idx, depth + 1, 2 * path);
        let right = self.grow(&right_idx, depth + 1, 2 * path + 1);
        self.nodes[at] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        at
    }
}

/// Row indices drawn (with replacement) for tree number `tree`.
pub(crate) fn bootstrap_sample(seed: u64, n: usize, tree: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(tree);
    (0..n).map(|_| rng.gen_range(0..n)).collect()
}

fn fit_tree(rows: &[Vec<f64>], targets: &[f64], config: &ForestConfig, mtry: usize, tree: u64) -> RegressionTree {
    let sample = if config.bootstrap {
        bootstrap_sample(config.seed, rows.len(), tree)
    } else {
        (0..rows.len()).collect()
    };
    let mut grower = Grower {
        rows,
        targets,
        config,
        mtry,
        tree,
        nodes: Vec::new(),
    };
    grower.grow(&sample, 0, 1);
    RegressionTree {
        stream: tree,
        nodes: grower.nodes,
    }
}

/// Bagged CART regression trees with variance-reduction splits.
pub fn fit_rf(schema: &[String], rows: &[Vec<f64>], targets: &[f64], config: &ForestConfig) -> Result<RandomForest> {
    if rows.is_empty() {
        return Err(Error::Empty("random forest needs at least one training row".into()));
    }
    if rows.len() != targets.len() {
        return Err(Error::Shape(format!("{} rows but {} targets", rows.len(), targets.len())));
    }
    let d = schema.len();
    if let Some(k) = rows.iter().position(|r| r.len() != d) {
        return Err(Error::Shape(format!("row {k} has {} values, schema has {d}", rows[k].len())));
    }
    if rows.iter().flatten().chain(targets).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("training data must be finite".into()));
    }
    if config.n_trees == 0 {
        return Err(Error::InvalidArgument("n_trees must be at least 1".into()));
    }
    let mtry = match config.mtry {
        Some(0) => return Err(Error::InvalidArgument("mtry must be at least 1".into())),
        Some(m) => m,
        None => (d as f64).sqrt().ceil().max(1.0) as usize,
    };
    let fit = |t: usize| fit_tree(rows, targets, config, mtry, t as u64);
    let trees = if config.parallel {
        (0..config.n_trees).into_par_iter().map(fit).collect()
    } else {
        (0..config.n_trees).map(fit).collect()
    };
    Ok(RandomForest {
        schema: schema.to_vec(),
        seed: config.seed,
        trees,
    })
}

/// Mean of the per-tree predictions. The leaf values are summed in sorted
/// order, so the result does not depend on the order of the trees.
pub fn predict_rf(model: &RandomForest, row: &[f64]) -> Result<f64> {
    if row.len() != model.n_features() {
        return Err(Error::Shape(format!(
            "row has {} values, forest schema has {}",
            row.len(),
            model.n_features()
        )));
    }
    if model.trees.is_empty() {
        return Err(Error::Empty("forest has no trees".into()));
    }
    let mut values: Vec<f64> = model.trees.iter().map(|t| t.predict(row)).collect();
    values.sort_by(f64::total_cmp);
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}
