//! Gradient-boosted regression trees on the logistic loss.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::sigmoid;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GbdtParams {
    pub trees: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub subsample: f64,
    /// L2 penalty on leaf weights.
    pub lambda: f64,
    /// Minimum hessian mass on each side of a split.
    pub min_child_weight: f64,
}

impl Default for GbdtParams {
    fn default() -> Self {
        Self {
            trees: 100,
            max_depth: 3,
            learning_rate: 0.1,
            subsample: 1.0,
            lambda: 1.0,
            min_child_weight: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum Node {
    Leaf(f64),
    /// `x[feature] <= threshold` goes to `left`.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    fn predict(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf(v) => return v,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[feature] <= threshold { left } else { right },
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gbdt {
    base: f64,
    learning_rate: f64,
    trees: Vec<Tree>,
}

struct Builder<'a> {
    x: &'a [Vec<f64>],
    grad: &'a [f64],
    hess: &'a [f64],
    params: &'a GbdtParams,
    nodes: Vec<Node>,
}

impl Builder<'_> {
    fn leaf_value(&self, rows: &[usize]) -> f64 {
        let g: f64 = rows.iter().map(|&i| self.grad[i]).sum();
        let h: f64 = rows.iter().map(|&i| self.hess[i]).sum();
        -g / (h + self.params.lambda)
    }

    fn best_split(&self, rows: &[usize]) -> Option<(usize, f64)> {
        let lambda = self.params.lambda;
        let g_total: f64 = rows.iter().map(|&i| self.grad[i]).sum();
        let h_total: f64 = rows.iter().map(|&i| self.hess[i]).sum();
        let parent = g_total * g_total / (h_total + lambda);
        let mut best: Option<(f64, usize, f64)> = None;
        let width = self.x[rows[0]].len();
        let mut sorted = rows.to_vec();
        for f in 0..width {
            sorted.sort_by(|&a, &b| self.x[a][f].total_cmp(&self.x[b][f]).then(a.cmp(&b)));
            let (mut gl, mut hl) = (0.0, 0.0);
            for w in 0..sorted.len() - 1 {
                let i = sorted[w];
                gl += self.grad[i];
                hl += self.hess[i];
                let (lo, hi) = (self.x[i][f], self.x[sorted[w + 1]][f]);
                if lo == hi {
                    continue;
                }
                let (gr, hr) = (g_total - gl, h_total - hl);
                if hl < self.params.min_child_weight || hr < self.params.min_child_weight {
                    continue;
                }
                let gain = gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - parent;
                if gain > 1e-12 && best.is_none_or(|b| gain > b.0) {
                    best = Some((gain, f, lo + (hi - lo) / 2.0));
                }
            }
        }
        best.map(|(_, f, t)| (f, t))
    }

    fn build(&mut self, rows: &[usize], depth: usize) -> usize {
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf(self.leaf_value(rows)));
        if depth >= self.params.max_depth || rows.len() < 2 {
            return id;
        }
        let Some((feature, threshold)) = self.best_split(rows) else {
            return id;
        };
        let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| self.x[i][feature] <= threshold);
        let left = self.build(&l, depth + 1);
        let right = self.build(&r, depth + 1);
        self.nodes[id] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        id
    }
}

impl Gbdt {
    pub fn fit(x: &[Vec<f64>], y: &[bool], params: &GbdtParams, seed: u64) -> Self {
        let n = x.len();
        let pos = y.iter().filter(|&&v| v).count() as f64;
        let base = (pos / (n as f64 - pos)).ln();
        let mut raw = vec![base; n];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut trees = Vec::with_capacity(params.trees);
        let take = ((params.subsample.clamp(0.0, 1.0) * n as f64).round() as usize).clamp(1, n);
        for _ in 0..params.trees {
            let p: Vec<f64> = raw.iter().map(|&r| sigmoid(r)).collect();
            let grad: Vec<f64> = p.iter().zip(y).map(|(p, &t)| p - f64::from(u8::from(t))).collect();
            let hess: Vec<f64> = p.iter().map(|p| (p * (1.0 - p)).max(1e-12)).collect();
            let mut rows: Vec<usize> = if take == n {
                (0..n).collect()
            } else {
                sample(&mut rng, n, take).into_vec()
            };
            rows.sort_unstable();
            let mut b = Builder {
                x,
                grad: &grad,
                hess: &hess,
                params,
                nodes: Vec::new(),
            };
            b.build(&rows, 0);
            let tree = Tree { nodes: b.nodes };
            for (r, xi) in raw.iter_mut().zip(x) {
                *r += params.learning_rate * tree.predict(xi);
            }
            trees.push(tree);
        }
        Self {
            base,
            learning_rate: params.learning_rate,
            trees,
        }
    }

    pub fn probability(&self, x: &[f64]) -> f64 {
        sigmoid(self.base + self.learning_rate * self.trees.iter().map(|t| t.predict(x)).sum::<f64>())
    }
}
