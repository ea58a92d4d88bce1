use serde::{Deserialize, Serialize};

use super::{EvalError, RankedList};
use crate::data::{CourseConceptSet, EmbeddingStore};
use crate::geometry::{cosine, lookup};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PrConfig {
    /// Edges join concepts whose cosine is strictly above this.
    pub threshold: f64,
    pub damping: f64,
    /// Stop once the L1 change between iterations falls below this.
    pub epsilon: f64,
    pub max_iterations: usize,
}

impl Default for PrConfig {
    fn default() -> Self {
        Self {
            threshold: 0.5,
            damping: 0.85,
            epsilon: 1e-8,
            max_iterations: 1000,
        }
    }
}

/// Power iteration of `x_i = (1 - d)/N + d * sum_{j ~ i} x_j / deg(j)` on an
/// undirected graph given as adjacency lists. Isolated nodes keep
/// `(1 - d)/N` and their mass is not redistributed.
pub fn pagerank(adjacency: &[Vec<usize>], config: &PrConfig) -> Result<Vec<f64>, EvalError> {
    let d = config.damping;
    if !(d > 0.0 && d < 1.0) {
        return Err(EvalError::InvalidDamping(d));
    }
    let n = adjacency.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let teleport = (1.0 - d) / n as f64;
    let mut x = vec![1.0 / n as f64; n];
    for _ in 0..config.max_iterations {
        let mut next = vec![teleport; n];
        for (j, nbrs) in adjacency.iter().enumerate() {
            if nbrs.is_empty() {
                continue;
            }
            let share = d * x[j] / nbrs.len() as f64;
            for &i in nbrs {
                next[i] += share;
            }
        }
        let change: f64 = next.iter().zip(&x).map(|(a, b)| (a - b).abs()).sum();
        x = next;
        if change < config.epsilon {
            break;
        }
    }
    Ok(x)
}

/// Ranks `expanded` by PageRank on the cosine-threshold graph over the
/// expanded and course concepts. Without any edge every score is `1/N`
/// and the order is lexicographic.
pub fn baseline_pr(
    expanded: &[String],
    concepts: &CourseConceptSet,
    store: &EmbeddingStore,
    config: &PrConfig,
) -> Result<RankedList, EvalError> {
    let mut nodes: Vec<&str> = expanded.iter().map(String::as_str).chain(concepts.ids()).collect();
    nodes.sort_unstable();
    nodes.dedup();
    let vecs = nodes.iter().map(|c| lookup(store, c)).collect::<Result<Vec<_>, _>>()?;
    let mut adjacency = vec![Vec::new(); nodes.len()];
    for i in 0..nodes.len() {
        for j in i + 1..nodes.len() {
            if cosine(vecs[i], vecs[j])? > config.threshold {
                adjacency[i].push(j);
                adjacency[j].push(i);
            }
        }
    }
    let scores = if adjacency.iter().all(Vec::is_empty) {
        vec![1.0 / nodes.len() as f64; nodes.len()]
    } else {
        pagerank(&adjacency, config)?
    };
    let items = expanded
        .iter()
        .map(|e| {
            let i = nodes.binary_search(&e.as_str()).expect("node present");
            (e.clone(), scores[i])
        })
        .collect();
    Ok(RankedList::from_scores(items))
}
