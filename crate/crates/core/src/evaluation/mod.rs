//! Ranking metrics, baseline rankers and parameter sweeps.

mod pagerank;

pub use pagerank::{baseline_pr, pagerank, PrConfig};

use std::collections::HashMap;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{CourseConceptSet, EmbeddingStore};
use crate::feedback::FeedbackTally;
use crate::geometry::{cosine, lookup, GeometryError};

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("empty ranked list")]
    EmptyList,
    #[error("no ranked lists")]
    NoLists,
    #[error("no deletions recorded for the ranked concepts")]
    NoDeletions,
    #[error("n = {n} exceeds list length {len}")]
    CutoffTooLarge { n: usize, len: usize },
    #[error("need at least two concepts, got {0}")]
    TooFewConcepts(usize),
    #[error("damping {0} outside (0, 1)")]
    InvalidDamping(f64),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Concept ids in rank order with their scores.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RankedList {
    pub items: Vec<(String, f64)>,
}

impl RankedList {
    /// Sorts by score descending, ties by id.
    pub fn from_scores(mut items: Vec<(String, f64)>) -> Self {
        items.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        Self { items }
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.items.iter().map(|(id, _)| id.as_str())
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Relevance flags of the labeled items, in rank order; unlabeled items are dropped.
    pub fn relevance(&self, labels: &HashMap<String, bool>) -> Vec<bool> {
        self.ids().filter_map(|id| labels.get(id).copied()).collect()
    }
}

/// Mean over relevant ranks `i` of precision at `i`; 0 when nothing is relevant.
pub fn average_precision(relevance: &[bool]) -> Result<f64, EvalError> {
    if relevance.is_empty() {
        return Err(EvalError::EmptyList);
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (i, &rel) in relevance.iter().enumerate() {
        if rel {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    Ok(if hits == 0 { 0.0 } else { sum / hits as f64 })
}

/// Unweighted mean of per-list average precision.
pub fn mean_average_precision<L: AsRef<[bool]>>(lists: &[L]) -> Result<f64, EvalError> {
    if lists.is_empty() {
        return Err(EvalError::NoLists);
    }
    let total = lists
        .iter()
        .map(|l| average_precision(l.as_ref()))
        .sum::<Result<f64, _>>()?;
    Ok(total / lists.len() as f64)
}

/// Share of all deletions of the ranked concepts that hit the top `n`.
pub fn correction_rate<'a>(
    ranked: impl IntoIterator<Item = &'a str>,
    tally: &FeedbackTally,
    n: usize,
) -> Result<f64, EvalError> {
    let counts: Vec<u64> = ranked.into_iter().map(|e| tally.count(e)).collect();
    if n > counts.len() {
        return Err(EvalError::CutoffTooLarge { n, len: counts.len() });
    }
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(EvalError::NoDeletions);
    }
    Ok(counts[..n].iter().sum::<u64>() as f64 / total as f64)
}

/// Scores each candidate by its mean cosine to the course concepts.
pub fn baseline_ebm(
    expanded: &[String],
    concepts: &CourseConceptSet,
    store: &EmbeddingStore,
) -> Result<RankedList, EvalError> {
    let centers = concepts.ids().map(|c| lookup(store, c)).collect::<Result<Vec<_>, _>>()?;
    let items = expanded
        .iter()
        .map(|e| {
            let v = lookup(store, e)?;
            let sum = centers.iter().map(|c| cosine(v, c)).sum::<Result<f64, _>>()?;
            Ok((e.clone(), sum / centers.len().max(1) as f64))
        })
        .collect::<Result<Vec<_>, EvalError>>()?;
    Ok(RankedList::from_scores(items))
}

/// Mean cosine over all unordered pairs of `ids`.
pub fn avg_pairwise_similarity<'a>(
    ids: impl IntoIterator<Item = &'a str>,
    store: &EmbeddingStore,
) -> Result<f64, EvalError> {
    let vecs = ids.into_iter().map(|c| lookup(store, c)).collect::<Result<Vec<_>, _>>()?;
    if vecs.len() < 2 {
        return Err(EvalError::TooFewConcepts(vecs.len()));
    }
    let mut sum = 0.0;
    let mut pairs = 0usize;
    for i in 0..vecs.len() {
        for j in i + 1..vecs.len() {
            sum += cosine(vecs[i], vecs[j])?;
            pairs += 1;
        }
    }
    Ok(sum / pairs as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub param: String,
    pub value: f64,
    pub map: f64,
}

/// CSV `param,value,map`.
pub fn write_sweep_csv<W: Write>(w: W, points: &[SweepPoint]) -> std::io::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["param", "value", "map"])?;
    for p in points {
        out.write_record([p.param.clone(), p.value.to_string(), p.map.to_string()])?;
    }
    out.flush()
}
