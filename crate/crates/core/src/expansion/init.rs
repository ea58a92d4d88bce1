use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::ExpansionError;
use crate::data::{CourseConceptSet, EmbeddingStore};
use crate::geometry::{build_cluster, edis, ClusterConfig, ConceptCluster, NnIndex, ThresholdMode};

/// How nearest-member lookups are answered during initialization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NnBackend {
    #[default]
    KdTree,
    LinearScan,
}

/// Result of the single-pass partition of the course concepts.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    /// The loose cluster over every course concept.
    pub h0: ConceptCluster,
    /// Potential clusters, ids 1..=L, in creation order.
    pub clusters: Vec<ConceptCluster>,
    pub threshold: f64,
}

/// Groups the course concepts into potential clusters by single-pass online
/// clustering in descending-confidence order. A concept joins the cluster of
/// its nearest already-processed concept when that distance is below the
/// threshold (coincident vectors always join); otherwise it starts a cluster.
pub fn initialize_clusters(
    concepts: &CourseConceptSet,
    store: &EmbeddingStore,
    config: &ClusterConfig,
    backend: NnBackend,
) -> Result<Partition, ExpansionError> {
    if concepts.is_empty() {
        return Err(ExpansionError::NoCourseConcepts);
    }
    let ids: Vec<String> = concepts.ids().map(str::to_string).collect();
    let h0 = build_cluster(0, &ids, store, config.tau)?;
    let threshold = match config.init_threshold {
        ThresholdMode::DerivedFromH0 => h0.merge_threshold(),
        ThresholdMode::Fixed(t) => t,
    };

    let index = match backend {
        NnBackend::KdTree => Some(NnIndex::build(
            ids.iter().map(|id| (id.clone(), store.get(id).expect("h0 built").to_vec())),
        )?),
        NnBackend::LinearScan => None,
    };

    let mut assignment: HashMap<&str, usize> = HashMap::new();
    let mut groups: Vec<Vec<String>> = Vec::new();
    for (pos, id) in ids.iter().enumerate() {
        let q = store.get(id).expect("h0 built");
        let nearest = match &index {
            Some(index) => index
                .within(q, threshold)?
                .into_iter()
                .find(|(other, _)| assignment.contains_key(other.as_str()))
                .map(|(other, _)| other),
            None => {
                let mut best: Option<(f64, &String)> = None;
                for other in &ids[..pos] {
                    let d = edis(q, store.get(other).expect("h0 built"))?;
                    if d < threshold && best.is_none_or(|(bd, bid)| (d, other) < (bd, bid)) {
                        best = Some((d, other));
                    }
                }
                best.map(|(_, other)| other.clone())
            }
        };
        // coincident vectors belong together even when the threshold is zero
        let nearest = nearest.or_else(|| {
            ids[..pos]
                .iter()
                .filter(|other| store.get(other) == Some(q))
                .min()
                .cloned()
        });
        let group = match nearest {
            Some(other) => assignment[other.as_str()],
            None => {
                groups.push(Vec::new());
                groups.len() - 1
            }
        };
        groups[group].push(id.clone());
        assignment.insert(id, group);
    }

    let clusters = groups
        .iter()
        .enumerate()
        .map(|(i, members)| build_cluster(i + 1, members, store, config.tau))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Partition {
        h0,
        clusters,
        threshold,
    })
}
