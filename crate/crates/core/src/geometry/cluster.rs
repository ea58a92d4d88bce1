use serde::{Deserialize, Serialize};

use super::{edis_unchecked, lookup, GeometryError, VectorLookup};

/// How the initial single-pass clustering threshold is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode", content = "value")]
pub enum ThresholdMode {
    /// The merge threshold of the all-concepts cluster H0.
    DerivedFromH0,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterConfig {
    /// Number of representative seeds per cluster.
    pub tau: usize,
    pub init_threshold: ThresholdMode,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        Self {
            tau: 8,
            init_threshold: ThresholdMode::DerivedFromH0,
        }
    }
}

/// A hypersphere over member concepts: center is the member mean, radius the
/// largest member distance from it, seeds the `tau` members nearest the center.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptCluster {
    pub id: usize,
    /// Sorted by concept id.
    pub members: Vec<String>,
    pub center: Vec<f64>,
    pub radius: f64,
    /// Ascending by distance to the center, then id.
    pub seeds: Vec<String>,
    seed_distances: Vec<f64>,
}

/// Distances equal up to rounding noise count as ties and fall back to id order.
pub(crate) fn tie_key(d: f64) -> i64 {
    (d * 1e12).round() as i64
}

/// Computes a cluster from scratch. Member order does not matter.
pub fn build_cluster<L: VectorLookup + ?Sized>(
    id: usize,
    members: &[String],
    store: &L,
    tau: usize,
) -> Result<ConceptCluster, GeometryError> {
    if members.is_empty() {
        return Err(GeometryError::EmptyCluster);
    }
    let mut sorted: Vec<String> = members.to_vec();
    sorted.sort();
    sorted.dedup();
    let vectors = sorted
        .iter()
        .map(|m| lookup(store, m))
        .collect::<Result<Vec<_>, _>>()?;
    let dim = vectors[0].len();
    if let Some(v) = vectors.iter().find(|v| v.len() != dim) {
        return Err(GeometryError::DimensionMismatch(dim, v.len()));
    }
    // mean as an offset from the first member: exact when all members coincide
    let base = vectors[0];
    let mut offset = vec![0.0; dim];
    for v in &vectors[1..] {
        offset.iter_mut().zip(v.iter().zip(base)).for_each(|(c, (x, b))| *c += x - b);
    }
    let n = sorted.len() as f64;
    let center: Vec<f64> = base.iter().zip(&offset).map(|(b, o)| b + o / n).collect();

    let mut ranked: Vec<(f64, &String)> = vectors
        .iter()
        .zip(&sorted)
        .map(|(v, m)| (edis_unchecked(&center, v), m))
        .collect();
    let radius = ranked.iter().map(|r| r.0).fold(0.0, f64::max);
    ranked.sort_by(|a, b| tie_key(a.0).cmp(&tie_key(b.0)).then_with(|| a.1.cmp(b.1)));
    ranked.truncate(tau.max(1));
    let (seed_distances, seeds) = ranked.into_iter().map(|(d, m)| (d, m.clone())).unzip();

    Ok(ConceptCluster {
        id,
        members: sorted,
        center,
        radius,
        seeds,
        seed_distances,
    })
}

impl ConceptCluster {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.members.binary_search_by(|m| m.as_str().cmp(id)).is_ok()
    }

    /// Smallest distance from the center to any seed. Zero for singletons.
    pub fn merge_threshold(&self) -> f64 {
        self.seed_distances.first().copied().unwrap_or(0.0)
    }

    pub fn seed_distances(&self) -> &[f64] {
        &self.seed_distances
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    fn store(points: &[(&str, [f64; 2])]) -> HashMap<String, Vec<f64>> {
        points.iter().map(|(k, v)| (k.to_string(), v.to_vec())).collect()
    }

    fn ids(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn three_member_cluster() {
        let s = store(&[("a", [0.0, 0.0]), ("b", [2.0, 0.0]), ("c", [0.0, 2.0])]);
        let c = build_cluster(1, &ids(&["c", "a", "b"]), &s, 8).unwrap();
        assert!((c.center[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((c.center[1] - 2.0 / 3.0).abs() < 1e-12);
        // |(4/3, -2/3)| = sqrt(20)/3
        assert!((c.radius - 20f64.sqrt() / 3.0).abs() < 1e-12);
        assert!((c.radius - 1.4907).abs() < 1e-4);
        assert_eq!(c.seeds, ids(&["a", "b", "c"]));
        // sqrt(8)/3
        assert!((c.merge_threshold() - 8f64.sqrt() / 3.0).abs() < 1e-12);
        assert!((c.merge_threshold() - 0.9428).abs() < 1e-4);
        assert!(c.merge_threshold() <= c.radius);
    }

    #[test]
    fn tau_two_breaks_ties_by_id() {
        let s = store(&[("x", [0.0, 0.0]), ("q", [2.0, 0.0]), ("p", [0.0, 2.0])]);
        let c = build_cluster(1, &ids(&["x", "q", "p"]), &s, 2).unwrap();
        assert_eq!(c.seeds, ids(&["x", "p"]));
    }

    #[test]
    fn singleton() {
        let s = store(&[("a", [0.3, 0.4])]);
        let c = build_cluster(0, &ids(&["a"]), &s, 8).unwrap();
        assert_eq!(c.center, vec![0.3, 0.4]);
        assert_eq!(c.radius, 0.0);
        assert_eq!(c.seeds, ids(&["a"]));
        assert_eq!(c.merge_threshold(), 0.0);
    }

    #[test]
    fn identical_vectors_have_zero_threshold() {
        let pts: Vec<(String, Vec<f64>)> = (0..8).map(|i| (format!("c{i}"), vec![0.6, 0.8])).collect();
        let s: HashMap<_, _> = pts.into_iter().collect();
        let members: Vec<String> = s.keys().cloned().collect();
        let c = build_cluster(0, &members, &s, 8).unwrap();
        assert_eq!(c.merge_threshold(), 0.0);
    }

    #[test]
    fn errors() {
        let s = store(&[("a", [0.0, 0.0])]);
        assert_eq!(build_cluster(0, &[], &s, 8), Err(GeometryError::EmptyCluster));
        assert_eq!(
            build_cluster(0, &ids(&["a", "zz"]), &s, 8),
            Err(GeometryError::Unembedded("zz".into()))
        );
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn permutation_invariant_and_threshold_below_radius(
                pts in prop::collection::vec(prop::array::uniform3(-3.0f64..3.0), 1..12),
                shuffle_seed in any::<u64>(),
                tau in 1usize..6,
            ) {
                let s: HashMap<String, Vec<f64>> =
                    pts.iter().enumerate().map(|(i, p)| (format!("m{i:02}"), p.to_vec())).collect();
                let mut members: Vec<String> = s.keys().cloned().collect();
                members.sort();
                let a = build_cluster(0, &members, &s, tau).unwrap();
                let mut shuffled = members.clone();
                let n = shuffled.len();
                for i in 0..n {
                    let j = ((shuffle_seed >> (i % 32)) as usize + i * 7) % n;
                    shuffled.swap(i, j);
                }
                let b = build_cluster(0, &shuffled, &s, tau).unwrap();
                prop_assert_eq!(&a, &b);
                prop_assert!(a.merge_threshold() <= a.radius);
                prop_assert_eq!(a.seeds.len(), tau.min(n));
            }
        }
    }
}
