use std::collections::HashMap;

use crate::data::{Course, CourseConceptSet, EmbeddingStore};
use crate::geometry::cosine;

/// Pairwise prerequisite likelihood `Pv(a, b)` in [0, 1] between course concepts.
pub trait PrerequisiteScorer {
    fn pv(&self, a: &str, b: &str) -> f64;
}

/// Text-only default: `Pv(a, b) = 0.5 * max(cos(a, b), 0) + 0.5 * precedence(a, b)`,
/// where precedence is the fraction of videos mentioning `b` that come before
/// the first video (of the same course) mentioning `a`. Cached over all
/// course-concept pairs; `Pv(c, c) = 0`.
#[derive(Debug, Clone, Default)]
pub struct DefaultPrerequisiteScorer {
    cache: HashMap<(String, String), f64>,
}

fn precedence(courses: &[Course], a: &str, b: &str) -> f64 {
    let mut mentions_b = 0usize;
    let mut before = 0usize;
    for course in courses {
        let first_a = course
            .videos
            .iter()
            .filter(|v| v.mentioned_concepts.iter().any(|c| c == a))
            .map(|v| v.position)
            .min();
        for v in course.videos.iter().filter(|v| v.mentioned_concepts.iter().any(|c| c == b)) {
            mentions_b += 1;
            if first_a.is_some_and(|p| v.position < p) {
                before += 1;
            }
        }
    }
    if mentions_b == 0 {
        0.0
    } else {
        before as f64 / mentions_b as f64
    }
}

impl DefaultPrerequisiteScorer {
    pub fn build(courses: &[Course], concepts: &CourseConceptSet, store: &EmbeddingStore) -> Self {
        let ids: Vec<&str> = concepts.ids().collect();
        let mut cache = HashMap::with_capacity(ids.len() * ids.len());
        for &a in &ids {
            for &b in &ids {
                if a == b {
                    continue;
                }
                let sim = match (store.get(a), store.get(b)) {
                    (Some(u), Some(v)) => cosine(u, v).unwrap_or(0.0).max(0.0),
                    _ => 0.0,
                };
                let value = 0.5 * sim + 0.5 * precedence(courses, a, b);
                cache.insert((a.to_string(), b.to_string()), value);
            }
        }
        Self { cache }
    }
}

impl PrerequisiteScorer for DefaultPrerequisiteScorer {
    fn pv(&self, a: &str, b: &str) -> f64 {
        self.cache.get(&(a.to_string(), b.to_string())).copied().unwrap_or(0.0)
    }
}

/// Fixed table of pair scores; unlisted pairs score 0.
#[derive(Debug, Clone, Default)]
pub struct TablePrerequisiteScorer(pub HashMap<(String, String), f64>);

impl PrerequisiteScorer for TablePrerequisiteScorer {
    fn pv(&self, a: &str, b: &str) -> f64 {
        if a == b {
            return 0.0;
        }
        self.0.get(&(a.to_string(), b.to_string())).copied().unwrap_or(0.0)
    }
}
