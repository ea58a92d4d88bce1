//! Game-side feedback: boards shown per video, deletion tallies, the
//! group-vote score of each deletion and the resulting deletion ratios.

mod game;
mod events;

pub use game::{CourseGame, DeleteOutcome, DeleteRequest, LeaderboardEntry, SessionInfo, SessionRegistry};
pub use events::{append_jsonl, read_jsonl, DeleteEvent, EventLog};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{Course, CourseConceptSet, EmbeddingStore};
use crate::expansion::DeletionRatios;
use crate::geometry::cosine;

#[derive(Debug, Error, PartialEq)]
pub enum FeedbackError {
    #[error("unknown session `{0}`")]
    UnknownSession(String),
    #[error("unknown video `{0}`")]
    UnknownVideo(String),
    #[error("`{concept}` is not on a current board of video `{video}`")]
    OffBoard { video: String, concept: String },
    #[error("session already deleted `{concept}` on video `{video}` this epoch")]
    Duplicate { video: String, concept: String },
    #[error("event for course `{found}` replayed into `{expected}`")]
    WrongCourse { expected: String, found: String },
    #[error("{0}")]
    Io(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RingItem {
    pub concept: String,
    pub cosine: f64,
}

/// One course concept of a video (the center) with the expanded concepts
/// closest to it (the ring).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameBoard {
    pub video_id: String,
    pub center: String,
    pub ring: Vec<RingItem>,
}

/// For each video and each course concept it mentions, the `k` candidates
/// of `expanded` with the highest cosine to that concept (ties by id).
/// Unembedded centers are skipped with a warning; unembedded candidates
/// never appear on a ring.
pub fn build_boards(
    course: &Course,
    concepts: &CourseConceptSet,
    expanded: &[String],
    store: &EmbeddingStore,
    k: usize,
) -> Vec<GameBoard> {
    let mut boards = Vec::new();
    for video in &course.videos {
        for center in video.mentioned_concepts.iter().filter(|c| concepts.contains(c)) {
            let Some(cv) = store.get(center) else {
                log::warn!("board for `{center}` in video `{}` skipped: no embedding", video.video_id);
                continue;
            };
            let mut ring: Vec<RingItem> = expanded
                .iter()
                .filter_map(|e| {
                    let ev = store.get(e)?;
                    Some(RingItem {
                        concept: e.clone(),
                        cosine: cosine(ev, cv).ok()?,
                    })
                })
                .collect();
            ring.sort_by(|a, b| b.cosine.total_cmp(&a.cosine).then_with(|| a.concept.cmp(&b.concept)));
            ring.truncate(k);
            boards.push(GameBoard {
                video_id: video.video_id.clone(),
                center: center.clone(),
                ring,
            });
        }
    }
    boards
}

/// `(prior / max_prior - 0.5) * 10`, or 0 before any deletion in the course.
pub fn q_score(prior: u64, max_prior: u64) -> f64 {
    if max_prior == 0 {
        0.0
    } else {
        (prior as f64 / max_prior as f64 - 0.5) * 10.0
    }
}

/// Per-course deletion counts.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FeedbackTally {
    pub course: String,
    pub del: BTreeMap<String, u64>,
}

impl FeedbackTally {
    pub fn new(course: impl Into<String>) -> Self {
        Self {
            course: course.into(),
            del: BTreeMap::new(),
        }
    }

    pub fn count(&self, concept: &str) -> u64 {
        self.del.get(concept).copied().unwrap_or(0)
    }

    pub fn max(&self) -> u64 {
        self.del.values().copied().max().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.del.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.total() == 0
    }

    /// Score of deleting `concept` now, from the counts before this deletion.
    pub fn q_for(&self, concept: &str) -> f64 {
        q_score(self.count(concept), self.max())
    }

    /// Scores the deletion, then counts it.
    pub fn record(&mut self, concept: &str) -> f64 {
        let q = self.q_for(concept);
        *self.del.entry(concept.to_string()).or_insert(0) += 1;
        q
    }

    /// `del(e) / max over expanded of del`, all 0 when nothing in `expanded`
    /// was deleted.
    pub fn deletion_ratios<'a>(&self, expanded: impl IntoIterator<Item = &'a str>) -> DeletionRatios {
        let ids: Vec<&str> = expanded.into_iter().collect();
        let max = ids.iter().map(|e| self.count(e)).max().unwrap_or(0);
        ids.into_iter()
            .map(|e| {
                let dr = if max == 0 { 0.0 } else { self.count(e) as f64 / max as f64 };
                (e.to_string(), dr)
            })
            .collect()
    }
}
