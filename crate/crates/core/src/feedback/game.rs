use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::{DeleteEvent, FeedbackError, FeedbackTally, GameBoard};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionInfo {
    pub id: String,
    pub name: String,
    /// Registration order; earlier sessions win leaderboard ties.
    pub created: u64,
}

#[derive(Debug, Clone, Default)]
pub struct SessionRegistry {
    sessions: Vec<SessionInfo>,
    index: HashMap<String, usize>,
}

impl SessionRegistry {
    pub fn from_sessions(sessions: impl IntoIterator<Item = SessionInfo>) -> Self {
        let mut reg = Self::default();
        for s in sessions {
            reg.insert(s);
        }
        reg
    }

    /// Adds a session; an id seen before keeps its first registration.
    pub fn insert(&mut self, session: SessionInfo) -> bool {
        if self.index.contains_key(&session.id) {
            return false;
        }
        self.index.insert(session.id.clone(), self.sessions.len());
        self.sessions.push(session);
        true
    }

    pub fn next_created(&self) -> u64 {
        self.sessions.iter().map(|s| s.created + 1).max().unwrap_or(0)
    }

    pub fn get(&self, id: &str) -> Option<&SessionInfo> {
        self.index.get(id).map(|&i| &self.sessions[i])
    }

    pub fn len(&self) -> usize {
        self.sessions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sessions.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeleteRequest {
    pub session: String,
    pub video: String,
    pub concept: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeleteOutcome {
    pub score: f64,
    pub cumulative: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaderboardEntry {
    pub session: String,
    pub name: String,
    pub score: f64,
    pub deletions: usize,
}

/// Live game state of one course: current boards, tallies, per-session
/// scores and the per-epoch deduplication set.
#[derive(Debug, Clone)]
pub struct CourseGame {
    pub course: String,
    pub epoch: u64,
    boards: Vec<GameBoard>,
    pub tally: FeedbackTally,
    scores: HashMap<String, Vec<f64>>,
    seen: HashSet<(u64, String, String, String)>,
}

impl CourseGame {
    pub fn new(course: impl Into<String>, epoch: u64, boards: Vec<GameBoard>) -> Self {
        let course = course.into();
        Self {
            tally: FeedbackTally::new(course.clone()),
            course,
            epoch,
            boards,
            scores: HashMap::new(),
            seen: HashSet::new(),
        }
    }

    pub fn boards(&self) -> &[GameBoard] {
        &self.boards
    }

    pub fn video_boards<'a>(&'a self, video: &'a str) -> impl Iterator<Item = &'a GameBoard> + 'a {
        self.boards.iter().filter(move |b| b.video_id == video)
    }

    /// Moves to a new epoch's boards; tallies and scores carry over.
    pub fn set_epoch(&mut self, epoch: u64, boards: Vec<GameBoard>) {
        self.epoch = epoch;
        self.boards = boards;
    }

    fn on_board(&self, video: &str, concept: &str) -> bool {
        self.video_boards(video).any(|b| b.ring.iter().any(|r| r.concept == concept))
    }

    /// Checks a deletion against the current boards without changing state.
    pub fn validate(&self, req: &DeleteRequest, sessions: &SessionRegistry) -> Result<(), FeedbackError> {
        if sessions.get(&req.session).is_none() {
            return Err(FeedbackError::UnknownSession(req.session.clone()));
        }
        if !self.on_board(&req.video, &req.concept) {
            return Err(FeedbackError::OffBoard {
                video: req.video.clone(),
                concept: req.concept.clone(),
            });
        }
        if self.seen.contains(&self.dedup_key(self.epoch, req)) {
            return Err(FeedbackError::Duplicate {
                video: req.video.clone(),
                concept: req.concept.clone(),
            });
        }
        Ok(())
    }

    fn dedup_key(&self, epoch: u64, req: &DeleteRequest) -> (u64, String, String, String) {
        (epoch, req.session.clone(), req.video.clone(), req.concept.clone())
    }

    /// Validates, scores against prior tallies, and counts the deletion.
    pub fn delete(&mut self, req: &DeleteRequest, sessions: &SessionRegistry) -> Result<DeleteOutcome, FeedbackError> {
        self.validate(req, sessions)?;
        Ok(self.apply(req, self.epoch))
    }

    fn apply(&mut self, req: &DeleteRequest, epoch: u64) -> DeleteOutcome {
        let score = self.tally.record(&req.concept);
        self.seen.insert(self.dedup_key(epoch, req));
        let events = self.scores.entry(req.session.clone()).or_default();
        events.push(score);
        DeleteOutcome {
            score,
            cumulative: events.iter().sum(),
        }
    }

    /// Re-applies a logged event. Board membership is not rechecked: the
    /// event was validated against the boards of its own epoch.
    pub fn replay(&mut self, event: &DeleteEvent) -> Result<DeleteOutcome, FeedbackError> {
        if event.course != self.course {
            return Err(FeedbackError::WrongCourse {
                expected: self.course.clone(),
                found: event.course.clone(),
            });
        }
        let req = DeleteRequest {
            session: event.session.clone(),
            video: event.video.clone(),
            concept: event.concept.clone(),
        };
        Ok(self.apply(&req, event.epoch))
    }

    pub fn event(&self, req: &DeleteRequest, ts: u64) -> DeleteEvent {
        DeleteEvent {
            ts,
            session: req.session.clone(),
            course: self.course.clone(),
            video: req.video.clone(),
            concept: req.concept.clone(),
            epoch: self.epoch,
        }
    }

    pub fn cumulative(&self, session: &str) -> f64 {
        self.scores.get(session).map_or(0.0, |s| s.iter().sum())
    }

    /// Sessions that played this course, by cumulative score descending,
    /// ties by earlier registration.
    pub fn leaderboard(&self, sessions: &SessionRegistry) -> Vec<LeaderboardEntry> {
        let mut rows: Vec<(u64, LeaderboardEntry)> = self
            .scores
            .iter()
            .map(|(id, events)| {
                let info = sessions.get(id);
                (
                    info.map_or(u64::MAX, |s| s.created),
                    LeaderboardEntry {
                        session: id.clone(),
                        name: info.map(|s| s.name.clone()).unwrap_or_default(),
                        score: events.iter().sum(),
                        deletions: events.len(),
                    },
                )
            })
            .collect();
        rows.sort_by(|a, b| {
            b.1.score
                .total_cmp(&a.1.score)
                .then(a.0.cmp(&b.0))
                .then_with(|| a.1.session.cmp(&b.1.session))
        });
        rows.into_iter().map(|r| r.1).collect()
    }
}
