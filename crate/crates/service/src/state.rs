//! Game and pipeline state behind the HTTP routes, with its on-disk layout:
//!
//! ```text
//! <state_dir>/sessions.jsonl                      registered sessions
//! <state_dir>/events.jsonl                        every accepted deletion
//! <state_dir>/courses/<course>/encoder.json       path encoder of the course
//! <state_dir>/courses/<course>/epochs/<n>.json    ranking and boards of epoch n
//! <state_dir>/courses/<course>/tally.json         tally snapshot at the last optimization
//! ```
//!
//! The event log is authoritative: on start the latest epoch of each course
//! is loaded and all events are replayed on top of it.

use std::collections::{BTreeMap, HashSet};
use std::fs::{File, OpenOptions};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, MutexGuard};
use std::time::{SystemTime, UNIX_EPOCH};

use conexp::classify::Classifier;
use conexp::data::{Course, CourseConceptSet, Dataset};
use conexp::features::{DefaultPrerequisiteScorer, PathEncoder};
use conexp::feedback::{
    append_jsonl, build_boards, read_jsonl, CourseGame, DeleteOutcome, DeleteRequest, EventLog, FeedbackError,
    FeedbackTally, GameBoard, SessionInfo, SessionRegistry,
};
use conexp::pipeline::{
    optimize_iteration, run_pipeline, train_path_encoder, ClassifierUse, Inputs, LabelSet, PipelineConfig,
    PipelineError, RankChange, RankedCandidate,
};
use rand::RngCore;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("unknown course `{0}`")]
    UnknownCourse(String),
    #[error("unknown video `{0}`")]
    UnknownVideo(String),
    #[error("unknown session `{0}`")]
    UnknownSession(String),
    #[error("`{concept}` is not on a current board of video `{video}`")]
    OffBoard { video: String, concept: String },
    #[error("`{concept}` was already deleted on video `{video}` by this session in this epoch")]
    Duplicate { video: String, concept: String },
    #[error("no deletions recorded for course `{0}`")]
    NoFeedback(String),
    #[error("an optimization of course `{0}` is already running")]
    Busy(String),
    #[error("{0}")]
    BadRequest(String),
    #[error("{0}")]
    Internal(String),
}

impl From<FeedbackError> for ServiceError {
    fn from(e: FeedbackError) -> Self {
        match e {
            FeedbackError::UnknownSession(s) => ServiceError::UnknownSession(s),
            FeedbackError::UnknownVideo(v) => ServiceError::UnknownVideo(v),
            FeedbackError::OffBoard { video, concept } => ServiceError::OffBoard { video, concept },
            FeedbackError::Duplicate { video, concept } => ServiceError::Duplicate { video, concept },
            other => ServiceError::Internal(other.to_string()),
        }
    }
}

fn internal(e: impl std::fmt::Display) -> ServiceError {
    ServiceError::Internal(e.to_string())
}

fn now_ms() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis() as u64)
}

/// Display form of a concept id.
pub fn display_label(id: &str) -> String {
    id.replace('_', " ")
}

/// Directory name for a course id; ids outside `[A-Za-z0-9_.-]` are hex-encoded.
fn course_dir_name(id: &str) -> String {
    let safe = !id.is_empty()
        && !id.starts_with('.')
        && id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'));
    if safe {
        id.to_string()
    } else {
        format!("x{}", hex::encode(id))
    }
}

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub state_dir: PathBuf,
    pub pipeline: PipelineConfig,
    /// Origin allowed by CORS; any origin when unset.
    pub cors_origin: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub course: String,
    pub epoch: u64,
    pub created_ms: u64,
    pub ranking: Vec<RankedCandidate>,
    pub boards: Vec<GameBoard>,
    #[serde(default)]
    pub changes: Vec<RankChange>,
}

impl EpochRecord {
    fn ids(&self) -> Vec<String> {
        self.ranking.iter().map(|r| r.concept.clone()).collect()
    }
}

/// Parts of a course that never change while serving.
struct CourseStatic {
    course: Course,
    concepts: CourseConceptSet,
    scorer: DefaultPrerequisiteScorer,
    encoder: PathEncoder,
    dir: PathBuf,
}

struct CourseLive {
    current: EpochRecord,
    game: CourseGame,
}

struct CourseEntry {
    fixed: Arc<CourseStatic>,
    live: Mutex<CourseLive>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CourseSummary {
    pub id: String,
    pub title: String,
    pub epoch: u64,
    pub videos: usize,
    pub candidates: usize,
    pub deletions: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptRef {
    pub id: String,
    pub label: String,
}

impl ConceptRef {
    fn new(id: &str) -> Self {
        Self {
            id: id.to_string(),
            label: display_label(id),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoardView {
    pub center: ConceptRef,
    pub ring: Vec<ConceptRef>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoBoards {
    pub course: String,
    pub video: String,
    pub epoch: u64,
    pub boards: Vec<BoardView>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeletePayload {
    pub session: String,
    pub course: String,
    pub video: String,
    pub concept: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaderboardRow {
    pub rank: usize,
    pub session: String,
    pub name: String,
    pub score: f64,
    pub deletions: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeSummary {
    pub course: String,
    pub old_epoch: u64,
    pub new_epoch: u64,
    pub candidates: usize,
    /// Concepts whose rank changed, in new-list order.
    pub moved: Vec<RankChange>,
}

pub struct AppState {
    data: Arc<Dataset>,
    config: ServiceConfig,
    labels: Option<LabelSet>,
    classifier: Option<Classifier>,
    courses: BTreeMap<String, CourseEntry>,
    sessions: Mutex<(SessionRegistry, File)>,
    events: Mutex<EventLog>,
    optimizing: Arc<Mutex<HashSet<String>>>,
}

fn lock<T>(m: &Mutex<T>) -> MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
}

fn classifier_use<'a>(labels: Option<&'a LabelSet>, classifier: Option<&'a Classifier>) -> ClassifierUse<'a> {
    match (labels, classifier) {
        (Some(l), _) => ClassifierUse::Train(l),
        (None, Some(c)) => ClassifierUse::Apply(c),
        (None, None) => ClassifierUse::Skip,
    }
}

/// Runs with the configured classifier step and falls back to the
/// unclassified ranking when training is impossible on this course (for
/// instance a single labeled class among its candidates).
fn run_with_fallback<T>(
    run: impl Fn(ClassifierUse<'_>) -> Result<T, PipelineError>,
    with: ClassifierUse<'_>,
    course: &str,
) -> Result<T, PipelineError> {
    match run(with) {
        Err(PipelineError::Classify(e)) if !matches!(with, ClassifierUse::Skip) => {
            log::warn!("course `{course}`: classification skipped: {e}");
            run(ClassifierUse::Skip)
        }
        other => other,
    }
}

impl AppState {
    /// Loads or creates the state under `config.state_dir` and replays the event log.
    pub fn open(
        data: Arc<Dataset>,
        config: ServiceConfig,
        labels: Option<LabelSet>,
        classifier: Option<Classifier>,
    ) -> Result<Self, ServiceError> {
        std::fs::create_dir_all(&config.state_dir).map_err(internal)?;
        let mut courses = BTreeMap::new();
        for cd in &data.corpus.courses {
            let id = cd.course.course_id.clone();
            let dir = config.state_dir.join("courses").join(course_dir_name(&id));
            let entry = Self::open_course(&data, &config, labels.as_ref(), classifier.as_ref(), cd, dir)?;
            courses.insert(id, entry);
        }

        let sessions_path = config.state_dir.join("sessions.jsonl");
        let registry = SessionRegistry::from_sessions(read_jsonl::<SessionInfo>(&sessions_path).map_err(internal)?);
        let sessions_file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&sessions_path)
            .map_err(internal)?;

        let events = EventLog::open(config.state_dir.join("events.jsonl")).map_err(internal)?;
        let mut replayed = 0usize;
        for event in events.read().map_err(internal)? {
            match courses.get(&event.course) {
                Some(entry) => {
                    lock(&entry.live).game.replay(&event).map_err(internal)?;
                    replayed += 1;
                }
                None => log::warn!("event for unknown course `{}` ignored", event.course),
            }
        }
        log::info!("replayed {replayed} deletion events across {} courses", courses.len());

        Ok(Self {
            data,
            config,
            labels,
            classifier,
            courses,
            sessions: Mutex::new((registry, sessions_file)),
            events: Mutex::new(events),
            optimizing: Arc::new(Mutex::new(HashSet::new())),
        })
    }

    fn open_course(
        data: &Dataset,
        config: &ServiceConfig,
        labels: Option<&LabelSet>,
        classifier: Option<&Classifier>,
        cd: &conexp::data::CourseData,
        dir: PathBuf,
    ) -> Result<CourseEntry, ServiceError> {
        let id = &cd.course.course_id;
        std::fs::create_dir_all(dir.join("epochs")).map_err(internal)?;
        let scorer = DefaultPrerequisiteScorer::build(std::slice::from_ref(&cd.course), &cd.concepts, &data.store);
        let inputs = Inputs {
            concepts: &cd.concepts,
            kb: &data.kb,
            store: &data.store,
            scorer: &scorer,
        };
        let pipeline = &config.pipeline;
        let encoder_path = dir.join("encoder.json");
        let encoder = if encoder_path.exists() {
            PathEncoder::load(&encoder_path).map_err(internal)?
        } else {
            let generation = conexp::expansion::run_generation(&cd.concepts, &data.kb, &data.store, &pipeline.generation, None)
                .map_err(internal)?;
            let encoder = train_path_encoder(&generation, &pipeline.encoder, None).map_err(internal)?;
            encoder.save(&encoder_path).map_err(internal)?;
            encoder
        };

        let current = match latest_epoch(&dir.join("epochs"))? {
            Some(record) => record,
            None => {
                let run = run_with_fallback(
                    |with| run_pipeline(inputs, pipeline, &encoder, with, None),
                    classifier_use(labels, classifier),
                    id,
                )
                .map_err(internal)?;
                let ids = run.expanded_ids();
                let record = EpochRecord {
                    course: id.clone(),
                    epoch: 0,
                    created_ms: now_ms(),
                    ranking: run.ranking,
                    boards: build_boards(&cd.course, &cd.concepts, &ids, &data.store, pipeline.board_size),
                    changes: Vec::new(),
                };
                write_epoch(&dir, &record)?;
                record
            }
        };
        let game = CourseGame::new(id.clone(), current.epoch, current.boards.clone());
        Ok(CourseEntry {
            fixed: Arc::new(CourseStatic {
                course: cd.course.clone(),
                concepts: cd.concepts.clone(),
                scorer,
                encoder,
                dir,
            }),
            live: Mutex::new(CourseLive { current, game }),
        })
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.config
    }

    fn course(&self, id: &str) -> Result<&CourseEntry, ServiceError> {
        self.courses.get(id).ok_or_else(|| ServiceError::UnknownCourse(id.to_string()))
    }

    pub fn courses(&self) -> Vec<CourseSummary> {
        self.courses
            .iter()
            .map(|(id, entry)| {
                let live = lock(&entry.live);
                CourseSummary {
                    id: id.clone(),
                    title: entry.fixed.course.title.clone(),
                    epoch: live.current.epoch,
                    videos: entry.fixed.course.videos.len(),
                    candidates: live.current.ranking.len(),
                    deletions: live.game.tally.total(),
                }
            })
            .collect()
    }

    pub fn boards(&self, course: &str, video: &str) -> Result<VideoBoards, ServiceError> {
        let entry = self.course(course)?;
        if entry.fixed.course.video(video).is_none() {
            return Err(ServiceError::UnknownVideo(video.to_string()));
        }
        let live = lock(&entry.live);
        Ok(VideoBoards {
            course: course.to_string(),
            video: video.to_string(),
            epoch: live.current.epoch,
            boards: live
                .game
                .video_boards(video)
                .map(|b| BoardView {
                    center: ConceptRef::new(&b.center),
                    ring: b.ring.iter().map(|r| ConceptRef::new(&r.concept)).collect(),
                })
                .collect(),
        })
    }

    pub fn create_session(&self, name: &str) -> Result<SessionInfo, ServiceError> {
        let name = name.trim();
        if name.is_empty() {
            return Err(ServiceError::BadRequest("session name must not be empty".into()));
        }
        let mut bytes = [0u8; 16];
        rand::rng().fill_bytes(&mut bytes);
        let mut guard = lock(&self.sessions);
        let (registry, file) = &mut *guard;
        let info = SessionInfo {
            id: hex::encode(bytes),
            name: name.to_string(),
            created: registry.next_created(),
        };
        append_jsonl(file, &info).map_err(internal)?;
        registry.insert(info.clone());
        Ok(info)
    }

    /// Validates, logs durably, then applies a deletion.
    pub fn delete(&self, payload: &DeletePayload) -> Result<DeleteOutcome, ServiceError> {
        let entry = self.course(&payload.course)?;
        if entry.fixed.course.video(&payload.video).is_none() {
            return Err(ServiceError::UnknownVideo(payload.video.clone()));
        }
        let req = DeleteRequest {
            session: payload.session.clone(),
            video: payload.video.clone(),
            concept: payload.concept.clone(),
        };
        let sessions = lock(&self.sessions);
        let mut live = lock(&entry.live);
        live.game.validate(&req, &sessions.0)?;
        let event = live.game.event(&req, now_ms());
        lock(&self.events).append(&event).map_err(internal)?;
        Ok(live.game.delete(&req, &sessions.0)?)
    }

    pub fn leaderboard(&self, course: &str) -> Result<Vec<LeaderboardRow>, ServiceError> {
        let entry = self.course(course)?;
        let sessions = lock(&self.sessions);
        let live = lock(&entry.live);
        Ok(live
            .game
            .leaderboard(&sessions.0)
            .into_iter()
            .enumerate()
            .map(|(i, e)| LeaderboardRow {
                rank: i + 1,
                session: e.session,
                name: e.name,
                score: e.score,
                deletions: e.deletions,
            })
            .collect())
    }

    pub fn tally(&self, course: &str) -> Result<FeedbackTally, ServiceError> {
        Ok(lock(&self.course(course)?.live).game.tally.clone())
    }

    pub fn current_epoch(&self, course: &str) -> Result<EpochRecord, ServiceError> {
        Ok(lock(&self.course(course)?.live).current.clone())
    }

    /// Claims the per-course optimization slot; released when the guard drops.
    pub fn begin_optimize(&self, course: &str) -> Result<OptimizeGuard, ServiceError> {
        let entry = self.course(course)?;
        if lock(&entry.live).game.tally.is_empty() {
            return Err(ServiceError::NoFeedback(course.to_string()));
        }
        if !lock(&self.optimizing).insert(course.to_string()) {
            return Err(ServiceError::Busy(course.to_string()));
        }
        Ok(OptimizeGuard {
            slots: Arc::clone(&self.optimizing),
            course: course.to_string(),
        })
    }

    /// Runs one optimization iteration. Games continue on the old epoch
    /// until the new one is swapped in.
    pub fn optimize(&self, guard: OptimizeGuard) -> Result<OptimizeSummary, ServiceError> {
        let entry = self.course(&guard.course)?;
        let fixed = Arc::clone(&entry.fixed);
        let (current, tally) = {
            let live = lock(&entry.live);
            (live.current.clone(), live.game.tally.clone())
        };
        let inputs = Inputs {
            concepts: &fixed.concepts,
            kb: &self.data.kb,
            store: &self.data.store,
            scorer: &fixed.scorer,
        };
        let ids = current.ids();
        let outcome = run_with_fallback(
            |with| {
                optimize_iteration(
                    inputs,
                    &self.config.pipeline,
                    &fixed.encoder,
                    with,
                    &tally,
                    &ids,
                    Some(&fixed.course),
                )
            },
            classifier_use(self.labels.as_ref(), self.classifier.as_ref()),
            &guard.course,
        );
        let outcome = match outcome {
            Ok(o) => o,
            Err(PipelineError::NoFeedback) => return Err(ServiceError::NoFeedback(guard.course.clone())),
            Err(e) => return Err(internal(e)),
        };
        let (ranking, boards, changes) = (outcome.run.ranking, outcome.boards, outcome.changes);
        let record = EpochRecord {
            course: guard.course.clone(),
            epoch: current.epoch + 1,
            created_ms: now_ms(),
            ranking,
            boards,
            changes,
        };
        write_epoch(&fixed.dir, &record)?;
        let snapshot = serde_json::to_string_pretty(&tally).map_err(internal)?;
        std::fs::write(fixed.dir.join("tally.json"), snapshot).map_err(internal)?;

        let summary = OptimizeSummary {
            course: guard.course.clone(),
            old_epoch: current.epoch,
            new_epoch: record.epoch,
            candidates: record.ranking.len(),
            moved: record
                .changes
                .iter()
                .filter(|c| c.old_rank != c.new_rank)
                .cloned()
                .collect(),
        };
        let mut live = lock(&entry.live);
        live.game.set_epoch(record.epoch, record.boards.clone());
        live.current = record;
        Ok(summary)
    }
}

pub struct OptimizeGuard {
    slots: Arc<Mutex<HashSet<String>>>,
    course: String,
}

impl Drop for OptimizeGuard {
    fn drop(&mut self) {
        lock(&self.slots).remove(&self.course);
    }
}

fn write_epoch(dir: &Path, record: &EpochRecord) -> Result<(), ServiceError> {
    let path = dir.join("epochs").join(format!("{}.json", record.epoch));
    let text = serde_json::to_string_pretty(record).map_err(internal)?;
    let tmp = path.with_extension("json.tmp");
    std::fs::write(&tmp, text).map_err(internal)?;
    std::fs::rename(&tmp, &path).map_err(internal)
}

fn latest_epoch(dir: &Path) -> Result<Option<EpochRecord>, ServiceError> {
    let mut best: Option<u64> = None;
    for entry in std::fs::read_dir(dir).map_err(internal)? {
        let name = entry.map_err(internal)?.file_name();
        let name = name.to_string_lossy();
        if let Some(n) = name.strip_suffix(".json").and_then(|s| s.parse::<u64>().ok()) {
            best = best.max(Some(n));
        }
    }
    let Some(n) = best else { return Ok(None) };
    let text = std::fs::read_to_string(dir.join(format!("{n}.json"))).map_err(internal)?;
    serde_json::from_str(&text).map(Some).map_err(internal)
}
