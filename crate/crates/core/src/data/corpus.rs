use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{read_to_string, DataError, KnowledgeBase};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Video {
    pub video_id: String,
    pub position: u32,
    pub mentioned_concepts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Course {
    pub course_id: String,
    pub title: String,
    pub videos: Vec<Video>,
}

impl Course {
    pub fn video(&self, video_id: &str) -> Option<&Video> {
        self.videos.iter().find(|v| v.video_id == video_id)
    }
}

/// Course concepts with their extraction confidence, ordered by descending
/// confidence (ties by concept id).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CourseConceptSet {
    entries: Vec<(String, f64)>,
}

impl CourseConceptSet {
    /// Sorts the entries and rejects duplicate ids and out-of-range confidences.
    pub fn new(mut entries: Vec<(String, f64)>) -> Result<Self, DataError> {
        let mut seen = HashSet::new();
        for (id, conf) in &entries {
            if !seen.insert(id.as_str()) {
                return Err(DataError::Schema {
                    field: "course_concepts.id".into(),
                    message: format!("duplicate concept `{id}`"),
                });
            }
            if !(0.0..=1.0).contains(conf) {
                return Err(DataError::Schema {
                    field: "course_concepts.confidence".into(),
                    message: format!("confidence {conf} of `{id}` outside [0, 1]"),
                });
            }
        }
        entries.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[(String, f64)] {
        &self.entries
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(id, _)| id.as_str())
    }

    pub fn contains(&self, id: &str) -> bool {
        self.entries.iter().any(|(c, _)| c == id)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Keeps the entries accepted by `keep`, returning how many were dropped.
    pub fn retain(&mut self, mut keep: impl FnMut(&str) -> bool) -> usize {
        let before = self.entries.len();
        self.entries.retain(|(id, _)| keep(id));
        before - self.entries.len()
    }

    /// Union of several sets; a concept present in more than one keeps its
    /// highest confidence.
    pub fn merged<'a>(sets: impl IntoIterator<Item = &'a CourseConceptSet>) -> Self {
        let mut best: std::collections::BTreeMap<&str, f64> = Default::default();
        for set in sets {
            for (id, conf) in &set.entries {
                let slot = best.entry(id.as_str()).or_insert(*conf);
                if *conf > *slot {
                    *slot = *conf;
                }
            }
        }
        let entries = best.into_iter().map(|(k, v)| (k.to_string(), v)).collect();
        Self::new(entries).expect("merged entries are unique and in range")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CourseData {
    pub course: Course,
    pub concepts: CourseConceptSet,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadedCorpus {
    pub courses: Vec<CourseData>,
    /// Course concepts dropped because the knowledge base does not know them.
    pub dropped: usize,
}

impl LoadedCorpus {
    pub fn course(&self, id: &str) -> Option<&CourseData> {
        self.courses.iter().find(|c| c.course.course_id == id)
    }
}

#[derive(Deserialize)]
struct RawCorpus {
    courses: Vec<RawCourse>,
}

#[derive(Deserialize)]
struct RawCourse {
    id: String,
    #[serde(default)]
    title: String,
    videos: Vec<RawVideo>,
    course_concepts: Vec<RawConcept>,
}

#[derive(Deserialize)]
struct RawVideo {
    id: String,
    position: u32,
    #[serde(default)]
    concepts: Vec<String>,
}

#[derive(Deserialize)]
struct RawConcept {
    id: String,
    confidence: f64,
}

fn schema(field: impl Into<String>, message: impl Into<String>) -> DataError {
    DataError::Schema {
        field: field.into(),
        message: message.into(),
    }
}

fn convert_course(raw: RawCourse) -> Result<CourseData, DataError> {
    if raw.videos.is_empty() {
        return Err(schema(format!("courses[{}].videos", raw.id), "course has no videos"));
    }
    let mut ids = HashSet::new();
    let mut last_position = None;
    let mut videos = Vec::with_capacity(raw.videos.len());
    for v in raw.videos {
        if !ids.insert(v.id.clone()) {
            return Err(schema(format!("courses[{}].videos.id", raw.id), format!("duplicate video `{}`", v.id)));
        }
        if last_position.is_some_and(|p| v.position <= p) {
            return Err(schema(
                format!("courses[{}].videos.position", raw.id),
                format!("position of `{}` is not strictly increasing", v.id),
            ));
        }
        last_position = Some(v.position);
        videos.push(Video {
            video_id: v.id,
            position: v.position,
            mentioned_concepts: v.concepts,
        });
    }
    let concepts = CourseConceptSet::new(raw.course_concepts.into_iter().map(|c| (c.id, c.confidence)).collect())?;
    Ok(CourseData {
        course: Course {
            course_id: raw.id,
            title: raw.title,
            videos,
        },
        concepts,
    })
}

/// Parses a corpus document and drops course concepts unknown to `kb`.
pub fn parse_corpus(text: &str, kb: &KnowledgeBase) -> Result<LoadedCorpus, DataError> {
    let raw: RawCorpus = serde_json::from_str(text).map_err(|e| DataError::Parse {
        what: "corpus",
        line: e.line(),
        message: e.to_string(),
    })?;
    let mut dropped = 0;
    let mut courses = Vec::with_capacity(raw.courses.len());
    for rc in raw.courses {
        let mut data = convert_course(rc)?;
        let n = data.concepts.retain(|id| kb.contains(id));
        if n > 0 {
            log::warn!("course `{}`: dropped {n} course concepts missing from the knowledge base", data.course.course_id);
        }
        dropped += n;
        if data.concepts.is_empty() {
            return Err(DataError::EmptyConceptSet(data.course.course_id));
        }
        courses.push(data);
    }
    Ok(LoadedCorpus { courses, dropped })
}

pub fn load_corpus(path: &Path, kb: &KnowledgeBase) -> Result<LoadedCorpus, DataError> {
    parse_corpus(&read_to_string(path)?, kb)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Triple;

    const CORPUS: &str = r#"{"courses":[{"id":"ds","title":"Data Structures","videos":[
        {"id":"v1","position":0,"concepts":["A"]},
        {"id":"v2","position":1,"concepts":["A","B"]}],
        "course_concepts":[{"id":"B","confidence":0.7},{"id":"A","confidence":0.9}]}]}"#;

    fn kb(concepts: &[&str]) -> KnowledgeBase {
        KnowledgeBase::from_triples(concepts.iter().map(|c| Triple::new(*c, "rel", "Z")))
    }

    #[test]
    fn loads_and_orders_concepts() {
        let c = parse_corpus(CORPUS, &kb(&["A", "B"])).unwrap();
        assert_eq!(c.dropped, 0);
        assert_eq!(c.courses[0].concepts.entries(), &[("A".to_string(), 0.9), ("B".to_string(), 0.7)]);
        assert_eq!(c.courses[0].course.videos.len(), 2);
    }

    #[test]
    fn drops_concepts_missing_from_kb() {
        let c = parse_corpus(CORPUS, &kb(&["A"])).unwrap();
        assert_eq!(c.dropped, 1);
        assert_eq!(c.courses[0].concepts.entries(), &[("A".to_string(), 0.9)]);
    }

    #[test]
    fn all_missing_is_fatal() {
        let err = parse_corpus(CORPUS, &kb(&["Q"])).unwrap_err();
        assert!(matches!(err, DataError::EmptyConceptSet(ref id) if id == "ds"));
    }

    #[test]
    fn malformed_json_reports_line() {
        let err = parse_corpus("{\n\"courses\": [\n,]}", &kb(&["A"])).unwrap_err();
        assert!(matches!(err, DataError::Parse { line: 3, .. }), "{err}");
    }

    #[test]
    fn ties_break_lexicographically() {
        let set = CourseConceptSet::new(vec![("b".into(), 0.5), ("a".into(), 0.5), ("c".into(), 0.9)]).unwrap();
        let ids: Vec<_> = set.ids().collect();
        assert_eq!(ids, ["c", "a", "b"]);
    }

    #[test]
    fn rejects_non_increasing_positions() {
        let text = r#"{"courses":[{"id":"x","videos":[{"id":"v1","position":2},{"id":"v2","position":2}],
            "course_concepts":[{"id":"A","confidence":0.5}]}]}"#;
        assert!(matches!(parse_corpus(text, &kb(&["A"])), Err(DataError::Schema { .. })));
    }
}
