//! Per-candidate feature vectors: confidence score, search-path code,
//! prerequisite feature and deletion ratio.

mod encoder;
mod gru;
mod prereq;

pub use encoder::{train_encoder, EncoderConfig, PathEncoder, TrainingReport};
pub use prereq::{DefaultPrerequisiteScorer, PrerequisiteScorer, TablePrerequisiteScorer};

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{CourseConceptSet, EmbeddingStore};
use crate::expansion::{Candidate, DeletionRatios};
use crate::geometry::{cosine, GeometryError};

#[derive(Debug, Error, PartialEq)]
pub enum FeatureError {
    #[error("cannot train an encoder on an empty corpus")]
    EmptyCorpus,
    #[error("empty path")]
    EmptyPath,
    #[error("candidate `{0}` has no course-concept root")]
    MissingRoot(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("encoder checkpoint: {0}")]
    Checkpoint(String),
}

/// Named column groups, used to mask features out in ablations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureGroup {
    Score,
    PathCode,
    Prerequisite,
    DeletionRatio,
}

impl FeatureGroup {
    pub const ALL: [FeatureGroup; 4] = [
        FeatureGroup::Score,
        FeatureGroup::PathCode,
        FeatureGroup::Prerequisite,
        FeatureGroup::DeletionRatio,
    ];

    /// Column range of this group in a row of width `3 + code_width`.
    pub fn columns(self, code_width: usize) -> std::ops::Range<usize> {
        match self {
            FeatureGroup::Score => 0..1,
            FeatureGroup::PathCode => 1..1 + code_width,
            FeatureGroup::Prerequisite => 1 + code_width..2 + code_width,
            FeatureGroup::DeletionRatio => 2 + code_width..3 + code_width,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub score: f64,
    pub path_code: Vec<f64>,
    pub prereq: f64,
    pub deletion_ratio: f64,
}

impl FeatureVector {
    /// `[score, code..., prereq, deletion_ratio]`
    pub fn to_row(&self) -> Vec<f64> {
        let mut row = Vec::with_capacity(self.width());
        row.push(self.score);
        row.extend_from_slice(&self.path_code);
        row.push(self.prereq);
        row.push(self.deletion_ratio);
        row
    }

    pub fn width(&self) -> usize {
        3 + self.path_code.len()
    }
}

/// `Pf(e) = cos(e, root) * sum_{c in M} Pv(root, c) / |M|`.
pub fn prereq_feature(
    candidate: &Candidate,
    concepts: &CourseConceptSet,
    store: &EmbeddingStore,
    scorer: &dyn PrerequisiteScorer,
) -> Result<f64, FeatureError> {
    let root = candidate.root();
    if root.is_empty() || !concepts.contains(root) {
        return Err(FeatureError::MissingRoot(candidate.concept.clone()));
    }
    let e = store
        .get(&candidate.concept)
        .ok_or_else(|| GeometryError::Unembedded(candidate.concept.clone()))?;
    let r = store.get(root).ok_or_else(|| GeometryError::Unembedded(root.to_string()))?;
    let total: f64 = concepts.ids().map(|c| scorer.pv(root, c)).sum();
    Ok(cosine(e, r)? * total / concepts.len() as f64)
}

/// Everything needed to turn candidates into feature rows.
pub struct FeatureContext<'a> {
    pub concepts: &'a CourseConceptSet,
    pub store: &'a EmbeddingStore,
    pub encoder: &'a PathEncoder,
    pub scorer: &'a dyn PrerequisiteScorer,
}

impl FeatureContext<'_> {
    pub fn features(&self, candidate: &Candidate, ratios: Option<&DeletionRatios>) -> Result<FeatureVector, FeatureError> {
        Ok(FeatureVector {
            score: candidate.score,
            path_code: self.encoder.encode_path(&candidate.path)?,
            prereq: prereq_feature(candidate, self.concepts, self.store, self.scorer)?,
            deletion_ratio: ratios
                .and_then(|r| r.get(&candidate.concept))
                .copied()
                .unwrap_or(0.0),
        })
    }

    /// One entry per candidate, in input order; a failing candidate yields
    /// an error entry and the rest of the batch continues.
    pub fn assemble(
        &self,
        candidates: &[Candidate],
        ratios: Option<&DeletionRatios>,
    ) -> Vec<Result<FeatureVector, FeatureError>> {
        candidates.iter().map(|c| self.features(c, ratios)).collect()
    }
}

/// CSV with header `id,score,path_0..path_{d-1},prereq,deletion_ratio`.
pub fn write_feature_csv<W: Write>(w: W, rows: &[(String, FeatureVector)]) -> std::io::Result<()> {
    let width = rows.first().map_or(0, |r| r.1.path_code.len());
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["id".to_string(), "score".to_string()];
    header.extend((0..width).map(|i| format!("path_{i}")));
    header.push("prereq".into());
    header.push("deletion_ratio".into());
    out.write_record(&header)?;
    for (id, fv) in rows {
        let mut rec = vec![id.clone()];
        rec.extend(fv.to_row().iter().map(|v| v.to_string()));
        out.write_record(&rec)?;
    }
    out.flush()
}

pub fn read_feature_csv<R: std::io::Read>(r: R) -> Result<Vec<(String, FeatureVector)>, String> {
    let mut reader = csv::Reader::from_reader(r);
    let headers = reader.headers().map_err(|e| e.to_string())?.clone();
    if headers.len() < 4 {
        return Err("feature csv needs at least 4 columns".into());
    }
    let width = headers.len() - 4;
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| e.to_string())?;
        let vals = rec
            .iter()
            .skip(1)
            .map(|s| s.parse::<f64>().map_err(|e| e.to_string()))
            .collect::<Result<Vec<_>, _>>()?;
        out.push((
            rec[0].to_string(),
            FeatureVector {
                score: vals[0],
                path_code: vals[1..1 + width].to_vec(),
                prereq: vals[1 + width],
                deletion_ratio: vals[2 + width],
            },
        ));
    }
    Ok(out)
}
