//! Boundary-constrained candidate generation.
//!
//! Course concepts are partitioned into potential clusters, then the
//! knowledge base is searched outward wave by wave. A neighbor is admitted
//! into the cluster of the concept that reached it only while it stays
//! strictly inside that cluster's merge threshold; clusters smaller than
//! `tau` borrow the threshold of the all-concepts cluster H0.

mod init;
mod score;

pub use init::{initialize_clusters, NnBackend, Partition};
pub use score::{score_candidate, ScoreVariant};

use std::collections::{BTreeSet, HashMap, HashSet};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{CourseConceptSet, Direction, EmbeddingStore, KnowledgeBase};
use crate::geometry::{build_cluster, edis, ClusterConfig, ConceptCluster, GeometryError};

#[derive(Debug, Error)]
pub enum ExpansionError {
    #[error("no course concepts to expand")]
    NoCourseConcepts,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("candidate export: {0}")]
    Export(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Hop {
    pub relation: String,
    pub direction: Direction,
    pub concept: String,
}

/// Chain of knowledge-base edges from a course concept to a candidate.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SearchPath {
    pub root: String,
    pub hops: Vec<Hop>,
}

impl SearchPath {
    pub fn start(root: impl Into<String>) -> Self {
        Self {
            root: root.into(),
            hops: Vec::new(),
        }
    }

    pub fn extended(&self, relation: &str, direction: Direction, concept: &str) -> Self {
        let mut next = self.clone();
        next.hops.push(Hop {
            relation: relation.to_string(),
            direction,
            concept: concept.to_string(),
        });
        next
    }

    pub fn end(&self) -> &str {
        self.hops.last().map_or(&self.root, |h| &h.concept)
    }

    /// Alternating concept / relation sequence, `root, r1, e1, r2, e2, ...`.
    pub fn elements(&self) -> Vec<&str> {
        let mut out = vec![self.root.as_str()];
        for h in &self.hops {
            out.push(&h.relation);
            out.push(&h.concept);
        }
        out
    }

    /// Like [`SearchPath::elements`], with reverse-walked relations marked by a `~` prefix.
    pub fn tokens(&self) -> Vec<String> {
        let mut out = vec![self.root.clone()];
        for h in &self.hops {
            out.push(match h.direction {
                Direction::Forward => h.relation.clone(),
                Direction::Reverse => format!("~{}", h.relation),
            });
            out.push(h.concept.clone());
        }
        out
    }

    /// Checks that every hop is a knowledge-base edge.
    pub fn validate(&self, kb: &KnowledgeBase) -> bool {
        let mut from = self.root.as_str();
        for h in &self.hops {
            if !kb.has_edge(from, &h.relation, &h.concept, h.direction) {
                return false;
            }
            from = &h.concept;
        }
        !self.hops.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub concept: String,
    pub score: f64,
    pub path: SearchPath,
    pub cluster: usize,
    /// 1-based search wave that admitted the concept.
    pub wave: usize,
}

impl Candidate {
    /// The course concept its search chain started from.
    pub fn root(&self) -> &str {
        &self.path.root
    }

    /// The concept whose neighborhood produced this candidate.
    pub fn anchor(&self) -> &str {
        let n = self.path.hops.len();
        if n >= 2 {
            &self.path.hops[n - 2].concept
        } else {
            &self.path.root
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerationConfig {
    pub cluster: ClusterConfig,
    pub max_waves: usize,
    pub score_variant: ScoreVariant,
    pub include_root_in_sum: bool,
    pub backend: NnBackend,
    /// Record a cluster snapshot after every merge.
    pub trace: bool,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        Self {
            cluster: ClusterConfig::default(),
            max_waves: 10,
            score_variant: ScoreVariant::Plain,
            include_root_in_sum: false,
            backend: NnBackend::KdTree,
            trace: false,
        }
    }
}

/// One admission decision, kept for auditing the boundary rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Admission {
    pub concept: String,
    pub anchor: String,
    pub cluster: usize,
    pub wave: usize,
    pub distance: f64,
    pub threshold: f64,
    /// The threshold came from H0 because the cluster was below `tau`.
    pub borrowed_threshold: bool,
}

/// Cluster state right after a merge or separation.
#[derive(Debug, Clone, PartialEq)]
pub enum TraceEvent {
    Merged { concept: String, cluster: ConceptCluster },
    Separated { cluster: usize, h0: Option<ConceptCluster> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generation {
    /// Sorted by score descending, ties by concept id.
    pub candidates: Vec<Candidate>,
    /// The wave cap was reached before the frontier ran dry.
    pub truncated: bool,
    /// Distinct neighbors skipped for lack of an embedding.
    pub skipped_unembedded: usize,
    pub admissions: Vec<Admission>,
    pub partition: Partition,
    pub clusters: Vec<ConceptCluster>,
    pub h0: Option<ConceptCluster>,
    pub trace: Vec<TraceEvent>,
}

/// Deletion ratio per concept; absent concepts count as zero.
pub type DeletionRatios = HashMap<String, f64>;

pub(crate) fn sort_by_score(candidates: &mut [Candidate]) {
    candidates.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.concept.cmp(&b.concept)));
}

struct Search<'a> {
    kb: &'a KnowledgeBase,
    store: &'a EmbeddingStore,
    config: &'a GenerationConfig,
    ratios: Option<&'a DeletionRatios>,
    h0: Option<ConceptCluster>,
    clusters: Vec<ConceptCluster>,
    separated: Vec<bool>,
    course_concepts: HashSet<String>,
    assignment: HashMap<String, usize>,
    paths: HashMap<String, SearchPath>,
    seen: HashSet<String>,
    skipped: BTreeSet<String>,
    admissions: Vec<Admission>,
    trace: Vec<TraceEvent>,
}

impl Search<'_> {
    fn slot(cluster_id: usize) -> usize {
        cluster_id - 1
    }

    /// Separates cluster `id` from H0 and recomputes H0 from what remains.
    fn separate(&mut self, id: usize) -> Result<(), GeometryError> {
        let slot = Self::slot(id);
        self.separated[slot] = true;
        let remaining: Vec<String> = match &self.h0 {
            Some(h0) => h0
                .members
                .iter()
                .filter(|m| !self.clusters[slot].contains(m))
                .cloned()
                .collect(),
            None => Vec::new(),
        };
        self.h0 = if remaining.is_empty() {
            None
        } else {
            Some(build_cluster(0, &remaining, self.store, self.config.cluster.tau)?)
        };
        if self.config.trace {
            self.trace.push(TraceEvent::Separated {
                cluster: id,
                h0: self.h0.clone(),
            });
        }
        Ok(())
    }

    fn governing_threshold(&self, id: usize) -> (f64, bool) {
        let slot = Self::slot(id);
        if self.separated[slot] {
            (self.clusters[slot].merge_threshold(), false)
        } else {
            // a sub-tau cluster still has its course concepts inside H0
            let h0 = self.h0.as_ref().expect("H0 holds the members of unseparated clusters");
            (h0.merge_threshold(), true)
        }
    }

    fn expand_from(&mut self, anchor: &str, wave: usize, out: &mut Vec<Candidate>) -> Result<(), GeometryError> {
        let id = self.assignment[anchor];
        let anchor_vec = self.store.get(anchor).expect("assigned concepts are embedded");
        for nb in self.kb.neighbors(anchor) {
            if self.seen.contains(nb.concept) {
                continue;
            }
            let Some(e) = self.store.get(nb.concept) else {
                self.skipped.insert(nb.concept.to_string());
                continue;
            };
            let (threshold, borrowed) = self.governing_threshold(id);
            let distance = edis(e, anchor_vec)?;
            if !(distance < threshold) {
                continue;
            }
            let slot = Self::slot(id);
            let dr = self.ratios.and_then(|r| r.get(nb.concept)).copied().unwrap_or(0.0);
            let score = score_candidate(
                e,
                anchor,
                &self.clusters[slot],
                self.store,
                self.config.score_variant,
                dr,
                self.config.include_root_in_sum,
            )?;
            let path = self.paths[anchor].extended(nb.relation, nb.direction, nb.concept);

            let mut members = self.clusters[slot].members.clone();
            members.push(nb.concept.to_string());
            self.clusters[slot] = build_cluster(id, &members, self.store, self.config.cluster.tau)?;
            if self.config.trace {
                self.trace.push(TraceEvent::Merged {
                    concept: nb.concept.to_string(),
                    cluster: self.clusters[slot].clone(),
                });
            }
            self.admissions.push(Admission {
                concept: nb.concept.to_string(),
                anchor: anchor.to_string(),
                cluster: id,
                wave,
                distance,
                threshold,
                borrowed_threshold: borrowed,
            });
            self.seen.insert(nb.concept.to_string());
            self.assignment.insert(nb.concept.to_string(), id);
            self.paths.insert(nb.concept.to_string(), path.clone());
            out.push(Candidate {
                concept: nb.concept.to_string(),
                score,
                path,
                cluster: id,
                wave,
            });
            if !self.separated[slot] && self.clusters[slot].len() >= self.config.cluster.tau {
                self.separate(id)?;
            }
        }
        Ok(())
    }
}

/// Runs the full candidate generation for one set of course concepts.
///
/// With `ratios` and [`ScoreVariant::FeedbackAdjusted`] the direct term of
/// each score is discounted by the concept's deletion ratio.
pub fn run_generation(
    concepts: &CourseConceptSet,
    kb: &KnowledgeBase,
    store: &EmbeddingStore,
    config: &GenerationConfig,
    ratios: Option<&DeletionRatios>,
) -> Result<Generation, ExpansionError> {
    let partition = initialize_clusters(concepts, store, &config.cluster, config.backend)?;
    let mut search = Search {
        kb,
        store,
        config,
        ratios,
        h0: Some(partition.h0.clone()),
        clusters: partition.clusters.clone(),
        separated: vec![false; partition.clusters.len()],
        course_concepts: concepts.ids().map(str::to_string).collect(),
        assignment: HashMap::new(),
        paths: HashMap::new(),
        seen: HashSet::new(),
        skipped: BTreeSet::new(),
        admissions: Vec::new(),
        trace: Vec::new(),
    };
    for c in &partition.clusters {
        for m in &c.members {
            search.assignment.insert(m.clone(), c.id);
            search.paths.insert(m.clone(), SearchPath::start(m.clone()));
        }
    }
    search.seen = search.course_concepts.clone();
    for c in &partition.clusters {
        if c.len() >= config.cluster.tau {
            search.separate(c.id)?;
        }
    }

    let mut frontier: Vec<String> = concepts.ids().map(str::to_string).collect();
    let mut all = Vec::new();
    let mut wave = 0;
    let mut truncated = false;
    while !frontier.is_empty() {
        if wave >= config.max_waves {
            truncated = true;
            break;
        }
        wave += 1;
        let mut next = Vec::new();
        for anchor in &frontier {
            search.expand_from(anchor, wave, &mut next)?;
        }
        sort_by_score(&mut next);
        frontier = next.iter().map(|c| c.concept.clone()).collect();
        all.extend(next);
    }
    sort_by_score(&mut all);
    if !search.skipped.is_empty() {
        log::warn!("{} neighbors skipped for lack of an embedding", search.skipped.len());
    }
    Ok(Generation {
        candidates: all,
        truncated,
        skipped_unembedded: search.skipped.len(),
        admissions: search.admissions,
        partition,
        clusters: search.clusters,
        h0: search.h0,
        trace: search.trace,
    })
}

#[derive(Serialize, Deserialize)]
struct CandidateRecord {
    id: String,
    score: f64,
    wave: usize,
    cluster: usize,
    path: Vec<String>,
    directions: Vec<Direction>,
}

/// Writes one JSON object per candidate:
/// `{"id","score","wave","cluster","path":[c, r, e, ...],"directions":[...]}`.
pub fn write_candidates<W: Write>(mut w: W, candidates: &[Candidate]) -> std::io::Result<()> {
    for c in candidates {
        let record = CandidateRecord {
            id: c.concept.clone(),
            score: c.score,
            wave: c.wave,
            cluster: c.cluster,
            path: c.path.elements().into_iter().map(str::to_string).collect(),
            directions: c.path.hops.iter().map(|h| h.direction).collect(),
        };
        serde_json::to_writer(&mut w, &record)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_candidates<R: BufRead>(r: R) -> Result<Vec<Candidate>, ExpansionError> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line.map_err(|e| ExpansionError::Export(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: CandidateRecord =
            serde_json::from_str(&line).map_err(|e| ExpansionError::Export(format!("line {}: {e}", i + 1)))?;
        if rec.path.len() < 3 || rec.path.len() % 2 == 0 || rec.directions.len() != rec.path.len() / 2 {
            return Err(ExpansionError::Export(format!("line {}: malformed path", i + 1)));
        }
        let mut path = SearchPath::start(rec.path[0].clone());
        for (pair, dir) in rec.path[1..].chunks(2).zip(rec.directions) {
            path = path.extended(&pair[0], dir, &pair[1]);
        }
        if path.end() != rec.id {
            return Err(ExpansionError::Export(format!("line {}: path does not end at `{}`", i + 1, rec.id)));
        }
        out.push(Candidate {
            concept: rec.id,
            score: rec.score,
            path,
            cluster: rec.cluster,
            wave: rec.wave,
        });
    }
    Ok(out)
}
