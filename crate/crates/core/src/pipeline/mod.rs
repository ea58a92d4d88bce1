//! One pass of the expansion pipeline over a set of course concepts, and
//! the feedback-driven re-run of that pass.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::{
    partial_rerank, partial_rerank_by_probability, train_classifier, Classifier, ClassifierConfig, ClassifyError,
    Label, LabeledExample, Split,
};
use crate::data::{Course, CourseConceptSet, EmbeddingStore, KnowledgeBase};
use crate::expansion::{run_generation, DeletionRatios, ExpansionError, Generation, GenerationConfig, ScoreVariant};
use crate::features::{EncoderConfig, FeatureContext, FeatureError, FeatureVector, PathEncoder, PrerequisiteScorer};
use crate::feedback::{build_boards, FeedbackTally, GameBoard};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Expansion(#[from] ExpansionError),
    #[error(transparent)]
    Features(#[from] FeatureError),
    #[error(transparent)]
    Classify(#[from] ClassifyError),
    #[error("no deletions recorded; nothing to optimize")]
    NoFeedback,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub generation: GenerationConfig,
    pub encoder: EncoderConfig,
    pub classifier: ClassifierConfig,
    /// Share of the list kept in place by the rerank.
    pub alpha: f64,
    /// Order the reranked tail by probability instead of by P/N tag.
    pub rerank_by_probability: bool,
    /// Expanded concepts per game board.
    pub board_size: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            generation: GenerationConfig::default(),
            encoder: EncoderConfig::default(),
            classifier: ClassifierConfig::default(),
            alpha: 0.4,
            rerank_by_probability: false,
            board_size: 8,
        }
    }
}

/// Everything a run reads but never changes.
#[derive(Clone, Copy)]
pub struct Inputs<'a> {
    pub concepts: &'a CourseConceptSet,
    pub kb: &'a KnowledgeBase,
    pub store: &'a EmbeddingStore,
    pub scorer: &'a dyn PrerequisiteScorer,
}

/// Gold labels keyed by concept id.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LabelSet {
    pub labels: BTreeMap<String, (bool, Split)>,
}

impl LabelSet {
    /// Parses `concept \t label [\t split]` lines (label 0/1, split
    /// train/val/test). Rows without a split get a seeded 2:1:1 assignment
    /// in file order. Blank lines and `#` comments are skipped.
    pub fn parse(text: &str, seed: u64) -> Result<Self, String> {
        let mut rows: Vec<(String, bool, Option<Split>)> = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() < 2 || fields.len() > 3 {
                return Err(format!("labels line {}: expected 2 or 3 tab-separated fields", i + 1));
            }
            let label = match fields[1].trim() {
                "1" => true,
                "0" => false,
                other => return Err(format!("labels line {}: label `{other}` is not 0 or 1", i + 1)),
            };
            let split = fields
                .get(2)
                .map(|s| s.trim().parse::<Split>())
                .transpose()
                .map_err(|e| format!("labels line {}: {e}", i + 1))?;
            rows.push((fields[0].to_string(), label, split));
        }
        let unsplit: Vec<usize> = (0..rows.len()).filter(|&i| rows[i].2.is_none()).collect();
        let assigned = crate::classify::assign_splits(unsplit.len(), seed);
        for (&i, s) in unsplit.iter().zip(assigned) {
            rows[i].2 = Some(s);
        }
        let mut labels = BTreeMap::new();
        for (concept, label, split) in rows {
            if labels.insert(concept.clone(), (label, split.expect("assigned"))).is_some() {
                return Err(format!("labels: duplicate concept `{concept}`"));
            }
        }
        Ok(Self { labels })
    }

    pub fn get(&self, concept: &str) -> Option<(bool, Split)> {
        self.labels.get(concept).copied()
    }

    /// Relevance of every labeled concept in `split`.
    pub fn relevance(&self, split: Split) -> HashMap<String, bool> {
        self.labels
            .iter()
            .filter(|(_, (_, s))| *s == split)
            .map(|(k, (l, _))| (k.clone(), *l))
            .collect()
    }
}

/// How the classification step runs.
#[derive(Clone, Copy)]
pub enum ClassifierUse<'a> {
    /// No classifier: the ranking is the generation order.
    Skip,
    Apply(&'a Classifier),
    /// Train on the labeled candidates of the train split.
    Train(&'a LabelSet),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedCandidate {
    pub concept: String,
    pub score: f64,
    pub label: Option<Label>,
    pub probability: Option<f64>,
}

#[derive(Debug)]
pub struct RunOutput {
    pub generation: Generation,
    /// Feature row (or the reason it could not be built) per candidate, in generation order.
    pub features: Vec<(String, Result<FeatureVector, FeatureError>)>,
    pub classifier: Option<Classifier>,
    /// Final order after the partial rerank.
    pub ranking: Vec<RankedCandidate>,
}

impl RunOutput {
    pub fn expanded_ids(&self) -> Vec<String> {
        self.ranking.iter().map(|r| r.concept.clone()).collect()
    }
}

/// Trains the path encoder on the search paths of a generation.
pub fn train_path_encoder(generation: &Generation, config: &EncoderConfig, store: Option<&EmbeddingStore>) -> Result<PathEncoder, FeatureError> {
    let paths: Vec<_> = generation.candidates.iter().map(|c| c.path.clone()).collect();
    crate::features::train_encoder(&paths, config, store)
}

/// Features, optional classification and partial rerank on top of an
/// existing generation. Candidates whose features fail are kept and
/// treated as N.
pub fn rank_generation(
    generation: Generation,
    inputs: Inputs<'_>,
    config: &PipelineConfig,
    encoder: &PathEncoder,
    classifier: ClassifierUse<'_>,
    ratios: Option<&DeletionRatios>,
) -> Result<RunOutput, PipelineError> {
    let ctx = FeatureContext {
        concepts: inputs.concepts,
        store: inputs.store,
        encoder,
        scorer: inputs.scorer,
    };
    let features: Vec<(String, Result<FeatureVector, FeatureError>)> = generation
        .candidates
        .iter()
        .zip(ctx.assemble(&generation.candidates, ratios))
        .map(|(c, f)| (c.concept.clone(), f))
        .collect();
    for (id, f) in &features {
        if let Err(e) = f {
            log::warn!("no features for `{id}`: {e}");
        }
    }

    let model = match classifier {
        ClassifierUse::Skip => None,
        ClassifierUse::Apply(m) => Some(m.clone()),
        ClassifierUse::Train(labels) => {
            let split = |s: Split| -> Vec<LabeledExample> {
                features
                    .iter()
                    .filter_map(|(id, f)| {
                        let (label, sp) = labels.get(id)?;
                        let f = f.as_ref().ok()?;
                        (sp == s).then(|| LabeledExample {
                            concept: id.clone(),
                            features: f.to_row(),
                            label,
                        })
                    })
                    .collect()
            };
            let val = split(Split::Validation);
            Some(train_classifier(&split(Split::Train), Some(&val), &config.classifier)?)
        }
    };

    let mut ranking: Vec<RankedCandidate> = generation
        .candidates
        .iter()
        .map(|c| RankedCandidate {
            concept: c.concept.clone(),
            score: c.score,
            label: None,
            probability: None,
        })
        .collect();
    if let Some(model) = &model {
        for (r, (_, f)) in ranking.iter_mut().zip(&features) {
            if let Ok(f) = f {
                let p = model.predict(&f.to_row())?;
                r.label = Some(p.label);
                r.probability = Some(p.probability);
            }
        }
        ranking = if config.rerank_by_probability {
            let probs: Vec<f64> = ranking.iter().map(|r| r.probability.unwrap_or(0.0)).collect();
            partial_rerank_by_probability(&ranking, &probs, config.alpha)?
        } else {
            let labels: Vec<Label> = ranking.iter().map(|r| r.label.unwrap_or(Label::N)).collect();
            partial_rerank(&ranking, &labels, config.alpha)?
        };
    }
    Ok(RunOutput {
        generation,
        features,
        classifier: model,
        ranking,
    })
}

/// Generation followed by [`rank_generation`].
pub fn run_pipeline(
    inputs: Inputs<'_>,
    config: &PipelineConfig,
    encoder: &PathEncoder,
    classifier: ClassifierUse<'_>,
    ratios: Option<&DeletionRatios>,
) -> Result<RunOutput, PipelineError> {
    let generation = run_generation(inputs.concepts, inputs.kb, inputs.store, &config.generation, ratios)?;
    rank_generation(generation, inputs, config, encoder, classifier, ratios)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankChange {
    pub concept: String,
    /// 1-based ranks; `None` when absent from that list.
    pub old_rank: Option<usize>,
    pub new_rank: Option<usize>,
}

/// Per-concept rank movement between two lists, in new-list order followed
/// by concepts that dropped out.
pub fn rank_changes(old: &[String], new: &[String]) -> Vec<RankChange> {
    let old_pos: HashMap<&str, usize> = old.iter().enumerate().map(|(i, c)| (c.as_str(), i + 1)).collect();
    let new_pos: HashMap<&str, usize> = new.iter().enumerate().map(|(i, c)| (c.as_str(), i + 1)).collect();
    let mut out: Vec<RankChange> = new
        .iter()
        .enumerate()
        .map(|(i, c)| RankChange {
            concept: c.clone(),
            old_rank: old_pos.get(c.as_str()).copied(),
            new_rank: Some(i + 1),
        })
        .collect();
    out.extend(old.iter().filter(|c| !new_pos.contains_key(c.as_str())).map(|c| RankChange {
        concept: c.clone(),
        old_rank: old_pos.get(c.as_str()).copied(),
        new_rank: None,
    }));
    out
}

#[derive(Debug)]
pub struct OptimizeOutcome {
    pub run: RunOutput,
    /// Deletion ratios over the previous list that fed the run.
    pub ratios: DeletionRatios,
    pub boards: Vec<GameBoard>,
    pub changes: Vec<RankChange>,
}

/// Re-runs the pipeline with deletion ratios over the `current` list: the
/// feedback-adjusted score, the ratio feature, the classifier step and the
/// rerank, then rebuilds the boards of `course` if given.
#[allow(clippy::too_many_arguments)]
pub fn optimize_iteration(
    inputs: Inputs<'_>,
    config: &PipelineConfig,
    encoder: &PathEncoder,
    classifier: ClassifierUse<'_>,
    tally: &FeedbackTally,
    current: &[String],
    course: Option<&Course>,
) -> Result<OptimizeOutcome, PipelineError> {
    if current.iter().all(|c| tally.count(c) == 0) {
        return Err(PipelineError::NoFeedback);
    }
    let ratios = tally.deletion_ratios(current.iter().map(String::as_str));
    let mut cfg = config.clone();
    cfg.generation.score_variant = ScoreVariant::FeedbackAdjusted;
    let run = run_pipeline(inputs, &cfg, encoder, classifier, Some(&ratios))?;
    let ids = run.expanded_ids();
    let boards = course
        .map(|c| build_boards(c, inputs.concepts, &ids, inputs.store, config.board_size))
        .unwrap_or_default();
    let changes = rank_changes(current, &ids);
    Ok(OptimizeOutcome {
        run,
        ratios,
        boards,
        changes,
    })
}
