//! Binary classification of candidates and partial reranking of the
//! expansion list.

mod gbdt;
mod logistic;

pub use gbdt::{Gbdt, GbdtParams};
pub use logistic::{Logistic, LogisticParams};

use std::collections::BTreeSet;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::FeatureGroup;

const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Error, PartialEq)]
pub enum ClassifyError {
    #[error("training data has a single class")]
    SingleClass,
    #[error("no training examples")]
    Empty,
    #[error("feature width {found} does not match the model's {expected}")]
    WidthMismatch { expected: usize, found: usize },
    #[error("{items} items but {labels} labels")]
    LengthMismatch { items: usize, labels: usize },
    #[error("alpha {0} outside [0, 1]")]
    InvalidAlpha(f64),
    #[error("no feature masks given")]
    EmptyMaskSet,
    #[error("mask removes every feature")]
    AllFeaturesMasked,
    #[error("classifier checkpoint: {0}")]
    Checkpoint(String),
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    P,
    N,
}

impl Label {
    pub fn from_probability(p: f64) -> Self {
        if p >= 0.5 {
            Label::P
        } else {
            Label::N
        }
    }

    pub fn is_positive(self) -> bool {
        self == Label::P
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub concept: String,
    pub features: Vec<f64>,
    pub label: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl std::str::FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "train" => Ok(Split::Train),
            "val" | "validation" => Ok(Split::Validation),
            "test" => Ok(Split::Test),
            other => Err(format!("unknown split `{other}`")),
        }
    }
}

/// Seeded 2:1:1 train/validation/test assignment of `n` items.
pub fn assign_splits(n: usize, seed: u64) -> Vec<Split> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let train = n / 2;
    let val = (n - train) / 2;
    let mut out = vec![Split::Test; n];
    for (rank, &i) in order.iter().enumerate() {
        out[i] = if rank < train {
            Split::Train
        } else if rank < train + val {
            Split::Validation
        } else {
            Split::Test
        };
    }
    out
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub accuracy: f64,
}

impl Metrics {
    /// Metrics of predicted labels against truth; empty ratios count as 0.
    pub fn compute(predicted: &[bool], truth: &[bool]) -> Self {
        let mut tp = 0usize;
        let mut fp = 0usize;
        let mut fneg = 0usize;
        let mut correct = 0usize;
        for (&p, &t) in predicted.iter().zip(truth) {
            match (p, t) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fneg += 1,
                (false, false) => {}
            }
            correct += usize::from(p == t);
        }
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fneg);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Self {
            precision,
            recall,
            f1,
            accuracy: ratio(correct, predicted.len()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelKind {
    Gbdt(GbdtParams),
    Logistic(LogisticParams),
}

impl Default for ModelKind {
    fn default() -> Self {
        ModelKind::Gbdt(GbdtParams::default())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierConfig {
    pub model: ModelKind,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Model {
    Gbdt(Gbdt),
    Logistic(Logistic),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMetrics {
    pub train: Metrics,
    pub validation: Option<Metrics>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: Label,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classifier {
    version: u32,
    /// Feature width the model was trained on.
    pub width: usize,
    model: Model,
    pub metrics: TrainingMetrics,
}

fn check_width(rows: &[LabeledExample]) -> Result<usize, ClassifyError> {
    let width = rows.first().ok_or(ClassifyError::Empty)?.features.len();
    if let Some(bad) = rows.iter().find(|r| r.features.len() != width) {
        return Err(ClassifyError::WidthMismatch {
            expected: width,
            found: bad.features.len(),
        });
    }
    Ok(width)
}

/// Trains on `train` and reports precision/recall/F1 on it and, if given, on `validation`.
pub fn train_classifier(
    train: &[LabeledExample],
    validation: Option<&[LabeledExample]>,
    config: &ClassifierConfig,
) -> Result<Classifier, ClassifyError> {
    let width = check_width(train)?;
    let x: Vec<Vec<f64>> = train.iter().map(|e| e.features.clone()).collect();
    let y: Vec<bool> = train.iter().map(|e| e.label).collect();
    if y.iter().all(|&v| v) || y.iter().all(|&v| !v) {
        return Err(ClassifyError::SingleClass);
    }
    let model = match &config.model {
        ModelKind::Gbdt(p) => Model::Gbdt(Gbdt::fit(&x, &y, p, config.seed)),
        ModelKind::Logistic(p) => Model::Logistic(Logistic::fit(&x, &y, p)),
    };
    let mut clf = Classifier {
        version: CHECKPOINT_VERSION,
        width,
        model,
        metrics: TrainingMetrics {
            train: Metrics::default(),
            validation: None,
        },
    };
    clf.metrics.train = clf.evaluate(train)?;
    if let Some(val) = validation.filter(|v| !v.is_empty()) {
        clf.metrics.validation = Some(clf.evaluate(val)?);
    }
    Ok(clf)
}

impl Classifier {
    pub fn probability(&self, features: &[f64]) -> Result<f64, ClassifyError> {
        if features.len() != self.width {
            return Err(ClassifyError::WidthMismatch {
                expected: self.width,
                found: features.len(),
            });
        }
        Ok(match &self.model {
            Model::Gbdt(m) => m.probability(features),
            Model::Logistic(m) => m.probability(features),
        })
    }

    /// Label P iff probability >= 0.5.
    pub fn predict(&self, features: &[f64]) -> Result<Prediction, ClassifyError> {
        let probability = self.probability(features)?;
        Ok(Prediction {
            label: Label::from_probability(probability),
            probability,
        })
    }

    pub fn evaluate(&self, rows: &[LabeledExample]) -> Result<Metrics, ClassifyError> {
        let predicted = rows
            .iter()
            .map(|r| self.predict(&r.features).map(|p| p.label.is_positive()))
            .collect::<Result<Vec<_>, _>>()?;
        let truth: Vec<bool> = rows.iter().map(|r| r.label).collect();
        Ok(Metrics::compute(&predicted, &truth))
    }

    pub fn save(&self, path: &Path) -> Result<(), ClassifyError> {
        let text = serde_json::to_string(self).map_err(|e| ClassifyError::Checkpoint(e.to_string()))?;
        std::fs::write(path, text).map_err(|e| ClassifyError::Checkpoint(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ClassifyError> {
        let text = std::fs::read_to_string(path).map_err(|e| ClassifyError::Checkpoint(e.to_string()))?;
        let clf: Self = serde_json::from_str(&text).map_err(|e| ClassifyError::Checkpoint(e.to_string()))?;
        if clf.version != CHECKPOINT_VERSION {
            return Err(ClassifyError::Checkpoint(format!("unsupported checkpoint version {}", clf.version)));
        }
        Ok(clf)
    }
}

/// Number of leading items kept in place: `ceil(alpha * n)`, with a small
/// tolerance so products like `0.4 * 5` are not pushed up by rounding.
pub fn cut_index(alpha: f64, n: usize) -> usize {
    ((alpha * n as f64 - 1e-9).ceil().max(0.0) as usize).min(n)
}

fn check_alpha(alpha: f64) -> Result<(), ClassifyError> {
    if (0.0..=1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(ClassifyError::InvalidAlpha(alpha))
    }
}

/// Keeps the first `ceil(alpha * n)` items and moves every P item of the
/// tail ahead of every N item. `items` must already be in descending score
/// order; each block keeps that order.
pub fn partial_rerank<T: Clone>(items: &[T], labels: &[Label], alpha: f64) -> Result<Vec<T>, ClassifyError> {
    check_alpha(alpha)?;
    if items.len() != labels.len() {
        return Err(ClassifyError::LengthMismatch {
            items: items.len(),
            labels: labels.len(),
        });
    }
    let k = cut_index(alpha, items.len());
    let mut out = items[..k].to_vec();
    let tail = k..items.len();
    out.extend(tail.clone().filter(|&i| labels[i].is_positive()).map(|i| items[i].clone()));
    out.extend(tail.filter(|&i| !labels[i].is_positive()).map(|i| items[i].clone()));
    Ok(out)
}

/// Variant that orders the tail by classifier probability (descending,
/// stable) instead of by P/N tag.
pub fn partial_rerank_by_probability<T: Clone>(
    items: &[T],
    probabilities: &[f64],
    alpha: f64,
) -> Result<Vec<T>, ClassifyError> {
    check_alpha(alpha)?;
    if items.len() != probabilities.len() {
        return Err(ClassifyError::LengthMismatch {
            items: items.len(),
            labels: probabilities.len(),
        });
    }
    let k = cut_index(alpha, items.len());
    let mut tail: Vec<usize> = (k..items.len()).collect();
    tail.sort_by(|&a, &b| probabilities[b].total_cmp(&probabilities[a]));
    Ok(items[..k].iter().cloned().chain(tail.into_iter().map(|i| items[i].clone())).collect())
}

/// Labeled rows of one dataset for ablation, in the full feature layout
/// `[score, code..., prereq, deletion_ratio]`.
#[derive(Debug, Clone)]
pub struct AblationData {
    pub code_width: usize,
    pub train: Vec<LabeledExample>,
    pub test: Vec<LabeledExample>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    /// Feature groups removed; empty for the full model.
    pub removed: Vec<FeatureGroup>,
    pub metrics: Metrics,
    pub delta_precision: f64,
    pub delta_recall: f64,
    pub delta_f1: f64,
}

fn masked(rows: &[LabeledExample], keep: &[usize]) -> Vec<LabeledExample> {
    rows.iter()
        .map(|r| LabeledExample {
            concept: r.concept.clone(),
            features: keep.iter().map(|&j| r.features[j]).collect(),
            label: r.label,
        })
        .collect()
}

fn masked_metrics(
    datasets: &[AblationData],
    removed: &BTreeSet<FeatureGroup>,
    config: &ClassifierConfig,
) -> Result<Metrics, ClassifyError> {
    let mut sum = Metrics::default();
    for data in datasets {
        let width = 3 + data.code_width;
        let keep: Vec<usize> = (0..width)
            .filter(|j| !removed.iter().any(|g| g.columns(data.code_width).contains(j)))
            .collect();
        if keep.is_empty() {
            return Err(ClassifyError::AllFeaturesMasked);
        }
        let clf = train_classifier(&masked(&data.train, &keep), None, config)?;
        let m = clf.evaluate(&masked(&data.test, &keep))?;
        sum.precision += m.precision;
        sum.recall += m.recall;
        sum.f1 += m.f1;
        sum.accuracy += m.accuracy;
    }
    let n = datasets.len().max(1) as f64;
    Ok(Metrics {
        precision: sum.precision / n,
        recall: sum.recall / n,
        f1: sum.f1 / n,
        accuracy: sum.accuracy / n,
    })
}

/// Test-split P/R/F1 (averaged over datasets) for each mask of removed
/// feature groups, with deltas relative to the full-feature model.
pub fn ablation_run(
    datasets: &[AblationData],
    masks: &[BTreeSet<FeatureGroup>],
    config: &ClassifierConfig,
) -> Result<Vec<AblationRow>, ClassifyError> {
    if masks.is_empty() {
        return Err(ClassifyError::EmptyMaskSet);
    }
    if masks.iter().any(|m| FeatureGroup::ALL.iter().all(|g| m.contains(g))) {
        return Err(ClassifyError::AllFeaturesMasked);
    }
    let full = masked_metrics(datasets, &BTreeSet::new(), config)?;
    masks
        .iter()
        .map(|mask| {
            let metrics = if mask.is_empty() {
                full
            } else {
                masked_metrics(datasets, mask, config)?
            };
            Ok(AblationRow {
                removed: mask.iter().copied().collect(),
                metrics,
                delta_precision: metrics.precision - full.precision,
                delta_recall: metrics.recall - full.recall,
                delta_f1: metrics.f1 - full.f1,
            })
        })
        .collect()
}
