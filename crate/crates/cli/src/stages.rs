//! One function per subcommand. Every stage reads its inputs from the
//! configured data files and earlier artifacts in the output dir, writes
//! its artifacts there and records digests in the manifest.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{anyhow, Context};
use conexp::classify::{
    partial_rerank, partial_rerank_by_probability, train_classifier, Classifier, Label, LabeledExample, Split,
};
use conexp::data::{CourseConceptSet, Dataset};
use conexp::evaluation::{baseline_ebm, baseline_pr, correction_rate, mean_average_precision, write_sweep_csv, SweepPoint};
use conexp::expansion::{read_candidates, run_generation, write_candidates, Candidate};
use conexp::features::{train_encoder, write_feature_csv, DefaultPrerequisiteScorer, FeatureContext, PathEncoder};
use conexp::feedback::{read_jsonl, DeleteEvent, FeedbackTally};
use conexp::pipeline::{optimize_iteration, run_pipeline, ClassifierUse, Inputs, LabelSet, PipelineError, RankedCandidate};
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::manifest::{DirLock, StageLog};
use crate::CliError;

pub const CANDIDATES: &str = "candidates.jsonl";
pub const ENCODER: &str = "encoder.json";
pub const FEATURES: &str = "features.csv";
pub const CLASSIFIER: &str = "classifier.json";
pub const PREDICTIONS: &str = "predictions.jsonl";
pub const RANKING: &str = "ranking.jsonl";
pub const EVALUATION_JSON: &str = "evaluation.json";
pub const EVALUATION_CSV: &str = "evaluation.csv";
pub const CORRECTION_RATE: &str = "correction_rate.json";
pub const SWEEP: &str = "sweep.csv";
pub const OPTIMIZED_RANKING: &str = "ranking.optimized.jsonl";
pub const RANK_CHANGES: &str = "rank_changes.json";

/// Loaded inputs shared by the stages.
pub struct Ctx {
    pub config: Config,
    pub data: Dataset,
    pub concepts: CourseConceptSet,
    pub scorer: DefaultPrerequisiteScorer,
    pub labels: Option<LabelSet>,
    pub out: PathBuf,
}

impl Ctx {
    pub fn load(config: Config) -> Result<Self, CliError> {
        let [(_, corpus), (_, kb), (_, embeddings)] = config.inputs()?;
        let data = Dataset::load(corpus, kb, embeddings).map_err(|e| CliError::Config(format!("loading inputs: {e}")))?;
        let labels = match &config.paths.labels {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
                Some(LabelSet::parse(&text, config.evaluation.split_seed).map_err(CliError::Config)?)
            }
            None => None,
        };
        let concepts = data.all_concepts();
        let scorer = DefaultPrerequisiteScorer::build(&data.courses(), &concepts, &data.store);
        log::info!(
            "loaded {} courses, {} course concepts, {} edges",
            data.corpus.courses.len(),
            concepts.len(),
            data.kb.edge_count()
        );
        let out = config.paths.output.clone();
        Ok(Self {
            config,
            data,
            concepts,
            scorer,
            labels,
            out,
        })
    }

    pub fn inputs(&self) -> Inputs<'_> {
        Inputs {
            concepts: &self.concepts,
            kb: &self.data.kb,
            store: &self.data.store,
            scorer: &self.scorer,
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    /// Path of an artifact an earlier stage must have written.
    fn artifact(&self, name: &str, producer: &str) -> Result<PathBuf, CliError> {
        let p = self.path(name);
        if p.is_file() {
            Ok(p)
        } else {
            Err(CliError::MissingArtifact(format!(
                "{} not found; run `conexp {producer}` first",
                p.display()
            )))
        }
    }

    fn labels(&self, stage: &str) -> Result<&LabelSet, CliError> {
        self.labels
            .as_ref()
            .ok_or_else(|| CliError::Config(format!("`{stage}` needs a labels file (--labels or config paths.labels)")))
    }

    fn stage_log(&self, name: &'static str) -> anyhow::Result<StageLog> {
        let mut log = StageLog::new(name, &self.out, &self.config);
        let p = &self.config.paths;
        for (key, path) in [("corpus", &p.corpus), ("kb", &p.kb), ("embeddings", &p.embeddings), ("labels", &p.labels)] {
            if let Some(path) = path {
                log.input(key, path)?;
            }
        }
        Ok(log)
    }

    fn candidates(&self, log: &mut StageLog) -> Result<Vec<Candidate>, CliError> {
        let path = self.artifact(CANDIDATES, "expand")?;
        log.input(CANDIDATES, &path)?;
        let file = File::open(&path).map_err(anyhow::Error::from)?;
        Ok(read_candidates(BufReader::new(file)).map_err(|e| anyhow!("{}: {e}", path.display()))?)
    }

    fn relevance(&self, stage: &str) -> Result<HashMap<String, bool>, CliError> {
        Ok(self.labels(stage)?.relevance(Split::Test))
    }
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn write_jsonl<T: Serialize>(path: &Path, rows: &[T]) -> anyhow::Result<()> {
    let mut w = create(path)?;
    for r in rows {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

fn read_jsonl_strict<T: for<'de> Deserialize<'de>>(path: &Path) -> anyhow::Result<Vec<T>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).with_context(|| format!("{} line {}", path.display(), i + 1))?);
    }
    Ok(out)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(value)? + "\n").with_context(|| format!("writing {}", path.display()))
}

/// MAP of one ranked list against the labeled pool.
fn map_of<'a>(ids: impl IntoIterator<Item = &'a str>, relevance: &HashMap<String, bool>) -> anyhow::Result<f64> {
    let flags: Vec<bool> = ids.into_iter().filter_map(|id| relevance.get(id).copied()).collect();
    if flags.is_empty() {
        return Err(anyhow!("no labeled test concept appears in the ranked list"));
    }
    Ok(mean_average_precision(&[flags])?)
}

/// Classifier output per candidate, in candidate order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub id: String,
    /// `None` when no feature row could be built; the rerank treats it as N.
    pub label: Option<Label>,
    pub probability: Option<f64>,
}

pub fn expand(ctx: &Ctx) -> Result<(), CliError> {
    let _lock = DirLock::acquire(&ctx.out)?;
    let mut log = ctx.stage_log("expand")?;
    let g = &ctx.config.pipeline.generation;
    let generation = run_generation(&ctx.concepts, &ctx.data.kb, &ctx.data.store, g, None).map_err(anyhow::Error::from)?;
    let mut w = create(&ctx.path(CANDIDATES))?;
    write_candidates(&mut w, &generation.candidates).map_err(anyhow::Error::from)?;
    w.flush().map_err(anyhow::Error::from)?;
    log.output(CANDIDATES)?;
    log.finish()?;
    log::info!(
        "{} candidates (tau {}, waves {}{})",
        generation.candidates.len(),
        g.cluster.tau,
        g.max_waves,
        if generation.truncated { ", wave cap reached" } else { "" }
    );
    Ok(())
}

fn train_and_save_encoder(ctx: &Ctx, candidates: &[Candidate], log: &mut StageLog) -> Result<PathEncoder, CliError> {
    let paths: Vec<_> = candidates.iter().map(|c| c.path.clone()).collect();
    let encoder = train_encoder(&paths, &ctx.config.pipeline.encoder, None).map_err(anyhow::Error::from)?;
    encoder.save(&ctx.path(ENCODER)).map_err(anyhow::Error::from)?;
    log.output(ENCODER)?;
    log::info!(
        "encoder trained on {} paths: final loss {:.4}, reconstruction accuracy {:.3}",
        paths.len(),
        encoder.report.losses.last().copied().unwrap_or(f64::NAN),
        encoder.report.accuracy
    );
    Ok(encoder)
}

pub fn train_encoder_stage(ctx: &Ctx) -> Result<(), CliError> {
    let _lock = DirLock::acquire(&ctx.out)?;
    let mut log = ctx.stage_log("train-encoder")?;
    let candidates = ctx.candidates(&mut log)?;
    train_and_save_encoder(ctx, &candidates, &mut log)?;
    log.finish()?;
    Ok(())
}

fn load_encoder(ctx: &Ctx, log: &mut StageLog) -> Result<PathEncoder, CliError> {
    let path = ctx.artifact(ENCODER, "train-encoder")?;
    log.input(ENCODER, &path)?;
    Ok(PathEncoder::load(&path).map_err(anyhow::Error::from)?)
}

pub fn classify(ctx: &Ctx, model: Option<&Path>) -> Result<(), CliError> {
    let _lock = DirLock::acquire(&ctx.out)?;
    let mut log = ctx.stage_log("classify")?;
    let candidates = ctx.candidates(&mut log)?;
    let encoder = if ctx.path(ENCODER).is_file() {
        load_encoder(ctx, &mut log)?
    } else {
        log::info!("{ENCODER} missing, training the encoder first");
        train_and_save_encoder(ctx, &candidates, &mut log)?
    };
    let fctx = FeatureContext {
        concepts: &ctx.concepts,
        store: &ctx.data.store,
        encoder: &encoder,
        scorer: &ctx.scorer,
    };
    let features = fctx.assemble(&candidates, None);
    let rows: Vec<(String, _)> = candidates
        .iter()
        .zip(&features)
        .filter_map(|(c, f)| match f {
            Ok(f) => Some((c.concept.clone(), f.clone())),
            Err(e) => {
                log::warn!("no features for `{}`: {e}", c.concept);
                None
            }
        })
        .collect();
    let mut w = create(&ctx.path(FEATURES))?;
    write_feature_csv(&mut w, &rows).map_err(anyhow::Error::from)?;
    w.flush().map_err(anyhow::Error::from)?;
    log.output(FEATURES)?;

    let classifier = match model {
        Some(path) => {
            log.input("model", path)?;
            log.arg("model", path.display());
            Classifier::load(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        }
        None => {
            let labels = ctx.labels("classify")?;
            let split = |s: Split| -> Vec<LabeledExample> {
                rows.iter()
                    .filter_map(|(id, f)| {
                        let (label, sp) = labels.get(id)?;
                        (sp == s).then(|| LabeledExample {
                            concept: id.clone(),
                            features: f.to_row(),
                            label,
                        })
                    })
                    .collect()
            };
            let (train, val, test) = (split(Split::Train), split(Split::Validation), split(Split::Test));
            log::info!("labeled candidates: {} train, {} validation, {} test", train.len(), val.len(), test.len());
            let c = train_classifier(&train, Some(&val), &ctx.config.pipeline.classifier).map_err(anyhow::Error::from)?;
            if !test.is_empty() {
                let m = c.evaluate(&test).map_err(anyhow::Error::from)?;
                log::info!(
                    "test split: precision {:.3} recall {:.3} f1 {:.3} accuracy {:.3}",
                    m.precision,
                    m.recall,
                    m.f1,
                    m.accuracy
                );
            }
            c.save(&ctx.path(CLASSIFIER)).map_err(anyhow::Error::from)?;
            log.output(CLASSIFIER)?;
            c
        }
    };

    let predictions = candidates
        .iter()
        .zip(&features)
        .map(|(c, f)| {
            let p = match f {
                Ok(f) => Some(classifier.predict(&f.to_row())?),
                Err(_) => None,
            };
            let p = p.as_ref();
            Ok(PredictionRecord {
                id: c.concept.clone(),
                label: p.map(|p| p.label),
                probability: p.map(|p| p.probability),
            })
        })
        .collect::<Result<Vec<_>, conexp::classify::ClassifyError>>()
        .map_err(anyhow::Error::from)?;
    write_jsonl(&ctx.path(PREDICTIONS), &predictions)?;
    log.output(PREDICTIONS)?;
    log.finish()?;
    Ok(())
}

fn load_predictions(ctx: &Ctx, candidates: &[Candidate], log: &mut StageLog) -> Result<Vec<PredictionRecord>, CliError> {
    let path = ctx.artifact(PREDICTIONS, "classify")?;
    log.input(PREDICTIONS, &path)?;
    let preds: Vec<PredictionRecord> = read_jsonl_strict(&path)?;
    let aligned = preds.len() == candidates.len() && preds.iter().zip(candidates).all(|(p, c)| p.id == c.concept);
    if !aligned {
        return Err(CliError::MissingArtifact(format!(
            "{} does not match {CANDIDATES}; rerun `conexp classify`",
            path.display()
        )));
    }
    Ok(preds)
}

fn rerank_with(
    candidates: &[Candidate],
    preds: &[PredictionRecord],
    alpha: f64,
    by_probability: bool,
) -> anyhow::Result<Vec<RankedCandidate>> {
    let items: Vec<RankedCandidate> = candidates
        .iter()
        .zip(preds)
        .map(|(c, p)| RankedCandidate {
            concept: c.concept.clone(),
            score: c.score,
            label: p.label,
            probability: p.probability,
        })
        .collect();
    Ok(if by_probability {
        let probs: Vec<f64> = preds.iter().map(|p| p.probability.unwrap_or(0.0)).collect();
        partial_rerank_by_probability(&items, &probs, alpha)?
    } else {
        let labels: Vec<Label> = preds.iter().map(|p| p.label.unwrap_or(Label::N)).collect();
        partial_rerank(&items, &labels, alpha)?
    })
}

pub fn rerank(ctx: &Ctx) -> Result<(), CliError> {
    let _lock = DirLock::acquire(&ctx.out)?;
    let mut log = ctx.stage_log("rerank")?;
    let candidates = ctx.candidates(&mut log)?;
    let preds = load_predictions(ctx, &candidates, &mut log)?;
    let p = &ctx.config.pipeline;
    let ranking = rerank_with(&candidates, &preds, p.alpha, p.rerank_by_probability)?;
    write_jsonl(&ctx.path(RANKING), &ranking)?;
    log.output(RANKING)?;
    log.finish()?;
    log::info!("reranked {} candidates at alpha {}", ranking.len(), p.alpha);
    Ok(())
}

fn load_ranking(ctx: &Ctx, log: &mut StageLog) -> Result<Vec<RankedCandidate>, CliError> {
    let path = ctx.artifact(RANKING, "rerank")?;
    log.input(RANKING, &path)?;
    Ok(read_jsonl_strict(&path)?)
}

fn load_tally(path: &Path, log: &mut StageLog) -> Result<FeedbackTally, CliError> {
    if !path.is_file() {
        return Err(CliError::Config(format!("events file {} does not exist", path.display())));
    }
    log.input("events", path)?;
    let events: Vec<DeleteEvent> = read_jsonl(path).map_err(anyhow::Error::from)?;
    let mut tally = FeedbackTally::new("all");
    for e in &events {
        tally.record(&e.concept);
    }
    Ok(tally)
}

#[derive(Debug, Serialize)]
struct MethodScore {
    method: &'static str,
    map: f64,
}

#[derive(Debug, Serialize)]
struct EvaluationReport {
    split: &'static str,
    labeled_in_list: usize,
    methods: Vec<MethodScore>,
}

pub fn evaluate_map(ctx: &Ctx) -> Result<(), CliError> {
    let _lock = DirLock::acquire(&ctx.out)?;
    let mut log = ctx.stage_log("evaluate")?;
    let relevance = ctx.relevance("evaluate")?;
    let candidates = ctx.candidates(&mut log)?;
    let ranking = load_ranking(ctx, &mut log)?;
    let expanded: Vec<String> = candidates.iter().map(|c| c.concept.clone()).collect();
    let ebm = baseline_ebm(&expanded, &ctx.concepts, &ctx.data.store).map_err(anyhow::Error::from)?;
    let pr = baseline_pr(&expanded, &ctx.concepts, &ctx.data.store, &ctx.config.evaluation.pagerank)
        .map_err(anyhow::Error::from)?;
    let lists: [(&'static str, Vec<&str>); 4] = [
        ("MOOC", expanded.iter().map(String::as_str).collect()),
        ("MOOC-C", ranking.iter().map(|r| r.concept.as_str()).collect()),
        ("EBM", ebm.ids().collect()),
        ("PR", pr.ids().collect()),
    ];
    let mut methods = Vec::new();
    for (method, ids) in &lists {
        methods.push(MethodScore {
            method,
            map: map_of(ids.iter().copied(), &relevance)?,
        });
    }
    let report = EvaluationReport {
        split: "test",
        labeled_in_list: expanded.iter().filter(|c| relevance.contains_key(*c)).count(),
        methods,
    };
    write_json(&ctx.path(EVALUATION_JSON), &report)?;
    let mut w = create(&ctx.path(EVALUATION_CSV))?;
    writeln!(w, "method,map").map_err(anyhow::Error::from)?;
    for m in &report.methods {
        writeln!(w, "{},{}", m.method, m.map).map_err(anyhow::Error::from)?;
    }
    w.flush().map_err(anyhow::Error::from)?;
    log.output(EVALUATION_JSON)?;
    log.output(EVALUATION_CSV)?;
    log.finish()?;
    for m in &report.methods {
        println!("{}\t{:.4}", m.method, m.map);
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct CorrectionReport {
    n: usize,
    correction_rate: f64,
    deletions: u64,
}

pub fn evaluate_cr(ctx: &Ctx, n: usize, events: &Path) -> Result<(), CliError> {
    let _lock = DirLock::acquire(&ctx.out)?;
    let mut log = ctx.stage_log("evaluate-cr")?;
    log.arg("n", n);
    let ranking = load_ranking(ctx, &mut log)?;
    let tally = load_tally(events, &mut log)?;
    let value = correction_rate(ranking.iter().map(|r| r.concept.as_str()), &tally, n).map_err(anyhow::Error::from)?;
    let report = CorrectionReport {
        n,
        correction_rate: value,
        deletions: ranking.iter().map(|r| tally.count(&r.concept)).sum(),
    };
    write_json(&ctx.path(CORRECTION_RATE), &report)?;
    log.output(CORRECTION_RATE)?;
    log.finish()?;
    println!("C_r@{n}\t{value:.4}");
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SweepParam {
    Tau,
    Alpha,
}

pub fn sweep(ctx: &Ctx, param: SweepParam, grid: &[f64]) -> Result<(), CliError> {
    let _lock = DirLock::acquire(&ctx.out)?;
    let mut log = ctx.stage_log("sweep")?;
    let relevance = ctx.relevance("sweep")?;
    let grid: Vec<f64> = if grid.is_empty() {
        match param {
            SweepParam::Alpha => (0..=10).map(|i| i as f64 / 10.0).collect(),
            SweepParam::Tau => (1..=10).map(f64::from).collect(),
        }
    } else {
        grid.to_vec()
    };
    log.arg("grid", format!("{grid:?}"));
    let mut points = Vec::new();
    match param {
        SweepParam::Alpha => {
            if let Some(a) = grid.iter().find(|a| !(0.0..=1.0).contains(*a)) {
                return Err(CliError::Config(format!("alpha {a} is outside [0, 1]")));
            }
            let candidates = ctx.candidates(&mut log)?;
            let preds = load_predictions(ctx, &candidates, &mut log)?;
            for &alpha in &grid {
                let ranking = rerank_with(&candidates, &preds, alpha, ctx.config.pipeline.rerank_by_probability)?;
                points.push(SweepPoint {
                    param: "alpha".into(),
                    value: alpha,
                    map: map_of(ranking.iter().map(|r| r.concept.as_str()), &relevance)?,
                });
            }
        }
        SweepParam::Tau => {
            if let Some(t) = grid.iter().find(|t| t.fract() != 0.0 || **t < 1.0) {
                return Err(CliError::Config(format!("tau {t} is not a positive integer")));
            }
            let labels = ctx.labels("sweep")?;
            let encoder = if ctx.path(ENCODER).is_file() {
                load_encoder(ctx, &mut log)?
            } else {
                let g = run_generation(&ctx.concepts, &ctx.data.kb, &ctx.data.store, &ctx.config.pipeline.generation, None)
                    .map_err(anyhow::Error::from)?;
                let paths: Vec<_> = g.candidates.iter().map(|c| c.path.clone()).collect();
                train_encoder(&paths, &ctx.config.pipeline.encoder, None).map_err(anyhow::Error::from)?
            };
            for &tau in &grid {
                let mut cfg = ctx.config.pipeline.clone();
                cfg.generation.cluster.tau = tau as usize;
                let run = match run_pipeline(ctx.inputs(), &cfg, &encoder, ClassifierUse::Train(labels), None) {
                    Err(PipelineError::Classify(e)) => {
                        log::warn!("tau {tau}: classifier not trained ({e}); scoring the generation order");
                        run_pipeline(ctx.inputs(), &cfg, &encoder, ClassifierUse::Skip, None)
                    }
                    other => other,
                }
                .map_err(anyhow::Error::from)?;
                // No labeled test concept in the list leaves MAP undefined.
                let map = map_of(run.ranking.iter().map(|r| r.concept.as_str()), &relevance).unwrap_or_else(|e| {
                    log::warn!("tau {tau}: {e}; MAP recorded as NaN");
                    f64::NAN
                });
                log::info!("tau {tau}: {} candidates, MAP {map:.4}", run.ranking.len());
                points.push(SweepPoint {
                    param: "tau".into(),
                    value: tau,
                    map,
                });
            }
        }
    }
    let mut w = create(&ctx.path(SWEEP))?;
    write_sweep_csv(&mut w, &points).map_err(anyhow::Error::from)?;
    w.flush().map_err(anyhow::Error::from)?;
    log.output(SWEEP)?;
    log.finish()?;
    for p in &points {
        println!("{}={}\t{:.4}", p.param, p.value, p.map);
    }
    Ok(())
}

pub fn optimize(ctx: &Ctx, events: &Path) -> Result<(), CliError> {
    let _lock = DirLock::acquire(&ctx.out)?;
    let mut log = ctx.stage_log("optimize")?;
    let ranking = load_ranking(ctx, &mut log)?;
    let encoder = load_encoder(ctx, &mut log)?;
    let tally = load_tally(events, &mut log)?;
    let classifier = if ctx.labels.is_none() && ctx.path(CLASSIFIER).is_file() {
        let path = ctx.path(CLASSIFIER);
        log.input(CLASSIFIER, &path)?;
        Some(Classifier::load(&path).map_err(anyhow::Error::from)?)
    } else {
        None
    };
    let with = match (&ctx.labels, &classifier) {
        (Some(l), _) => ClassifierUse::Train(l),
        (None, Some(c)) => ClassifierUse::Apply(c),
        (None, None) => ClassifierUse::Skip,
    };
    let current: Vec<String> = ranking.iter().map(|r| r.concept.clone()).collect();
    let outcome = match optimize_iteration(ctx.inputs(), &ctx.config.pipeline, &encoder, with, &tally, &current, None) {
        Err(PipelineError::NoFeedback) => {
            return Err(CliError::Runtime(anyhow!("no recorded deletion hits the current ranking")))
        }
        other => other.map_err(anyhow::Error::from)?,
    };
    write_jsonl(&ctx.path(OPTIMIZED_RANKING), &outcome.run.ranking)?;
    write_json(&ctx.path(RANK_CHANGES), &outcome.changes)?;
    log.output(OPTIMIZED_RANKING)?;
    log.output(RANK_CHANGES)?;
    log.finish()?;
    let moved = outcome.changes.iter().filter(|c| c.old_rank != c.new_rank).count();
    log::info!("{moved} of {} concepts changed rank", outcome.changes.len());
    if let Some(labels) = &ctx.labels {
        let relevance = labels.relevance(Split::Test);
        let before = map_of(current.iter().map(String::as_str), &relevance)?;
        let after = map_of(outcome.run.ranking.iter().map(|r| r.concept.as_str()), &relevance)?;
        println!("MAP before\t{before:.4}");
        println!("MAP after\t{after:.4}");
    }
    Ok(())
}

pub fn serve(config: Config, host: Option<String>, port: Option<u16>, state_dir: Option<PathBuf>) -> Result<(), CliError> {
    let mut config = config;
    if let Some(h) = host {
        config.serve.host = h;
    }
    if let Some(p) = port {
        config.serve.port = p;
    }
    if state_dir.is_some() {
        config.serve.state_dir = state_dir;
    }
    let addr: std::net::SocketAddr = format!("{}:{}", config.serve.host, config.serve.port)
        .parse()
        .map_err(|e| CliError::Config(format!("bad listen address: {e}")))?;
    let classifier_path = config.paths.output.join(CLASSIFIER);
    let ctx = Ctx::load(config)?;
    let classifier = if ctx.labels.is_none() && classifier_path.is_file() {
        Some(Classifier::load(&classifier_path).map_err(anyhow::Error::from)?)
    } else {
        None
    };
    let service_config = conexp_service::ServiceConfig {
        state_dir: ctx.config.state_dir(),
        pipeline: ctx.config.pipeline.clone(),
        cors_origin: ctx.config.serve.cors_origin.clone(),
    };
    let state = conexp_service::AppState::open(Arc::new(ctx.data), service_config, ctx.labels, classifier)
        .map_err(|e| anyhow!("starting service: {e}"))?;
    let runtime = tokio::runtime::Runtime::new().map_err(anyhow::Error::from)?;
    runtime.block_on(async move {
        let listener = conexp_service::bind(addr).await.with_context(|| format!("binding {addr}"))?;
        let local = listener.local_addr()?;
        println!("listening on http://{local}");
        std::io::stdout().flush()?;
        conexp_service::serve(listener, Arc::new(state)).await?;
        Ok::<_, anyhow::Error>(())
    })?;
    Ok(())
}
