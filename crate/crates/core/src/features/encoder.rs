use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::gru::{Gru, GruStep, Mat};
use super::FeatureError;
use crate::data::EmbeddingStore;
use crate::expansion::SearchPath;

const BOS: usize = 0;
const EOS: usize = 1;
const UNK: usize = 2;
const SPECIALS: [&str; 3] = ["<bos>", "<eos>", "<unk>"];
const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncoderConfig {
    pub hidden: usize,
    /// Token embedding width when no embedding store supplies one.
    pub embedding: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            hidden: 32,
            embedding: 16,
            epochs: 200,
            learning_rate: 0.1,
            seed: 17,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Params {
    embed: Mat,
    encoder: Gru,
    decoder: Gru,
    out_w: Mat,
    out_b: Vec<f64>,
}

impl Params {
    fn zeros_like(&self) -> Self {
        Self {
            embed: Mat::zeros(self.embed.rows, self.embed.cols),
            encoder: self.encoder.zeros_like(),
            decoder: self.decoder.zeros_like(),
            out_w: Mat::zeros(self.out_w.rows, self.out_w.cols),
            out_b: vec![0.0; self.out_b.len()],
        }
    }

    fn tensors_mut(&mut self) -> Vec<&mut Vec<f64>> {
        let mut v: Vec<&mut Vec<f64>> = vec![&mut self.embed.data];
        v.extend(self.encoder.tensors_mut());
        v.extend(self.decoder.tensors_mut());
        v.push(&mut self.out_w.data);
        v.push(&mut self.out_b);
        v
    }

    fn tensors(&self) -> Vec<&Vec<f64>> {
        let mut v: Vec<&Vec<f64>> = vec![&self.embed.data];
        v.extend(self.encoder.tensors());
        v.extend(self.decoder.tensors());
        v.push(&self.out_w.data);
        v.push(&self.out_b);
        v
    }
}

/// Per-epoch training summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingReport {
    /// Mean per-token cross-entropy over the corpus after each epoch.
    pub losses: Vec<f64>,
    /// Greedy reconstruction token accuracy after the last epoch.
    pub accuracy: f64,
}

/// Sequence autoencoder over search-path tokens.
///
/// The encoder's final hidden state is the fixed-length path code. The
/// decoder starts from that state, sees it again at every step next to the
/// previous token, and is trained with teacher forcing to reproduce the path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathEncoder {
    version: u32,
    vocab: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, usize>,
    params: Params,
    pub report: TrainingReport,
}

fn softmax(logits: &mut [f64]) {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in logits.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    logits.iter_mut().for_each(|v| *v /= sum);
}

struct DecodeStep {
    cell: GruStep,
    probs: Vec<f64>,
}

impl PathEncoder {
    fn with_vocab(vocab: Vec<String>, params: Params) -> Self {
        let index = vocab.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Self {
            version: CHECKPOINT_VERSION,
            vocab,
            index,
            params,
            report: TrainingReport {
                losses: Vec::new(),
                accuracy: 0.0,
            },
        }
    }

    /// Builds an untrained model over the tokens of `sequences`.
    fn init(sequences: &[Vec<String>], config: &EncoderConfig, store: Option<&EmbeddingStore>) -> Self {
        let tokens: BTreeSet<&str> = sequences.iter().flatten().map(String::as_str).collect();
        let vocab: Vec<String> = SPECIALS
            .iter()
            .copied()
            .chain(tokens.into_iter())
            .map(str::to_string)
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let width = store.map(EmbeddingStore::dimension).filter(|d| *d > 0).unwrap_or(config.embedding);
        let mut embed = Mat::random(vocab.len(), width, 0.5, &mut rng);
        if let Some(store) = store {
            for (i, tok) in vocab.iter().enumerate() {
                if let Some(v) = store.get(tok) {
                    embed.row_mut(i).copy_from_slice(v);
                }
            }
        }
        let h = config.hidden;
        let params = Params {
            encoder: Gru::new(width, h, &mut rng),
            decoder: Gru::new(width + h, h, &mut rng),
            out_w: Mat::random(vocab.len(), h, 1.0 / (h as f64).sqrt(), &mut rng),
            out_b: vec![0.0; vocab.len()],
            embed,
        };
        Self::with_vocab(vocab, params)
    }

    pub fn hidden(&self) -> usize {
        self.params.encoder.hidden()
    }

    pub fn vocabulary(&self) -> &[String] {
        &self.vocab
    }

    fn ids(&self, tokens: &[String]) -> Vec<usize> {
        tokens.iter().map(|t| self.index.get(t).copied().unwrap_or(UNK)).collect()
    }

    fn encode_ids(&self, ids: &[usize]) -> Vec<GruStep> {
        let mut h = vec![0.0; self.hidden()];
        let mut steps = Vec::with_capacity(ids.len());
        for &id in ids {
            let s = self.params.encoder.step(self.params.embed.row(id), &h);
            h.clone_from(&s.h);
            steps.push(s);
        }
        steps
    }

    fn decode_step(&self, input: usize, code: &[f64], h: &[f64]) -> DecodeStep {
        let mut x = self.params.embed.row(input).to_vec();
        x.extend_from_slice(code);
        let cell = self.params.decoder.step(&x, h);
        let mut probs = self.params.out_b.clone();
        self.params.out_w.mul_add(&cell.h, &mut probs);
        softmax(&mut probs);
        DecodeStep { cell, probs }
    }

    /// Mean cross-entropy of reconstructing `ids`, with gradients if asked.
    fn loss(&self, ids: &[usize], grad: Option<&mut Params>) -> f64 {
        let enc = self.encode_ids(ids);
        let code = enc.last().expect("nonempty sequence").h.clone();
        let targets: Vec<usize> = ids.iter().copied().chain([EOS]).collect();
        let inputs: Vec<usize> = [BOS].into_iter().chain(ids.iter().copied()).collect();
        let scale = 1.0 / targets.len() as f64;

        let mut h = code.clone();
        let mut steps = Vec::with_capacity(targets.len());
        let mut loss = 0.0;
        for (&input, &target) in inputs.iter().zip(&targets) {
            let s = self.decode_step(input, &code, &h);
            loss -= s.probs[target].max(1e-300).ln();
            h.clone_from(&s.cell.h);
            steps.push(s);
        }
        loss *= scale;

        let Some(grad) = grad else { return loss };
        let width = self.params.embed.cols;
        let mut d_code = vec![0.0; code.len()];
        let mut dh = vec![0.0; code.len()];
        for (t, s) in steps.iter().enumerate().rev() {
            let mut dlogits = s.probs.clone();
            dlogits[targets[t]] -= 1.0;
            dlogits.iter_mut().for_each(|v| *v *= scale);
            grad.out_w.add_outer(&dlogits, &s.cell.h);
            grad.out_b.iter_mut().zip(&dlogits).for_each(|(g, v)| *g += v);
            self.params.out_w.mul_t_add(&dlogits, &mut dh);
            let (dx, dh_prev) = self.params.decoder.backward(&s.cell, &dh, &mut grad.decoder);
            grad.embed
                .row_mut(inputs[t])
                .iter_mut()
                .zip(&dx[..width])
                .for_each(|(g, v)| *g += v);
            d_code.iter_mut().zip(&dx[width..]).for_each(|(g, v)| *g += v);
            dh = dh_prev;
        }
        // the decoder's initial state is the code itself
        d_code.iter_mut().zip(&dh).for_each(|(g, v)| *g += v);

        let mut dh = d_code;
        for (t, s) in enc.iter().enumerate().rev() {
            let (dx, dh_prev) = self.params.encoder.backward(s, &dh, &mut grad.encoder);
            grad.embed
                .row_mut(ids[t])
                .iter_mut()
                .zip(&dx)
                .for_each(|(g, v)| *g += v);
            dh = dh_prev;
        }
        loss
    }

    fn greedy_matches(&self, ids: &[usize]) -> (usize, usize) {
        let enc = self.encode_ids(ids);
        let code = enc.last().expect("nonempty sequence").h.clone();
        let targets: Vec<usize> = ids.iter().copied().chain([EOS]).collect();
        let mut h = code.clone();
        let mut input = BOS;
        let mut hits = 0;
        for &target in &targets {
            let s = self.decode_step(input, &code, &h);
            let best = s
                .probs
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
                .map(|(i, _)| i)
                .expect("nonempty vocabulary");
            hits += usize::from(best == target);
            input = best;
            h = s.cell.h;
        }
        (hits, targets.len())
    }

    /// Trains on raw token sequences (used by [`train_encoder`]).
    pub fn train_sequences(
        sequences: &[Vec<String>],
        config: &EncoderConfig,
        store: Option<&EmbeddingStore>,
    ) -> Result<Self, FeatureError> {
        if sequences.is_empty() {
            return Err(FeatureError::EmptyCorpus);
        }
        if sequences.iter().any(Vec::is_empty) {
            return Err(FeatureError::EmptyPath);
        }
        let mut model = Self::init(sequences, config, store);
        let corpus: Vec<Vec<usize>> = sequences.iter().map(|s| model.ids(s)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(1));
        let mut order: Vec<usize> = (0..corpus.len()).collect();
        let mut grad = model.params.zeros_like();
        for _ in 0..config.epochs {
            order.shuffle(&mut rng);
            for &i in &order {
                grad.tensors_mut().into_iter().for_each(|t| t.fill(0.0));
                model.loss(&corpus[i], Some(&mut grad));
                for (p, g) in model.params.tensors_mut().into_iter().zip(grad.tensors()) {
                    p.iter_mut().zip(g).for_each(|(p, g)| *p -= config.learning_rate * g);
                }
            }
            let epoch_loss = corpus.iter().map(|ids| model.loss(ids, None)).sum::<f64>() / corpus.len() as f64;
            model.report.losses.push(epoch_loss);
        }
        model.report.accuracy = model.accuracy_ids(&corpus);
        Ok(model)
    }

    fn accuracy_ids(&self, corpus: &[Vec<usize>]) -> f64 {
        let (hits, total) = corpus
            .iter()
            .map(|ids| self.greedy_matches(ids))
            .fold((0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
        hits as f64 / total.max(1) as f64
    }

    /// Greedy reconstruction token accuracy (end marker included) over `paths`.
    pub fn reconstruction_accuracy(&self, paths: &[SearchPath]) -> f64 {
        let corpus: Vec<Vec<usize>> = paths.iter().map(|p| self.ids(&p.tokens())).collect();
        self.accuracy_ids(&corpus)
    }

    /// Fixed-length code of a token sequence: the encoder's final hidden state.
    /// Unknown tokens map to the reserved unknown token.
    pub fn encode_tokens(&self, tokens: &[String]) -> Result<Vec<f64>, FeatureError> {
        if tokens.is_empty() {
            return Err(FeatureError::EmptyPath);
        }
        Ok(self.encode_ids(&self.ids(tokens)).pop().expect("nonempty").h)
    }

    pub fn encode_path(&self, path: &SearchPath) -> Result<Vec<f64>, FeatureError> {
        self.encode_tokens(&path.tokens())
    }

    /// Largest relative disagreement between the analytic gradient and central
    /// finite differences of the loss, over every parameter.
    ///
    /// Relative error is `|a - n| / max(|a|, |n|)`, counted as zero when both
    /// are below `floor`.
    pub fn gradient_check(&self, tokens: &[String], eps: f64, floor: f64) -> f64 {
        let ids = self.ids(tokens);
        let mut analytic = self.params.zeros_like();
        self.loss(&ids, Some(&mut analytic));
        let analytic: Vec<f64> = analytic.tensors().into_iter().flatten().copied().collect();
        let mut probe = self.clone();
        let mut worst: f64 = 0.0;
        let mut k = 0;
        for t in 0..probe.params.tensors().len() {
            for j in 0..probe.params.tensors()[t].len() {
                let orig = probe.params.tensors()[t][j];
                probe.params.tensors_mut()[t][j] = orig + eps;
                let up = probe.loss(&ids, None);
                probe.params.tensors_mut()[t][j] = orig - eps;
                let down = probe.loss(&ids, None);
                probe.params.tensors_mut()[t][j] = orig;
                let numeric = (up - down) / (2.0 * eps);
                let a = analytic[k];
                k += 1;
                let scale = a.abs().max(numeric.abs());
                if scale < floor {
                    continue;
                }
                worst = worst.max((a - numeric).abs() / scale);
            }
        }
        worst
    }

    pub fn save(&self, path: &Path) -> Result<(), FeatureError> {
        let text = serde_json::to_string(self).map_err(|e| FeatureError::Checkpoint(e.to_string()))?;
        std::fs::write(path, text).map_err(|e| FeatureError::Checkpoint(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, FeatureError> {
        let text = std::fs::read_to_string(path).map_err(|e| FeatureError::Checkpoint(e.to_string()))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, FeatureError> {
        let mut enc: Self = serde_json::from_str(text).map_err(|e| FeatureError::Checkpoint(e.to_string()))?;
        if enc.version != CHECKPOINT_VERSION {
            return Err(FeatureError::Checkpoint(format!("unsupported checkpoint version {}", enc.version)));
        }
        enc.index = enc.vocab.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Ok(enc)
    }
}

/// Trains the path autoencoder on a corpus of search paths.
pub fn train_encoder(
    paths: &[SearchPath],
    config: &EncoderConfig,
    store: Option<&EmbeddingStore>,
) -> Result<PathEncoder, FeatureError> {
    let sequences: Vec<Vec<String>> = paths.iter().map(SearchPath::tokens).collect();
    PathEncoder::train_sequences(&sequences, config, store)
}
