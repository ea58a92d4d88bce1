//! Run configuration: TOML file, then environment, then flags.

use std::path::{Path, PathBuf};

use conexp::evaluation::PrConfig;
use conexp::pipeline::PipelineConfig;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub corpus: Option<PathBuf>,
    pub kb: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    /// `concept \t 0|1 [\t split]`; needed to train the classifier and to evaluate.
    pub labels: Option<PathBuf>,
    pub output: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Self {
            corpus: None,
            kb: None,
            embeddings: None,
            labels: None,
            output: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSettings {
    /// Seed of the 2:1:1 split for label rows without an explicit split.
    pub split_seed: u64,
    pub pagerank: PrConfig,
}

impl Default for EvalSettings {
    fn default() -> Self {
        Self {
            split_seed: 7,
            pagerank: PrConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServeSettings {
    pub host: String,
    pub port: u16,
    /// Defaults to `<output>/state`.
    pub state_dir: Option<PathBuf>,
    pub cors_origin: Option<String>,
}

impl Default for ServeSettings {
    fn default() -> Self {
        Self {
            host: "127.0.0.1".into(),
            port: 8080,
            state_dir: None,
            cors_origin: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub paths: Paths,
    pub pipeline: PipelineConfig,
    pub evaluation: EvalSettings,
    pub serve: ServeSettings,
}

/// Values from flags or their environment variables; `None` leaves the file value.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub corpus: Option<PathBuf>,
    pub kb: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub tau: Option<usize>,
    pub alpha: Option<f64>,
    pub max_waves: Option<usize>,
}

fn resolve(base: &Path, p: &mut Option<PathBuf>) {
    if let Some(path) = p {
        if path.is_relative() {
            *path = base.join(&*path);
        }
    }
}

impl Config {
    /// Reads `file` (paths in it are relative to its directory) and applies overrides.
    pub fn load(file: Option<&Path>, over: &Overrides) -> Result<Self, CliError> {
        let mut config = match file {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
                let mut c: Config = toml::from_str(&text)
                    .map_err(|e| CliError::Config(format!("invalid config {}: {e}", path.display())))?;
                let base = path.parent().unwrap_or(Path::new("."));
                for p in [&mut c.paths.corpus, &mut c.paths.kb, &mut c.paths.embeddings, &mut c.paths.labels] {
                    resolve(base, p);
                }
                if c.paths.output.is_relative() {
                    c.paths.output = base.join(&c.paths.output);
                }
                let mut state = c.serve.state_dir.take();
                resolve(base, &mut state);
                c.serve.state_dir = state;
                c
            }
            None => Config::default(),
        };
        let p = &mut config.paths;
        p.corpus = over.corpus.clone().or(p.corpus.take());
        p.kb = over.kb.clone().or(p.kb.take());
        p.embeddings = over.embeddings.clone().or(p.embeddings.take());
        p.labels = over.labels.clone().or(p.labels.take());
        if let Some(o) = &over.output {
            p.output = o.clone();
        }
        let g = &mut config.pipeline;
        if let Some(t) = over.tau {
            g.generation.cluster.tau = t;
        }
        if let Some(w) = over.max_waves {
            g.generation.max_waves = w;
        }
        if let Some(a) = over.alpha {
            g.alpha = a;
        }
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<(), CliError> {
        let g = &self.pipeline;
        if g.generation.cluster.tau == 0 {
            return Err(CliError::Config("tau must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&g.alpha) {
            return Err(CliError::Config(format!("alpha {} is outside [0, 1]", g.alpha)));
        }
        if g.encoder.hidden == 0 || g.encoder.embedding == 0 {
            return Err(CliError::Config("encoder sizes must be positive".into()));
        }
        let pr = &self.evaluation.pagerank;
        if !(0.0..1.0).contains(&pr.damping) {
            return Err(CliError::Config(format!("pagerank damping {} is outside [0, 1)", pr.damping)));
        }
        if let Some(labels) = &self.paths.labels {
            if !labels.is_file() {
                return Err(CliError::Config(format!("labels file {} does not exist", labels.display())));
            }
        }
        Ok(())
    }

    /// The three data inputs every stage reads, checked to exist.
    pub fn inputs(&self) -> Result<[(&'static str, &Path); 3], CliError> {
        fn need<'a>(name: &'static str, p: &'a Option<PathBuf>) -> Result<(&'static str, &'a Path), CliError> {
            let p = p
                .as_deref()
                .ok_or_else(|| CliError::Config(format!("no {name} path given (--{name} or config paths.{name})")))?;
            if !p.is_file() {
                return Err(CliError::Config(format!("{name} file {} does not exist", p.display())));
            }
            Ok((name, p))
        }
        Ok([
            need("corpus", &self.paths.corpus)?,
            need("kb", &self.paths.kb)?,
            need("embeddings", &self.paths.embeddings)?,
        ])
    }

    pub fn state_dir(&self) -> PathBuf {
        self.serve
            .state_dir
            .clone()
            .unwrap_or_else(|| self.paths.output.join("state"))
    }
}
