//! Output directory bookkeeping: the stage manifest and the stage lock.

use std::collections::BTreeMap;
use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::Config;
use crate::CliError;

pub const MANIFEST: &str = "manifest.json";
pub const LOCK: &str = ".conexp.lock";

pub fn sha256_file(path: &Path) -> anyhow::Result<String> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

pub fn config_hash(config: &Config) -> String {
    let text = serde_json::to_string(config).expect("config serializes");
    hex::encode(Sha256::digest(text.as_bytes()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub config_hash: String,
    /// Full effective configuration, enough to rerun the stage.
    pub config: Config,
    /// SHA-256 of every file read, keyed by role or artifact name.
    pub inputs: BTreeMap<String, String>,
    /// SHA-256 of every artifact written, keyed by file name.
    pub outputs: BTreeMap<String, String>,
    #[serde(default)]
    pub args: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub stages: BTreeMap<String, StageRecord>,
}

impl Manifest {
    pub fn load(dir: &Path) -> anyhow::Result<Self> {
        let path = dir.join(MANIFEST);
        if !path.exists() {
            return Ok(Self::default());
        }
        let text = std::fs::read_to_string(&path)?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn save(&self, dir: &Path) -> anyhow::Result<()> {
        let tmp = dir.join(format!("{MANIFEST}.tmp"));
        std::fs::write(&tmp, serde_json::to_string_pretty(self)? + "\n")?;
        std::fs::rename(&tmp, dir.join(MANIFEST))?;
        Ok(())
    }
}

/// Collects digests while a stage runs and merges them into the manifest.
pub struct StageLog {
    name: &'static str,
    dir: PathBuf,
    record: StageRecord,
}

impl StageLog {
    pub fn new(name: &'static str, dir: &Path, config: &Config) -> Self {
        Self {
            name,
            dir: dir.to_path_buf(),
            record: StageRecord {
                config_hash: config_hash(config),
                config: config.clone(),
                inputs: BTreeMap::new(),
                outputs: BTreeMap::new(),
                args: BTreeMap::new(),
            },
        }
    }

    pub fn input(&mut self, key: impl Into<String>, path: &Path) -> anyhow::Result<()> {
        self.record.inputs.insert(key.into(), sha256_file(path)?);
        Ok(())
    }

    pub fn output(&mut self, name: &str) -> anyhow::Result<()> {
        let digest = sha256_file(&self.dir.join(name))?;
        self.record.outputs.insert(name.to_string(), digest);
        Ok(())
    }

    pub fn arg(&mut self, key: &str, value: impl ToString) {
        self.record.args.insert(key.to_string(), value.to_string());
    }

    pub fn finish(self) -> anyhow::Result<()> {
        let mut manifest = Manifest::load(&self.dir)?;
        manifest.stages.insert(self.name.to_string(), self.record);
        manifest.save(&self.dir)
    }
}

/// Exclusive claim on an output directory, released on drop.
pub struct DirLock {
    path: PathBuf,
}

impl DirLock {
    pub fn acquire(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Config(format!("cannot create output dir {}: {e}", dir.display())))?;
        let path = dir.join(LOCK);
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
                Ok(Self { path })
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(CliError::Runtime(anyhow::anyhow!(
                "output dir {} is in use by another stage (remove {} if no stage is running)",
                dir.display(),
                path.display()
            ))),
            Err(e) => Err(CliError::Runtime(e.into())),
        }
    }
}

impl Drop for DirLock {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.path);
    }
}
