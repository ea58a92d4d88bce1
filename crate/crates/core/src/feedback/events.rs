use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::FeedbackError;

/// One line of the append-only deletion log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeleteEvent {
    /// Milliseconds since the Unix epoch.
    pub ts: u64,
    pub session: String,
    pub course: String,
    pub video: String,
    pub concept: String,
    /// Expansion epoch of the board the deletion was made on.
    #[serde(default)]
    pub epoch: u64,
}

/// Appends one JSON line and syncs it to disk before returning.
pub fn append_jsonl<T: Serialize>(file: &mut File, value: &T) -> Result<(), FeedbackError> {
    let mut line = serde_json::to_string(value).map_err(|e| FeedbackError::Io(e.to_string()))?;
    line.push('\n');
    file.write_all(line.as_bytes())
        .and_then(|_| file.sync_data())
        .map_err(|e| FeedbackError::Io(e.to_string()))
}

/// Reads a JSONL file; a missing file is empty. A malformed final line
/// (a write cut short by a crash) is dropped with a warning; malformed
/// lines elsewhere are errors.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, FeedbackError> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(FeedbackError::Io(format!("{}: {e}", path.display()))),
    };
    let lines: Vec<String> = BufReader::new(file)
        .lines()
        .collect::<Result<_, _>>()
        .map_err(|e| FeedbackError::Io(format!("{}: {e}", path.display())))?;
    let last = lines.iter().rposition(|l| !l.trim().is_empty());
    let mut out = Vec::with_capacity(lines.len());
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(line) {
            Ok(v) => out.push(v),
            Err(e) if Some(i) == last => {
                log::warn!("{}:{}: dropping truncated final line ({e})", path.display(), i + 1);
            }
            Err(e) => return Err(FeedbackError::Io(format!("{}:{}: {e}", path.display(), i + 1))),
        }
    }
    Ok(out)
}

/// Durable deletion log.
#[derive(Debug)]
pub struct EventLog {
    path: PathBuf,
    file: File,
}

impl EventLog {
    pub fn open(path: impl Into<PathBuf>) -> Result<Self, FeedbackError> {
        let path = path.into();
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(|e| FeedbackError::Io(e.to_string()))?;
        }
        let io = |e: std::io::Error| FeedbackError::Io(format!("{}: {e}", path.display()));
        // drop a partial final line left by a crash so later appends start clean
        if let Ok(bytes) = std::fs::read(&path) {
            if bytes.last().is_some_and(|&b| b != b'\n') {
                let keep = bytes.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
                log::warn!("{}: truncating partial final line", path.display());
                OpenOptions::new().write(true).open(&path).and_then(|f| f.set_len(keep as u64)).map_err(io)?;
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(&path).map_err(io)?;
        Ok(Self { path, file })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(&mut self, event: &DeleteEvent) -> Result<(), FeedbackError> {
        append_jsonl(&mut self.file, event)
    }

    pub fn read(&self) -> Result<Vec<DeleteEvent>, FeedbackError> {
        read_jsonl(&self.path)
    }
}
