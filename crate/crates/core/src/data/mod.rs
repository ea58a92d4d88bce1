//! Loading and validation of the three external inputs: the course corpus,
//! knowledge-base triples and pretrained word embeddings.

mod corpus;
mod embeddings;
mod kb;

pub use corpus::{load_corpus, parse_corpus, Course, CourseConceptSet, CourseData, LoadedCorpus, Video};
pub use embeddings::{load_embeddings, parse_embeddings, EmbeddingStore};
pub use kb::{load_kb, parse_kb, Direction, KbFormat, KnowledgeBase, Neighbor, Triple};

use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error in {what} at line {line}: {message}")]
    Parse {
        what: &'static str,
        line: usize,
        message: String,
    },
    #[error("invalid field `{field}`: {message}")]
    Schema { field: String, message: String },
    #[error("course `{0}` has no course concepts left after knowledge-base filtering")]
    EmptyConceptSet(String),
    #[error("embedding dimension mismatch at line {line}: expected {expected}, found {found}")]
    DimensionMismatch {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("vector for `{0}` has zero norm")]
    ZeroVector(String),
}

pub(crate) fn read_to_string(path: &std::path::Path) -> Result<String, DataError> {
    std::fs::read_to_string(path).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Knowledge base, corpus and embeddings loaded together; embeddings are
/// looked up for every knowledge-base concept.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub kb: KnowledgeBase,
    pub corpus: LoadedCorpus,
    pub store: EmbeddingStore,
}

impl Dataset {
    pub fn load(corpus: &Path, kb: &Path, embeddings: &Path) -> Result<Self, DataError> {
        let kb = load_kb(kb)?;
        let corpus = load_corpus(corpus, &kb)?;
        let store = load_embeddings(embeddings, kb.concepts().iter().map(String::as_str))?;
        Ok(Self { kb, corpus, store })
    }

    /// Course concepts of every course, keeping each concept's highest confidence.
    pub fn all_concepts(&self) -> CourseConceptSet {
        CourseConceptSet::merged(self.corpus.courses.iter().map(|c| &c.concepts))
    }

    pub fn courses(&self) -> Vec<Course> {
        self.corpus.courses.iter().map(|c| c.course.clone()).collect()
    }
}
