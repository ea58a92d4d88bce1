use std::collections::{BTreeSet, HashMap, HashSet};
use std::path::Path;

use super::{read_to_string, DataError};

/// Unit-normalized concept vectors.
///
/// Looking up an unknown concept is a miss (`None`), never a zero vector.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EmbeddingStore {
    dimension: usize,
    vectors: HashMap<String, Vec<f64>>,
    misses: Vec<String>,
}

fn normalized(id: &str, mut v: Vec<f64>) -> Result<Vec<f64>, DataError> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return Err(DataError::ZeroVector(id.to_string()));
    }
    v.iter_mut().for_each(|x| *x /= norm);
    Ok(v)
}

impl EmbeddingStore {
    /// Builds a store from raw vectors, normalizing each one.
    pub fn from_vectors<I, S>(vectors: I) -> Result<Self, DataError>
    where
        I: IntoIterator<Item = (S, Vec<f64>)>,
        S: Into<String>,
    {
        let mut store = EmbeddingStore::default();
        for (i, (id, v)) in vectors.into_iter().enumerate() {
            let id = id.into();
            if store.vectors.is_empty() {
                store.dimension = v.len();
            } else if v.len() != store.dimension {
                return Err(DataError::DimensionMismatch {
                    line: i + 1,
                    expected: store.dimension,
                    found: v.len(),
                });
            }
            let v = normalized(&id, v)?;
            store.vectors.insert(id, v);
        }
        Ok(store)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn get(&self, id: &str) -> Option<&[f64]> {
        self.vectors.get(id).map(Vec::as_slice)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.vectors.contains_key(id)
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Vocabulary entries the source file could not embed, sorted.
    pub fn misses(&self) -> &[String] {
        &self.misses
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.vectors.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }
}

/// Parses `token v1 .. vd` lines and composes a unit vector for every
/// vocabulary entry. Multi-word entries average their (normalized) token
/// vectors and renormalize; an entry with any missing token is a miss.
pub fn parse_embeddings<'a>(
    text: &str,
    vocabulary: impl IntoIterator<Item = &'a str>,
) -> Result<EmbeddingStore, DataError> {
    let vocabulary: BTreeSet<&str> = vocabulary.into_iter().collect();
    let wanted: HashSet<&str> = vocabulary.iter().flat_map(|c| c.split_whitespace()).collect();

    let mut dimension = None;
    let mut tokens: HashMap<&str, Vec<f64>> = HashMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let mut fields = raw.split_whitespace();
        let Some(token) = fields.next() else { continue };
        let values: Vec<&str> = fields.collect();
        // word2vec-style "count dim" header
        if line == 1 && values.len() == 1 && token.parse::<usize>().is_ok() && values[0].parse::<usize>().is_ok() {
            continue;
        }
        match dimension {
            None => dimension = Some(values.len()),
            Some(d) if d != values.len() => {
                return Err(DataError::DimensionMismatch {
                    line,
                    expected: d,
                    found: values.len(),
                })
            }
            _ => {}
        }
        if !wanted.contains(token) {
            continue;
        }
        let parsed = values
            .iter()
            .map(|s| s.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| DataError::Parse {
                what: "embeddings",
                line,
                message: e.to_string(),
            })?;
        match normalized(token, parsed) {
            Ok(v) => {
                tokens.insert(token, v);
            }
            Err(_) => log::warn!("embeddings line {line}: zero vector for `{token}` ignored"),
        }
    }

    let dimension = dimension.unwrap_or(0);
    let mut store = EmbeddingStore {
        dimension,
        ..Default::default()
    };
    for concept in &vocabulary {
        let parts: Vec<&str> = concept.split_whitespace().collect();
        let vecs: Option<Vec<&Vec<f64>>> = parts.iter().map(|t| tokens.get(t)).collect();
        let composed = match vecs {
            Some(vs) if !vs.is_empty() => {
                let mut sum = vec![0.0; dimension];
                for v in &vs {
                    sum.iter_mut().zip(v.iter()).for_each(|(s, x)| *s += x);
                }
                let n = vs.len() as f64;
                sum.iter_mut().for_each(|s| *s /= n);
                normalized(concept, sum).ok()
            }
            _ => None,
        };
        match composed {
            Some(v) => {
                store.vectors.insert(concept.to_string(), v);
            }
            None => store.misses.push(concept.to_string()),
        }
    }
    if !vocabulary.is_empty() && store.misses.len() * 5 > vocabulary.len() {
        log::warn!(
            "{} of {} vocabulary entries have no embedding: {:?}",
            store.misses.len(),
            vocabulary.len(),
            store.misses
        );
    }
    Ok(store)
}

pub fn load_embeddings<'a>(
    path: &Path,
    vocabulary: impl IntoIterator<Item = &'a str>,
) -> Result<EmbeddingStore, DataError> {
    parse_embeddings(&read_to_string(path)?, vocabulary)
}
