use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{read_to_string, DataError};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Triple {
    pub head: String,
    pub relation: String,
    pub tail: String,
}

impl Triple {
    pub fn new(head: impl Into<String>, relation: impl Into<String>, tail: impl Into<String>) -> Self {
        Self {
            head: head.into(),
            relation: relation.into(),
            tail: tail.into(),
        }
    }

    fn validate(&self, line: usize, what: &'static str) -> Result<(), DataError> {
        for (name, value) in [("head", &self.head), ("relation", &self.relation), ("tail", &self.tail)] {
            if value.is_empty() {
                return Err(DataError::Parse {
                    what,
                    line,
                    message: format!("empty `{name}` field"),
                });
            }
        }
        Ok(())
    }
}

/// Which way a knowledge-base edge was walked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Reverse,
}

/// One concept directly connected to another, with the edge that connects them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Neighbor<'a> {
    pub relation: &'a str,
    pub concept: &'a str,
    pub direction: Direction,
}

/// Directed multigraph of concepts and typed relations.
///
/// Outgoing edges live in `adjacency`, incoming edges in a reverse index.
/// Both lists are kept sorted by relation, then by the other endpoint.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KnowledgeBase {
    concepts: BTreeSet<String>,
    relations: BTreeSet<String>,
    adjacency: BTreeMap<String, Vec<(String, String)>>,
    reverse: BTreeMap<String, Vec<(String, String)>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KbFormat {
    Tsv,
    Jsonl,
}

impl KbFormat {
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("json") => KbFormat::Jsonl,
            _ => KbFormat::Tsv,
        }
    }
}

impl KnowledgeBase {
    /// Builds a knowledge base, silently dropping duplicate triples.
    pub fn from_triples<I: IntoIterator<Item = Triple>>(triples: I) -> Self {
        let unique: BTreeSet<Triple> = triples.into_iter().collect();
        let mut kb = KnowledgeBase::default();
        for t in unique {
            kb.concepts.insert(t.head.clone());
            kb.concepts.insert(t.tail.clone());
            kb.relations.insert(t.relation.clone());
            kb.reverse
                .entry(t.tail.clone())
                .or_default()
                .push((t.relation.clone(), t.head.clone()));
            kb.adjacency.entry(t.head).or_default().push((t.relation, t.tail));
        }
        for list in kb.adjacency.values_mut().chain(kb.reverse.values_mut()) {
            list.sort();
        }
        kb
    }

    pub fn contains(&self, concept: &str) -> bool {
        self.concepts.contains(concept)
    }

    pub fn concepts(&self) -> &BTreeSet<String> {
        &self.concepts
    }

    pub fn relations(&self) -> &BTreeSet<String> {
        &self.relations
    }

    pub fn outgoing(&self, concept: &str) -> &[(String, String)] {
        self.adjacency.get(concept).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn incoming(&self, concept: &str) -> &[(String, String)] {
        self.reverse.get(concept).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn adjacency(&self) -> &BTreeMap<String, Vec<(String, String)>> {
        &self.adjacency
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.values().map(Vec::len).sum()
    }

    /// Directly connected concepts: outgoing edges first, then incoming ones,
    /// each in adjacency order.
    pub fn neighbors<'a>(&'a self, concept: &str) -> impl Iterator<Item = Neighbor<'a>> + 'a {
        let fwd = self.outgoing(concept).iter().map(|(r, t)| Neighbor {
            relation: r,
            concept: t,
            direction: Direction::Forward,
        });
        let rev = self.incoming(concept).iter().map(|(r, h)| Neighbor {
            relation: r,
            concept: h,
            direction: Direction::Reverse,
        });
        fwd.chain(rev)
    }

    /// True when the hop `from -relation-> to` (walked in `direction`) is an edge.
    pub fn has_edge(&self, from: &str, relation: &str, to: &str, direction: Direction) -> bool {
        let (head, tail) = match direction {
            Direction::Forward => (from, to),
            Direction::Reverse => (to, from),
        };
        self.outgoing(head)
            .binary_search_by(|(r, t)| (r.as_str(), t.as_str()).cmp(&(relation, tail)))
            .is_ok()
    }

    pub fn triples(&self) -> impl Iterator<Item = Triple> + '_ {
        self.adjacency
            .iter()
            .flat_map(|(h, edges)| edges.iter().map(move |(r, t)| Triple::new(h.clone(), r.clone(), t.clone())))
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for t in self.triples() {
            let _ = writeln!(out, "{}\t{}\t{}", t.head, t.relation, t.tail);
        }
        out
    }
}

pub fn parse_kb(text: &str, format: KbFormat) -> Result<KnowledgeBase, DataError> {
    let mut triples = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let triple = match format {
            KbFormat::Tsv => {
                let fields: Vec<&str> = raw.trim_end_matches('\r').split('\t').collect();
                if fields.len() != 3 {
                    return Err(DataError::Parse {
                        what: "knowledge base",
                        line,
                        message: format!("expected 3 tab-separated fields, found {}", fields.len()),
                    });
                }
                Triple::new(fields[0].trim(), fields[1].trim(), fields[2].trim())
            }
            KbFormat::Jsonl => serde_json::from_str::<Triple>(raw).map_err(|e| DataError::Parse {
                what: "knowledge base",
                line,
                message: e.to_string(),
            })?,
        };
        triple.validate(line, "knowledge base")?;
        triples.push(triple);
    }
    Ok(KnowledgeBase::from_triples(triples))
}

/// Loads triples from TSV (`head\trelation\ttail`) or JSONL (by `.jsonl` extension).
pub fn load_kb(path: &Path) -> Result<KnowledgeBase, DataError> {
    let text = read_to_string(path)?;
    parse_kb(&text, KbFormat::from_path(path))
}
