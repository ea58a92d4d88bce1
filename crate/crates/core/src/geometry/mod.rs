//! Vector kernels, the exact nearest-neighbor index and the hypersphere
//! concept-cluster model.

mod cluster;
mod kdtree;

pub use cluster::{build_cluster, ClusterConfig, ConceptCluster, ThresholdMode};
pub use kdtree::NnIndex;

use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use crate::data::EmbeddingStore;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("cosine of a zero vector is undefined")]
    ZeroVector,
    #[error("concept `{0}` has no embedding")]
    Unembedded(String),
    #[error("cluster needs at least one member")]
    EmptyCluster,
    #[error("k = {k} exceeds index size {size}")]
    KTooLarge { k: usize, size: usize },
    #[error("index is empty")]
    EmptyIndex,
}

/// Anything that maps concept ids to vectors.
pub trait VectorLookup {
    fn vector(&self, id: &str) -> Option<&[f64]>;
}

impl VectorLookup for EmbeddingStore {
    fn vector(&self, id: &str) -> Option<&[f64]> {
        self.get(id)
    }
}

impl VectorLookup for HashMap<String, Vec<f64>> {
    fn vector(&self, id: &str) -> Option<&[f64]> {
        self.get(id).map(Vec::as_slice)
    }
}

impl VectorLookup for BTreeMap<String, Vec<f64>> {
    fn vector(&self, id: &str) -> Option<&[f64]> {
        self.get(id).map(Vec::as_slice)
    }
}

pub(crate) fn lookup<'a, L: VectorLookup + ?Sized>(store: &'a L, id: &str) -> Result<&'a [f64], GeometryError> {
    store.vector(id).ok_or_else(|| GeometryError::Unembedded(id.to_string()))
}

fn check_dims(u: &[f64], v: &[f64]) -> Result<(), GeometryError> {
    if u.len() != v.len() {
        return Err(GeometryError::DimensionMismatch(u.len(), v.len()));
    }
    Ok(())
}

pub fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

pub fn norm(u: &[f64]) -> f64 {
    dot(u, u).sqrt()
}

/// Cosine similarity, clamped to [-1, 1].
pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64, GeometryError> {
    check_dims(u, v)?;
    let (nu, nv) = (norm(u), norm(v));
    if nu == 0.0 || nv == 0.0 {
        return Err(GeometryError::ZeroVector);
    }
    Ok((dot(u, v) / (nu * nv)).clamp(-1.0, 1.0))
}

/// Euclidean distance.
pub fn edis(u: &[f64], v: &[f64]) -> Result<f64, GeometryError> {
    check_dims(u, v)?;
    Ok(edis_unchecked(u, v))
}

pub(crate) fn edis_unchecked(u: &[f64], v: &[f64]) -> f64 {
    u.iter()
        .zip(v)
        .map(|(a, b)| {
            let d = a - b;
            d * d
        })
        .sum::<f64>()
        .sqrt()
}
