use serde::{Deserialize, Serialize};

use crate::geometry::{cosine, lookup, ConceptCluster, GeometryError, VectorLookup};

/// Which confidence score to compute for an admitted concept.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreVariant {
    /// Direct similarity plus cluster-mediated similarity.
    #[default]
    Plain,
    /// As `Plain`, with the direct term discounted by the deletion ratio.
    FeedbackAdjusted,
}

/// Confidence score of concept vector `e` reached from cluster member `anchor`:
///
/// `s = cos(e, anchor) * (1 - dr) + sum_k cos(c_k, anchor) * cos(e, c_k)`
///
/// over members `c_k` of `cluster` other than the anchor (unless
/// `include_anchor`). `dr` only applies to [`ScoreVariant::FeedbackAdjusted`].
pub fn score_candidate<L: VectorLookup + ?Sized>(
    e: &[f64],
    anchor: &str,
    cluster: &ConceptCluster,
    store: &L,
    variant: ScoreVariant,
    dr: f64,
    include_anchor: bool,
) -> Result<f64, GeometryError> {
    let a = lookup(store, anchor)?;
    let direct = cosine(e, a)?;
    let discount = match variant {
        ScoreVariant::Plain => 1.0,
        ScoreVariant::FeedbackAdjusted => 1.0 - dr,
    };
    let mut mediated = 0.0;
    for member in &cluster.members {
        if member == anchor && !include_anchor {
            continue;
        }
        let c = lookup(store, member)?;
        mediated += cosine(c, a)? * cosine(e, c)?;
    }
    Ok(direct * discount + mediated)
}
