use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::{edis_unchecked, GeometryError};

const LEAF_SIZE: usize = 8;

// Rounding in the squared-sum can put a computed distance a hair below the
// exact splitting-plane gap; widen the pruning test so no tie is ever lost.
fn slack(r: f64) -> f64 {
    1e-12 * (1.0 + r)
}

#[derive(Debug, Clone)]
enum Node {
    Leaf { start: usize, end: usize },
    Split { axis: usize, value: f64, left: Box<Node>, right: Box<Node> },
}

/// Exact k-nearest-neighbor index over labelled points (K-D tree).
///
/// Results are ordered by distance, ties broken by id, and always match a
/// linear scan exactly.
#[derive(Debug, Clone)]
pub struct NnIndex {
    ids: Vec<String>,
    points: Vec<Vec<f64>>,
    // permutation of point indices; leaves own contiguous ranges
    order: Vec<usize>,
    root: Option<Node>,
    dim: usize,
}

#[derive(PartialEq)]
struct Hit {
    dist: f64,
    idx: usize,
}

impl Eq for Hit {}

impl Ord for Hit {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist.total_cmp(&other.dist).then(self.idx.cmp(&other.idx))
    }
}

impl PartialOrd for Hit {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl NnIndex {
    pub fn build<I, S>(points: I) -> Result<Self, GeometryError>
    where
        I: IntoIterator<Item = (S, Vec<f64>)>,
        S: Into<String>,
    {
        let mut labelled: Vec<(String, Vec<f64>)> = points.into_iter().map(|(s, v)| (s.into(), v)).collect();
        // sorting by id makes index order the tie-break order
        labelled.sort_by(|a, b| a.0.cmp(&b.0));
        let dim = labelled.first().map_or(0, |p| p.1.len());
        if let Some(p) = labelled.iter().find(|p| p.1.len() != dim) {
            return Err(GeometryError::DimensionMismatch(dim, p.1.len()));
        }
        let (ids, points): (Vec<_>, Vec<_>) = labelled.into_iter().unzip();
        let mut order: Vec<usize> = (0..points.len()).collect();
        let root = (!points.is_empty()).then(|| Self::split(&points, &mut order, 0, dim));
        Ok(Self {
            ids,
            points,
            order,
            root,
            dim,
        })
    }

    fn split(points: &[Vec<f64>], order: &mut [usize], offset: usize, dim: usize) -> Node {
        let n = order.len();
        if n <= LEAF_SIZE || dim == 0 {
            return Node::Leaf {
                start: offset,
                end: offset + n,
            };
        }
        // axis of widest spread
        let mut axis = 0;
        let mut best = f64::NEG_INFINITY;
        for a in 0..dim {
            let (lo, hi) = order.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
                (lo.min(points[i][a]), hi.max(points[i][a]))
            });
            if hi - lo > best {
                best = hi - lo;
                axis = a;
            }
        }
        if best <= 0.0 {
            return Node::Leaf {
                start: offset,
                end: offset + n,
            };
        }
        order.sort_by(|&a, &b| points[a][axis].total_cmp(&points[b][axis]).then(a.cmp(&b)));
        let mid = n / 2;
        let value = points[order[mid]][axis];
        let (lo, hi) = order.split_at_mut(mid);
        Node::Split {
            axis,
            value,
            left: Box::new(Self::split(points, lo, offset, dim)),
            right: Box::new(Self::split(points, hi, offset + mid, dim)),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    fn check_query(&self, q: &[f64]) -> Result<(), GeometryError> {
        if self.is_empty() {
            return Err(GeometryError::EmptyIndex);
        }
        if q.len() != self.dim {
            return Err(GeometryError::DimensionMismatch(self.dim, q.len()));
        }
        Ok(())
    }

    fn label(&self, hits: Vec<Hit>) -> Vec<(String, f64)> {
        hits.into_iter().map(|h| (self.ids[h.idx].clone(), h.dist)).collect()
    }

    /// The `k` nearest points to `q`, ascending by (distance, id).
    pub fn knn(&self, q: &[f64], k: usize) -> Result<Vec<(String, f64)>, GeometryError> {
        self.check_query(q)?;
        if k > self.len() {
            return Err(GeometryError::KTooLarge { k, size: self.len() });
        }
        let mut heap = BinaryHeap::with_capacity(k + 1);
        if k > 0 {
            self.knn_visit(self.root.as_ref().expect("nonempty"), q, k, &mut heap);
        }
        Ok(self.label(heap.into_sorted_vec()))
    }

    fn knn_visit(&self, node: &Node, q: &[f64], k: usize, heap: &mut BinaryHeap<Hit>) {
        match node {
            Node::Leaf { start, end } => {
                for &idx in &self.order[*start..*end] {
                    let hit = Hit {
                        dist: edis_unchecked(q, &self.points[idx]),
                        idx,
                    };
                    if heap.len() < k {
                        heap.push(hit);
                    } else if hit < *heap.peek().expect("k > 0") {
                        heap.pop();
                        heap.push(hit);
                    }
                }
            }
            Node::Split { axis, value, left, right } => {
                let gap = q[*axis] - value;
                let (near, far) = if gap < 0.0 { (left, right) } else { (right, left) };
                self.knn_visit(near, q, k, heap);
                let worst = heap.peek().map_or(f64::INFINITY, |h| h.dist);
                if heap.len() < k || gap.abs() <= worst + slack(worst) {
                    self.knn_visit(far, q, k, heap);
                }
            }
        }
    }

    /// All points strictly closer than `radius`, ascending by (distance, id).
    pub fn within(&self, q: &[f64], radius: f64) -> Result<Vec<(String, f64)>, GeometryError> {
        self.check_query(q)?;
        let mut hits = Vec::new();
        self.within_visit(self.root.as_ref().expect("nonempty"), q, radius, &mut hits);
        hits.sort();
        Ok(self.label(hits))
    }

    fn within_visit(&self, node: &Node, q: &[f64], radius: f64, hits: &mut Vec<Hit>) {
        match node {
            Node::Leaf { start, end } => {
                for &idx in &self.order[*start..*end] {
                    let dist = edis_unchecked(q, &self.points[idx]);
                    if dist < radius {
                        hits.push(Hit { dist, idx });
                    }
                }
            }
            Node::Split { axis, value, left, right } => {
                let gap = q[*axis] - value;
                let (near, far) = if gap < 0.0 { (left, right) } else { (right, left) };
                self.within_visit(near, q, radius, hits);
                if gap.abs() < radius + slack(radius) {
                    self.within_visit(far, q, radius, hits);
                }
            }
        }
    }

    /// Reference linear scan with the same ordering contract as [`NnIndex::knn`].
    pub fn knn_linear(&self, q: &[f64], k: usize) -> Result<Vec<(String, f64)>, GeometryError> {
        self.check_query(q)?;
        if k > self.len() {
            return Err(GeometryError::KTooLarge { k, size: self.len() });
        }
        let mut hits: Vec<Hit> = (0..self.len())
            .map(|idx| Hit {
                dist: edis_unchecked(q, &self.points[idx]),
                idx,
            })
            .collect();
        hits.sort();
        hits.truncate(k);
        Ok(self.label(hits))
    }

    pub fn within_linear(&self, q: &[f64], radius: f64) -> Result<Vec<(String, f64)>, GeometryError> {
        self.check_query(q)?;
        let mut hits: Vec<Hit> = (0..self.len())
            .map(|idx| Hit {
                dist: edis_unchecked(q, &self.points[idx]),
                idx,
            })
            .filter(|h| h.dist < radius)
            .collect();
        hits.sort();
        Ok(self.label(hits))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute(points: &[(String, Vec<f64>)], q: &[f64], k: usize) -> Vec<(String, f64)> {
        let mut all: Vec<(String, f64)> = points
            .iter()
            .map(|(id, p)| {
                let d = p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                (id.clone(), d)
            })
            .collect();
        all.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
        all.truncate(k);
        all
    }

    #[test]
    fn small_examples() {
        let idx = NnIndex::build([("origin", vec![0.0, 0.0]), ("one", vec![1.0, 1.0])]).unwrap();
        let r = idx.knn(&[0.1, 0.0], 1).unwrap();
        assert_eq!(r[0].0, "origin");
        let r = idx.knn(&[0.1, 0.0], 2).unwrap();
        assert_eq!(r.iter().map(|h| h.0.as_str()).collect::<Vec<_>>(), ["origin", "one"]);
        assert!(matches!(idx.knn(&[0.0, 0.0], 3), Err(GeometryError::KTooLarge { k: 3, size: 2 })));
    }

    #[test]
    fn matches_brute_force_on_random_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let points: Vec<(String, Vec<f64>)> = (0..200)
            .map(|i| (format!("p{i:03}"), (0..3).map(|_| rng.random_range(-1.0..1.0)).collect()))
            .collect();
        let idx = NnIndex::build(points.clone()).unwrap();
        for _ in 0..50 {
            let q: Vec<f64> = (0..3).map(|_| rng.random_range(-1.2..1.2)).collect();
            assert_eq!(idx.knn(&q, 5).unwrap(), brute(&points, &q, 5));
        }
    }

    #[test]
    fn duplicate_points_tie_by_id() {
        let pts: Vec<(String, Vec<f64>)> = (0..20).rev().map(|i| (format!("d{i:02}"), vec![0.5, 0.5])).collect();
        let idx = NnIndex::build(pts).unwrap();
        let r = idx.knn(&[0.0, 0.0], 3).unwrap();
        assert_eq!(r.iter().map(|h| h.0.as_str()).collect::<Vec<_>>(), ["d00", "d01", "d02"]);
    }

    #[test]
    fn radius_query_is_strict() {
        let idx = NnIndex::build([("a", vec![0.0]), ("b", vec![1.0]), ("c", vec![2.0])]).unwrap();
        let r = idx.within(&[0.0], 1.0).unwrap();
        assert_eq!(r, vec![("a".to_string(), 0.0)]);
        assert_eq!(idx.within(&[0.0], 1.0).unwrap(), idx.within_linear(&[0.0], 1.0).unwrap());
    }
}
