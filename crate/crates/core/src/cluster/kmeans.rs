//! Seeded k-means with k-means++ initialization and restarts.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ClusterError, Embedding};
use crate::linalg::DenseMatrix;
use crate::ProgramId;

pub const DEFAULT_SEED: u64 = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KMeansConfig {
    pub k: usize,
    pub seed: u64,
    pub restarts: usize,
    pub max_iterations: usize,
}

impl KMeansConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        KMeansConfig {
            k,
            seed,
            restarts: 10,
            max_iterations: 300,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    /// Labels renumbered by first appearance.
    pub labels: Vec<usize>,
    pub centroids: DenseMatrix,
    /// Within-cluster sum of squared distances.
    pub inertia: f64,
    pub iterations: usize,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(point: &[f64], centroids: &DenseMatrix) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for c in 0..centroids.rows() {
        let d = sq_dist(point, centroids.row(c));
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn plus_plus_init(points: &DenseMatrix, k: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
    let n = points.rows();
    let mut centroids = DenseMatrix::zeros(k, points.cols());
    let first = rng.random_range(0..n);
    centroids.row_mut(0).copy_from_slice(points.row(first));
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(points.row(i), points.row(first))).collect();
    for c in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = d2.iter().rposition(|&d| d > 0.0).expect("positive total");
            for (i, &d) in d2.iter().enumerate() {
                acc += d;
                if d > 0.0 && acc > target {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        centroids.row_mut(c).copy_from_slice(points.row(pick));
        for (i, slot) in d2.iter_mut().enumerate() {
            *slot = slot.min(sq_dist(points.row(i), points.row(pick)));
        }
    }
    centroids
}

fn recompute(points: &DenseMatrix, labels: &[usize], k: usize) -> (DenseMatrix, Vec<usize>) {
    let mut centroids = DenseMatrix::zeros(k, points.cols());
    let mut sizes = vec![0usize; k];
    for (i, &l) in labels.iter().enumerate() {
        sizes[l] += 1;
        for (c, x) in centroids.row_mut(l).iter_mut().zip(points.row(i)) {
            *c += x;
        }
    }
    for (l, &size) in sizes.iter().enumerate() {
        if size > 0 {
            centroids.row_mut(l).iter_mut().for_each(|c| *c /= size as f64);
        }
    }
    (centroids, sizes)
}

/// Moves, for every empty cluster, the point farthest from its centroid in
/// the currently largest cluster.
fn repair_empty(points: &DenseMatrix, labels: &mut [usize], k: usize) {
    loop {
        let (centroids, sizes) = recompute(points, labels, k);
        let Some(empty) = sizes.iter().position(|&s| s == 0) else {
            return;
        };
        let largest = (0..k).fold(0, |best, l| if sizes[l] > sizes[best] { l } else { best });
        if sizes[largest] < 2 {
            return;
        }
        let mut far = (usize::MAX, -1.0);
        for (i, &l) in labels.iter().enumerate() {
            if l == largest {
                let d = sq_dist(points.row(i), centroids.row(largest));
                if d > far.1 {
                    far = (i, d);
                }
            }
        }
        labels[far.0] = empty;
    }
}

fn lloyd(points: &DenseMatrix, mut centroids: DenseMatrix, max_iterations: usize) -> KMeansResult {
    let k = centroids.rows();
    let n = points.rows();
    let mut labels: Vec<usize> = (0..n).map(|i| nearest(points.row(i), &centroids).0).collect();
    let mut iterations = 0;
    loop {
        repair_empty(points, &mut labels, k);
        centroids = recompute(points, &labels, k).0;
        iterations += 1;
        if iterations >= max_iterations {
            break;
        }
        let next: Vec<usize> = (0..n).map(|i| nearest(points.row(i), &centroids).0).collect();
        if next == labels {
            break;
        }
        labels = next;
    }
    let inertia = labels
        .iter()
        .enumerate()
        .map(|(i, &l)| sq_dist(points.row(i), centroids.row(l)))
        .sum();
    KMeansResult {
        labels,
        centroids,
        inertia,
        iterations,
    }
}

fn relabel_by_first_appearance(result: &mut KMeansResult) {
    let k = result.centroids.rows();
    let mut map = vec![usize::MAX; k];
    let mut next = 0;
    for &l in &result.labels {
        if map[l] == usize::MAX {
            map[l] = next;
            next += 1;
        }
    }
    for slot in map.iter_mut().filter(|m| **m == usize::MAX) {
        *slot = next;
        next += 1;
    }
    let old = result.centroids.clone();
    for (from, &to) in map.iter().enumerate() {
        result.centroids.row_mut(to).copy_from_slice(old.row(from));
    }
    result.labels.iter_mut().for_each(|l| *l = map[*l]);
}

/// Best of `config.restarts` seeded runs by inertia (earliest run wins ties).
pub fn kmeans(points: &DenseMatrix, config: &KMeansConfig) -> Result<KMeansResult, ClusterError> {
    let n = points.rows();
    if config.k == 0 || config.k > n {
        return Err(ClusterError::InvalidK { k: config.k, n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut best: Option<KMeansResult> = None;
    for _ in 0..config.restarts.max(1) {
        let init = plus_plus_init(points, config.k, &mut rng);
        let run = lloyd(points, init, config.max_iterations.max(1));
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    let mut best = best.expect("at least one restart");
    relabel_by_first_appearance(&mut best);
    Ok(best)
}

/// Clusters the embedding rows; labels are not yet aligned across months.
pub fn cluster(embedding: &Embedding, k: usize, seed: u64) -> Result<BTreeMap<ProgramId, usize>, ClusterError> {
    let result = kmeans(&embedding.coordinates, &KMeansConfig::new(k, seed))?;
    Ok(embedding.programs.iter().cloned().zip(result.labels).collect())
}
