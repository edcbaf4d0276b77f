use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::AnalysisError;

pub const MAX_LLOYD_ITERATIONS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    pub centroids: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    /// Sum of squared distances to assigned centroids.
    pub inertia: f64,
    /// Inertia after each assignment step.
    pub inertia_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl ClusterAssignment {
    pub fn k(&self) -> usize {
        self.centroids.len()
    }

    /// Number of clusters with at least one member.
    pub fn populated(&self) -> usize {
        let mut seen = vec![false; self.k()];
        for &l in &self.labels {
            seen[l] = true;
        }
        seen.into_iter().filter(|&s| s).count()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k()];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(p: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, centroid) in centroids.iter().enumerate() {
        let d = sq_dist(p, centroid);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn plus_plus_init(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut centroids = vec![points[rng.random_range(0..points.len())].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random_range(0.0..total);
            let mut chosen = points.len() - 1;
            for (i, &w) in d2.iter().enumerate() {
                if target < w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        } else {
            rng.random_range(0..points.len())
        };
        let c = points[pick].clone();
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, &c));
        }
        centroids.push(c);
    }
    centroids
}

fn update_centroids(points: &[Vec<f64>], labels: &[usize], centroids: &mut [Vec<f64>]) -> Vec<usize> {
    let dim = points[0].len();
    let k = centroids.len();
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (p, &l) in points.iter().zip(labels) {
        counts[l] += 1;
        for (s, x) in sums[l].iter_mut().zip(p) {
            *s += x;
        }
    }
    let mut empty = Vec::new();
    for c in 0..k {
        if counts[c] == 0 {
            empty.push(c);
        } else {
            let n = counts[c] as f64;
            centroids[c] = sums[c].iter().map(|s| s / n).collect();
        }
    }
    empty
}

/// k-means++ seeding followed by Lloyd iterations until the assignment stops
/// changing or [`MAX_LLOYD_ITERATIONS`] is reached. Empty clusters are
/// re-seeded with the point farthest from its centroid.
///
/// Panics if inertia increases between iterations.
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64) -> Result<ClusterAssignment, AnalysisError> {
    if k == 0 || points.len() < k {
        return Err(AnalysisError::TooFewPoints { points: points.len(), needed: k.max(1) });
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(AnalysisError::DimensionMismatch);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = plus_plus_init(points, k, &mut rng);
    let mut labels: Vec<usize> = Vec::new();
    let mut trace: Vec<f64> = Vec::new();
    let mut converged = false;
    for _ in 0..MAX_LLOYD_ITERATIONS {
        let assigned: Vec<(usize, f64)> = points.par_iter().map(|p| nearest(p, &centroids)).collect();
        let inertia: f64 = assigned.iter().map(|a| a.1).sum();
        if let Some(&prev) = trace.last() {
            assert!(
                inertia <= prev + 1e-9 * prev.abs().max(1.0),
                "k-means inertia increased from {prev} to {inertia}"
            );
        }
        trace.push(inertia);
        let next: Vec<usize> = assigned.iter().map(|a| a.0).collect();
        if next == labels {
            converged = true;
            break;
        }
        labels = next;
        let empty = update_centroids(points, &labels, &mut centroids);
        if !empty.is_empty() {
            let mut dist: Vec<f64> = points
                .iter()
                .zip(&labels)
                .map(|(p, &l)| sq_dist(p, &centroids[l]))
                .collect();
            for c in empty {
                let far = (0..points.len())
                    .max_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(b.cmp(&a)))
                    .expect("non-empty");
                centroids[c] = points[far].clone();
                dist[far] = 0.0;
            }
        }
    }
    if !converged {
        update_centroids(points, &labels, &mut centroids);
    }
    let inertia = points.iter().zip(&labels).map(|(p, &l)| sq_dist(p, &centroids[l])).sum();
    Ok(ClusterAssignment {
        iterations: trace.len(),
        centroids,
        labels,
        inertia,
        inertia_trace: trace,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_far_points() {
        let pts = vec![vec![0.0, 0.0], vec![10.0, 10.0]];
        let c = kmeans(&pts, 2, 1).unwrap();
        assert_eq!(c.inertia, 0.0);
        assert_ne!(c.labels[0], c.labels[1]);
    }

    #[test]
    fn identical_points() {
        let pts = vec![vec![1.0, 2.0, 3.0]; 7];
        let c = kmeans(&pts, 1, 0).unwrap();
        assert_eq!(c.centroids[0], vec![1.0, 2.0, 3.0]);
        assert_eq!(c.inertia, 0.0);
        let many = kmeans(&pts, 3, 0).unwrap();
        assert_eq!(many.populated(), 1);
        assert_eq!(many.inertia, 0.0);
    }

    #[test]
    fn too_few_points() {
        assert!(matches!(
            kmeans(&[vec![0.0]], 2, 0),
            Err(AnalysisError::TooFewPoints { points: 1, needed: 2 })
        ));
    }
}
