use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::AnalysisError;

pub const POWER_TOLERANCE: f64 = 1e-9;
pub const POWER_MAX_ITERATIONS: usize = 1000;

/// Two leading principal components. Variances use the `n - 1` denominator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pca {
    pub mean: Vec<f64>,
    pub axes: [Vec<f64>; 2],
    pub variances: [f64; 2],
    pub total_variance: f64,
    pub ratios: [f64; 2],
    pub projections: Vec<[f64; 2]>,
}

impl Pca {
    pub fn project(&self, p: &[f64]) -> [f64; 2] {
        let c: Vec<f64> = p.iter().zip(&self.mean).map(|(x, m)| x - m).collect();
        [dot(&c, &self.axes[0]), dot(&c, &self.axes[1])]
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = norm(v);
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

/// Largest-magnitude coordinate made positive.
fn fix_sign(v: &mut [f64]) {
    let mut idx = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[idx].abs() {
            idx = i;
        }
    }
    if v[idx] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// `C v` for the covariance of the centered rows, minus the deflated parts.
fn cov_apply(rows: &[Vec<f64>], v: &[f64], deflate: &[(f64, &[f64])]) -> Vec<f64> {
    let dim = v.len();
    let scale = 1.0 / (rows.len() - 1) as f64;
    let mut out = rows
        .par_iter()
        .fold(
            || vec![0.0; dim],
            |mut acc, r| {
                let s = dot(r, v);
                for (a, x) in acc.iter_mut().zip(r) {
                    *a += s * x;
                }
                acc
            },
        )
        .reduce(
            || vec![0.0; dim],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(&b) {
                    *x += y;
                }
                a
            },
        );
    out.iter_mut().for_each(|x| *x *= scale);
    for &(lambda, axis) in deflate {
        let s = lambda * dot(axis, v);
        for (o, a) in out.iter_mut().zip(axis) {
            *o -= s * a;
        }
    }
    out
}

/// Start vector: the centered row with the largest residual after removing
/// the components along `against`.
fn start_vector(rows: &[Vec<f64>], against: &[&[f64]]) -> Option<Vec<f64>> {
    let mut best: Option<(f64, Vec<f64>)> = None;
    for r in rows {
        let mut v = r.clone();
        for a in against {
            let s = dot(&v, a);
            v.iter_mut().zip(*a).for_each(|(x, y)| *x -= s * y);
        }
        let n = norm(&v);
        if n > 1e-12 && best.as_ref().is_none_or(|b| n > b.0) {
            best = Some((n, v));
        }
    }
    best.map(|(_, mut v)| {
        normalize(&mut v);
        v
    })
}

fn power_iteration(rows: &[Vec<f64>], mut v: Vec<f64>, deflate: &[(f64, &[f64])]) -> (f64, Vec<f64>) {
    for _ in 0..POWER_MAX_ITERATIONS {
        let mut w = cov_apply(rows, &v, deflate);
        if normalize(&mut w) == 0.0 {
            break;
        }
        let delta = w.iter().zip(&v).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let flipped = w.iter().zip(&v).map(|(a, b)| (a + b).powi(2)).sum::<f64>().sqrt();
        v = w;
        if delta.min(flipped) < POWER_TOLERANCE {
            break;
        }
    }
    let lambda = dot(&v, &cov_apply(rows, &v, deflate)).max(0.0);
    (lambda, v)
}

/// Unit vector orthogonal to `a`, from the basis direction least aligned with it.
fn orthogonal_to(a: &[f64]) -> Vec<f64> {
    let idx = (0..a.len())
        .min_by(|&i, &j| a[i].abs().total_cmp(&a[j].abs()).then(i.cmp(&j)))
        .expect("non-empty");
    let mut v: Vec<f64> = a.iter().map(|x| -x * a[idx]).collect();
    v[idx] += 1.0;
    normalize(&mut v);
    v
}

/// Top two covariance eigenvectors by power iteration with deflation.
pub fn pca2(points: &[Vec<f64>]) -> Result<Pca, AnalysisError> {
    if points.len() < 3 {
        return Err(AnalysisError::TooFewPoints { points: points.len(), needed: 3 });
    }
    let dim = points[0].len();
    if dim < 2 || points.iter().any(|p| p.len() != dim) {
        return Err(AnalysisError::DimensionMismatch);
    }
    let n = points.len() as f64;
    let mut mean = vec![0.0; dim];
    for p in points {
        mean.iter_mut().zip(p).for_each(|(m, x)| *m += x);
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let rows: Vec<Vec<f64>> = points
        .iter()
        .map(|p| p.iter().zip(&mean).map(|(x, m)| x - m).collect())
        .collect();
    let total_variance = rows.iter().map(|r| dot(r, r)).sum::<f64>() / (n - 1.0);
    if total_variance <= 0.0 {
        return Err(AnalysisError::DegenerateData);
    }
    let start = start_vector(&rows, &[]).ok_or(AnalysisError::DegenerateData)?;
    let (l1, mut a1) = power_iteration(&rows, start, &[]);
    fix_sign(&mut a1);
    let (l2, mut a2) = match start_vector(&rows, &[&a1]) {
        Some(s) => {
            let (l, mut v) = power_iteration(&rows, s, &[(l1, &a1)]);
            // re-orthogonalize against round-off drift
            let s = dot(&v, &a1);
            v.iter_mut().zip(&a1).for_each(|(x, y)| *x -= s * y);
            normalize(&mut v);
            (l, v)
        }
        None => (0.0, orthogonal_to(&a1)),
    };
    fix_sign(&mut a2);
    let (mut l1, mut l2) = (l1, l2);
    if l2 > l1 {
        std::mem::swap(&mut l1, &mut l2);
        std::mem::swap(&mut a1, &mut a2);
    }
    let projections = rows.iter().map(|r| [dot(r, &a1), dot(r, &a2)]).collect();
    Ok(Pca {
        mean,
        axes: [a1, a2],
        variances: [l1, l2],
        total_variance,
        ratios: [l1 / total_variance, l2 / total_variance],
        projections,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_y_equals_2x() {
        let pts: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, 2.0 * i as f64]).collect();
        let p = pca2(&pts).unwrap();
        let s5 = 5f64.sqrt();
        assert!((p.axes[0][0] - 1.0 / s5).abs() < 1e-9);
        assert!((p.axes[0][1] - 2.0 / s5).abs() < 1e-9);
        assert!(p.variances[1].abs() < 1e-12);
        assert!(dot(&p.axes[0], &p.axes[1]).abs() < 1e-8);
        assert!((norm(&p.axes[1]) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn centered_projections() {
        let pts: Vec<Vec<f64>> = (0..20)
            .map(|i| vec![(i as f64).sin(), (i as f64 * 0.7).cos() + 3.0, i as f64 * 0.1])
            .collect();
        let p = pca2(&pts).unwrap();
        for c in 0..2 {
            let m = p.projections.iter().map(|x| x[c]).sum::<f64>() / 20.0;
            assert!(m.abs() < 1e-9);
        }
        assert!(p.ratios[0] >= p.ratios[1]);
    }

    #[test]
    fn degenerate() {
        assert!(matches!(pca2(&vec![vec![1.0, 1.0]; 5]), Err(AnalysisError::DegenerateData)));
        assert!(matches!(pca2(&[vec![1.0, 1.0]]), Err(AnalysisError::TooFewPoints { .. })));
    }
}
