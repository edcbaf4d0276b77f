use serde::{Deserialize, Serialize};

/// `F(m) = J(m) + β·D(m)`.
pub fn fitness(j: f64, d: f64, beta: f64) -> f64 {
    j + beta * d
}

/// Parameters of the logistic kill curve over normalized rank.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KillCurve {
    pub steepness: f64,
    pub midpoint: f64,
}

impl Default for KillCurve {
    fn default() -> Self {
        Self {
            steepness: 10.0,
            midpoint: 0.5,
        }
    }
}

impl KillCurve {
    pub fn probability(&self, normalized_rank: f64) -> f64 {
        1.0 / (1.0 + (-self.steepness * (normalized_rank - self.midpoint)).exp())
    }
}

/// Indices ordered best first: fitness descending, then lower age, then lower index.
pub fn ranking(fitnesses: &[f64], ages: &[u32]) -> Vec<usize> {
    assert_eq!(fitnesses.len(), ages.len());
    let mut order: Vec<usize> = (0..fitnesses.len()).collect();
    order.sort_by(|&a, &b| {
        fitnesses[b]
            .total_cmp(&fitnesses[a])
            .then(ages[a].cmp(&ages[b]))
            .then(a.cmp(&b))
    });
    order
}

/// Per-individual replacement probability (in input order) from the rank of
/// its fitness. A single individual is never replaced.
pub fn kill_probabilities_with(fitnesses: &[f64], ages: &[u32], curve: &KillCurve) -> Vec<f64> {
    let n = fitnesses.len();
    let mut p = vec![0.0; n];
    if n < 2 {
        return p;
    }
    for (rank, i) in ranking(fitnesses, ages).into_iter().enumerate() {
        p[i] = curve.probability(rank as f64 / (n - 1) as f64);
    }
    p
}

/// [`kill_probabilities_with`] using the default curve and equal ages.
pub fn kill_probabilities(fitnesses: &[f64]) -> Vec<f64> {
    kill_probabilities_with(fitnesses, &vec![0; fitnesses.len()], &KillCurve::default())
}
