use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::DiscriminatorError;
use crate::molgraph::{ring_atoms, MolecularGraph};
use crate::properties::Descriptors;

pub const FEATURE_DIM: usize = 16;

/// Fixed-width topological descriptor vector:
///
/// | index | feature |
/// |---|---|
/// | 0..6 | fraction of C, N, O, S, P, F atoms |
/// | 6 | heavy atoms / 50 |
/// | 7 | basis rings / 10 |
/// | 8 | basis rings larger than six / 5 |
/// | 9 | branch points / 10 |
/// | 10 | longest acyclic chain (atoms) / 50 |
/// | 11 | heteroatom fraction |
/// | 12 | raw logP / 10 |
/// | 13 | raw SA / 10 |
/// | 14 | QED |
/// | 15 | fraction of bonds that are double or triple |
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector(pub [f64; FEATURE_DIM]);

impl FeatureVector {
    pub fn values(&self) -> &[f64; FEATURE_DIM] {
        &self.0
    }
}

impl TryFrom<&[f64]> for FeatureVector {
    type Error = DiscriminatorError;

    fn try_from(v: &[f64]) -> Result<Self, Self::Error> {
        let arr: [f64; FEATURE_DIM] = v.try_into().map_err(|_| DiscriminatorError::DimensionMismatch {
            expected: FEATURE_DIM,
            found: v.len(),
        })?;
        Ok(Self(arr))
    }
}

pub fn featurize(g: &MolecularGraph) -> FeatureVector {
    featurize_with(g, &Descriptors::of(g))
}

/// Same as [`featurize`] but reuses already computed descriptors of `g`.
pub fn featurize_with(g: &MolecularGraph, d: &Descriptors) -> FeatureVector {
    let n = d.heavy_atoms.max(1) as f64;
    let mut f = [0.0; FEATURE_DIM];
    for (slot, &count) in f.iter_mut().zip(d.element_counts.iter()) {
        *slot = count as f64 / n;
    }
    f[6] = d.heavy_atoms as f64 / 50.0;
    f[7] = d.ring_sizes.len() as f64 / 10.0;
    f[8] = d.ring_sizes.iter().filter(|&&s| s > 6).count() as f64 / 5.0;
    f[9] = d.branch_points as f64 / 10.0;
    f[10] = longest_acyclic_chain(g) as f64 / 50.0;
    f[11] = d.heteroatom_fraction();
    f[12] = d.logp_raw / 10.0;
    f[13] = d.sa_raw / 10.0;
    f[14] = d.qed;
    let multiple = g.bonds().iter().filter(|b| b.order > 1).count();
    f[15] = if g.bond_count() == 0 {
        0.0
    } else {
        multiple as f64 / g.bond_count() as f64
    };
    FeatureVector(f)
}

/// Diameter, counted in atoms, of the forest formed by atoms on no ring.
pub fn longest_acyclic_chain(g: &MolecularGraph) -> usize {
    let n = g.atom_count();
    let on_ring = ring_atoms(g);
    let mut seen = vec![false; n];
    let mut dist = vec![usize::MAX; n];
    let mut best = 0;
    let bfs = |start: usize, dist: &mut Vec<usize>| -> (usize, usize, Vec<usize>) {
        let mut queue = VecDeque::from([start]);
        let mut touched = vec![start];
        dist[start] = 1;
        let (mut far, mut far_d) = (start, 1);
        while let Some(v) = queue.pop_front() {
            if dist[v] > far_d {
                far = v;
                far_d = dist[v];
            }
            for &(w, _) in g.neighbors(v) {
                if !on_ring[w] && dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    touched.push(w);
                    queue.push_back(w);
                }
            }
        }
        for &t in &touched {
            dist[t] = usize::MAX;
        }
        (far, far_d, touched)
    };
    for a in 0..n {
        if on_ring[a] || seen[a] {
            continue;
        }
        let (far, _, component) = bfs(a, &mut dist);
        for c in component {
            seen[c] = true;
        }
        let (_, diameter, _) = bfs(far, &mut dist);
        best = best.max(diameter);
    }
    best
}

/// Per-feature standardization fitted on the reference set and then frozen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScaler {
    pub mean: [f64; FEATURE_DIM],
    pub std: [f64; FEATURE_DIM],
}

impl FeatureScaler {
    pub fn identity() -> Self {
        Self {
            mean: [0.0; FEATURE_DIM],
            std: [1.0; FEATURE_DIM],
        }
    }

    /// Population statistics; features constant over the sample keep unit scale.
    pub fn fit(samples: &[FeatureVector]) -> Result<Self, DiscriminatorError> {
        if samples.is_empty() {
            return Err(DiscriminatorError::EmptySamples);
        }
        let n = samples.len() as f64;
        let mut s = Self::identity();
        for k in 0..FEATURE_DIM {
            let mean = samples.iter().map(|f| f.0[k]).sum::<f64>() / n;
            let var = samples.iter().map(|f| (f.0[k] - mean).powi(2)).sum::<f64>() / n;
            s.mean[k] = mean;
            s.std[k] = if var.sqrt() < 1e-6 { 1.0 } else { var.sqrt() };
        }
        Ok(s)
    }

    pub fn apply(&self, f: &FeatureVector) -> [f64; FEATURE_DIM] {
        let mut out = [0.0; FEATURE_DIM];
        for k in 0..FEATURE_DIM {
            out[k] = (f.0[k] - self.mean[k]) / self.std[k];
        }
        out
    }
}
