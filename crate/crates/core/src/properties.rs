//! Surrogate property evaluators and the normalized penalized-logP objective.
//!
//! All descriptors are additive or topological so they depend only on the
//! graph up to isomorphism:
//!
//! * `logp_raw`: per-atom contributions (ring carbon in a small unsaturated
//!   ring 0.30, other carbon 0.20, N -0.60, O -0.40, S 0.60, P -0.50, F 0.20)
//! * `sa_raw`: size, branching, ring count and element-diversity complexity
//! * `ring_penalty_raw`: total excess size of basis rings larger than six
//! * `qed`: geometric mean of four Gaussian desirabilities

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::molgraph::{rings, small_ring_members, Element, MolecularGraph};

/// Lower bound on any normalization standard deviation.
pub const SIGMA_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PropertyError {
    #[error("reference set is empty")]
    EmptyReference,
}

/// Topological quantities shared by the property surrogates and the
/// discriminator features; computing them once avoids repeated ring perception.
#[derive(Debug, Clone, PartialEq)]
pub struct Descriptors {
    pub heavy_atoms: usize,
    pub element_counts: [usize; 6],
    pub ring_sizes: Vec<usize>,
    pub branch_points: usize,
    pub logp_raw: f64,
    pub sa_raw: f64,
    pub ring_raw: f64,
    pub qed: f64,
}

impl Descriptors {
    pub fn of(g: &MolecularGraph) -> Self {
        let mut ring_sizes: Vec<usize> = rings(g).iter().map(|c| c.size()).collect();
        ring_sizes.sort_unstable();
        let mut element_counts = [0usize; 6];
        for &e in g.atoms() {
            element_counts[e.index()] += 1;
        }
        let branch_points = g.branch_points();
        let logp = logp_from(g);
        let sa = sa_from(g.atom_count(), branch_points, ring_sizes.len(), &element_counts);
        let ring = ring_sizes.iter().map(|&s| s.saturating_sub(6) as f64).sum();
        let hetero = heteroatom_fraction(&element_counts, g.atom_count());
        let qed = qed_from(g.atom_count(), logp, ring_sizes.len(), hetero);
        Self {
            heavy_atoms: g.atom_count(),
            element_counts,
            ring_sizes,
            branch_points,
            logp_raw: logp,
            sa_raw: sa,
            ring_raw: ring,
            qed,
        }
    }

    pub fn heteroatom_fraction(&self) -> f64 {
        heteroatom_fraction(&self.element_counts, self.heavy_atoms)
    }
}

fn heteroatom_fraction(counts: &[usize; 6], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    (n - counts[Element::C.index()]) as f64 / n as f64
}

fn logp_from(g: &MolecularGraph) -> f64 {
    let aromatic_like = small_ring_members(g, 6);
    // per-class counts keep the sum independent of atom order
    let mut counts = [0usize; 7];
    for (a, &e) in g.atoms().iter().enumerate() {
        let class = if e == Element::C && aromatic_like[a] { 6 } else { e.index() };
        counts[class] += 1;
    }
    const WEIGHTS: [f64; 7] = [0.20, -0.60, -0.40, 0.60, -0.50, 0.20, 0.30];
    counts.iter().zip(WEIGHTS).map(|(&c, w)| c as f64 * w).sum()
}

fn sa_from(n: usize, branch_points: usize, ring_count: usize, counts: &[usize; 6]) -> f64 {
    let distinct = counts.iter().filter(|&&c| c > 0).count();
    0.05 * n as f64
        + 0.30 * branch_points as f64
        + 0.40 * ring_count as f64
        + 0.80 * distinct.saturating_sub(1) as f64
}

/// Gaussian desirability `exp(-(x - x0)^2 / (2 w^2))`.
pub fn desirability(x: f64, center: f64, width: f64) -> f64 {
    (-(x - center).powi(2) / (2.0 * width * width)).exp()
}

fn qed_from(n: usize, logp: f64, ring_count: usize, hetero: f64) -> f64 {
    // mean of log-desirabilities keeps tiny values from underflowing
    let exponent = [
        (n as f64, 23.0, 8.0),
        (logp, 2.5, 2.0),
        (ring_count as f64, 2.0, 1.5),
        (hetero, 0.25, 0.15),
    ]
    .iter()
    .map(|&(x, c, w)| -(x - c).powi(2) / (2.0 * w * w))
    .sum::<f64>()
        / 4.0;
    exponent.exp().max(f64::MIN_POSITIVE)
}

pub fn logp_raw(g: &MolecularGraph) -> f64 {
    logp_from(g)
}

pub fn sa_raw(g: &MolecularGraph) -> f64 {
    let mut counts = [0usize; 6];
    for &e in g.atoms() {
        counts[e.index()] += 1;
    }
    sa_from(g.atom_count(), g.branch_points(), rings(g).len(), &counts)
}

pub fn ring_penalty_raw(g: &MolecularGraph) -> f64 {
    rings(g).iter().map(|c| c.size().saturating_sub(6) as f64).sum()
}

pub fn qed(g: &MolecularGraph) -> f64 {
    Descriptors::of(g).qed
}

/// Mean and standard deviation of one property over the reference set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: f64,
    pub std: f64,
}

impl Moments {
    /// Population moments with the standard deviation floored at [`SIGMA_FLOOR`].
    pub fn fit(values: impl IntoIterator<Item = f64>) -> Option<Self> {
        let values: Vec<f64> = values.into_iter().collect();
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Some(Self {
            mean,
            std: var.sqrt().max(SIGMA_FLOOR),
        })
    }

    pub fn identity() -> Self {
        Self { mean: 0.0, std: 1.0 }
    }

    pub fn z(&self, x: f64) -> f64 {
        (x - self.mean) / self.std
    }
}

/// Normalization statistics for the three penalized-logP terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub logp: Moments,
    pub sa: Moments,
    pub ring: Moments,
}

impl NormStats {
    pub fn identity() -> Self {
        Self {
            logp: Moments::identity(),
            sa: Moments::identity(),
            ring: Moments::identity(),
        }
    }
}

/// Fits normalization statistics over a reference collection.
pub fn fit_norm<'a>(
    reference: impl IntoIterator<Item = &'a MolecularGraph>,
) -> Result<NormStats, PropertyError> {
    let descriptors: Vec<Descriptors> = reference.into_iter().map(Descriptors::of).collect();
    fit_norm_from(&descriptors)
}

pub fn fit_norm_from(descriptors: &[Descriptors]) -> Result<NormStats, PropertyError> {
    let fit = |f: fn(&Descriptors) -> f64| {
        Moments::fit(descriptors.iter().map(f)).ok_or(PropertyError::EmptyReference)
    };
    Ok(NormStats {
        logp: fit(|d| d.logp_raw)?,
        sa: fit(|d| d.sa_raw)?,
        ring: fit(|d| d.ring_raw)?,
    })
}

/// Raw and normalized properties of one molecule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropertyRecord {
    pub logp_raw: f64,
    pub sa_raw: f64,
    pub ring_raw: f64,
    pub qed: f64,
    pub logp_z: f64,
    pub sa_z: f64,
    pub ring_z: f64,
    /// Normalized penalized logP: `logp_z - sa_z - ring_z`.
    pub j: f64,
}

impl PropertyRecord {
    pub fn from_descriptors(d: &Descriptors, stats: &NormStats) -> Self {
        let logp_z = stats.logp.z(d.logp_raw);
        let sa_z = stats.sa.z(d.sa_raw);
        let ring_z = stats.ring.z(d.ring_raw);
        Self {
            logp_raw: d.logp_raw,
            sa_raw: d.sa_raw,
            ring_raw: d.ring_raw,
            qed: d.qed,
            logp_z,
            sa_z,
            ring_z,
            j: logp_z - sa_z - ring_z,
        }
    }
}

pub fn penalized_logp(g: &MolecularGraph, stats: &NormStats) -> PropertyRecord {
    PropertyRecord::from_descriptors(&Descriptors::of(g), stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::molgraph::parse_smiles;

    fn mol(s: &str) -> MolecularGraph {
        parse_smiles(s).unwrap()
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn logp_table() {
        assert!(close(logp_raw(&mol("C")), 0.20));
        assert!(close(logp_raw(&mol("SSSSSSSS")), 4.80));
        assert!(close(logp_raw(&mol("c1ccccc1")), 1.80));
        assert!(close(logp_raw(&mol("C1CCCCC1")), 1.20));
        assert!(close(logp_raw(&mol("CNOSPF")), 0.2 - 0.6 - 0.4 + 0.6 - 0.5 + 0.2));
    }

    #[test]
    fn sa_formula() {
        assert!(close(sa_raw(&mol("C")), 0.05));
        assert!(close(sa_raw(&mol("C1CCCC1")), 0.65));
        assert!(close(sa_raw(&mol("CC(C)(C)C")), 0.55));
        assert!(close(sa_raw(&mol("CO")), 0.10 + 0.80));
    }

    #[test]
    fn ring_penalty() {
        assert_eq!(ring_penalty_raw(&mol("C1CCCCC1")), 0.0);
        assert_eq!(ring_penalty_raw(&mol("C1CCCCCCC1")), 2.0);
        assert_eq!(ring_penalty_raw(&mol("CCCCCCCCC")), 0.0);
    }

    #[test]
    fn qed_of_methane_matches_direct_evaluation() {
        // evaluated independently in double precision
        let expected = 0.186_361_033_851_571_74;
        assert!((qed(&mol("C")) - expected).abs() < 1e-12, "{}", qed(&mol("C")));
    }

    #[test]
    fn qed_is_one_at_the_optimum() {
        assert_eq!(qed_from(23, 2.5, 2, 0.25), 1.0);
        assert!(qed_from(80, 30.0, 0, 0.0) > 0.0);
    }

    #[test]
    fn identity_stats_on_methane() {
        let r = penalized_logp(&mol("C"), &NormStats::identity());
        assert!(close(r.j, 0.15));
    }

    #[test]
    fn identical_reference_floors_sigma() {
        let refs = vec![mol("CCO"); 5];
        let stats = fit_norm(&refs).unwrap();
        assert_eq!(stats.logp.std, SIGMA_FLOOR);
        assert!(penalized_logp(&mol("CCO"), &stats).j.is_finite());
        assert_eq!(fit_norm(&[]), Err(PropertyError::EmptyReference));
    }

    #[test]
    fn reference_mean_j_is_zero() {
        let refs: Vec<MolecularGraph> = ["CCO", "c1ccccc1O", "CC(=O)N", "C1CCCCCCC1", "SCCS", "FC(F)F"]
            .iter()
            .map(|s| mol(s))
            .collect();
        let stats = fit_norm(&refs).unwrap();
        let mean: f64 = refs.iter().map(|g| penalized_logp(g, &stats).j).sum::<f64>() / refs.len() as f64;
        assert!(mean.abs() < 1e-9);
    }
}
