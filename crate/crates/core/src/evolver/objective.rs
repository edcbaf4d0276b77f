use crate::molgraph::{fingerprint, tanimoto, Fingerprint, MolecularGraph, DEFAULT_NBITS, DEFAULT_RADIUS};
use crate::properties::PropertyRecord;
use crate::tasks::{constrained_fitness, property_target_fitness, PropertyTargets};

/// Task score that is ranked (before adding `β·D`) and archived.
#[derive(Debug, Clone, PartialEq)]
pub enum Objective {
    /// Normalized penalized logP `j`.
    PenalizedLogP,
    /// `w_j·j + w_qed·qed`.
    LogpQed { w_j: f64, w_qed: f64 },
    /// Negative summed squared error of the raw properties against targets.
    PropertyTarget(PropertyTargets),
    /// `j`, minus `10^6` unless Tanimoto similarity to the reference exceeds `delta`.
    Constrained { reference: Fingerprint, delta: f64 },
}

impl Objective {
    /// Returns the score and, for the constrained objective, the similarity.
    pub fn evaluate(&self, g: &MolecularGraph, record: &PropertyRecord) -> (f64, Option<f64>) {
        match self {
            Objective::PenalizedLogP => (record.j, None),
            Objective::LogpQed { w_j, w_qed } => (w_j * record.j + w_qed * record.qed, None),
            Objective::PropertyTarget(t) => (property_target_fitness(record, t), None),
            Objective::Constrained { reference, delta } => {
                let sim = tanimoto(&fingerprint(g, DEFAULT_RADIUS, DEFAULT_NBITS), reference);
                (constrained_fitness(record.j, sim, *delta), Some(sim))
            }
        }
    }
}
