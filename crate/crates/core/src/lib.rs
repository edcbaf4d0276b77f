//! Discriminator-augmented genetic algorithm for molecular design.
//!
//! The genotype is a symbol string in a robust grammar ([`codec`]) that
//! always decodes to a valid heavy-atom graph ([`molgraph`]). Populations are
//! evolved by insertion/replacement mutation ([`evolver`]) against surrogate
//! property objectives ([`properties`]), with an online-trained classifier
//! ([`discriminator`]) acting as an adaptive novelty penalty.

pub mod codec;
pub mod discriminator;
pub mod molgraph;
pub mod properties;
pub mod schedules;
pub mod evolver;
pub mod tasks;
pub mod reference;
pub mod config;
pub mod analysis;
pub mod report;
