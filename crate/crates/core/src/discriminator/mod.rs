//! Feature extraction and a small fully connected classifier `D(m)`.
//!
//! Labels are 1 for reference molecules and 0 for GA proposals, so a high
//! score means "looks like the reference set". The model is trained
//! continually with mini-batch Adam on binary cross-entropy.

mod features;

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use features::{featurize, featurize_with, longest_acyclic_chain, FeatureScaler, FeatureVector, FEATURE_DIM};

/// Layer widths from input to output.
pub const LAYERS: [usize; 4] = [FEATURE_DIM, 32, 16, 1];
const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum DiscriminatorError {
    #[error("expected {expected} values, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("training needs at least one GA and one reference sample")]
    EmptySamples,
    #[error("non-finite loss in epoch {epoch}; parameters restored")]
    NonFiniteLoss { epoch: usize },
    #[error("invalid checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 10,
            batch_size: 32,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `-[y ln s(z) + (1-y) ln(1-s(z))]` without forming `s(z)`.
fn bce_with_logit(z: f64, y: f64) -> f64 {
    z.max(0.0) - y * z + (-z.abs()).exp().ln_1p()
}

fn parameter_count() -> usize {
    LAYERS.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

/// Start of each layer's weights (row-major, out x in) and biases.
fn offsets() -> Vec<(usize, usize)> {
    let mut at = 0;
    LAYERS
        .windows(2)
        .map(|w| {
            let o = (at, at + w[0] * w[1]);
            at += w[0] * w[1] + w[1];
            o
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discriminator {
    params: Vec<f64>,
    adam_m: Vec<f64>,
    adam_v: Vec<f64>,
    step: u64,
    scaler: FeatureScaler,
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    version: u32,
    layers: Vec<usize>,
    #[serde(flatten)]
    model: Discriminator,
}

impl Discriminator {
    /// Glorot-uniform hidden weights from `seed`; zero biases and a zero
    /// output layer, so an untrained model scores every molecule 0.5.
    pub fn new(seed: u64, scaler: FeatureScaler) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = vec![0.0; parameter_count()];
        let hidden = LAYERS.len() - 2;
        for (w, (wo, _)) in LAYERS.windows(2).zip(offsets()).take(hidden) {
            let limit = (6.0 / (w[0] + w[1]) as f64).sqrt();
            for p in &mut params[wo..wo + w[0] * w[1]] {
                *p = rng.random_range(-limit..=limit);
            }
        }
        Self::from_parts(params, scaler)
    }

    /// All weights and biases zero; predicts exactly 0.5.
    pub fn zeros(scaler: FeatureScaler) -> Self {
        Self::from_parts(vec![0.0; parameter_count()], scaler)
    }

    fn from_parts(params: Vec<f64>, scaler: FeatureScaler) -> Self {
        let n = params.len();
        Self {
            params,
            adam_m: vec![0.0; n],
            adam_v: vec![0.0; n],
            step: 0,
            scaler,
        }
    }

    pub fn parameters(&self) -> &[f64] {
        &self.params
    }

    pub fn set_parameters(&mut self, params: Vec<f64>) -> Result<(), DiscriminatorError> {
        if params.len() != parameter_count() {
            return Err(DiscriminatorError::DimensionMismatch {
                expected: parameter_count(),
                found: params.len(),
            });
        }
        self.params = params;
        Ok(())
    }

    pub fn scaler(&self) -> &FeatureScaler {
        &self.scaler
    }

    /// Number of optimizer steps taken so far.
    pub fn steps(&self) -> u64 {
        self.step
    }

    /// Runs the network on standardized inputs, filling `acts` with post-ReLU
    /// hidden activations; returns the output logit.
    fn forward(&self, x: &[f64; FEATURE_DIM], acts: &mut [Vec<f64>]) -> f64 {
        acts[0].clear();
        acts[0].extend_from_slice(x);
        let last = LAYERS.len() - 2;
        let mut logit = 0.0;
        for (l, (w, (wo, bo))) in LAYERS.windows(2).zip(offsets()).enumerate() {
            let (fan_in, fan_out) = (w[0], w[1]);
            let (input, rest) = acts.split_at_mut(l + 1);
            let input = &input[l];
            let out = &mut rest[0];
            out.clear();
            for j in 0..fan_out {
                let row = &self.params[wo + j * fan_in..wo + (j + 1) * fan_in];
                let z = self.params[bo + j] + row.iter().zip(input).map(|(a, b)| a * b).sum::<f64>();
                if l == last {
                    logit = z;
                    out.push(z);
                } else {
                    out.push(z.max(0.0));
                }
            }
        }
        logit
    }

    fn scratch() -> Vec<Vec<f64>> {
        LAYERS.iter().map(|&n| Vec::with_capacity(n)).collect()
    }

    /// `D(m)` for one feature vector.
    pub fn predict(&self, f: &FeatureVector) -> f64 {
        let x = self.scaler.apply(f);
        sigmoid(self.forward(&x, &mut Self::scratch()))
    }

    /// Like [`predict`](Self::predict) for an untyped slice; the length must match.
    pub fn predict_slice(&self, f: &[f64]) -> Result<f64, DiscriminatorError> {
        Ok(self.predict(&FeatureVector::try_from(f)?))
    }

    pub fn predict_graph(&self, g: &crate::molgraph::MolecularGraph) -> f64 {
        self.predict(&featurize(g))
    }

    /// Mean BCE over a batch of standardized inputs; accumulates its gradient into `grad`.
    fn batch_gradient(&self, batch: &[([f64; FEATURE_DIM], f64)], grad: &mut [f64]) -> f64 {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let offs = offsets();
        let mut acts = Self::scratch();
        let scale = 1.0 / batch.len() as f64;
        let mut loss = 0.0;
        let mut delta: Vec<f64> = Vec::new();
        let mut prev: Vec<f64> = Vec::new();
        for (x, y) in batch {
            let z = self.forward(x, &mut acts);
            loss += bce_with_logit(z, *y);
            delta.clear();
            delta.push((sigmoid(z) - y) * scale);
            for l in (0..LAYERS.len() - 1).rev() {
                let (fan_in, fan_out) = (LAYERS[l], LAYERS[l + 1]);
                let (wo, bo) = offs[l];
                let input = &acts[l];
                for j in 0..fan_out {
                    let d = delta[j];
                    grad[bo + j] += d;
                    let row = &mut grad[wo + j * fan_in..wo + (j + 1) * fan_in];
                    for (g, a) in row.iter_mut().zip(input) {
                        *g += d * a;
                    }
                }
                if l == 0 {
                    break;
                }
                prev.clear();
                for i in 0..fan_in {
                    if input[i] > 0.0 {
                        let s: f64 = (0..fan_out).map(|j| delta[j] * self.params[wo + j * fan_in + i]).sum();
                        prev.push(s);
                    } else {
                        prev.push(0.0);
                    }
                }
                std::mem::swap(&mut delta, &mut prev);
            }
        }
        loss * scale
    }

    /// Mean BCE and its gradient with respect to [`parameters`](Self::parameters).
    pub fn loss_and_gradient(&self, samples: &[FeatureVector], labels: &[f64]) -> (f64, Vec<f64>) {
        assert_eq!(samples.len(), labels.len(), "one label per sample");
        let batch: Vec<_> = samples
            .iter()
            .zip(labels)
            .map(|(f, &y)| (self.scaler.apply(f), y))
            .collect();
        let mut grad = vec![0.0; self.params.len()];
        let loss = self.batch_gradient(&batch, &mut grad);
        (loss, grad)
    }

    /// Mean BCE with GA samples labelled 0 and reference samples labelled 1.
    pub fn loss(&self, ga: &[FeatureVector], reference: &[FeatureVector]) -> f64 {
        let mut acts = Self::scratch();
        let total: f64 = ga
            .iter()
            .map(|f| (f, 0.0))
            .chain(reference.iter().map(|f| (f, 1.0)))
            .map(|(f, y)| bce_with_logit(self.forward(&self.scaler.apply(f), &mut acts), y))
            .sum();
        total / (ga.len() + reference.len()) as f64
    }

    fn adam_step(&mut self, grad: &[f64], cfg: &TrainConfig) {
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - cfg.beta1.powi(t);
        let c2 = 1.0 - cfg.beta2.powi(t);
        for i in 0..self.params.len() {
            let g = grad[i];
            self.adam_m[i] = cfg.beta1 * self.adam_m[i] + (1.0 - cfg.beta1) * g;
            self.adam_v[i] = cfg.beta2 * self.adam_v[i] + (1.0 - cfg.beta2) * g * g;
            let m_hat = self.adam_m[i] / c1;
            let v_hat = self.adam_v[i] / c2;
            self.params[i] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
        }
    }

    /// Trains for `cfg.epochs` epochs, reshuffling each epoch with `rng`, and
    /// returns the mean loss of every epoch. On a non-finite loss or parameter
    /// the model is rolled back to its state before the call.
    pub fn train<R: Rng + ?Sized>(
        &mut self,
        ga: &[FeatureVector],
        reference: &[FeatureVector],
        cfg: &TrainConfig,
        rng: &mut R,
    ) -> Result<Vec<f64>, DiscriminatorError> {
        if ga.is_empty() || reference.is_empty() {
            return Err(DiscriminatorError::EmptySamples);
        }
        let backup = self.clone();
        let mut data: Vec<([f64; FEATURE_DIM], f64)> = ga
            .iter()
            .map(|f| (self.scaler.apply(f), 0.0))
            .chain(reference.iter().map(|f| (self.scaler.apply(f), 1.0)))
            .collect();
        let mut grad = vec![0.0; self.params.len()];
        let mut trace = Vec::with_capacity(cfg.epochs);
        for epoch in 0..cfg.epochs {
            data.shuffle(rng);
            let mut total = 0.0;
            for batch in data.chunks(cfg.batch_size.max(1)) {
                let loss = self.batch_gradient(batch, &mut grad);
                if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                    *self = backup;
                    return Err(DiscriminatorError::NonFiniteLoss { epoch });
                }
                self.adam_step(&grad, cfg);
                if self.params.iter().any(|p| !p.is_finite()) {
                    *self = backup;
                    return Err(DiscriminatorError::NonFiniteLoss { epoch });
                }
                total += loss * batch.len() as f64;
            }
            trace.push(total / data.len() as f64);
        }
        Ok(trace)
    }

    pub fn to_json(&self) -> String {
        let ck = Checkpoint {
            version: CHECKPOINT_VERSION,
            layers: LAYERS.to_vec(),
            model: self.clone(),
        };
        serde_json::to_string(&ck).expect("checkpoint serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, DiscriminatorError> {
        let bad = |m: String| DiscriminatorError::Checkpoint(m);
        let ck: Checkpoint = serde_json::from_str(text).map_err(|e| bad(e.to_string()))?;
        if ck.version != CHECKPOINT_VERSION {
            return Err(bad(format!("unsupported version {}", ck.version)));
        }
        if ck.layers != LAYERS {
            return Err(bad(format!("layer sizes {:?}, expected {:?}", ck.layers, LAYERS)));
        }
        let m = ck.model;
        let n = parameter_count();
        if m.params.len() != n || m.adam_m.len() != n || m.adam_v.len() != n {
            return Err(bad(format!("expected {n} parameters and moments")));
        }
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        if !finite(&m.params) || !finite(&m.adam_m) || !finite(&m.adam_v) {
            return Err(bad("non-finite values".into()));
        }
        if !finite(&m.scaler.mean) || m.scaler.std.iter().any(|&s| !(s.is_finite() && s > 0.0)) {
            return Err(bad("invalid feature statistics".into()));
        }
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<(), DiscriminatorError> {
        fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, DiscriminatorError> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}
