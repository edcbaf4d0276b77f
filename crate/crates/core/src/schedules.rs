//! Discriminator weight control: a constant `β`, or an adaptive schedule that
//! switches `β` from `low` to `high` after a window of non-improving
//! generations and back to `low` once the best-ever score improves.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum BetaMode {
    Constant {
        beta: f64,
    },
    Adaptive {
        #[serde(default)]
        low: f64,
        #[serde(default = "default_high")]
        high: f64,
        #[serde(default = "default_window")]
        window: usize,
        #[serde(default = "default_epsilon")]
        epsilon: f64,
    },
}

fn default_high() -> f64 {
    1000.0
}
fn default_window() -> usize {
    20
}
fn default_epsilon() -> f64 {
    1e-3
}

impl BetaMode {
    pub fn adaptive() -> Self {
        BetaMode::Adaptive {
            low: 0.0,
            high: default_high(),
            window: default_window(),
            epsilon: default_epsilon(),
        }
    }
}

impl Default for BetaMode {
    fn default() -> Self {
        BetaMode::Constant { beta: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BetaSchedule {
    mode: BetaMode,
    current: f64,
    /// Best-ever score at the last counted improvement.
    reference: Option<f64>,
    since_improvement: usize,
    observed: usize,
}

impl BetaSchedule {
    pub fn new(mode: BetaMode) -> Self {
        let current = match mode {
            BetaMode::Constant { beta } => beta,
            BetaMode::Adaptive { low, .. } => low,
        };
        Self {
            mode,
            current,
            reference: None,
            since_improvement: 0,
            observed: 0,
        }
    }

    pub fn constant(beta: f64) -> Self {
        Self::new(BetaMode::Constant { beta })
    }

    pub fn mode(&self) -> BetaMode {
        self.mode
    }

    pub fn current(&self) -> f64 {
        self.current
    }

    /// Generations since the best-ever score last improved by more than epsilon.
    pub fn since_improvement(&self) -> usize {
        self.since_improvement
    }

    fn observe(&mut self, best: f64) {
        let BetaMode::Adaptive {
            low,
            high,
            window,
            epsilon,
        } = self.mode
        else {
            return;
        };
        let improved = match self.reference {
            None => true,
            Some(r) => best > r + epsilon,
        };
        if improved {
            let first = self.reference.is_none();
            self.reference = Some(best);
            self.since_improvement = 0;
            if !first && self.current == high {
                self.current = low;
            }
        } else {
            self.since_improvement += 1;
            if self.current == low && self.since_improvement >= window {
                self.current = high;
            }
        }
    }

    /// `β` for generation `gen`, given the best-ever score after each of the
    /// first `gen` generations (entry 0 is the initial population).
    pub fn next_beta(&mut self, gen: usize, best_history: &[f64]) -> f64 {
        assert_eq!(best_history.len(), gen, "history must cover every previous generation");
        assert!(self.observed <= gen, "history cannot shrink");
        for &best in &best_history[self.observed..] {
            self.observe(best);
        }
        self.observed = gen;
        self.current
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_ignores_history() {
        let mut s = BetaSchedule::constant(10.0);
        assert_eq!(s.next_beta(0, &[]), 10.0);
        assert_eq!(s.next_beta(3, &[1.0, 5.0, 2.0]), 10.0);
    }

    #[test]
    fn flat_history_triggers_then_improvement_releases() {
        let mut s = BetaSchedule::new(BetaMode::adaptive());
        let mut history = vec![1.0];
        assert_eq!(s.next_beta(1, &history), 0.0);
        for g in 2..=20 {
            history.push(1.0);
            assert_eq!(s.next_beta(g, &history), 0.0, "gen {g}");
        }
        history.push(1.0);
        assert_eq!(s.next_beta(21, &history), 1000.0);
        history.push(1.0005);
        assert_eq!(s.next_beta(22, &history), 1000.0, "sub-epsilon gain keeps the penalty");
        history.push(1.5);
        assert_eq!(s.next_beta(23, &history), 0.0);
    }

    #[test]
    fn catch_up_over_longer_history() {
        let history: Vec<f64> = (0..25).map(|_| 2.0).collect();
        let mut a = BetaSchedule::new(BetaMode::adaptive());
        let mut b = BetaSchedule::new(BetaMode::adaptive());
        for g in 0..=25 {
            a.next_beta(g, &history[..g]);
        }
        assert_eq!(b.next_beta(25, &history), a.current());
        assert_eq!(a.current(), 1000.0);
    }

    #[test]
    fn mode_json() {
        let m: BetaMode = serde_json::from_str(r#"{"mode":"adaptive"}"#).unwrap();
        assert_eq!(m, BetaMode::adaptive());
        let c: BetaMode = serde_json::from_str(r#"{"mode":"constant","beta":10}"#).unwrap();
        assert_eq!(c, BetaMode::Constant { beta: 10.0 });
        assert!(serde_json::from_str::<BetaMode>(r#"{"mode":"constant","beta":1,"x":2}"#).is_err());
    }
}
