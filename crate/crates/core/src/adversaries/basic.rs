use rand::{Rng, RngCore};

use super::{Adversary, AdversaryError, Commit, History};
use crate::calibration::PredictionGrid;

/// Independent `Ber(p)` bits at every step.
#[derive(Clone, Debug)]
pub struct IidBernoulli {
    p: f64,
}

pub fn iid_bernoulli(p: f64) -> Result<IidBernoulli, AdversaryError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(AdversaryError::Config(format!("bias {p} is not a probability")));
    }
    Ok(IidBernoulli { p })
}

impl Adversary for IidBernoulli {
    fn declared_mean(&self) -> Option<f64> {
        Some(self.p)
    }

    fn next_bit(&mut self, _history: &History<'_>, rng: &mut dyn RngCore) -> Option<Commit> {
        Some(Commit {
            bit: rng.gen_bool(self.p),
            announced_bias: Some(self.p),
            epoch: None,
        })
    }
}

/// `k` epochs of `ceil(T/k)` steps; epoch `i` draws from `Ber(i/k)`. When `k`
/// does not divide `T` the last epoch is truncated by the horizon.
#[derive(Clone, Debug)]
pub struct EpochLadder {
    k: usize,
    horizon: usize,
    epoch_len: usize,
}

pub fn epoch_ladder(k: usize, horizon: usize) -> Result<EpochLadder, AdversaryError> {
    if k == 0 {
        return Err(AdversaryError::Config("ladder needs k >= 1".into()));
    }
    Ok(EpochLadder {
        k,
        horizon,
        epoch_len: horizon.div_ceil(k).max(1),
    })
}

impl EpochLadder {
    /// Epoch index (1-based) of the step following `step` recorded steps.
    fn epoch_at(&self, step: usize) -> usize {
        (step / self.epoch_len + 1).min(self.k)
    }

    pub fn k(&self) -> usize {
        self.k
    }
}

impl Adversary for EpochLadder {
    fn validate(&self, horizon: usize, _grid: PredictionGrid) -> Result<(), AdversaryError> {
        if horizon != self.horizon {
            return Err(AdversaryError::Config(format!(
                "ladder built for T = {} but the game runs for {horizon}",
                self.horizon
            )));
        }
        Ok(())
    }

    fn declared_mean(&self) -> Option<f64> {
        if self.horizon == 0 {
            return Some(0.0);
        }
        let total: f64 = (1..=self.k)
            .map(|i| {
                let start = (i - 1) * self.epoch_len;
                let end = if i == self.k {
                    self.horizon
                } else {
                    (i * self.epoch_len).min(self.horizon)
                };
                end.saturating_sub(start) as f64 * i as f64 / self.k as f64
            })
            .sum();
        Some(total / self.horizon as f64)
    }

    fn next_bit(&mut self, history: &History<'_>, rng: &mut dyn RngCore) -> Option<Commit> {
        let i = self.epoch_at(history.ledger.step() as usize);
        let bias = i as f64 / self.k as f64;
        Some(Commit {
            bit: rng.gen_bool(bias),
            announced_bias: Some(bias),
            epoch: Some(i as u32),
        })
    }
}
