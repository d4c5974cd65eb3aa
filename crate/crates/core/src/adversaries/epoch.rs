use rand::{Rng, RngCore};
use serde::Serialize;

use super::{Adversary, AdversaryReport, Commit, History};
use crate::calibration::{prob_to_f64, CalibrationLedger, OpenInterval, Prob};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// The interval's error reached the threshold before the next draw.
    Threshold,
    /// All `m` bits were emitted.
    Exhausted,
    /// Cut short from outside, by the horizon or by early stopping.
    Interrupted,
}

/// One epoch: up to `m` draws from `Ber(p*)`, stopping as soon as
/// `sum_{p in P cap I} |Delta_p| >= theta` before a draw.
#[derive(Clone, Debug)]
pub struct Epoch {
    m: usize,
    interval: OpenInterval,
    bias: Prob,
    bias_f: f64,
    theta: f64,
    emitted: usize,
    stop: Option<StopReason>,
}

pub fn epoch(m: usize, interval: OpenInterval, bias: Prob, theta: f64) -> Epoch {
    debug_assert_eq!(interval.midpoint(), bias);
    Epoch {
        m,
        interval,
        bias,
        bias_f: prob_to_f64(&bias),
        theta,
        emitted: 0,
        stop: None,
    }
}

impl Epoch {
    /// Draws the next bit, or `None` once the epoch has ended. `ledger` must
    /// reflect every step before the one being drawn.
    pub fn next_bit(&mut self, ledger: &CalibrationLedger, rng: &mut dyn RngCore) -> Option<bool> {
        if self.stop.is_some() {
            return None;
        }
        if self.emitted == self.m {
            self.stop = Some(StopReason::Exhausted);
            return None;
        }
        if ledger.interval_error(&self.interval) >= self.theta {
            self.stop = Some(StopReason::Threshold);
            return None;
        }
        self.emitted += 1;
        Some(rng.gen_bool(self.bias_f))
    }

    /// Ends the epoch from outside. An epoch that already emitted all `m` bits
    /// counts as exhausted.
    pub fn interrupt(&mut self) {
        let reason = if self.emitted == self.m {
            StopReason::Exhausted
        } else {
            StopReason::Interrupted
        };
        self.stop.get_or_insert(reason);
    }

    pub fn emitted(&self) -> usize {
        self.emitted
    }

    pub fn stop_reason(&self) -> Option<StopReason> {
        self.stop
    }

    pub fn interval(&self) -> &OpenInterval {
        &self.interval
    }

    pub fn bias(&self) -> Prob {
        self.bias
    }

    pub fn bias_f64(&self) -> f64 {
        self.bias_f
    }
}

/// A single [`Epoch`] run as a complete adversary.
pub struct EpochAdversary {
    epoch: Epoch,
}

impl EpochAdversary {
    pub fn new(epoch: Epoch) -> Self {
        Self { epoch }
    }
}

impl Adversary for EpochAdversary {
    fn declared_mean(&self) -> Option<f64> {
        Some(self.epoch.bias_f)
    }

    fn next_bit(&mut self, history: &History<'_>, rng: &mut dyn RngCore) -> Option<Commit> {
        let bias = self.epoch.bias_f;
        self.epoch.next_bit(history.ledger, rng).map(|bit| Commit {
            bit,
            announced_bias: Some(bias),
            epoch: Some(1),
        })
    }

    fn finish(&mut self, _history: &History<'_>) {
        self.epoch.interrupt();
    }

    fn report(&self) -> AdversaryReport {
        AdversaryReport {
            epoch_stop: self.epoch.stop,
            ..Default::default()
        }
    }
}
