use rand::RngCore;
use serde::Serialize;

use super::{Adversary, AdversaryError, AdversaryReport, Commit, History};
use crate::calibration::{CalibrationLedger, PredictionGrid};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EarlyStopReport {
    pub threshold: f64,
    /// Step `t0` after which the error first reached `B`, if it did.
    pub triggered_at: Option<usize>,
    /// `(sum Delta+, sum Delta-)` at the trigger.
    pub parts_at_trigger: Option<(f64, f64)>,
    /// Number of bits the inner adversary emitted.
    pub inner_t_act: usize,
    /// The constant emitted after the inner adversary stopped, if any bit was.
    pub tail_bit: Option<bool>,
    /// Whether the tail was padding after the inner adversary ended without a trigger.
    pub padded: bool,
}

#[derive(Clone, Copy, Debug)]
enum Phase {
    Inner,
    Tail(bool),
}

/// Runs `inner` until the calibration error reaches `B`, then emits a constant
/// tail that keeps the larger of the two signed parts from shrinking. Always
/// lasts exactly `T` steps.
pub struct EarlyStopping<A> {
    inner: A,
    threshold: f64,
    horizon: usize,
    phase: Phase,
    report: EarlyStopReport,
}

pub fn early_stopping_wrapper<A: Adversary>(inner: A, b: f64, horizon: usize) -> EarlyStopping<A> {
    EarlyStopping {
        inner,
        threshold: b,
        horizon,
        phase: Phase::Inner,
        report: EarlyStopReport {
            threshold: b,
            triggered_at: None,
            parts_at_trigger: None,
            inner_t_act: 0,
            tail_bit: None,
            padded: false,
        },
    }
}

fn tail_bit(ledger: &CalibrationLedger) -> bool {
    let (pos, neg) = ledger.pos_neg_parts();
    pos >= neg
}

impl<A: Adversary> EarlyStopping<A> {
    pub fn inner(&self) -> &A {
        &self.inner
    }

    pub fn early_stop_report(&self) -> &EarlyStopReport {
        &self.report
    }

    fn trigger(&mut self, history: &History<'_>) -> bool {
        let ledger = history.ledger;
        let bit = tail_bit(ledger);
        self.report.triggered_at = Some(ledger.step() as usize);
        self.report.parts_at_trigger = Some(ledger.pos_neg_parts());
        self.report.inner_t_act = ledger.step() as usize;
        self.inner.finish(history);
        bit
    }
}

impl<A: Adversary> Adversary for EarlyStopping<A> {
    fn validate(&self, horizon: usize, grid: PredictionGrid) -> Result<(), AdversaryError> {
        if self.threshold.is_nan() || self.threshold <= 0.0 {
            return Err(AdversaryError::Config(format!(
                "early-stopping threshold {} must be positive",
                self.threshold
            )));
        }
        if horizon != self.horizon {
            return Err(AdversaryError::Config(format!(
                "wrapper built for T = {} but the game runs for {horizon}",
                self.horizon
            )));
        }
        self.inner.validate(horizon, grid)
    }

    fn announces_bias(&self) -> bool {
        self.inner.announces_bias()
    }

    fn declared_mean(&self) -> Option<f64> {
        self.inner.declared_mean()
    }

    fn next_bit(&mut self, history: &History<'_>, rng: &mut dyn RngCore) -> Option<Commit> {
        let step = history.ledger.step() as usize;
        if step >= self.horizon {
            return None;
        }
        if let Phase::Inner = self.phase {
            if step > 0 && history.ledger.calib_error() >= self.threshold {
                let bit = self.trigger(history);
                self.phase = Phase::Tail(bit);
                self.report.tail_bit = Some(bit);
            } else if let Some(commit) = self.inner.next_bit(history, rng) {
                return Some(commit);
            } else {
                self.report.inner_t_act = step;
                self.inner.finish(history);
                let bit = tail_bit(history.ledger);
                self.phase = Phase::Tail(bit);
                self.report.tail_bit = Some(bit);
                self.report.padded = true;
            }
        }
        let Phase::Tail(bit) = self.phase else {
            unreachable!()
        };
        Some(Commit {
            bit,
            announced_bias: Some(if bit { 1.0 } else { 0.0 }),
            epoch: None,
        })
    }

    fn finish(&mut self, history: &History<'_>) {
        if let Phase::Inner = self.phase {
            let ledger = history.ledger;
            self.report.inner_t_act = ledger.step() as usize;
            if ledger.step() > 0 && ledger.calib_error() >= self.threshold {
                self.report.triggered_at = Some(ledger.step() as usize);
                self.report.parts_at_trigger = Some(ledger.pos_neg_parts());
            }
            self.inner.finish(history);
        }
    }

    fn report(&self) -> AdversaryReport {
        AdversaryReport {
            early_stop: Some(self.report.clone()),
            ..self.inner.report()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversaries::iid_bernoulli;
    use crate::calibration::{prob, Transcript};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn drive<A: Adversary>(adv: &mut A, horizon: usize, predict: impl Fn(usize) -> (u64, u64)) -> CalibrationLedger {
        let grid = PredictionGrid::new(10).unwrap();
        let mut ledger = CalibrationLedger::new(grid);
        let transcript = Transcript::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for t in 0..horizon {
            let h = History { ledger: &ledger, transcript: &transcript, horizon };
            let Some(c) = adv.next_bit(&h, &mut rng) else { break };
            let (num, den) = predict(t);
            ledger.record(&prob(num, den).unwrap(), c.bit).unwrap();
        }
        let h = History { ledger: &ledger, transcript: &transcript, horizon };
        adv.finish(&h);
        ledger
    }

    #[test]
    fn infinite_threshold_is_transparent() {
        let mut plain = iid_bernoulli(0.5).unwrap();
        let mut wrapped = early_stopping_wrapper(iid_bernoulli(0.5).unwrap(), f64::INFINITY, 200);
        let a = drive(&mut plain, 200, |_| (1, 2));
        let b = drive(&mut wrapped, 200, |_| (1, 2));
        assert_eq!(a.ones(5), b.ones(5));
        assert_eq!(wrapped.early_stop_report().triggered_at, None);
    }

    #[test]
    fn trigger_switches_to_constant_tail() {
        // Ber(1) while predicting 0 builds positive error one unit per step.
        let mut w = early_stopping_wrapper(iid_bernoulli(1.0).unwrap(), 3.0, 20);
        let ledger = drive(&mut w, 20, |t| if t < 3 { (0, 1) } else { (1, 2) });
        let r = w.early_stop_report();
        assert_eq!(r.triggered_at, Some(3));
        assert_eq!(r.tail_bit, Some(true));
        assert_eq!(ledger.step(), 20);
        assert!(ledger.calib_error() >= 1.5);
    }

    #[test]
    fn negative_side_gives_zero_tail() {
        let mut w = early_stopping_wrapper(iid_bernoulli(0.0).unwrap(), 2.0, 10);
        let ledger = drive(&mut w, 10, |_| (9, 10));
        let r = w.early_stop_report();
        assert_eq!(r.tail_bit, Some(false));
        assert_eq!(r.triggered_at, Some(3));
        assert!(ledger.calib_error() >= 1.0);
        assert_eq!(ledger.ones(9), 0);
    }
}
