//! Bit-sequence generators.
//!
//! An adversary commits bit `t` knowing only the first `t - 1` steps and its own
//! random stream. Every adversary here also publishes the bias of the Bernoulli
//! distribution it draws bit `t` from; forecasters may use or ignore it.

mod basic;
mod classify;
mod early_stop;
mod epoch;
mod params;
mod sidestep;

use rand::RngCore;
use thiserror::Error;

use crate::calibration::{CalibrationLedger, PredictionGrid, Transcript};
use crate::sign_game::{SignGameError, SignGameState};

pub use basic::{epoch_ladder, iid_bernoulli, EpochLadder, IidBernoulli};
pub use classify::{classify_epochs, rebuild_epoch_marks, EpochDiagnostic, EpochLabel};
pub use early_stop::{early_stopping_wrapper, EarlyStopReport, EarlyStopping};
pub use epoch::{epoch, Epoch, EpochAdversary, StopReason};
pub use params::{SchemeParams, DEFAULT_C0};
pub use sidestep::{sidestepping_scheme, EpochRecord, PlayerASpec, Sidestepping};

#[derive(Debug, Error)]
pub enum AdversaryError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("transcript has no epoch marks")]
    MissingEpochs,
    #[error(transparent)]
    SignGame(#[from] SignGameError),
}

/// What the adversary sees before committing bit `t`.
#[derive(Clone, Copy)]
pub struct History<'a> {
    pub ledger: &'a CalibrationLedger,
    pub transcript: &'a Transcript,
    pub horizon: usize,
}

/// Bit `t` together with the published distribution it was drawn from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Commit {
    pub bit: bool,
    pub announced_bias: Option<f64>,
    pub epoch: Option<u32>,
}

/// Side information gathered by an adversary over a game.
#[derive(Clone, Debug, Default)]
pub struct AdversaryReport {
    pub epochs: Vec<EpochRecord>,
    pub sign_state: Option<SignGameState>,
    pub params: Option<SchemeParams>,
    pub early_stop: Option<EarlyStopReport>,
    pub epoch_stop: Option<StopReason>,
}

pub trait Adversary: Send {
    /// Checked by the engine before step 1.
    fn validate(&self, _horizon: usize, _grid: PredictionGrid) -> Result<(), AdversaryError> {
        Ok(())
    }

    /// Whether every commit carries `announced_bias`.
    fn announces_bias(&self) -> bool {
        true
    }

    /// Mean bias of a schedule fixed in advance, if the adversary declares one.
    fn declared_mean(&self) -> Option<f64> {
        None
    }

    /// Commits the next bit, or `None` to end the game early.
    fn next_bit(&mut self, history: &History<'_>, rng: &mut dyn RngCore) -> Option<Commit>;

    /// Called once after the last step.
    fn finish(&mut self, _history: &History<'_>) {}

    fn report(&self) -> AdversaryReport {
        AdversaryReport::default()
    }
}

impl Adversary for Box<dyn Adversary> {
    fn validate(&self, horizon: usize, grid: PredictionGrid) -> Result<(), AdversaryError> {
        (**self).validate(horizon, grid)
    }
    fn announces_bias(&self) -> bool {
        (**self).announces_bias()
    }
    fn declared_mean(&self) -> Option<f64> {
        (**self).declared_mean()
    }
    fn next_bit(&mut self, history: &History<'_>, rng: &mut dyn RngCore) -> Option<Commit> {
        (**self).next_bit(history, rng)
    }
    fn finish(&mut self, history: &History<'_>) {
        (**self).finish(history)
    }
    fn report(&self) -> AdversaryReport {
        (**self).report()
    }
}
