//! The sidestepping scheme.
//!
//! The scheme stands between a player A of `SP(k, ceil(k^alpha))` and the
//! forecaster. Each cell `j` chosen by player A opens an epoch drawing from
//! the midpoint of `I_j = (1/3 + (j-1)/(3k), 1/3 + j/(3k))`. When the epoch
//! ends, the scheme answers for player F with `+` if the positive biases inside
//! `I_j` outweigh the negative ones, `-` otherwise.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::RngCore;
use serde::Serialize;

use super::epoch::{epoch, Epoch, StopReason};
use super::{Adversary, AdversaryError, AdversaryReport, Commit, History, SchemeParams};
use crate::calibration::{OpenInterval, PredictionGrid, Prob};
use crate::sign_game::{
    tensor_strategy, BinarySearchStrategy, Embedded, MinimaxPlayerA, PlayerA, Sign, SignGameState,
    SolverBudget, StrategyFactory,
};

/// Which player A strategy drives the simulated game.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlayerASpec {
    Binary,
    Tensor { a: usize, b: usize, t: u32 },
    Minimax,
}

impl FromStr for PlayerASpec {
    type Err = AdversaryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || AdversaryError::Config(format!("unknown player A strategy '{s}'"));
        match s {
            "binary" => Ok(Self::Binary),
            "minimax" => Ok(Self::Minimax),
            _ => {
                let args = s.strip_prefix("tensor:").ok_or_else(bad)?;
                let parts: Vec<&str> = args.split(',').collect();
                if parts.len() != 3 {
                    return Err(bad());
                }
                let num = |x: &str| x.trim().parse::<usize>().map_err(|_| bad());
                Ok(Self::Tensor {
                    a: num(parts[0])?,
                    b: num(parts[1])?,
                    t: num(parts[2])? as u32,
                })
            }
        }
    }
}

impl fmt::Display for PlayerASpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Binary => f.write_str("binary"),
            Self::Minimax => f.write_str("minimax"),
            Self::Tensor { a, b, t } => write!(f, "tensor:{a},{b},{t}"),
        }
    }
}

impl PlayerASpec {
    /// Builds the strategy for `SP(k, r)`.
    pub fn build(&self, k: usize, r: usize) -> Result<Box<dyn PlayerA>, AdversaryError> {
        match *self {
            Self::Binary => Ok(Box::new(BinarySearchStrategy)),
            Self::Minimax => Ok(Box::new(MinimaxPlayerA::new(k, r, SolverBudget::default())?)),
            Self::Tensor { a, b, t } => {
                if a == 0 || b == 0 || t == 0 {
                    return Err(AdversaryError::Config("tensor parameters must be positive".into()));
                }
                let cells = a
                    .checked_pow(t)
                    .filter(|&c| c <= k)
                    .ok_or_else(|| AdversaryError::Config(format!("{a}^{t} cells do not fit in k = {k}")))?;
                let rounds = b.checked_pow(t).unwrap_or(usize::MAX);
                // Binary search is optimal on 2^s - 1 cells with s rounds; otherwise
                // the base game is solved exactly.
                let s = (a + 1).trailing_zeros() as usize;
                let base: StrategyFactory = if (a + 1).is_power_of_two() && b >= s {
                    Arc::new(|| Box::new(BinarySearchStrategy) as Box<dyn PlayerA>)
                } else {
                    MinimaxPlayerA::new(a, b, SolverBudget::default())?;
                    Arc::new(move || {
                        Box::new(MinimaxPlayerA::new(a, b, SolverBudget::default()).expect("checked above"))
                            as Box<dyn PlayerA>
                    })
                };
                let player = tensor_strategy(base, a, b, t);
                Ok(Box::new(Embedded::new(player, cells, rounds.min(r))))
            }
        }
    }
}

/// Book-keeping for one epoch of the scheme.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EpochRecord {
    pub index: u32,
    pub cell: usize,
    #[serde(skip)]
    pub interval: OpenInterval,
    #[serde(skip)]
    pub bias: Prob,
    pub start_step: usize,
    pub end_step: usize,
    pub sign_placed: Option<Sign>,
    pub stop: Option<StopReason>,
}

pub struct Sidestepping {
    params: SchemeParams,
    player: Box<dyn PlayerA>,
    game: SignGameState,
    current: Option<(EpochRecord, Epoch)>,
    records: Vec<EpochRecord>,
    done: bool,
}

pub fn sidestepping_scheme(params: SchemeParams, player: Box<dyn PlayerA>) -> Sidestepping {
    let game = SignGameState::new(params.k, params.num_epochs);
    Sidestepping {
        params,
        player,
        game,
        current: None,
        records: Vec::new(),
        done: false,
    }
}

impl Sidestepping {
    pub fn params(&self) -> &SchemeParams {
        &self.params
    }

    pub fn game(&self) -> &SignGameState {
        &self.game
    }

    fn close_epoch(&mut self, history: &History<'_>) {
        let Some((mut record, mut ep)) = self.current.take() else {
            return;
        };
        ep.interrupt();
        let (pos, neg) = history.ledger.interval_parts(&record.interval);
        let sign = if pos >= neg { Sign::Plus } else { Sign::Minus };
        self.game
            .place(record.cell, sign)
            .expect("player A's cell was checked when the epoch opened");
        record.end_step = history.ledger.step() as usize;
        record.sign_placed = Some(sign);
        record.stop = ep.stop_reason();
        self.records.push(record);
    }

    fn open_epoch(&mut self, history: &History<'_>) -> bool {
        if self.game.rounds_left() == 0 {
            return false;
        }
        let Some(cell) = self.player.choose(&self.game) else {
            return false;
        };
        assert!(
            self.game.is_empty_cell(cell),
            "player A chose cell {cell}, which is not empty"
        );
        let interval = self.params.interval(cell);
        let bias = self.params.bias(cell);
        let start = history.ledger.step() as usize;
        let record = EpochRecord {
            index: self.records.len() as u32 + 1,
            cell,
            interval,
            bias,
            start_step: start,
            end_step: start,
            sign_placed: None,
            stop: None,
        };
        let ep = epoch(self.params.epoch_len, interval, bias, self.params.theta);
        self.current = Some((record, ep));
        true
    }
}

impl Adversary for Sidestepping {
    fn validate(&self, horizon: usize, grid: PredictionGrid) -> Result<(), AdversaryError> {
        if grid.resolution() as usize <= 6 * self.params.k {
            return Err(AdversaryError::Config(format!(
                "grid resolution {} must exceed 6k = {}",
                grid.resolution(),
                6 * self.params.k
            )));
        }
        if grid != self.params.grid || horizon != self.params.horizon {
            return Err(AdversaryError::Config(
                "scheme parameters were derived for a different horizon or grid".into(),
            ));
        }
        Ok(())
    }

    /// The biases range over the midpoints of a symmetric partition of
    /// `[1/3, 2/3]`, so the band's mean 1/2 is declared as the coarse schedule.
    fn declared_mean(&self) -> Option<f64> {
        Some(0.5)
    }

    fn next_bit(&mut self, history: &History<'_>, rng: &mut dyn RngCore) -> Option<Commit> {
        loop {
            if self.done {
                return None;
            }
            if let Some((record, ep)) = &mut self.current {
                if let Some(bit) = ep.next_bit(history.ledger, rng) {
                    return Some(Commit {
                        bit,
                        announced_bias: Some(ep.bias_f64()),
                        epoch: Some(record.index),
                    });
                }
                self.close_epoch(history);
            }
            if !self.open_epoch(history) {
                self.done = true;
            }
        }
    }

    fn finish(&mut self, history: &History<'_>) {
        self.close_epoch(history);
        self.done = true;
    }

    fn report(&self) -> AdversaryReport {
        AdversaryReport {
            epochs: self.records.clone(),
            sign_state: Some(self.game.clone()),
            params: Some(self.params.clone()),
            ..Default::default()
        }
    }
}
