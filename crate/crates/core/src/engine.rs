//! The game loop.
//!
//! Each step the adversary commits its bit first; the forecaster then predicts
//! from a view that excludes that bit. Both sides draw randomness from separate
//! ChaCha streams of the configured seed.

use std::any::Any;
use std::fmt;
use std::panic::{self, AssertUnwindSafe};
use std::path::PathBuf;
use std::str::FromStr;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::adversaries::{
    classify_epochs, early_stopping_wrapper, epoch_ladder, iid_bernoulli, sidestepping_scheme, Adversary,
    AdversaryError, EarlyStopReport, EpochDiagnostic, EpochLabel, EpochRecord, History, PlayerASpec,
    SchemeParams, DEFAULT_C0,
};
use crate::calibration::{
    parse_prob, CalibrationError, CalibrationLedger, EpochMark, PredictionGrid, Prob, Step, Transcript,
};
use crate::forecasters::{
    coarse_mean_forecaster, constant_forecaster, hedging_forecaster, load_script, scripted_forecaster,
    truthful_rounding_forecaster, ForecastError, Forecaster, ForecasterView,
};
use crate::sign_game::default_admissible_pair;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("capability mismatch: {0}")]
    Capability(String),
    #[error("invalid specification: {0}")]
    Spec(String),
    #[error(transparent)]
    Adversary(#[from] AdversaryError),
    #[error(transparent)]
    Forecast(#[from] ForecastError),
    #[error(transparent)]
    Calibration(#[from] CalibrationError),
    #[error("strategy panicked at step {step}: {message}")]
    Panic { step: usize, message: String },
}

/// `k` or `g` given either directly or as the rounded cube root of `T`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scale {
    Fixed(u32),
    Cbrt,
}

impl Scale {
    pub fn resolve(self, horizon: usize) -> u32 {
        match self {
            Scale::Fixed(k) => k,
            Scale::Cbrt => (horizon as f64).cbrt().round().max(1.0) as u32,
        }
    }
}

impl FromStr for Scale {
    type Err = EngineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "cbrt" {
            return Ok(Scale::Cbrt);
        }
        match s.parse::<u32>() {
            Ok(k) if k > 0 => Ok(Scale::Fixed(k)),
            _ => Err(EngineError::Spec(format!("'{s}' is neither a positive integer nor 'cbrt'"))),
        }
    }
}

impl fmt::Display for Scale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scale::Fixed(k) => write!(f, "{k}"),
            Scale::Cbrt => f.write_str("cbrt"),
        }
    }
}

/// Settings of the sidestepping scheme. `theta` overrides the derived threshold.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SidestepSpec {
    pub alpha: f64,
    pub beta: f64,
    pub c0: f64,
    pub theta: Option<f64>,
    pub player: PlayerASpec,
    pub early_stop: bool,
}

impl Default for SidestepSpec {
    fn default() -> Self {
        let (alpha, beta) = default_admissible_pair();
        Self {
            alpha,
            beta,
            c0: DEFAULT_C0,
            theta: None,
            player: PlayerASpec::Binary,
            early_stop: false,
        }
    }
}

/// `iid:p`, `ladder:k`, `ladder:cbrt`, `sidestep` or `sidestep+earlystop`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AdversarySpec {
    Iid(f64),
    Ladder(Scale),
    Sidestep(SidestepSpec),
}

impl FromStr for AdversarySpec {
    type Err = EngineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (name, arg) = s.split_once(':').unwrap_or((s, ""));
        match (name, arg) {
            ("iid", p) => p
                .parse::<f64>()
                .ok()
                .filter(|p| (0.0..=1.0).contains(p))
                .map(AdversarySpec::Iid)
                .ok_or_else(|| EngineError::Spec(format!("bad bias in '{s}'"))),
            ("ladder", k) => Ok(AdversarySpec::Ladder(k.parse()?)),
            ("sidestep", "") => Ok(AdversarySpec::Sidestep(SidestepSpec::default())),
            ("sidestep+earlystop", "") => Ok(AdversarySpec::Sidestep(SidestepSpec {
                early_stop: true,
                ..Default::default()
            })),
            _ => Err(EngineError::Spec(format!("unknown adversary '{s}'"))),
        }
    }
}

impl fmt::Display for AdversarySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AdversarySpec::Iid(p) => write!(f, "iid:{p}"),
            AdversarySpec::Ladder(k) => write!(f, "ladder:{k}"),
            AdversarySpec::Sidestep(s) if s.early_stop => f.write_str("sidestep+earlystop"),
            AdversarySpec::Sidestep(_) => f.write_str("sidestep"),
        }
    }
}

impl AdversarySpec {
    pub fn scheme_params(&self, horizon: usize, grid: PredictionGrid) -> Result<Option<SchemeParams>, EngineError> {
        let AdversarySpec::Sidestep(s) = self else {
            return Ok(None);
        };
        let params = SchemeParams::new(horizon, s.alpha, s.beta, s.c0, grid)?;
        Ok(Some(match s.theta {
            Some(theta) => params.with_threshold(theta),
            None => params,
        }))
    }

    pub fn build(&self, horizon: usize, grid: PredictionGrid) -> Result<Box<dyn Adversary>, EngineError> {
        Ok(match self {
            AdversarySpec::Iid(p) => Box::new(iid_bernoulli(*p)?),
            AdversarySpec::Ladder(k) => Box::new(epoch_ladder(k.resolve(horizon) as usize, horizon)?),
            AdversarySpec::Sidestep(s) => {
                let params = self.scheme_params(horizon, grid)?.expect("sidestep has params");
                let player = s.player.build(params.k, params.num_epochs)?;
                let b = params.b;
                let scheme = sidestepping_scheme(params, player);
                if s.early_stop {
                    Box::new(early_stopping_wrapper(scheme, b, horizon))
                } else {
                    Box::new(scheme)
                }
            }
        })
    }
}

/// `const:p`, `truthful:g`, `truthful:cbrt`, `coarse`, `hedging` or `script:file`.
#[derive(Clone, Debug, PartialEq)]
pub enum ForecasterSpec {
    Constant(Prob),
    Truthful(Scale),
    Coarse,
    Hedging,
    Script(PathBuf),
}

impl FromStr for ForecasterSpec {
    type Err = EngineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (name, arg) = s.split_once(':').unwrap_or((s, ""));
        match (name, arg) {
            ("const", p) => Ok(ForecasterSpec::Constant(parse_prob(p)?)),
            ("truthful", g) => Ok(ForecasterSpec::Truthful(g.parse()?)),
            ("coarse", "") => Ok(ForecasterSpec::Coarse),
            ("hedging", "") => Ok(ForecasterSpec::Hedging),
            ("script", path) if !path.is_empty() => Ok(ForecasterSpec::Script(path.into())),
            _ => Err(EngineError::Spec(format!("unknown forecaster '{s}'"))),
        }
    }
}

impl fmt::Display for ForecasterSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ForecasterSpec::Constant(p) => write!(f, "const:{p}"),
            ForecasterSpec::Truthful(g) => write!(f, "truthful:{g}"),
            ForecasterSpec::Coarse => f.write_str("coarse"),
            ForecasterSpec::Hedging => f.write_str("hedging"),
            ForecasterSpec::Script(p) => write!(f, "script:{}", p.display()),
        }
    }
}

impl ForecasterSpec {
    pub fn build(&self, horizon: usize) -> Result<Box<dyn Forecaster>, EngineError> {
        Ok(match self {
            ForecasterSpec::Constant(p) => Box::new(constant_forecaster(*p)),
            ForecasterSpec::Truthful(g) => Box::new(truthful_rounding_forecaster(g.resolve(horizon))?),
            ForecasterSpec::Coarse => Box::new(coarse_mean_forecaster()),
            ForecasterSpec::Hedging => Box::new(hedging_forecaster()),
            ForecasterSpec::Script(path) => Box::new(scripted_forecaster(load_script(path)?)),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GameConfig {
    pub horizon: usize,
    pub seed: u64,
    pub grid: PredictionGrid,
    pub adversary: AdversarySpec,
    pub forecaster: ForecasterSpec,
    /// Keep the step list in the result. Epoch marks are always kept.
    pub keep_transcript: bool,
}

impl GameConfig {
    /// A config on the grid of resolution `T` (at least 2, so 1/2 is always on it).
    pub fn new(horizon: usize, seed: u64, adversary: AdversarySpec, forecaster: ForecasterSpec) -> Self {
        Self {
            horizon,
            seed,
            grid: PredictionGrid::new(horizon.max(2) as u32).expect("positive resolution"),
            adversary,
            forecaster,
            keep_transcript: true,
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }
}

#[derive(Clone, Debug)]
pub struct GameResult {
    pub seed: u64,
    pub horizon: usize,
    pub transcript: Transcript,
    pub final_calerr: f64,
    pub max_err: f64,
    pub t_act: usize,
    pub epoch_labels: Option<Vec<EpochLabel>>,
    pub epoch_diagnostics: Vec<EpochDiagnostic>,
    pub preserved_signs: Option<usize>,
    pub epochs: Vec<EpochRecord>,
    pub params: Option<SchemeParams>,
    pub early_stop: Option<EarlyStopReport>,
}

/// The JSON form of a [`GameResult`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GameSummary {
    pub seed: u64,
    pub t_act: usize,
    pub calerr: f64,
    pub maxerr: f64,
    pub preserved_signs: Option<usize>,
    pub epoch_labels: Vec<EpochLabel>,
}

impl GameResult {
    pub fn summary(&self) -> GameSummary {
        GameSummary {
            seed: self.seed,
            t_act: self.t_act,
            calerr: self.final_calerr,
            maxerr: self.max_err,
            preserved_signs: self.preserved_signs,
            epoch_labels: self.epoch_labels.clone().unwrap_or_default(),
        }
    }
}

/// Protocol settings for [`play`].
#[derive(Clone, Copy, Debug)]
pub struct PlayOptions {
    pub horizon: usize,
    pub grid: PredictionGrid,
    pub seed: u64,
    pub keep_transcript: bool,
}

/// Plays a single game. Capability mismatches are reported before step 1.
pub fn run_game(config: &GameConfig) -> Result<GameResult, EngineError> {
    let adversary = config.adversary.build(config.horizon, config.grid)?;
    let forecaster = config.forecaster.build(config.horizon)?;
    play(
        adversary,
        forecaster,
        PlayOptions {
            horizon: config.horizon,
            grid: config.grid,
            seed: config.seed,
            keep_transcript: config.keep_transcript,
        },
    )
}

/// Plays any adversary against any forecaster with the engine's seeded streams.
pub fn play<A: Adversary, F: Forecaster>(adversary: A, forecaster: F, opts: PlayOptions) -> Result<GameResult, EngineError> {
    let (mut arng, mut frng) = streams(opts.seed);
    play_with_rngs(adversary, forecaster, opts, &mut arng, &mut frng)
}

fn streams(seed: u64) -> (ChaCha8Rng, ChaCha8Rng) {
    let mut a = ChaCha8Rng::seed_from_u64(seed);
    a.set_stream(1);
    let mut f = ChaCha8Rng::seed_from_u64(seed);
    f.set_stream(2);
    (a, f)
}

fn check_capabilities<A: Adversary, F: Forecaster>(
    adversary: &A,
    forecaster: &F,
    opts: &PlayOptions,
) -> Result<(), EngineError> {
    adversary.validate(opts.horizon, opts.grid)?;
    forecaster.validate(opts.grid)?;
    if forecaster.needs_oracle() && !adversary.announces_bias() {
        return Err(EngineError::Capability(
            "forecaster needs announced biases but the adversary publishes none".into(),
        ));
    }
    if forecaster.needs_schedule() && adversary.declared_mean().is_none() {
        return Err(EngineError::Capability(
            "forecaster needs a declared schedule but the adversary is adaptive without one".into(),
        ));
    }
    Ok(())
}

fn panic_message(payload: Box<dyn Any + Send>) -> String {
    payload
        .downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| payload.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "non-string panic payload".into())
}

pub(crate) fn play_with_rngs<A: Adversary, F: Forecaster>(
    mut adversary: A,
    mut forecaster: F,
    opts: PlayOptions,
    arng: &mut dyn RngCore,
    frng: &mut dyn RngCore,
) -> Result<GameResult, EngineError> {
    check_capabilities(&adversary, &forecaster, &opts)?;
    let declared_mean = adversary.declared_mean();
    let mut ledger = CalibrationLedger::new(opts.grid);
    let mut transcript = Transcript::default();

    let outcome = panic::catch_unwind(AssertUnwindSafe(|| -> Result<(), EngineError> {
        while transcript.len() < opts.horizon {
            let history = History {
                ledger: &ledger,
                transcript: &transcript,
                horizon: opts.horizon,
            };
            let Some(commit) = adversary.next_bit(&history, arng) else {
                break;
            };
            if forecaster.needs_oracle() && commit.announced_bias.is_none() {
                return Err(EngineError::Capability(format!(
                    "no announced bias at step {}",
                    transcript.len() + 1
                )));
            }
            let view = ForecasterView {
                ledger: &ledger,
                transcript: &transcript,
                announced_bias: commit.announced_bias,
                declared_mean,
                grid: opts.grid,
            };
            let p = forecaster.predict(&view, frng)?;
            ledger.record(&p, commit.bit)?;
            transcript.steps.push(Step {
                prediction: p,
                bit: commit.bit,
                announced_bias: commit.announced_bias,
                epoch: commit.epoch,
            });
        }
        adversary.finish(&History {
            ledger: &ledger,
            transcript: &transcript,
            horizon: opts.horizon,
        });
        Ok(())
    }));
    match outcome {
        Ok(r) => r?,
        Err(payload) => {
            return Err(EngineError::Panic {
                step: transcript.len() + 1,
                message: panic_message(payload),
            })
        }
    }

    let report = adversary.report();
    transcript.epoch_marks = report
        .epochs
        .iter()
        .map(|e| EpochMark {
            id: e.index,
            start_step: e.start_step,
            end_step: e.end_step,
            interval: e.interval,
            bias: e.bias,
        })
        .collect();
    let (epoch_labels, epoch_diagnostics) = match &report.params {
        Some(params) if !transcript.epoch_marks.is_empty() => {
            let diags = classify_epochs(&transcript, params)?;
            (Some(diags.iter().map(|d| d.label).collect()), diags)
        }
        Some(_) => (Some(Vec::new()), Vec::new()),
        None => (None, Vec::new()),
    };
    if !opts.keep_transcript {
        transcript.steps = Vec::new();
    }
    Ok(GameResult {
        seed: opts.seed,
        horizon: opts.horizon,
        t_act: ledger.step() as usize,
        final_calerr: ledger.calib_error(),
        max_err: ledger.max_err(),
        transcript,
        epoch_labels,
        epoch_diagnostics,
        preserved_signs: report.sign_state.as_ref().map(|s| s.preserved_count()),
        epochs: report.epochs,
        params: report.params,
        early_stop: report.early_stop,
    })
}

/// SplitMix64 finalizer of `i`.
pub fn splitmix64(i: u64) -> u64 {
    let mut z = i.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of trial `i`: `seed XOR splitmix64(i)`.
pub fn trial_seed(seed: u64, i: u64) -> u64 {
    seed ^ splitmix64(i)
}

/// Runs trials `0..trials` in parallel; results are ordered by trial index.
pub fn run_trials(config: &GameConfig, trials: usize) -> Result<Vec<GameResult>, EngineError> {
    run_trial_range(config, 0..trials as u64)
}

pub fn run_trial_range(config: &GameConfig, range: std::ops::Range<u64>) -> Result<Vec<GameResult>, EngineError> {
    range
        .into_par_iter()
        .map(|i| run_game(&config.with_seed(trial_seed(config.seed, i))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversaries::{Commit, EpochAdversary};
    use crate::calibration::{prob, OpenInterval};
    use crate::forecasters::ratio;
    use num_rational::Ratio;

    fn opts(horizon: usize, n: u32, seed: u64) -> PlayOptions {
        PlayOptions {
            horizon,
            grid: PredictionGrid::new(n).unwrap(),
            seed,
            keep_transcript: true,
        }
    }

    #[test]
    fn spec_parsing_round_trips() {
        for s in ["iid:0.5", "ladder:4", "ladder:cbrt", "sidestep", "sidestep+earlystop"] {
            assert_eq!(s.parse::<AdversarySpec>().unwrap().to_string(), s);
        }
        for s in ["const:1/2", "truthful:4", "truthful:cbrt", "coarse", "hedging", "script:x.txt"] {
            assert_eq!(s.parse::<ForecasterSpec>().unwrap().to_string(), s);
        }
        assert!("iid:2".parse::<AdversarySpec>().is_err());
        assert!("ladder:0".parse::<AdversarySpec>().is_err());
        assert!("oracle".parse::<ForecasterSpec>().is_err());
    }

    #[test]
    fn constant_half_against_ones() {
        let r = play(iid_bernoulli(1.0).unwrap(), constant_forecaster(ratio(1, 2)), opts(4, 4, 0)).unwrap();
        assert_eq!(r.final_calerr, 2.0);
        assert_eq!(r.t_act, 4);
    }

    #[test]
    fn zero_horizon_is_empty() {
        let cfg = GameConfig::new(0, 1, "iid:0.5".parse().unwrap(), "const:1/2".parse().unwrap());
        let r = run_game(&cfg).unwrap();
        assert_eq!(r.final_calerr, 0.0);
        assert!(r.transcript.is_empty());
    }

    #[test]
    fn capability_mismatch_is_reported_up_front() {
        struct Silent;
        impl Adversary for Silent {
            fn announces_bias(&self) -> bool {
                false
            }
            fn next_bit(&mut self, _: &History<'_>, _: &mut dyn RngCore) -> Option<Commit> {
                panic!("must not be called")
            }
        }
        let err = play(Silent, truthful_rounding_forecaster(4).unwrap(), opts(10, 10, 0)).unwrap_err();
        assert!(matches!(err, EngineError::Capability(_)));
        let err = play(Silent, coarse_mean_forecaster(), opts(10, 10, 0)).unwrap_err();
        assert!(matches!(err, EngineError::Capability(_)));
        // The sidestepping scheme on a coarse grid is rejected before any bit.
        let cfg = GameConfig {
            grid: PredictionGrid::new(12).unwrap(),
            ..GameConfig::new(4096, 0, "sidestep".parse().unwrap(), "hedging".parse().unwrap())
        };
        assert!(run_game(&cfg).is_err());
    }

    #[test]
    fn strategy_panics_become_diagnostics() {
        struct Boom;
        impl Adversary for Boom {
            fn next_bit(&mut self, h: &History<'_>, _: &mut dyn RngCore) -> Option<Commit> {
                if h.ledger.step() == 3 {
                    panic!("boom");
                }
                Some(Commit { bit: true, announced_bias: None, epoch: None })
            }
        }
        let prev = panic::take_hook();
        panic::set_hook(Box::new(|_| {}));
        let err = play(Boom, hedging_forecaster(), opts(10, 10, 0)).unwrap_err();
        panic::set_hook(prev);
        match err {
            EngineError::Panic { step, message } => {
                assert_eq!(step, 4);
                assert_eq!(message, "boom");
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn same_config_same_transcript() {
        let cfg = GameConfig::new(4096, 17, "sidestep".parse().unwrap(), "hedging".parse().unwrap());
        let a = run_game(&cfg).unwrap();
        let b = run_game(&cfg).unwrap();
        assert_eq!(a.transcript, b.transcript);
        assert!(!a.transcript.epoch_marks.is_empty());
        assert_ne!(run_game(&cfg.with_seed(18)).unwrap().transcript, a.transcript);
    }

    #[test]
    fn trials_are_indexed_and_ordered() {
        let cfg = GameConfig::new(200, 5, "iid:0.5".parse().unwrap(), "hedging".parse().unwrap());
        let all = run_trials(&cfg, 8).unwrap();
        let tail = run_trial_range(&cfg, 5..8).unwrap();
        for (a, b) in all[5..].iter().zip(&tail) {
            assert_eq!(a.transcript, b.transcript);
            assert_eq!(a.seed, b.seed);
        }
        let one = run_trials(&cfg, 1).unwrap();
        let direct = run_game(&cfg.with_seed(trial_seed(5, 0))).unwrap();
        assert_eq!(one[0].transcript, direct.transcript);
    }

    #[test]
    fn replay_conserves_error() {
        for adv in ["iid:0.3", "ladder:cbrt", "sidestep+earlystop"] {
            for fc in ["hedging", "truthful:cbrt", "const:1/2"] {
                let cfg = GameConfig::new(3000, 2, adv.parse().unwrap(), fc.parse().unwrap());
                let r = run_game(&cfg).unwrap();
                let ledger = r.transcript.replay(cfg.grid).unwrap();
                assert_eq!(ledger.calib_error(), r.final_calerr);
                assert_eq!(ledger.max_err(), r.max_err);
                assert!(r.final_calerr <= r.max_err);
                assert!(r.t_act <= cfg.horizon);
            }
        }
    }

    /// Flips the committed bit at one step.
    struct FlipAt<A> {
        inner: A,
        at: usize,
    }

    impl<A: Adversary> Adversary for FlipAt<A> {
        fn next_bit(&mut self, h: &History<'_>, rng: &mut dyn RngCore) -> Option<Commit> {
            let mut c = self.inner.next_bit(h, rng)?;
            if h.ledger.step() as usize + 1 == self.at {
                c.bit = !c.bit;
            }
            Some(c)
        }
    }

    #[test]
    fn flipping_the_bit_never_moves_the_prediction() {
        for at in [1, 7, 50, 199] {
            let base = play(iid_bernoulli(0.4).unwrap(), hedging_forecaster(), opts(200, 20, 9)).unwrap();
            let flipped = play(
                FlipAt { inner: iid_bernoulli(0.4).unwrap(), at },
                hedging_forecaster(),
                opts(200, 20, 9),
            )
            .unwrap();
            let (s, f) = (&base.transcript.steps, &flipped.transcript.steps);
            for t in 0..at - 1 {
                assert_eq!(s[t], f[t]);
            }
            assert_ne!(s[at - 1].bit, f[at - 1].bit);
            assert_eq!(s[at - 1].prediction, f[at - 1].prediction);
        }
    }

    /// Records every word drawn from the inner generator.
    struct Tape<R> {
        inner: R,
        words: Vec<u64>,
    }

    impl<R: RngCore> RngCore for Tape<R> {
        fn next_u32(&mut self) -> u32 {
            self.next_u64() as u32
        }
        fn next_u64(&mut self) -> u64 {
            let w = self.inner.next_u64();
            self.words.push(w);
            w
        }
        fn fill_bytes(&mut self, dest: &mut [u8]) {
            for chunk in dest.chunks_mut(8) {
                let w = self.next_u64().to_le_bytes();
                chunk.copy_from_slice(&w[..chunk.len()]);
            }
        }
        fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
            self.fill_bytes(dest);
            Ok(())
        }
    }

    struct Playback {
        words: Vec<u64>,
        next: usize,
    }

    impl RngCore for Playback {
        fn next_u32(&mut self) -> u32 {
            self.next_u64() as u32
        }
        fn next_u64(&mut self) -> u64 {
            let w = self.words[self.next];
            self.next += 1;
            w
        }
        fn fill_bytes(&mut self, dest: &mut [u8]) {
            for chunk in dest.chunks_mut(8) {
                let w = self.next_u64().to_le_bytes();
                chunk.copy_from_slice(&w[..chunk.len()]);
            }
        }
        fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
            self.fill_bytes(dest);
            Ok(())
        }
    }

    #[test]
    fn adversary_bits_follow_from_history_and_tape() {
        let cfg = GameConfig::new(4096, 23, "sidestep+earlystop".parse().unwrap(), "hedging".parse().unwrap());
        let (arng, mut frng) = streams(cfg.seed);
        let mut tape = Tape { inner: arng, words: Vec::new() };
        let adv = cfg.adversary.build(cfg.horizon, cfg.grid).unwrap();
        let fc = cfg.forecaster.build(cfg.horizon).unwrap();
        let o = PlayOptions { horizon: cfg.horizon, grid: cfg.grid, seed: cfg.seed, keep_transcript: true };
        let r = play_with_rngs(adv, fc, o, &mut tape, &mut frng).unwrap();

        // Replay the adversary alone against the recorded predictions.
        let mut adv = cfg.adversary.build(cfg.horizon, cfg.grid).unwrap();
        let mut playback = Playback { words: tape.words.clone(), next: 0 };
        let mut ledger = CalibrationLedger::new(cfg.grid);
        let mut seen = Transcript::default();
        for step in &r.transcript.steps {
            let h = History { ledger: &ledger, transcript: &seen, horizon: cfg.horizon };
            let c = adv.next_bit(&h, &mut playback).unwrap();
            assert_eq!(c.bit, step.bit);
            assert_eq!(c.announced_bias, step.announced_bias);
            ledger.record(&step.prediction, step.bit).unwrap();
            seen.steps.push(step.clone());
        }
        assert_eq!(playback.next, tape.words.len());
        // The same run matches the engine's own stream.
        assert_eq!(run_game(&cfg).unwrap().transcript, r.transcript);
    }

    #[test]
    fn epoch_stops_when_midpoint_walk_reaches_one() {
        // Bias 1/2 on (1/3, 2/3), forecaster always predicts 1/2, theta = 1.
        let interval = OpenInterval::new(Ratio::new(1, 3), Ratio::new(2, 3));
        let ep = crate::adversaries::epoch(1000, interval, Ratio::new(1, 2), 1.0);
        let r = play(EpochAdversary::new(ep), constant_forecaster(ratio(1, 2)), opts(1000, 6, 31)).unwrap();
        // Scalar replay of Delta_{1/2}: the epoch must end at the first t with |Delta| >= 1.
        let mut delta = 0.0f64;
        let mut stop = None;
        for (t, s) in r.transcript.steps.iter().enumerate() {
            delta += s.bit as u8 as f64 - 0.5;
            if delta.abs() >= 1.0 {
                stop = Some(t + 1);
                break;
            }
        }
        assert_eq!(Some(r.t_act), stop);
    }

    #[test]
    fn sidestep_walkthrough_on_three_cells() {
        // T = 150 gives k = 5 at the default pair; k = 3 is forced by hand.
        let grid = PredictionGrid::new(60).unwrap();
        let (a, b) = default_admissible_pair();
        let mut params = SchemeParams::new(150, a, b, DEFAULT_C0, grid).unwrap();
        params.k = 3;
        params.num_epochs = 2;
        params.epoch_len = 20;
        let params = params.with_threshold(1e9);
        let adv = sidestepping_scheme(params, Box::new(crate::sign_game::BinarySearchStrategy));
        let r = play(adv, constant_forecaster(prob(1, 2).unwrap()), opts(150, 60, 3)).unwrap();
        assert_eq!(r.epochs.len(), 2);
        assert_eq!(r.epochs[0].cell, 2);
        assert_eq!(r.epochs[0].bias, Ratio::new(1, 2));
        let next = match r.epochs[0].sign_placed.unwrap() {
            crate::sign_game::Sign::Plus => 3,
            crate::sign_game::Sign::Minus => 1,
        };
        assert_eq!(r.epochs[1].cell, next);
        // With predictions at the bias, the sign is that of the binomial excess.
        let ones = r.transcript.steps[..20].iter().filter(|s| s.bit).count();
        assert_eq!(next == 3, ones >= 10);
        if next == 3 {
            assert!((crate::calibration::prob_to_f64(&r.epochs[1].bias) - 0.6111).abs() < 1e-4);
        }
        assert_eq!(r.t_act, 40);
    }
}
