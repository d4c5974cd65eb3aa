//! Prediction strategies.
//!
//! A forecaster sees the ledger, the transcript so far and whatever side
//! channels the adversary offers, never the upcoming bit.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use num_rational::Ratio;
use rand::{Rng, RngCore};
use thiserror::Error;

use crate::calibration::{parse_prob, CalibrationError, CalibrationLedger, PredictionGrid, Prob, Transcript};

#[derive(Debug, Error)]
pub enum ForecastError {
    #[error("unsupported adversary: {0}")]
    Unsupported(&'static str),
    #[error("script exhausted at step {0}")]
    ScriptExhausted(usize),
    #[error("invalid forecaster configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Calibration(#[from] CalibrationError),
}

/// Everything a forecaster may look at before predicting step `t`.
#[derive(Clone, Copy)]
pub struct ForecasterView<'a> {
    pub ledger: &'a CalibrationLedger,
    pub transcript: &'a Transcript,
    /// Bias of the distribution the adversary will draw `b(t)` from, if published.
    pub announced_bias: Option<f64>,
    /// Mean of the adversary's declared schedule, if it declares one.
    pub declared_mean: Option<f64>,
    pub grid: PredictionGrid,
}

impl ForecasterView<'_> {
    /// 1-based index of the step being predicted.
    pub fn step(&self) -> usize {
        self.ledger.step() as usize + 1
    }
}

pub trait Forecaster: Send {
    /// Needs `announced_bias` at every step.
    fn needs_oracle(&self) -> bool {
        false
    }

    /// Needs a declared schedule mean.
    fn needs_schedule(&self) -> bool {
        false
    }

    /// Checked by the engine before step 1.
    fn validate(&self, _grid: PredictionGrid) -> Result<(), ForecastError> {
        Ok(())
    }

    fn predict(&mut self, view: &ForecasterView<'_>, rng: &mut dyn RngCore) -> Result<Prob, ForecastError>;
}

impl Forecaster for Box<dyn Forecaster> {
    fn needs_oracle(&self) -> bool {
        (**self).needs_oracle()
    }
    fn needs_schedule(&self) -> bool {
        (**self).needs_schedule()
    }
    fn validate(&self, grid: PredictionGrid) -> Result<(), ForecastError> {
        (**self).validate(grid)
    }
    fn predict(&mut self, view: &ForecasterView<'_>, rng: &mut dyn RngCore) -> Result<Prob, ForecastError> {
        (**self).predict(view, rng)
    }
}

/// Predicts the same grid value at every step.
#[derive(Clone, Debug)]
pub struct ConstantForecaster {
    p: Prob,
}

pub fn constant_forecaster(p: Prob) -> ConstantForecaster {
    ConstantForecaster { p }
}

impl Forecaster for ConstantForecaster {
    fn validate(&self, grid: PredictionGrid) -> Result<(), ForecastError> {
        grid.index_of(&self.p)?;
        Ok(())
    }

    fn predict(&mut self, _view: &ForecasterView<'_>, _rng: &mut dyn RngCore) -> Result<Prob, ForecastError> {
        Ok(self.p)
    }
}

/// Rounds the announced bias to the nearest multiple of `1/g`, then to the grid.
#[derive(Clone, Debug)]
pub struct TruthfulRounding {
    g: u32,
}

pub fn truthful_rounding_forecaster(g: u32) -> Result<TruthfulRounding, ForecastError> {
    if g == 0 {
        return Err(ForecastError::Config("coarseness g must be positive".into()));
    }
    Ok(TruthfulRounding { g })
}

impl TruthfulRounding {
    pub fn coarseness(&self) -> u32 {
        self.g
    }

    /// Nearest multiple of `1/g` to `bias`, ties toward the smaller one.
    pub fn round(&self, bias: f64) -> Prob {
        let coarse = PredictionGrid::new(self.g).expect("g > 0");
        coarse.point(coarse.nearest_f64(bias))
    }
}

impl Forecaster for TruthfulRounding {
    fn needs_oracle(&self) -> bool {
        true
    }

    fn predict(&mut self, view: &ForecasterView<'_>, _rng: &mut dyn RngCore) -> Result<Prob, ForecastError> {
        let bias = view
            .announced_bias
            .ok_or(ForecastError::Unsupported("truthful rounding needs the announced bias"))?;
        let coarse = self.round(bias);
        Ok(view.grid.point(view.grid.nearest(&coarse)))
    }
}

/// Predicts the grid value nearest the declared schedule mean at every step.
#[derive(Clone, Debug, Default)]
pub struct CoarseMean {
    cached: Option<Prob>,
}

pub fn coarse_mean_forecaster() -> CoarseMean {
    CoarseMean::default()
}

impl Forecaster for CoarseMean {
    fn needs_schedule(&self) -> bool {
        true
    }

    fn predict(&mut self, view: &ForecasterView<'_>, _rng: &mut dyn RngCore) -> Result<Prob, ForecastError> {
        if let Some(p) = self.cached {
            return Ok(p);
        }
        let mean = view
            .declared_mean
            .ok_or(ForecastError::Unsupported("coarse mean needs a declared schedule"))?;
        let p = view.grid.point(view.grid.nearest_f64(mean));
        self.cached = Some(p);
        Ok(p)
    }
}

/// Mixes between a grid value with `Delta <= -1` and a larger one with
/// `Delta >= 1`, each with probability 1/2. Without such a pair it predicts
/// the value with the smallest `|Delta|`, ties toward 1/2 and then downward.
#[derive(Clone, Debug, Default)]
pub struct Hedging {
    resolution: u32,
    seen: u64,
    scaled: Vec<i64>,
    /// Indices with `Delta <= -1`.
    neg: BTreeSet<u32>,
    /// Indices with `Delta >= 1`.
    pos: BTreeSet<u32>,
    /// `(|n Delta|, |2i - n|, i)` for every index.
    fallback: BTreeSet<(u64, u32, u32)>,
}

pub fn hedging_forecaster() -> Hedging {
    Hedging::default()
}

impl Hedging {
    fn fallback_key(&self, i: u32, d: i64) -> (u64, u32, u32) {
        (d.unsigned_abs(), (2 * i).abs_diff(self.resolution), i)
    }

    fn rebuild(&mut self, ledger: &CalibrationLedger) {
        let n = ledger.grid().resolution();
        self.resolution = n;
        self.seen = ledger.step();
        self.scaled = (0..=n).map(|i| ledger.scaled_bias(i)).collect();
        self.neg.clear();
        self.pos.clear();
        self.fallback.clear();
        for i in 0..=n {
            self.insert(i);
        }
    }

    fn insert(&mut self, i: u32) {
        let d = self.scaled[i as usize];
        let n = self.resolution as i64;
        if d <= -n {
            self.neg.insert(i);
        }
        if d >= n {
            self.pos.insert(i);
        }
        self.fallback.insert(self.fallback_key(i, d));
    }

    fn remove(&mut self, i: u32) {
        let d = self.scaled[i as usize];
        self.neg.remove(&i);
        self.pos.remove(&i);
        self.fallback.remove(&self.fallback_key(i, d));
    }

    fn sync(&mut self, ledger: &CalibrationLedger) {
        let in_step = ledger.grid().resolution() == self.resolution && !self.scaled.is_empty();
        match ledger.last_recorded() {
            Some((i, _)) if in_step && ledger.step() == self.seen + 1 => {
                self.remove(i);
                self.scaled[i as usize] = ledger.scaled_bias(i);
                self.insert(i);
                self.seen += 1;
            }
            _ if in_step && ledger.step() == self.seen => {}
            _ => self.rebuild(ledger),
        }
    }

    /// The pair `(p1, p2)` the forecaster would mix over, as grid indices.
    pub fn pair(&mut self, ledger: &CalibrationLedger) -> Option<(u32, u32)> {
        self.sync(ledger);
        let p1 = *self.neg.first()?;
        let p2 = *self.pos.last()?;
        (p1 < p2).then_some((p1, p2))
    }
}

impl Forecaster for Hedging {
    fn predict(&mut self, view: &ForecasterView<'_>, rng: &mut dyn RngCore) -> Result<Prob, ForecastError> {
        let grid = view.grid;
        let index = match self.pair(view.ledger) {
            Some((p1, p2)) => {
                if rng.gen_bool(0.5) {
                    p1
                } else {
                    p2
                }
            }
            None => self.fallback.first().expect("grid is never empty").2,
        };
        Ok(grid.point(index))
    }
}

/// Plays a fixed list of predictions.
#[derive(Clone, Debug)]
pub struct Scripted {
    script: Vec<Prob>,
    next: usize,
}

pub fn scripted_forecaster(script: Vec<Prob>) -> Scripted {
    Scripted { script, next: 0 }
}

/// Reads one prediction per line (`a/b` or a decimal); blank lines and `#`
/// comments are skipped.
pub fn load_script(path: &Path) -> Result<Vec<Prob>, ForecastError> {
    let text = fs::read_to_string(path).map_err(CalibrationError::from)?;
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| parse_prob(l).map_err(ForecastError::from))
        .collect()
}

impl Forecaster for Scripted {
    fn validate(&self, grid: PredictionGrid) -> Result<(), ForecastError> {
        for p in &self.script {
            grid.index_of(p)?;
        }
        Ok(())
    }

    fn predict(&mut self, view: &ForecasterView<'_>, _rng: &mut dyn RngCore) -> Result<Prob, ForecastError> {
        let p = *self
            .script
            .get(self.next)
            .ok_or(ForecastError::ScriptExhausted(view.step()))?;
        self.next += 1;
        Ok(p)
    }
}

/// `num/den` as a prediction; a small convenience for scripts built in code.
pub fn ratio(num: u64, den: u64) -> Prob {
    Ratio::new(num, den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn view<'a>(ledger: &'a CalibrationLedger, t: &'a Transcript, bias: Option<f64>) -> ForecasterView<'a> {
        ForecasterView {
            ledger,
            transcript: t,
            announced_bias: bias,
            declared_mean: None,
            grid: ledger.grid(),
        }
    }

    #[test]
    fn truthful_rounding_rules() {
        let grid = PredictionGrid::new(12).unwrap();
        let ledger = CalibrationLedger::new(grid);
        let t = Transcript::default();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut f = truthful_rounding_forecaster(4).unwrap();
        assert_eq!(f.predict(&view(&ledger, &t, Some(0.5)), &mut rng).unwrap(), ratio(1, 2));
        assert_eq!(f.predict(&view(&ledger, &t, Some(0.3)), &mut rng).unwrap(), ratio(1, 4));
        let mut one = truthful_rounding_forecaster(1).unwrap();
        assert_eq!(one.predict(&view(&ledger, &t, Some(0.5)), &mut rng).unwrap(), ratio(0, 1));
        assert_eq!(one.predict(&view(&ledger, &t, Some(0.51)), &mut rng).unwrap(), ratio(1, 1));
        assert!(matches!(
            f.predict(&view(&ledger, &t, None), &mut rng),
            Err(ForecastError::Unsupported(_))
        ));
        // 1/3 on a grid of 10 snaps to 3/10.
        let coarse = PredictionGrid::new(10).unwrap();
        let l2 = CalibrationLedger::new(coarse);
        let mut three = truthful_rounding_forecaster(3).unwrap();
        assert_eq!(three.predict(&view(&l2, &t, Some(0.34)), &mut rng).unwrap(), ratio(3, 10));
    }

    #[test]
    fn coarse_mean_requires_schedule() {
        let grid = PredictionGrid::new(8).unwrap();
        let ledger = CalibrationLedger::new(grid);
        let t = Transcript::default();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut f = coarse_mean_forecaster();
        assert!(f.predict(&view(&ledger, &t, Some(0.5)), &mut rng).is_err());
        let mut v = view(&ledger, &t, None);
        // Ladder k = 4: (k + 1) / (2k) = 5/8.
        v.declared_mean = Some(5.0 / 8.0);
        assert_eq!(f.predict(&v, &mut rng).unwrap(), ratio(5, 8));
    }

    #[test]
    fn hedging_pair_and_fallback() {
        let grid = PredictionGrid::new(4).unwrap();
        let mut ledger = CalibrationLedger::new(grid);
        let t = Transcript::default();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut f = hedging_forecaster();
        // Fresh ledger: every Delta is 0, so the value nearest 1/2 wins.
        assert_eq!(f.predict(&view(&ledger, &t, None), &mut rng).unwrap(), ratio(1, 2));

        // Delta_{1/4} = -2 (eight zeros), Delta_{3/4} = +3 (twelve ones).
        for _ in 0..8 {
            ledger.record_index(1, false);
        }
        for _ in 0..12 {
            ledger.record_index(3, true);
        }
        assert_eq!(ledger.bias(1), -2.0);
        assert_eq!(ledger.bias(3), 3.0);
        assert_eq!(f.pair(&ledger), Some((1, 3)));
        let mut seen = [0; 5];
        for _ in 0..400 {
            let p = f.predict(&view(&ledger, &t, None), &mut rng).unwrap();
            seen[grid.index_of(&p).unwrap() as usize] += 1;
        }
        assert_eq!(seen[0] + seen[2] + seen[4], 0);
        assert!(seen[1] > 150 && seen[3] > 150);
    }

    #[test]
    fn hedging_incremental_matches_rebuild() {
        let grid = PredictionGrid::new(10).unwrap();
        let mut ledger = CalibrationLedger::new(grid);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut inc = hedging_forecaster();
        for _ in 0..3000 {
            let i = rng.gen_range(0..=10);
            ledger.record_index(i, rng.gen_bool(0.5));
            let mut fresh = hedging_forecaster();
            assert_eq!(inc.pair(&ledger), fresh.pair(&ledger));
            assert_eq!(inc.fallback.first(), fresh.fallback.first());
        }
    }

    #[test]
    fn hedging_drift_is_half_gap() {
        let grid = PredictionGrid::new(20).unwrap();
        let mut ledger = CalibrationLedger::new(grid);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut f = hedging_forecaster();
        let mut checked = 0;
        for _ in 0..5000 {
            if let Some((p1, p2)) = f.pair(&ledger) {
                let now = ledger.calib_error();
                let gap = (p2 - p1) as f64 / 20.0;
                for bit in [false, true] {
                    let drift = (ledger.error_after(p1, bit) + ledger.error_after(p2, bit)) / 2.0 - now;
                    assert!((drift + gap / 2.0).abs() < 1e-9);
                }
                checked += 1;
            }
            // Bits drawn at the predicted value keep each Delta a driftless walk.
            let i = rng.gen_range(0..=20);
            ledger.record_index(i, rng.gen_bool(i as f64 / 20.0));
        }
        assert!(checked > 1000);
    }

    #[test]
    fn scripted_plays_and_exhausts() {
        let grid = PredictionGrid::new(4).unwrap();
        let mut ledger = CalibrationLedger::new(grid);
        let t = Transcript::default();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut f = scripted_forecaster(vec![ratio(1, 4); 4]);
        for _ in 0..4 {
            let p = f.predict(&view(&ledger, &t, None), &mut rng).unwrap();
            ledger.record(&p, true).unwrap();
        }
        assert_eq!(ledger.calib_error(), 3.0);
        assert!(matches!(
            f.predict(&view(&ledger, &t, None), &mut rng),
            Err(ForecastError::ScriptExhausted(5))
        ));
        assert!(scripted_forecaster(vec![ratio(1, 3)]).validate(grid).is_err());
    }
}
