//! Prediction grid and calibration-error bookkeeping.
//!
//! Every prediction lives on a grid `{0, 1/n, ..., 1}` and is identified by its
//! integer numerator, so bucket identity is exact. Biases are kept internally as
//! `n * Delta_p = n * ones_p - count_p * i`, which is an integer; the totals and
//! interval sums are therefore exact and only converted to `f64` on the way out.

use std::io;
use std::ops::RangeInclusive;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fenwick::Fenwick;

/// An exact probability `num / den`, always in lowest terms.
pub type Prob = Ratio<u64>;

/// Builds a [`Prob`], rejecting values outside `[0, 1]`.
pub fn prob(num: u64, den: u64) -> Result<Prob, CalibrationError> {
    if den == 0 || num > den {
        return Err(CalibrationError::InvalidProbability(format!("{num}/{den}")));
    }
    Ok(Ratio::new(num, den))
}

/// Parses `"a/b"` or a decimal such as `"0.25"` into an exact probability.
pub fn parse_prob(text: &str) -> Result<Prob, CalibrationError> {
    let text = text.trim();
    let bad = || CalibrationError::InvalidProbability(text.to_string());
    if let Some((a, b)) = text.split_once('/') {
        let a = a.trim().parse::<u64>().map_err(|_| bad())?;
        let b = b.trim().parse::<u64>().map_err(|_| bad())?;
        return prob(a, b);
    }
    let (int, frac) = text.split_once('.').unwrap_or((text, ""));
    if frac.len() > 12 || !frac.chars().all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let int = if int.is_empty() {
        0
    } else {
        int.parse::<u64>().map_err(|_| bad())?
    };
    let den = 10u64.pow(frac.len() as u32);
    let frac_num = if frac.is_empty() {
        0
    } else {
        frac.parse::<u64>().map_err(|_| bad())?
    };
    prob(int * den + frac_num, den)
}

pub fn prob_to_f64(p: &Prob) -> f64 {
    *p.numer() as f64 / *p.denom() as f64
}

#[derive(Debug, Error)]
pub enum CalibrationError {
    #[error("grid resolution must be positive")]
    InvalidResolution,
    #[error("invalid probability {0}")]
    InvalidProbability(String),
    #[error("prediction {num}/{den} is not on the grid of resolution {resolution}")]
    OffGrid { num: u64, den: u64, resolution: u32 },
    #[error("malformed transcript: {0}")]
    Transcript(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// An open interval `(lo, hi)` with exact rational endpoints.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OpenInterval {
    pub lo: Prob,
    pub hi: Prob,
}

impl OpenInterval {
    pub fn new(lo: Prob, hi: Prob) -> Self {
        Self { lo, hi }
    }

    pub fn midpoint(&self) -> Prob {
        (self.lo + self.hi) / 2
    }

    /// Strict membership: boundary points are outside.
    pub fn contains(&self, p: &Prob) -> bool {
        self.lo < *p && *p < self.hi
    }
}

/// The grid `{0, 1/n, 2/n, ..., 1}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PredictionGrid {
    resolution: u32,
}

impl PredictionGrid {
    pub fn new(resolution: u32) -> Result<Self, CalibrationError> {
        if resolution == 0 {
            return Err(CalibrationError::InvalidResolution);
        }
        Ok(Self { resolution })
    }

    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    /// Number of grid values, `n + 1`.
    pub fn len(&self) -> usize {
        self.resolution as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn point(&self, index: u32) -> Prob {
        debug_assert!(index <= self.resolution);
        Ratio::new(index as u64, self.resolution as u64)
    }

    pub fn value(&self, index: u32) -> f64 {
        index as f64 / self.resolution as f64
    }

    /// Numerator of `p` over this grid's denominator, if `p` is a grid value.
    pub fn index_of(&self, p: &Prob) -> Result<u32, CalibrationError> {
        let n = self.resolution as u128;
        let scaled = *p.numer() as u128 * n;
        let den = *p.denom() as u128;
        if !scaled.is_multiple_of(den) || *p.numer() > *p.denom() {
            return Err(CalibrationError::OffGrid {
                num: *p.numer(),
                den: *p.denom(),
                resolution: self.resolution,
            });
        }
        Ok((scaled / den) as u32)
    }

    pub fn contains(&self, p: &Prob) -> bool {
        self.index_of(p).is_ok()
    }

    /// Index of the grid value nearest to `p`; exact ties go to the smaller value.
    pub fn nearest(&self, p: &Prob) -> u32 {
        let n = self.resolution as u128;
        let scaled = *p.numer() as u128 * n;
        let den = *p.denom() as u128;
        let (q, r) = (scaled / den, scaled % den);
        let idx = if 2 * r > den { q + 1 } else { q };
        idx.min(n) as u32
    }

    /// Like [`nearest`](Self::nearest) for a floating-point input. Values within
    /// `1e-9` of a midpoint are treated as ties.
    pub fn nearest_f64(&self, x: f64) -> u32 {
        let y = x.clamp(0.0, 1.0) * self.resolution as f64;
        let floor = y.floor();
        let idx = if y - floor > 0.5 + 1e-9 {
            floor + 1.0
        } else {
            floor
        };
        (idx as u32).min(self.resolution)
    }

    /// Indices of the grid values strictly inside `interval`.
    pub fn indices_inside(&self, interval: &OpenInterval) -> Option<RangeInclusive<u32>> {
        let n = self.resolution as u128;
        let lo_num = *interval.lo.numer() as u128 * n;
        let first = lo_num / *interval.lo.denom() as u128 + 1;
        let hi_num = *interval.hi.numer() as u128 * n;
        let hi_den = *interval.hi.denom() as u128;
        let ceil = hi_num.div_ceil(hi_den);
        if ceil == 0 {
            return None;
        }
        let last = (ceil - 1).min(n);
        (first <= last).then_some(first as u32..=last as u32)
    }
}

/// Per-bucket counters `n_p`, `m_p` and the running error statistics.
#[derive(Clone, Debug)]
pub struct CalibrationLedger {
    grid: PredictionGrid,
    counts: Vec<u64>,
    ones: Vec<u64>,
    step: u64,
    pos: Fenwick,
    neg: Fenwick,
    pos_total: i64,
    neg_total: i64,
    max_err: f64,
    last: Option<(u32, bool)>,
}

impl CalibrationLedger {
    pub fn new(grid: PredictionGrid) -> Self {
        let len = grid.len();
        Self {
            grid,
            counts: vec![0; len],
            ones: vec![0; len],
            step: 0,
            pos: Fenwick::new(len),
            neg: Fenwick::new(len),
            pos_total: 0,
            neg_total: 0,
            max_err: 0.0,
            last: None,
        }
    }

    pub fn grid(&self) -> PredictionGrid {
        self.grid
    }

    /// Number of recorded steps `t`.
    pub fn step(&self) -> u64 {
        self.step
    }

    /// Records prediction `p` followed by outcome `bit`.
    pub fn record(&mut self, p: &Prob, bit: bool) -> Result<(), CalibrationError> {
        let index = self.grid.index_of(p)?;
        self.record_index(index, bit);
        Ok(())
    }

    /// Records a prediction given by its grid index.
    pub fn record_index(&mut self, index: u32, bit: bool) {
        let i = index as usize;
        let before = self.scaled_bias(index);
        self.counts[i] += 1;
        if bit {
            self.ones[i] += 1;
        }
        self.step += 1;
        let after = self.scaled_bias(index);

        let (pb, nb) = (before.max(0), (-before).max(0));
        let (pa, na) = (after.max(0), (-after).max(0));
        self.pos.add(i, pa - pb);
        self.neg.add(i, na - nb);
        self.pos_total += pa - pb;
        self.neg_total += na - nb;
        self.max_err = self.max_err.max(self.calib_error());
        self.last = Some((index, bit));
    }

    /// The most recently recorded `(grid index, bit)`.
    pub fn last_recorded(&self) -> Option<(u32, bool)> {
        self.last
    }

    pub fn count(&self, index: u32) -> u64 {
        self.counts[index as usize]
    }

    pub fn ones(&self, index: u32) -> u64 {
        self.ones[index as usize]
    }

    /// `n * Delta_p` for the grid value with numerator `index`.
    pub fn scaled_bias(&self, index: u32) -> i64 {
        let i = index as usize;
        self.ones[i] as i64 * self.grid.resolution as i64 - self.counts[i] as i64 * index as i64
    }

    /// `Delta_p = m_p - n_p * p`.
    pub fn bias(&self, index: u32) -> f64 {
        self.scaled_bias(index) as f64 / self.grid.resolution as f64
    }

    pub fn bias_at(&self, p: &Prob) -> Result<f64, CalibrationError> {
        Ok(self.bias(self.grid.index_of(p)?))
    }

    fn unscale(&self, scaled: i64) -> f64 {
        scaled as f64 / self.grid.resolution as f64
    }

    /// `CalErr(t) = sum_p |Delta_p|`.
    pub fn calib_error(&self) -> f64 {
        let (pos, neg) = self.pos_neg_parts();
        pos + neg
    }

    /// `(sum_p Delta_p^+, sum_p Delta_p^-)`.
    pub fn pos_neg_parts(&self) -> (f64, f64) {
        (self.unscale(self.pos_total), self.unscale(self.neg_total))
    }

    /// `MaxErr(t)`, the largest `CalErr` over all prefixes so far.
    pub fn max_err(&self) -> f64 {
        self.max_err
    }

    /// Positive and negative parts summed over grid values strictly inside `interval`.
    pub fn interval_parts(&self, interval: &OpenInterval) -> (f64, f64) {
        match self.grid.indices_inside(interval) {
            Some(r) => {
                let (a, b) = (*r.start() as usize, *r.end() as usize);
                (
                    self.unscale(self.pos.range(a, b)),
                    self.unscale(self.neg.range(a, b)),
                )
            }
            None => (0.0, 0.0),
        }
    }

    /// `sum_{p in P cap I} |Delta_p|` over the open interval `I`.
    pub fn interval_error(&self, interval: &OpenInterval) -> f64 {
        let (p, n) = self.interval_parts(interval);
        p + n
    }

    /// What `calib_error` would be after recording `(index, bit)`, without recording it.
    pub fn error_after(&self, index: u32, bit: bool) -> f64 {
        let before = self.scaled_bias(index);
        let after = before + if bit { self.grid.resolution as i64 } else { 0 } - index as i64;
        let pos = self.pos_total - before.max(0) + after.max(0);
        let neg = self.neg_total - (-before).max(0) + (-after).max(0);
        self.unscale(pos) + self.unscale(neg)
    }

    /// Recomputes the error directly from the counters in floating point.
    pub fn recomputed_error(&self) -> f64 {
        (0..self.grid.len())
            .map(|i| {
                let p = self.grid.value(i as u32);
                (self.ones[i] as f64 - self.counts[i] as f64 * p).abs()
            })
            .sum()
    }
}

/// One step of a game as seen in hindsight.
#[derive(Clone, Debug, PartialEq)]
pub struct Step {
    pub prediction: Prob,
    pub bit: bool,
    /// Bias of the Bernoulli distribution the bit was drawn from, when published.
    pub announced_bias: Option<f64>,
    pub epoch: Option<u32>,
}

/// An epoch spanning steps `start_step + 1 ..= end_step`.
#[derive(Clone, Debug, PartialEq)]
pub struct EpochMark {
    pub id: u32,
    pub start_step: usize,
    pub end_step: usize,
    pub interval: OpenInterval,
    pub bias: Prob,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Transcript {
    pub steps: Vec<Step>,
    pub epoch_marks: Vec<EpochMark>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    step: usize,
    prediction_num: u64,
    prediction_den: u64,
    bit: u8,
    announced_bias: Option<f64>,
    epoch_id: Option<u32>,
}

impl Transcript {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Replays every step through a fresh ledger.
    pub fn replay(&self, grid: PredictionGrid) -> Result<CalibrationLedger, CalibrationError> {
        self.replay_prefix(grid, self.steps.len())
    }

    pub fn replay_prefix(
        &self,
        grid: PredictionGrid,
        len: usize,
    ) -> Result<CalibrationLedger, CalibrationError> {
        let mut ledger = CalibrationLedger::new(grid);
        for s in &self.steps[..len.min(self.steps.len())] {
            ledger.record(&s.prediction, s.bit)?;
        }
        Ok(ledger)
    }

    /// Checks that epoch marks are ordered, disjoint and cover a prefix of the steps.
    pub fn validate_epoch_marks(&self) -> Result<(), CalibrationError> {
        let mut cursor = 0;
        for m in &self.epoch_marks {
            if m.start_step != cursor || m.end_step < m.start_step || m.end_step > self.steps.len() {
                return Err(CalibrationError::Transcript(format!(
                    "epoch {} spans {}..{} but expected to start at {}",
                    m.id, m.start_step, m.end_step, cursor
                )));
            }
            cursor = m.end_step;
        }
        Ok(())
    }

    /// Writes the `step,prediction_num,prediction_den,bit,announced_bias,epoch_id` CSV.
    pub fn write_csv<W: io::Write>(&self, writer: W) -> Result<(), CalibrationError> {
        let mut w = csv::Writer::from_writer(writer);
        if self.steps.is_empty() {
            w.write_record([
                "step",
                "prediction_num",
                "prediction_den",
                "bit",
                "announced_bias",
                "epoch_id",
            ])?;
        }
        for (i, s) in self.steps.iter().enumerate() {
            w.serialize(CsvRow {
                step: i + 1,
                prediction_num: *s.prediction.numer(),
                prediction_den: *s.prediction.denom(),
                bit: s.bit as u8,
                announced_bias: s.announced_bias,
                epoch_id: s.epoch,
            })?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads the CSV written by [`write_csv`](Self::write_csv). Epoch marks are not
    /// stored in the CSV; only per-step epoch ids survive.
    pub fn read_csv<R: io::Read>(reader: R) -> Result<Self, CalibrationError> {
        let mut r = csv::Reader::from_reader(reader);
        let mut steps = Vec::new();
        for (i, row) in r.deserialize::<CsvRow>().enumerate() {
            let row = row?;
            if row.step != i + 1 {
                return Err(CalibrationError::Transcript(format!(
                    "row {} has step {}",
                    i + 1,
                    row.step
                )));
            }
            if row.bit > 1 {
                return Err(CalibrationError::Transcript(format!("bad bit {}", row.bit)));
            }
            steps.push(Step {
                prediction: prob(row.prediction_num, row.prediction_den)?,
                bit: row.bit == 1,
                announced_bias: row.announced_bias,
                epoch: row.epoch_id,
            });
        }
        Ok(Self {
            steps,
            epoch_marks: Vec::new(),
        })
    }
}

/// Replaces every prediction by its nearest grid value (ties toward the smaller one).
pub fn round_transcript(transcript: &Transcript, grid: PredictionGrid) -> Transcript {
    let steps = transcript
        .steps
        .iter()
        .map(|s| Step {
            prediction: grid.point(grid.nearest(&s.prediction)),
            ..s.clone()
        })
        .collect();
    Transcript {
        steps,
        epoch_marks: transcript.epoch_marks.clone(),
    }
}

/// Calibration error of an arbitrary transcript, bucketing predictions by exact value.
pub fn transcript_error(transcript: &Transcript) -> f64 {
    let mut buckets: std::collections::BTreeMap<Prob, f64> = Default::default();
    for s in &transcript.steps {
        *buckets.entry(s.prediction).or_default() += s.bit as u8 as f64 - prob_to_f64(&s.prediction);
    }
    buckets.values().map(|d| d.abs()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(a: u64, b: u64) -> Prob {
        prob(a, b).unwrap()
    }

    fn grid(n: u32) -> PredictionGrid {
        PredictionGrid::new(n).unwrap()
    }

    #[test]
    fn record_step_examples() {
        let mut l = CalibrationLedger::new(grid(4));
        l.record(&p(1, 2), true).unwrap();
        assert_eq!(l.bias_at(&p(1, 2)).unwrap(), 0.5);
        assert_eq!(l.calib_error(), 0.5);
        l.record(&p(1, 2), false).unwrap();
        assert_eq!(l.bias_at(&p(1, 2)).unwrap(), 0.0);
        assert_eq!(l.calib_error(), 0.0);
        assert_eq!(l.max_err(), 0.5);

        let mut l = CalibrationLedger::new(grid(4));
        for _ in 0..4 {
            l.record(&p(1, 4), true).unwrap();
        }
        assert_eq!(l.bias_at(&p(1, 4)).unwrap(), 3.0);
        assert_eq!(l.calib_error(), 3.0);
    }

    #[test]
    fn off_grid_prediction_is_rejected() {
        let mut l = CalibrationLedger::new(grid(4));
        let err = l.record(&p(1, 3), true).unwrap_err();
        assert!(matches!(err, CalibrationError::OffGrid { .. }));
        assert_eq!(l.step(), 0);
    }

    #[test]
    fn calib_error_and_parts() {
        let l = CalibrationLedger::new(grid(10));
        assert_eq!(l.calib_error(), 0.0);
        assert_eq!(l.pos_neg_parts(), (0.0, 0.0));

        // Delta_{0.3} = +2: five draws at 0.3 with three ones gives 3 - 1.5 = 1.5,
        // so use ten draws with five ones: 5 - 3 = 2.
        let mut l = CalibrationLedger::new(grid(10));
        for i in 0..10 {
            l.record(&p(3, 10), i < 5).unwrap();
        }
        // Delta_{0.7} = -1.5: five draws with two ones gives 2 - 3.5 = -1.5.
        for i in 0..5 {
            l.record(&p(7, 10), i < 2).unwrap();
        }
        assert!((l.bias_at(&p(3, 10)).unwrap() - 2.0).abs() < 1e-12);
        assert!((l.bias_at(&p(7, 10)).unwrap() + 1.5).abs() < 1e-12);
        assert!((l.calib_error() - 3.5).abs() < 1e-12);
        let (pos, neg) = l.pos_neg_parts();
        assert!((pos - 2.0).abs() < 1e-12 && (neg - 1.5).abs() < 1e-12);

        let mut l = CalibrationLedger::new(grid(10));
        for _ in 0..10 {
            l.record(&p(0, 1), false).unwrap();
        }
        assert_eq!(l.calib_error(), 0.0);

        let mut l = CalibrationLedger::new(grid(2));
        for _ in 0..6 {
            l.record(&p(1, 2), false).unwrap();
        }
        assert_eq!(l.pos_neg_parts(), (0.0, 3.0));
    }

    #[test]
    fn interval_error_examples() {
        let mut l = CalibrationLedger::new(grid(100));
        // Delta_{0.40} = 1: five draws with three ones -> 3 - 2 = 1.
        for i in 0..5 {
            l.record(&p(40, 100), i < 3).unwrap();
        }
        // Delta_{0.50} = 2: four ones -> 4 - 2 = 2.
        for _ in 0..4 {
            l.record(&p(1, 2), true).unwrap();
        }
        let err = |a: (u64, u64), b: (u64, u64)| {
            l.interval_error(&OpenInterval::new(p(a.0, a.1), p(b.0, b.1)))
        };
        assert!((err((35, 100), (45, 100)) - 1.0).abs() < 1e-12);
        assert_eq!(err((40, 100), (40, 100)), 0.0);
        assert_eq!(err((40, 100), (50, 100)), 0.0);
        assert!((err((0, 1), (1, 1)) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn rounding_examples() {
        let g = grid(10);
        assert_eq!(g.point(g.nearest(&p(26, 100))), p(3, 10));
        assert_eq!(g.point(g.nearest(&p(25, 100))), p(2, 10));
        assert_eq!(g.nearest_f64(0.26), 3);
        assert_eq!(g.nearest_f64(0.25), 2);

        let t = Transcript {
            steps: vec![
                Step { prediction: p(3, 10), bit: true, announced_bias: None, epoch: None },
                Step { prediction: p(1, 2), bit: false, announced_bias: Some(0.5), epoch: Some(1) },
            ],
            epoch_marks: vec![],
        };
        assert_eq!(round_transcript(&t, g), t);
    }

    #[test]
    fn grid_membership() {
        let g = grid(6);
        assert_eq!(g.len(), 7);
        assert_eq!(g.index_of(&p(1, 3)).unwrap(), 2);
        assert!(g.index_of(&p(1, 4)).is_err());
        assert_eq!(g.indices_inside(&OpenInterval::new(p(1, 3), p(2, 3))), Some(3..=3));
        assert_eq!(g.indices_inside(&OpenInterval::new(p(1, 3), p(1, 2))), None);
    }

    #[test]
    fn parse_prob_forms() {
        assert_eq!(parse_prob("1/2").unwrap(), p(1, 2));
        assert_eq!(parse_prob("0.25").unwrap(), p(1, 4));
        assert_eq!(parse_prob("1").unwrap(), p(1, 1));
        assert!(parse_prob("1.5").is_err());
        assert!(parse_prob("abc").is_err());
    }

    #[test]
    fn csv_round_trip_and_empty_header() {
        let mut buf = Vec::new();
        Transcript::default().write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "step,prediction_num,prediction_den,bit,announced_bias,epoch_id\n"
        );

        let t = Transcript {
            steps: vec![
                Step { prediction: p(1, 3), bit: true, announced_bias: Some(0.4444444444444444), epoch: Some(1) },
                Step { prediction: p(0, 1), bit: false, announced_bias: None, epoch: None },
            ],
            epoch_marks: vec![],
        };
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("step,prediction_num,prediction_den,bit,announced_bias,epoch_id\n1,1,3,1,"));
        assert!(text.contains("\n2,0,1,0,,\n"));
        assert_eq!(Transcript::read_csv(&buf[..]).unwrap(), t);
    }

    #[test]
    fn error_after_matches_recording() {
        let mut l = CalibrationLedger::new(grid(8));
        l.record(&p(3, 8), true).unwrap();
        l.record(&p(5, 8), false).unwrap();
        for i in 0..=8 {
            for bit in [false, true] {
                let mut c = l.clone();
                c.record_index(i, bit);
                assert_eq!(l.error_after(i, bit), c.calib_error());
            }
        }
    }
}
