use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ExperimentError;
use crate::engine::{run_trials, splitmix64, AdversarySpec, ForecasterSpec, GameConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub horizon: usize,
    pub mean_calerr: f64,
    pub std_err: f64,
    pub trials: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingResult {
    pub points: Vec<ScalingPoint>,
    /// Least-squares slope of `ln(mean)` against `ln(T)`.
    pub fitted_exponent: f64,
    pub intercept: f64,
    /// Percentile bootstrap interval, widened if needed to contain the estimate.
    pub bootstrap_ci: (f64, f64),
    /// Horizons left out of the fit because their mean was zero.
    pub excluded: Vec<usize>,
}

impl ScalingResult {
    pub fn ci_excludes(&self, value: f64) -> bool {
        value < self.bootstrap_ci.0 || value > self.bootstrap_ci.1
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Fit {
    pub slope: f64,
    pub intercept: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct ScalingOptions {
    pub resamples: usize,
    /// Two-sided confidence level of the bootstrap interval.
    pub level: f64,
}

impl Default for ScalingOptions {
    fn default() -> Self {
        Self {
            resamples: 1000,
            level: 0.95,
        }
    }
}

/// Ordinary least squares of `ln y` on `ln x`.
pub fn fit_exponent(points: &[(f64, f64)]) -> Result<Fit, ExperimentError> {
    if points.len() < 3 {
        return Err(ExperimentError::Fit(format!("need at least 3 points, got {}", points.len())));
    }
    if points.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0)) {
        return Err(ExperimentError::Fit("log-log fit needs positive coordinates".into()));
    }
    let n = points.len() as f64;
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(ExperimentError::Fit("all horizons are equal".into()));
    }
    let slope = sxy / sxx;
    Ok(Fit {
        slope,
        intercept: my - slope * mx,
    })
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Percentile bootstrap of the fitted slope, resampling trials within each horizon.
pub fn bootstrap_ci(
    samples: &[(usize, Vec<f64>)],
    resamples: usize,
    level: f64,
    seed: u64,
) -> Result<(f64, f64), ExperimentError> {
    let mut slopes: Vec<f64> = (0..resamples as u64)
        .into_par_iter()
        .filter_map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(b)));
            let points: Vec<(f64, f64)> = samples
                .iter()
                .filter(|(_, xs)| !xs.is_empty())
                .map(|(t, xs)| {
                    let m = (0..xs.len()).map(|_| xs[rng.gen_range(0..xs.len())]).sum::<f64>() / xs.len() as f64;
                    (*t as f64, m)
                })
                .filter(|&(_, m)| m > 0.0)
                .collect();
            fit_exponent(&points).ok().map(|f| f.slope)
        })
        .collect();
    if slopes.is_empty() {
        return Err(ExperimentError::Fit("no bootstrap resample could be fitted".into()));
    }
    slopes.sort_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    let pick = |q: f64| {
        let idx = (q * (slopes.len() - 1) as f64).round() as usize;
        slopes[idx.min(slopes.len() - 1)]
    };
    Ok((pick(tail), pick(1.0 - tail)))
}

/// Fits the scaling exponent of per-trial values grouped by horizon.
pub fn scaling_from_samples(
    samples: &[(usize, Vec<f64>)],
    opts: ScalingOptions,
    seed: u64,
) -> Result<ScalingResult, ExperimentError> {
    let points: Vec<ScalingPoint> = samples
        .iter()
        .map(|(t, xs)| {
            let n = xs.len();
            let m = if n == 0 { 0.0 } else { mean(xs) };
            let var = if n > 1 {
                xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64
            } else {
                0.0
            };
            ScalingPoint {
                horizon: *t,
                mean_calerr: m,
                std_err: (var / n.max(1) as f64).sqrt(),
                trials: n,
            }
        })
        .collect();
    let mut excluded = Vec::new();
    let mut kept = Vec::new();
    for p in &points {
        if p.mean_calerr > 0.0 {
            kept.push((p.horizon as f64, p.mean_calerr));
        } else {
            warn!("mean calibration error is 0 at T = {}; point left out of the fit", p.horizon);
            excluded.push(p.horizon);
        }
    }
    let fit = fit_exponent(&kept)?;
    let fitted: Vec<(usize, Vec<f64>)> = samples
        .iter()
        .filter(|(t, _)| !excluded.contains(t))
        .cloned()
        .collect();
    let (lo, hi) = if opts.resamples == 0 {
        (fit.slope, fit.slope)
    } else {
        bootstrap_ci(&fitted, opts.resamples, opts.level, seed)?
    };
    Ok(ScalingResult {
        points,
        fitted_exponent: fit.slope,
        intercept: fit.intercept,
        bootstrap_ci: (lo.min(fit.slope), hi.max(fit.slope)),
        excluded,
    })
}

/// Runs `trials` games at each horizon and fits the exponent of the mean final error.
pub fn scaling_experiment(
    adversary: &AdversarySpec,
    forecaster: &ForecasterSpec,
    horizons: &[usize],
    trials: usize,
    seed: u64,
    opts: ScalingOptions,
) -> Result<ScalingResult, ExperimentError> {
    if horizons.len() < 3 {
        return Err(ExperimentError::Fit(format!(
            "need at least 3 horizons, got {}",
            horizons.len()
        )));
    }
    if horizons.windows(2).any(|w| w[0] >= w[1]) {
        return Err(ExperimentError::Fit("horizons must be increasing".into()));
    }
    let mut samples = Vec::with_capacity(horizons.len());
    for &t in horizons {
        let config = GameConfig {
            keep_transcript: false,
            ..GameConfig::new(t, splitmix64(seed ^ t as u64), *adversary, forecaster.clone())
        };
        let errs = run_trials(&config, trials)?.into_iter().map(|r| r.final_calerr).collect();
        samples.push((t, errs));
    }
    scaling_from_samples(&samples, opts, seed)
}
