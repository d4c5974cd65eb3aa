use num_rational::Ratio;
use serde::Serialize;

use super::AdversaryError;
use crate::calibration::{OpenInterval, PredictionGrid, Prob};
use crate::sign_game::default_admissible_pair;

/// Constant `c0` for the default admissible pair, `opt(k, r) >= (2/9) k^beta`.
pub const DEFAULT_C0: f64 = 2.0 / 9.0;

/// Derived parameters of the sidestepping scheme for horizon `T`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SchemeParams {
    pub horizon: usize,
    pub alpha: f64,
    pub beta: f64,
    /// Number of cells of the simulated game, `max(1, floor(T^(1/(alpha + 2 beta + 2))))`.
    pub k: usize,
    /// `ceil(k^alpha)`, the round budget of the simulated game.
    pub num_epochs: usize,
    /// `floor(T / num_epochs)`.
    pub epoch_len: usize,
    /// Epoch stopping threshold `(1/1440) sqrt(T / (k^alpha ln T))`.
    pub theta: f64,
    pub c0: f64,
    /// Early-stopping trigger `min(T / (48 k^(alpha+1)), c0 theta k^beta / 4)`.
    pub b: f64,
    #[serde(skip)]
    pub grid: PredictionGrid,
}

impl SchemeParams {
    pub fn new(
        horizon: usize,
        alpha: f64,
        beta: f64,
        c0: f64,
        grid: PredictionGrid,
    ) -> Result<Self, AdversaryError> {
        let cfg = |m: String| Err(AdversaryError::Config(m));
        if horizon < 3 {
            return cfg(format!("horizon {horizon} is too short; need T >= 3"));
        }
        if !(alpha > 0.0 && alpha <= 1.0 && beta > 0.0 && beta <= 1.0) {
            return cfg(format!("alpha = {alpha}, beta = {beta} must lie in (0, 1]"));
        }
        if !(c0 > 0.0 && c0.is_finite()) {
            return cfg(format!("c0 = {c0} must be positive"));
        }
        let t = horizon as f64;
        let k = (t.powf(1.0 / (alpha + 2.0 * beta + 2.0)) + 1e-9).floor().max(1.0) as usize;
        let k_alpha = (k as f64).powf(alpha);
        let num_epochs = (k_alpha - 1e-9).ceil().max(1.0) as usize;
        let epoch_len = horizon / num_epochs;
        let theta = (t / (k_alpha * t.ln())).sqrt() / 1440.0;
        let b = (t / (48.0 * (k as f64).powf(alpha + 1.0)))
            .min(c0 * theta * (k as f64).powf(beta) / 4.0);
        if grid.resolution() as usize <= 6 * k {
            return cfg(format!(
                "grid resolution {} must exceed 6k = {}",
                grid.resolution(),
                6 * k
            ));
        }
        if b.is_nan() || b <= 0.0 {
            return cfg(format!("early-stopping threshold B = {b} must be positive"));
        }
        Ok(Self {
            horizon,
            alpha,
            beta,
            k,
            num_epochs,
            epoch_len,
            theta,
            c0,
            b,
            grid,
        })
    }

    /// Default admissible pair, `c0 = 2/9` and grid resolution `T`.
    pub fn with_defaults(horizon: usize) -> Result<Self, AdversaryError> {
        let (alpha, beta) = default_admissible_pair();
        let grid = PredictionGrid::new(horizon.max(1) as u32)
            .map_err(|e| AdversaryError::Config(e.to_string()))?;
        Self::new(horizon, alpha, beta, DEFAULT_C0, grid)
    }

    /// Replaces the epoch threshold, e.g. to study the mechanism at scales where
    /// the derived `theta` is far below one.
    pub fn with_threshold(mut self, theta: f64) -> Self {
        self.theta = theta;
        self
    }

    pub fn k_pow_alpha(&self) -> f64 {
        (self.k as f64).powf(self.alpha)
    }

    /// An epoch with at least this many predictions outside its interval is untruthful.
    pub fn untruthful_threshold(&self) -> f64 {
        self.horizon as f64 / (2.0 * self.k_pow_alpha())
    }

    /// `I_j = (1/3 + (j-1)/(3k), 1/3 + j/(3k))`.
    pub fn interval(&self, cell: usize) -> OpenInterval {
        let k = self.k as u64;
        let j = cell as u64;
        OpenInterval::new(Ratio::new(k + j - 1, 3 * k), Ratio::new(k + j, 3 * k))
    }

    /// `p*_j = 1/3 + (j - 1/2)/(3k)`, the midpoint of `I_j`.
    pub fn bias(&self, cell: usize) -> Prob {
        let k = self.k as u64;
        Ratio::new(2 * (k + cell as u64) - 1, 6 * k)
    }

    /// Recovers the cell whose midpoint is `bias`.
    pub fn cell_of_bias(&self, bias: f64) -> Option<usize> {
        let j = ((bias - 1.0 / 3.0) * 3.0 * self.k as f64 + 0.5).round();
        (j >= 1.0 && j <= self.k as f64).then_some(j as usize)
    }
}
