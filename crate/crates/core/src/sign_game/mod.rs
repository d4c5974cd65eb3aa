//! The Sign-Preservation game `SP(k, r)`, its exact value and constructive
//! strategies for player A.

mod solver;
mod state;
mod strategies;

use serde::Serialize;
use thiserror::Error;

pub use solver::{solve_opt, solve_opt_with, OptSolver, SolverBudget};
pub use state::{CellStatus, Sign, SignGameState};
pub use strategies::{
    binary_search_strategy, tensor_guarantee, tensor_strategy, worst_case_preserved,
    BinarySearchStrategy, Embedded, MinimaxPlayerA, MinimaxPlayerF, PlayerA, PlayerF, ScriptedF,
    StrategyFactory, StrategyProfile, TensorStrategy,
};

#[derive(Debug, Error)]
pub enum SignGameError {
    #[error("illegal move at cell {cell}: {reason}")]
    IllegalMove { cell: usize, reason: &'static str },
    #[error("solver budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
}

/// The admissible pair obtained from `opt(255, 8) = 8` and `opt(1, 1) = 1`:
/// `alpha = log 8 / log 255`, `beta = log(9/2) / log 255`.
pub fn default_admissible_pair() -> (f64, f64) {
    let l = 255f64.ln();
    (8f64.ln() / l, 4.5f64.ln() / l)
}

/// Lower-bound exponent `c = (2 beta + 1) / (alpha + 2 beta + 2)` for an
/// admissible pair.
pub fn derived_constants(alpha: f64, beta: f64) -> f64 {
    (2.0 * beta + 1.0) / (alpha + 2.0 * beta + 2.0)
}

#[derive(Clone, Debug, Serialize)]
pub struct ConstantsRecord {
    pub alpha: f64,
    pub beta: f64,
    pub c0: f64,
    pub c: f64,
}

impl ConstantsRecord {
    pub fn new(alpha: f64, beta: f64, c0: f64) -> Self {
        Self {
            alpha,
            beta,
            c0,
            c: derived_constants(alpha, beta),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants() {
        let (a, b) = default_admissible_pair();
        assert!((a - 0.375_264_87).abs() < 1e-8);
        assert!((b - 0.271_432_21).abs() < 1e-8);
        let c = derived_constants(a, b);
        assert!((c - 0.5287).abs() < 5e-5 && c > 0.528);
        assert!((derived_constants(1.0, 1.0) - 0.6).abs() < 1e-15);
    }
}
