use std::io;

use serde::Serialize;

use super::ExperimentError;
use crate::sign_game::{OptSolver, SignGameError, SolverBudget};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OptRow {
    pub k: usize,
    pub r: usize,
    /// `None` when the solver budget was exceeded.
    pub opt: Option<u32>,
    /// Set on the `(2^t - 1, t)` diagonal, where the value must equal `t`.
    pub diagonal: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct OptTable {
    pub rows: Vec<OptRow>,
}

impl OptTable {
    pub fn get(&self, k: usize, r: usize) -> Option<u32> {
        self.rows.iter().find(|row| row.k == k && row.r == r).and_then(|row| row.opt)
    }

    /// Diagonal entries that were solved and differ from `t`.
    pub fn diagonal_violations(&self) -> Vec<&OptRow> {
        self.rows
            .iter()
            .filter(|row| row.diagonal && row.opt.is_some_and(|v| v as usize != row.r))
            .collect()
    }

    /// Writes `k,r,opt,diagonal` rows; unsolved entries read `NA`.
    pub fn write_csv<W: io::Write>(&self, writer: W) -> Result<(), ExperimentError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["k", "r", "opt", "diagonal"])?;
        for row in &self.rows {
            let opt = row.opt.map_or_else(|| "NA".to_string(), |v| v.to_string());
            w.write_record([
                row.k.to_string(),
                row.r.to_string(),
                opt,
                (row.diagonal as u8).to_string(),
            ])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

fn is_diagonal(k: usize, r: usize) -> bool {
    r < usize::BITS as usize && k + 1 == 1 << r
}

/// Tabulates `opt(k, r)` for `1 <= k <= k_max`, `1 <= r <= r_max`.
pub fn opt_table(k_max: usize, r_max: usize, budget: SolverBudget) -> OptTable {
    let mut rows = Vec::with_capacity(k_max * r_max);
    for k in 1..=k_max {
        let mut solver = OptSolver::new(k, budget).ok();
        for r in 1..=r_max {
            let opt = match solver.as_mut().map(|s| s.opt(r)) {
                Some(Ok(v)) => Some(v),
                Some(Err(SignGameError::BudgetExceeded(_))) | None => {
                    solver = None;
                    None
                }
                Some(Err(e)) => panic!("unexpected solver error for opt({k}, {r}): {e}"),
            };
            rows.push(OptRow {
                k,
                r,
                opt,
                diagonal: is_diagonal(k, r),
            });
        }
    }
    OptTable { rows }
}
