//! Exact minimax value `opt(k, r)` of the Sign-Preservation game.
//!
//! Dead signs never influence the rest of the game, so a position is fully
//! described by `(empty, alive_plus, alive_minus, rounds_left)`. Positions are
//! further identified with their mirror image (cell `j` maps to `k + 1 - j` with
//! the signs swapped), which the removal rule respects.

use std::collections::HashMap;

use super::{Sign, SignGameError, SignGameState};

/// Limits beyond which the solver refuses to run instead of approximating.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SolverBudget {
    pub max_cells: usize,
    pub max_rounds: usize,
    /// Cap on memoized positions.
    pub max_states: usize,
}

impl Default for SolverBudget {
    fn default() -> Self {
        Self {
            max_cells: 16,
            max_rounds: 8,
            max_states: 40_000_000,
        }
    }
}

const HARD_MAX_CELLS: usize = 32;

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
struct Key(u128);

/// Memoizing solver for a fixed number of cells.
pub struct OptSolver {
    k: usize,
    full: u32,
    budget: SolverBudget,
    memo: HashMap<Key, u8>,
}

impl OptSolver {
    pub fn new(k: usize, budget: SolverBudget) -> Result<Self, SignGameError> {
        if k == 0 {
            return Err(SignGameError::InvalidParameters("k must be positive".into()));
        }
        if k > budget.max_cells.min(HARD_MAX_CELLS) {
            return Err(SignGameError::BudgetExceeded(format!(
                "k = {k} exceeds the cell budget {}",
                budget.max_cells.min(HARD_MAX_CELLS)
            )));
        }
        let full = if k == 32 { u32::MAX } else { (1u32 << k) - 1 };
        Ok(Self {
            k,
            full,
            budget,
            memo: HashMap::new(),
        })
    }

    pub fn num_cells(&self) -> usize {
        self.k
    }

    /// Number of memoized positions so far.
    pub fn memo_len(&self) -> usize {
        self.memo.len()
    }

    fn check_rounds(&self, r: usize) -> Result<(), SignGameError> {
        if r > self.budget.max_rounds {
            return Err(SignGameError::BudgetExceeded(format!(
                "r = {r} exceeds the round budget {}",
                self.budget.max_rounds
            )));
        }
        Ok(())
    }

    /// `opt(k, r)`.
    pub fn opt(&mut self, r: usize) -> Result<u32, SignGameError> {
        self.check_rounds(r)?;
        Ok(self.value_of(self.full, 0, 0, r)? as u32)
    }

    /// Minimax value of an arbitrary position of this game.
    pub fn value(&mut self, state: &SignGameState) -> Result<u32, SignGameError> {
        self.check_state(state)?;
        let (e, p, m) = state.masks();
        Ok(self.value_of(e, p, m, state.rounds_left())? as u32)
    }

    fn check_state(&self, state: &SignGameState) -> Result<(), SignGameError> {
        if state.num_cells() != self.k {
            return Err(SignGameError::InvalidParameters(format!(
                "state has {} cells, solver has {}",
                state.num_cells(),
                self.k
            )));
        }
        self.check_rounds(state.rounds_left())
    }

    /// Player A's optimal action: `None` to terminate, otherwise a cell. Ties
    /// prefer continuing, and among cells the smallest index.
    pub fn best_move(&mut self, state: &SignGameState) -> Result<Option<usize>, SignGameError> {
        self.check_state(state)?;
        let (e, p, m) = state.masks();
        let r = state.rounds_left();
        if r == 0 || e == 0 {
            return Ok(None);
        }
        let stop = (p | m).count_ones() as u8;
        let mut best: Option<(u32, u8)> = None;
        for j in bits(e) {
            let v = self.cell_value(e, p, m, r, j, 0)?;
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((j, v));
            }
        }
        Ok(best.filter(|&(_, v)| v >= stop).map(|(j, _)| j as usize + 1))
    }

    /// Player F's optimal sign for `cell`; ties go to `+`.
    pub fn best_response(&mut self, state: &SignGameState, cell: usize) -> Result<Sign, SignGameError> {
        self.check_state(state)?;
        if !state.is_empty_cell(cell) || state.rounds_left() == 0 {
            return Err(SignGameError::IllegalMove {
                cell,
                reason: "cell is not playable",
            });
        }
        let (e, p, m) = state.masks();
        let r = state.rounds_left();
        let j = (cell - 1) as u32;
        let (e2, p2, m2) = self.apply(e, p, m, j, Sign::Plus);
        let plus = self.value_of(e2, p2, m2, r - 1)?;
        let (e2, p2, m2) = self.apply(e, p, m, j, Sign::Minus);
        let minus = self.value_of(e2, p2, m2, r - 1)?;
        Ok(if plus <= minus { Sign::Plus } else { Sign::Minus })
    }

    fn apply(&self, e: u32, p: u32, m: u32, j: u32, sign: Sign) -> (u32, u32, u32) {
        let bit = 1u32 << j;
        let below = bit - 1;
        let above = self.full & !below & !bit;
        let e = e & !bit;
        match sign {
            Sign::Plus => (e, (p & below) | bit, m & above),
            Sign::Minus => (e, p & below, (m & above) | bit),
        }
    }

    /// Value of choosing cell `j`, i.e. the minimum over F's two replies. Returns
    /// early once the first reply is already no better than `floor`.
    fn cell_value(&mut self, e: u32, p: u32, m: u32, r: usize, j: u32, floor: u8) -> Result<u8, SignGameError> {
        let (e2, p2, m2) = self.apply(e, p, m, j, Sign::Plus);
        let plus = self.value_of(e2, p2, m2, r - 1)?;
        if plus <= floor {
            return Ok(plus);
        }
        let (e2, p2, m2) = self.apply(e, p, m, j, Sign::Minus);
        let minus = self.value_of(e2, p2, m2, r - 1)?;
        Ok(plus.min(minus))
    }

    fn mirror(&self, x: u32) -> u32 {
        x.reverse_bits() >> (32 - self.k as u32)
    }

    fn key(&self, e: u32, p: u32, m: u32, r: usize) -> Key {
        let pack = |e: u32, p: u32, m: u32| {
            e as u128 | (p as u128) << 32 | (m as u128) << 64 | (r as u128) << 96
        };
        let direct = pack(e, p, m);
        let mirrored = pack(self.mirror(e), self.mirror(m), self.mirror(p));
        Key(direct.min(mirrored))
    }

    fn value_of(&mut self, e: u32, p: u32, m: u32, r: usize) -> Result<u8, SignGameError> {
        let alive = (p | m).count_ones() as u8;
        let r = r.min(e.count_ones() as usize);
        if r == 0 {
            return Ok(alive);
        }
        let key = self.key(e, p, m, r);
        if let Some(&v) = self.memo.get(&key) {
            return Ok(v);
        }
        // Terminating is always available; nothing can exceed alive + r.
        let ceiling = alive + r as u8;
        let mut best = alive;
        for j in bits(e) {
            if best == ceiling {
                break;
            }
            let v = self.cell_value(e, p, m, r, j, best)?;
            best = best.max(v);
        }
        if self.memo.len() >= self.budget.max_states {
            return Err(SignGameError::BudgetExceeded(format!(
                "more than {} positions for k = {}",
                self.budget.max_states, self.k
            )));
        }
        self.memo.insert(key, best);
        Ok(best)
    }
}

fn bits(mut x: u32) -> impl Iterator<Item = u32> {
    std::iter::from_fn(move || {
        (x != 0).then(|| {
            let j = x.trailing_zeros();
            x &= x - 1;
            j
        })
    })
}

/// `opt(k, r)` under the default budget.
pub fn solve_opt(k: usize, r: usize) -> Result<u32, SignGameError> {
    solve_opt_with(k, r, SolverBudget::default())
}

pub fn solve_opt_with(k: usize, r: usize, budget: SolverBudget) -> Result<u32, SignGameError> {
    if r == 0 {
        return Err(SignGameError::InvalidParameters("r must be positive".into()));
    }
    OptSolver::new(k, budget)?.opt(r)
}
