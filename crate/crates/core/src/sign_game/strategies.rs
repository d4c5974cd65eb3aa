//! Player strategies for the Sign-Preservation game.
//!
//! A player A strategy sees only the game state; F's reply to its previous
//! choice is read back from the state's history.

use std::sync::Arc;

use super::solver::{OptSolver, SolverBudget};
use super::{Sign, SignGameError, SignGameState};

pub trait PlayerA: Send {
    /// The next cell to fill, or `None` to terminate the game.
    fn choose(&mut self, state: &SignGameState) -> Option<usize>;
}

pub trait PlayerF: Send {
    fn respond(&mut self, state: &SignGameState, cell: usize) -> Sign;
}

/// Builds fresh instances of a player A strategy.
pub type StrategyFactory = Arc<dyn Fn() -> Box<dyn PlayerA> + Send + Sync>;

pub struct StrategyProfile {
    pub player_a: Box<dyn PlayerA>,
    pub player_f: Box<dyn PlayerF>,
}

impl StrategyProfile {
    pub fn new(player_a: Box<dyn PlayerA>, player_f: Box<dyn PlayerF>) -> Self {
        Self { player_a, player_f }
    }

    /// Plays `SP(k, r)` to completion.
    pub fn play(&mut self, k: usize, r: usize) -> Result<SignGameState, SignGameError> {
        let mut state = SignGameState::new(k, r);
        while state.rounds_left() > 0 {
            let Some(cell) = self.player_a.choose(&state) else {
                break;
            };
            if !state.is_empty_cell(cell) {
                return Err(SignGameError::IllegalMove {
                    cell,
                    reason: "player A chose a non-empty cell",
                });
            }
            let sign = self.player_f.respond(&state, cell);
            state.place(cell, sign)?;
        }
        Ok(state)
    }
}

/// Binary search over the still-compatible range of cells.
///
/// The active range starts as `1..=k`; a `+` in the chosen cell moves it to the
/// cells above, a `-` to the cells below. On `SP(2^t - 1, t)` every sign survives.
#[derive(Clone, Copy, Debug, Default)]
pub struct BinarySearchStrategy;

pub fn binary_search_strategy() -> BinarySearchStrategy {
    BinarySearchStrategy
}

impl BinarySearchStrategy {
    fn active_range(state: &SignGameState) -> (usize, usize) {
        let (mut lo, mut hi) = (1usize, state.num_cells());
        for &(cell, sign) in state.history() {
            match sign {
                Sign::Plus => lo = cell + 1,
                Sign::Minus => hi = cell.saturating_sub(1),
            }
        }
        (lo, hi)
    }
}

impl PlayerA for BinarySearchStrategy {
    fn choose(&mut self, state: &SignGameState) -> Option<usize> {
        let (lo, hi) = Self::active_range(state);
        (state.rounds_left() > 0 && lo <= hi).then_some((lo + hi) / 2)
    }
}

struct InnerGame {
    super_cell: usize,
    game: SignGameState,
    player: Box<dyn PlayerA>,
}

/// Player A for `SP(a^t, b^t)` built from a base strategy for `SP(a, b)`.
///
/// The `a^t` cells are split into `a` contiguous super-cells of `a^(t-1)` cells.
/// An outer `SP(a, b)` game is played by the base strategy over super-cells;
/// each outer move opens an inner `SP(a^(t-1), b^(t-1))` game on that block,
/// and once it ends the outer game receives the majority sign among the
/// inner game's preserved signs (ties give `+`).
pub struct TensorStrategy {
    a: usize,
    b: usize,
    depth: u32,
    block: usize,
    base: StrategyFactory,
    outer: SignGameState,
    outer_player: Box<dyn PlayerA>,
    inner: Option<InnerGame>,
    consumed: usize,
}

/// Builds the tensorized strategy of depth `t`. For `t = 1` this is the base itself.
pub fn tensor_strategy(base: StrategyFactory, a: usize, b: usize, t: u32) -> Box<dyn PlayerA> {
    assert!(t >= 1 && a >= 1 && b >= 1);
    if t == 1 {
        return base();
    }
    Box::new(TensorStrategy {
        a,
        b,
        depth: t,
        block: a.pow(t - 1),
        outer_player: base(),
        base,
        outer: SignGameState::new(a, b),
        inner: None,
        consumed: 0,
    })
}

/// Guaranteed preserved signs of the tensorized strategy, `((c + 1) / 2)^t`.
pub fn tensor_guarantee(c: f64, t: u32) -> f64 {
    ((c + 1.0) / 2.0).powi(t as i32)
}

impl TensorStrategy {
    fn offset(&self, super_cell: usize) -> usize {
        (super_cell - 1) * self.block
    }

    fn close_inner(&mut self) {
        if let Some(inner) = self.inner.take() {
            let (plus, minus) = inner.game.preserved_by_sign();
            let sign = if plus >= minus { Sign::Plus } else { Sign::Minus };
            self.outer
                .place(inner.super_cell, sign)
                .expect("outer game accepts the super-cell it chose");
        }
    }
}

impl PlayerA for TensorStrategy {
    fn choose(&mut self, state: &SignGameState) -> Option<usize> {
        if state.history().len() > self.consumed {
            self.consumed = state.history().len();
            let (cell, sign) = *state.history().last().unwrap();
            if let Some(inner) = &mut self.inner {
                let local = cell - (inner.super_cell - 1) * self.block;
                inner
                    .game
                    .place(local, sign)
                    .expect("reply lands in the inner block");
            }
        }
        loop {
            if let Some(inner) = &mut self.inner {
                let next = if inner.game.rounds_left() > 0 {
                    inner.player.choose(&inner.game)
                } else {
                    None
                };
                let super_cell = inner.super_cell;
                match next {
                    Some(local) => return Some(self.offset(super_cell) + local),
                    None => self.close_inner(),
                }
            } else {
                if self.outer.rounds_left() == 0 {
                    return None;
                }
                let super_cell = self.outer_player.choose(&self.outer)?;
                let player = tensor_strategy(self.base.clone(), self.a, self.b, self.depth - 1);
                self.inner = Some(InnerGame {
                    super_cell,
                    game: SignGameState::new(self.block, self.b.pow(self.depth - 1)),
                    player,
                });
            }
        }
    }
}

/// Plays a strategy for `SP(k1, r1)` on cells `1..=k1` of a larger game,
/// terminating when the smaller game ends.
pub struct Embedded {
    game: SignGameState,
    player: Box<dyn PlayerA>,
    consumed: usize,
}

impl Embedded {
    pub fn new(player: Box<dyn PlayerA>, k: usize, r: usize) -> Self {
        Self {
            game: SignGameState::new(k, r),
            player,
            consumed: 0,
        }
    }
}

impl PlayerA for Embedded {
    fn choose(&mut self, state: &SignGameState) -> Option<usize> {
        if state.history().len() > self.consumed {
            self.consumed = state.history().len();
            let (cell, sign) = *state.history().last().unwrap();
            self.game.place(cell, sign).expect("reply lands in the embedded block");
        }
        if self.game.rounds_left() == 0 || self.game.num_cells() > state.num_cells() {
            return None;
        }
        self.player.choose(&self.game)
    }
}

/// Exact-minimax player A.
pub struct MinimaxPlayerA {
    solver: OptSolver,
}

impl MinimaxPlayerA {
    pub fn new(k: usize, r: usize, budget: SolverBudget) -> Result<Self, SignGameError> {
        let mut solver = OptSolver::new(k, budget)?;
        solver.opt(r)?;
        Ok(Self { solver })
    }
}

impl PlayerA for MinimaxPlayerA {
    fn choose(&mut self, state: &SignGameState) -> Option<usize> {
        self.solver
            .best_move(state)
            .unwrap_or_else(|e| panic!("minimax player A: {e}"))
    }
}

/// Exact-minimax player F.
pub struct MinimaxPlayerF {
    solver: OptSolver,
}

impl MinimaxPlayerF {
    pub fn new(k: usize, budget: SolverBudget) -> Result<Self, SignGameError> {
        Ok(Self {
            solver: OptSolver::new(k, budget)?,
        })
    }
}

impl PlayerF for MinimaxPlayerF {
    fn respond(&mut self, state: &SignGameState, cell: usize) -> Sign {
        self.solver
            .best_response(state, cell)
            .unwrap_or_else(|e| panic!("minimax player F: {e}"))
    }
}

/// Replies with a fixed sequence of signs, one per round.
pub struct ScriptedF {
    signs: Vec<Sign>,
    next: usize,
}

impl ScriptedF {
    pub fn new(signs: Vec<Sign>) -> Self {
        Self { signs, next: 0 }
    }
}

impl PlayerF for ScriptedF {
    fn respond(&mut self, _state: &SignGameState, _cell: usize) -> Sign {
        let s = self.signs.get(self.next).copied().unwrap_or(Sign::Plus);
        self.next += 1;
        s
    }
}

/// Plays `factory`'s strategy on `SP(k, r)` against every one of the `2^r` reply
/// sequences of player F and returns the smallest number of preserved signs.
pub fn worst_case_preserved(factory: &StrategyFactory, k: usize, r: usize) -> Result<usize, SignGameError> {
    assert!(r < 24, "2^{r} reply sequences is too many to enumerate");
    let mut worst = usize::MAX;
    for pattern in 0u32..(1 << r) {
        let signs = (0..r)
            .map(|i| if pattern >> i & 1 == 1 { Sign::Minus } else { Sign::Plus })
            .collect();
        let mut profile = StrategyProfile::new(factory(), Box::new(ScriptedF::new(signs)));
        worst = worst.min(profile.play(k, r)?.preserved_count());
    }
    Ok(worst)
}
