use std::fmt;

use serde::{Deserialize, Serialize};

use super::SignGameError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CellStatus {
    Empty,
    Alive(Sign),
    Dead(Sign),
}

/// An instance of the Sign-Preservation game `SP(k, r)` in progress.
///
/// Cells are numbered `1..=k`. A `+` survives only while every later sign lands
/// in a larger cell; a `-` only while every later sign lands in a smaller cell.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SignGameState {
    cells: Vec<CellStatus>,
    rounds_left: usize,
    history: Vec<(usize, Sign)>,
}

impl SignGameState {
    pub fn new(num_cells: usize, rounds: usize) -> Self {
        Self {
            cells: vec![CellStatus::Empty; num_cells],
            rounds_left: rounds,
            history: Vec::new(),
        }
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn rounds_left(&self) -> usize {
        self.rounds_left
    }

    pub fn history(&self) -> &[(usize, Sign)] {
        &self.history
    }

    pub fn status(&self, cell: usize) -> Option<CellStatus> {
        cell.checked_sub(1).and_then(|i| self.cells.get(i)).copied()
    }

    pub fn is_empty_cell(&self, cell: usize) -> bool {
        self.status(cell) == Some(CellStatus::Empty)
    }

    pub fn empty_cells(&self) -> impl Iterator<Item = usize> + '_ {
        self.cells_with(|c| c == CellStatus::Empty)
    }

    pub fn alive_plus(&self) -> impl Iterator<Item = usize> + '_ {
        self.cells_with(|c| c == CellStatus::Alive(Sign::Plus))
    }

    pub fn alive_minus(&self) -> impl Iterator<Item = usize> + '_ {
        self.cells_with(|c| c == CellStatus::Alive(Sign::Minus))
    }

    pub fn dead_count(&self) -> usize {
        self.cells
            .iter()
            .filter(|c| matches!(c, CellStatus::Dead(_)))
            .count()
    }

    fn cells_with(&self, pred: impl Fn(CellStatus) -> bool + 'static) -> impl Iterator<Item = usize> + '_ {
        self.cells
            .iter()
            .enumerate()
            .filter(move |(_, c)| pred(**c))
            .map(|(i, _)| i + 1)
    }

    /// Places `sign` in `cell`, removing every earlier `+` to its right and every
    /// earlier `-` to its left.
    pub fn place(&mut self, cell: usize, sign: Sign) -> Result<(), SignGameError> {
        if self.rounds_left == 0 {
            return Err(SignGameError::IllegalMove {
                cell,
                reason: "no rounds left",
            });
        }
        if !self.is_empty_cell(cell) {
            return Err(SignGameError::IllegalMove {
                cell,
                reason: "cell is not empty",
            });
        }
        for (i, c) in self.cells.iter_mut().enumerate() {
            let other = i + 1;
            *c = match *c {
                CellStatus::Alive(Sign::Plus) if other > cell => CellStatus::Dead(Sign::Plus),
                CellStatus::Alive(Sign::Minus) if other < cell => CellStatus::Dead(Sign::Minus),
                c => c,
            };
        }
        self.cells[cell - 1] = CellStatus::Alive(sign);
        self.rounds_left -= 1;
        self.history.push((cell, sign));
        Ok(())
    }

    pub fn preserved_count(&self) -> usize {
        self.cells
            .iter()
            .filter(|c| matches!(c, CellStatus::Alive(_)))
            .count()
    }

    /// Number of preserved `+` and `-` signs.
    pub fn preserved_by_sign(&self) -> (usize, usize) {
        (self.alive_plus().count(), self.alive_minus().count())
    }

    /// Bitmasks `(empty, alive_plus, alive_minus)` with cell `j` at bit `j - 1`.
    pub(crate) fn masks(&self) -> (u32, u32, u32) {
        let mut masks = (0u32, 0u32, 0u32);
        for (i, c) in self.cells.iter().enumerate() {
            let bit = 1u32 << i;
            match c {
                CellStatus::Empty => masks.0 |= bit,
                CellStatus::Alive(Sign::Plus) => masks.1 |= bit,
                CellStatus::Alive(Sign::Minus) => masks.2 |= bit,
                CellStatus::Dead(_) => {}
            }
        }
        masks
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use Sign::*;

    /// Applies the removal definition directly to the placement order.
    fn rescan(history: &[(usize, Sign)]) -> usize {
        history
            .iter()
            .enumerate()
            .filter(|(i, (cell, sign))| {
                history[i + 1..].iter().all(|(later, _)| match sign {
                    Plus => later > cell,
                    Minus => later < cell,
                })
            })
            .count()
    }

    fn play(k: usize, moves: &[(usize, Sign)]) -> SignGameState {
        let mut s = SignGameState::new(k, moves.len());
        for &(c, sign) in moves {
            s.place(c, sign).unwrap();
        }
        s
    }

    #[test]
    fn place_examples() {
        assert_eq!(play(6, &[(3, Plus), (5, Plus)]).preserved_count(), 2);
        assert_eq!(play(6, &[(5, Plus), (3, Plus)]).preserved_count(), 1);
        assert_eq!(play(6, &[(5, Minus), (3, Plus)]).preserved_count(), 2);
    }

    #[test]
    fn preserved_count_examples() {
        assert_eq!(SignGameState::new(4, 2).preserved_count(), 0);
        assert_eq!(play(4, &[(2, Plus)]).preserved_count(), 1);
        assert_eq!(play(4, &[(2, Minus)]).preserved_count(), 1);

        // The later sign at 4 lies left of the `-` at 6, so nothing is removed.
        let s = play(8, &[(2, Plus), (6, Minus), (4, Plus)]);
        assert_eq!(rescan(s.history()), 3);
        assert_eq!(s.preserved_count(), 3);
        assert_eq!(s.alive_plus().collect::<Vec<_>>(), vec![2, 4]);
        assert_eq!(s.dead_count(), 0);

        let s = play(8, &[(2, Plus), (4, Minus), (6, Plus)]);
        assert_eq!(rescan(s.history()), 2);
        assert_eq!(s.preserved_count(), 2);
    }

    #[test]
    fn illegal_moves() {
        let mut s = SignGameState::new(3, 1);
        assert!(s.place(0, Plus).is_err());
        assert!(s.place(4, Plus).is_err());
        s.place(2, Plus).unwrap();
        assert!(matches!(s.place(1, Plus), Err(SignGameError::IllegalMove { .. })));

        let mut s = SignGameState::new(3, 2);
        s.place(2, Plus).unwrap();
        assert!(s.place(2, Minus).is_err());
    }

    #[test]
    fn partition_holds() {
        let s = play(7, &[(4, Plus), (6, Minus), (5, Minus), (1, Plus)]);
        let empty = s.empty_cells().count();
        let alive = s.preserved_count();
        assert_eq!(empty + alive + s.dead_count(), 7);
        assert_eq!(s.history().len(), 7 - empty);
        assert_eq!(alive, rescan(s.history()));
    }
}
