//! Binary indexed tree over `i64`, used for O(log n) range sums of bucket biases.

#[derive(Clone, Debug)]
pub(crate) struct Fenwick {
    tree: Vec<i64>,
}

impl Fenwick {
    pub(crate) fn new(len: usize) -> Self {
        Self {
            tree: vec![0; len + 1],
        }
    }

    pub(crate) fn add(&mut self, index: usize, delta: i64) {
        if delta == 0 {
            return;
        }
        let mut i = index + 1;
        while i < self.tree.len() {
            self.tree[i] += delta;
            i += i & i.wrapping_neg();
        }
    }

    /// Sum over `[0, end)`.
    fn prefix(&self, end: usize) -> i64 {
        let mut i = end.min(self.tree.len() - 1);
        let mut acc = 0;
        while i > 0 {
            acc += self.tree[i];
            i -= i & i.wrapping_neg();
        }
        acc
    }

    /// Sum over the inclusive range `[first, last]`.
    pub(crate) fn range(&self, first: usize, last: usize) -> i64 {
        if first > last {
            return 0;
        }
        self.prefix(last + 1) - self.prefix(first)
    }
}
