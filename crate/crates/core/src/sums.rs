//! Deterministic summation helpers.
//!
//! Long accumulations use cascade (pairwise) summation so results do not
//! depend on thread count or incidental evaluation order, and rounding error
//! grows like log n instead of n.

use num_traits::Zero;
use std::ops::Add;

/// Largest run folded sequentially at the bottom of the cascade.
const LEAF: usize = 32;

/// Sums a slice by recursive halving; O(log n) rounding depth.
pub fn pairwise_sum<T>(xs: &[T]) -> T
where
    T: Copy + Zero + Add<Output = T>,
{
    if xs.len() <= LEAF {
        let mut acc = T::zero();
        for &x in xs {
            acc = acc + x;
        }
        return acc;
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Streaming cascade accumulator: sequential within fixed 1024-term blocks,
/// pairwise across blocks. Insertion order defines the result exactly.
pub struct Accumulator<T> {
    blocks: Vec<T>,
    current: T,
    filled: usize,
}

const BLOCK: usize = 1024;

impl<T> Accumulator<T>
where
    T: Copy + Zero + Add<Output = T>,
{
    pub fn new() -> Self {
        Accumulator {
            blocks: Vec::new(),
            current: T::zero(),
            filled: 0,
        }
    }

    pub fn push(&mut self, x: T) {
        self.current = self.current + x;
        self.filled += 1;
        if self.filled == BLOCK {
            self.blocks.push(self.current);
            self.current = T::zero();
            self.filled = 0;
        }
    }

    pub fn finish(mut self) -> T {
        if self.filled > 0 {
            self.blocks.push(self.current);
        }
        pairwise_sum(&self.blocks)
    }
}

impl<T> Default for Accumulator<T>
where
    T: Copy + Zero + Add<Output = T>,
{
    fn default() -> Self {
        Self::new()
    }
}

/// Sums f(i) for i in [0, n) through the cascade accumulator.
pub fn sum_fn<T, F>(n: usize, mut f: F) -> T
where
    T: Copy + Zero + Add<Output = T>,
    F: FnMut(usize) -> T,
{
    let mut acc = Accumulator::new();
    for i in 0..n {
        acc.push(f(i));
    }
    acc.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_exact_integers() {
        let xs: Vec<f64> = (1..=10_000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&xs), 50_005_000.0);
    }

    #[test]
    fn accumulator_matches_pairwise() {
        let xs: Vec<f64> = (0..5_000).map(|i| ((i * 37) % 101) as f64 * 0.125).collect();
        let mut acc = Accumulator::new();
        for &x in &xs {
            acc.push(x);
        }
        let a = acc.finish();
        let b = pairwise_sum(&xs);
        assert!((a - b).abs() < 1e-9 * b.abs());
    }

    #[test]
    fn cascade_beats_naive_on_ill_conditioned_input() {
        // 1 followed by many tiny terms cancelling against -1. Sequential
        // folding absorbs every tiny term into the leading 1; the cascade
        // only loses the ones sharing a leaf with the big entries.
        let n = 1_000_000;
        let tiny = 1e-16;
        let mut xs = vec![tiny; n];
        xs.insert(0, 1.0);
        xs.push(-1.0);
        let exact = tiny * n as f64;
        let naive: f64 = xs.iter().sum();
        let cascade = pairwise_sum(&xs);
        assert!((cascade - exact).abs() < 1e-13);
        assert!((cascade - exact).abs() * 100.0 < (naive - exact).abs());
    }
}
