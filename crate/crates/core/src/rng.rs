//! Seeded random streams and categorical sampling.
//!
//! Every Monte Carlo unit (a path, a Gauss-map sample) owns the ChaCha8
//! stream `(seed, index)`. ChaCha is counter based, so a stream is a pure
//! function of its coordinates and results never depend on how work is
//! split across threads.

use std::ops::Range;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Units handed to one rayon task.
pub const BLOCK: u64 = 4096;

/// Stream factory for one seed.
#[derive(Debug, Clone)]
pub struct Streams {
    base: ChaCha8Rng,
}

impl Streams {
    pub fn new(seed: u64) -> Self {
        Self {
            base: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn stream(&self, index: u64) -> ChaCha8Rng {
        let mut rng = self.base.clone();
        rng.set_stream(index);
        rng.set_word_pos(0);
        rng
    }
}

/// Uniform on the open interval (0, 1) with 53 random bits.
#[inline]
pub fn open01<R: RngCore>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Inverse-CDF lookup tables for a set of categorical rows of equal width.
///
/// A row is drawn with one `u64`: the first index whose threshold exceeds the
/// draw. Zero-probability entries can never be selected.
#[derive(Debug, Clone)]
pub struct CategoricalTable {
    width: usize,
    thresholds: Vec<u64>,
    fallback: Vec<usize>,
}

impl CategoricalTable {
    pub fn new<'a>(width: usize, rows: impl IntoIterator<Item = &'a [f64]>) -> Self {
        let mut thresholds = Vec::new();
        let mut fallback = Vec::new();
        for row in rows {
            assert_eq!(row.len(), width);
            let total: f64 = row.iter().sum();
            let last = row.iter().rposition(|&p| p > 0.0).unwrap_or(0);
            let mut cum = 0.0;
            for (j, &p) in row.iter().enumerate() {
                cum += p;
                let t = if j >= last {
                    u64::MAX
                } else {
                    // saturating float-to-int cast
                    ((cum / total) * 18_446_744_073_709_551_616.0) as u64
                };
                thresholds.push(t);
            }
            fallback.push(last);
        }
        Self {
            width,
            thresholds,
            fallback,
        }
    }

    #[inline]
    pub fn draw(&self, row: usize, r: u64) -> usize {
        // thresholds are nondecreasing, so the first one above `r` sits at
        // the count of those at or below it; counting avoids a branch per entry
        let t = &self.thresholds[row * self.width..(row + 1) * self.width];
        let j = t.iter().map(|&c| (c <= r) as usize).sum::<usize>();
        if j < self.width {
            j
        } else {
            self.fallback[row]
        }
    }
}

/// Map `f` over `0..count` split into [`BLOCK`]-sized ranges, in parallel,
/// returning block results in index order.
pub fn par_blocks<T, F>(count: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(Range<u64>) -> T + Sync,
{
    let blocks = count.div_ceil(BLOCK);
    (0..blocks)
        .into_par_iter()
        .map(|b| f(b * BLOCK..((b + 1) * BLOCK).min(count)))
        .collect()
}
