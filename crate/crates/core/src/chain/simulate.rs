use rand::RngCore;
use rayon::prelude::*;

use super::spec::{ChainSpec, Kernels};
use crate::error::Result;
use crate::rng::{CategoricalTable, Streams};

/// Seeded path generator for one chain and horizon.
///
/// Path `i` is a pure function of `(chain, seed, i)`; callers may consume
/// paths one at a time without storing them.
#[derive(Debug, Clone)]
pub struct PathSampler {
    n: usize,
    initial: CategoricalTable,
    /// One table per distinct kernel; entry `k - 2` for per-step chains.
    kernels: Vec<CategoricalTable>,
    homogeneous: bool,
    streams: Streams,
}

impl PathSampler {
    pub fn new(chain: &ChainSpec, n: usize, seed: u64) -> Result<Self> {
        chain.check_len(n)?;
        let size = chain.size();
        let initial = CategoricalTable::new(size, [chain.initial()]);
        let kernels = match chain.kernels() {
            Kernels::Homogeneous(q) => vec![CategoricalTable::new(size, q.as_flat().chunks(size))],
            Kernels::PerStep(ks) => ks
                .iter()
                .take(n.saturating_sub(1))
                .map(|q| CategoricalTable::new(size, q.as_flat().chunks(size)))
                .collect(),
        };
        Ok(Self {
            n,
            initial,
            kernels,
            homogeneous: chain.is_homogeneous(),
            streams: Streams::new(seed),
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Visit `(k, ξ_k)` for `k = 1..=n` along path `index`.
    #[inline]
    pub fn walk<F: FnMut(usize, usize)>(&self, index: u64, mut visit: F) {
        let mut rng = self.streams.stream(index);
        let mut state = self.initial.draw(0, rng.next_u64());
        visit(1, state);
        for k in 2..=self.n {
            let table = if self.homogeneous {
                &self.kernels[0]
            } else {
                &self.kernels[k - 2]
            };
            state = table.draw(state, rng.next_u64());
            visit(k, state);
        }
    }

    /// `Σ_k values[(k-1)·size + ξ_k]` along path `index`.
    #[inline]
    pub fn additive(&self, index: u64, size: usize, values: &[f64]) -> f64 {
        let mut sum = 0.0;
        let mut offset = 0;
        self.walk(index, |_, s| {
            sum += values[offset + s];
            offset += size;
        });
        sum
    }

    pub fn fill(&self, index: u64, out: &mut [u32]) {
        self.walk(index, |k, s| out[k - 1] = s as u32);
    }
}

/// `count` stored paths of length `n`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PathBatch {
    pub count: usize,
    pub length: usize,
    pub seed: u64,
    pub states: Vec<u32>,
}

impl PathBatch {
    pub fn path(&self, i: usize) -> &[u32] {
        &self.states[i * self.length..(i + 1) * self.length]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[u32]> {
        self.states.chunks(self.length)
    }
}

pub fn simulate_paths(chain: &ChainSpec, n: usize, count: usize, seed: u64) -> Result<PathBatch> {
    let sampler = PathSampler::new(chain, n, seed)?;
    let mut states = vec![0u32; count * n];
    states
        .par_chunks_mut(n)
        .enumerate()
        .for_each(|(i, row)| sampler.fill(i as u64, row));
    Ok(PathBatch {
        count,
        length: n,
        seed,
        states,
    })
}
