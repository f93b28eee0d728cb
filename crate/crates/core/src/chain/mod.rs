//! Nonstationary finite-state Markov chains with real observables.
//!
//! `ξ_1 ~ P_1`, `ξ_k | ξ_{k-1} ~ Q_k(ξ_{k-1}, ·)` and `X_k = g_k(ξ_k)`,
//! centered under `P_k` unless the spec opts out. Where a statement needs a
//! conditioning point before step 1, a virtual `ξ_0` with `Q_1(x, ·) = P_1`
//! is used; it satisfies the Doeblin condition with constants `1, 1`.

mod doeblin;
mod moments;
mod simulate;
mod spec;

pub use doeblin::{doeblin_bounds, doeblin_from_marginals, DoeblinBounds, RatioSite};
pub use moments::{exact_moments, moments_from_parts, VarianceStats};
pub use simulate::{simulate_paths, PathBatch, PathSampler};
pub use spec::{
    validate_spec, ChainSpec, Kernels, MarginalSequence, ObservableTable, Observables, RawChainSpec, RawKernels,
    RawObservables, StepKernel, DEFAULT_ZERO_TOL, PROB_TOL,
};
