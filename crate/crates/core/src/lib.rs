//! Computational companion to local limit theorems for nonstationary,
//! Doeblin-minorized (psi-mixing) finite-state Markov chains.
//!
//! The crate is organised bottom-up:
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`chain`] | chain specs, marginals, Doeblin constants, exact moments, seeded path simulation |
//! | [`mixing`] | lower/upper psi-mixing coefficients, maximal correlation, Bradley's inequality |
//! | [`charfn`] | transfer operators, exact characteristic functions, the product bound |
//! | [`conditions`] | finite-n diagnostics for Lindeberg, A, A1, B, B1, B2, (C1)/(C2), UAN |
//! | [`llt`] | Monte Carlo verification of the local CLT and its corollaries |
//! | [`gauss_cf`] | continued-fraction digits under the Gauss measure |
//!
//! Everything except [`llt`] and the samplers in [`gauss_cf`] is exact
//! finite-sum arithmetic over the chain's atoms.

// `!(x > 0.0)` guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chain;
pub mod charfn;
pub mod conditions;
pub mod error;
pub mod gauss_cf;
pub mod law;
pub mod llt;
pub mod mixing;
pub mod normal;
pub mod rng;

pub use chain::{
    ChainSpec, DoeblinBounds, Kernels, MarginalSequence, Observables, PathBatch, RawChainSpec, StepKernel,
    VarianceStats,
};
pub use error::{Error, Result};
pub use mixing::{JointDistribution, MixingCoeffs};
