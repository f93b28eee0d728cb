//! Finite-n diagnostics for the hypotheses of the local limit theorem.
//!
//! Each check is an exact finite sum over marginal atoms evaluated on a grid
//! and summarised by a [`Verdict`]. Asymptotic statements become trends plus
//! thresholds from [`Thresholds`]; a verdict of `violated` is only issued when
//! the tested inequality visibly fails at the tested scale.
//!
//! | check | function |
//! |---|---|
//! | Lindeberg | [`lindeberg_profile`] |
//! | A (quadratic envelope of `G_n`) | [`condition_a_profile`] |
//! | A₁ | [`condition_a1_ratio`] |
//! | B | [`condition_b_profile`] |
//! | B₂ | [`condition_b2_profile`] |
//! | B₁ | [`condition_b1_mass`] |
//! | C₁, C₂ integrals | [`c1c2_diagnostics`] |
//! | UAN, Ã₁, slow variation, symmetrization | [`infvar_diagnostics`] |

mod a;
mod b;
mod c1c2;
mod infvar;
mod lindeberg;

use std::collections::BTreeMap;

use serde::Serialize;

pub use a::{condition_a1_ratio, condition_a_profile};
pub use b::{condition_b1_mass, condition_b2_profile, condition_b_profile, in_rozanov_set, B1Shifts};
pub use c1c2::{c1c2_diagnostics, trapezoid_adaptive, Integral};
pub use infvar::{infvar_diagnostics, symmetrization_chain, Norming, SymmetrizationRow};
pub use lindeberg::lindeberg_profile;

use crate::chain::{doeblin_from_marginals, ChainSpec, DoeblinBounds, MarginalSequence, ObservableTable};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    SatisfiedAtThisScale,
    Violated,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::SatisfiedAtThisScale => "satisfied-at-this-scale",
            Verdict::Violated => "violated",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

/// Threshold proxies for asymptotic statements.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Thresholds {
    /// Lindeberg sum below which the largest `n` counts as satisfied.
    pub lindeberg: f64,
    /// Smallest admissible `min_u G_n(u) / u²`.
    pub kappa_min: f64,
    /// `inf_t B_n(t)` must exceed this.
    pub b_min: f64,
    /// C₂ at the largest `n` below this counts as vanishing.
    pub c2_floor: f64,
    /// Relative change that stops trapezoid refinement.
    pub integration_rel_tol: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            lindeberg: 0.01,
            kappa_min: 1e-3,
            b_min: 1.0,
            c2_floor: 0.5,
            integration_rel_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    pub name: String,
    pub params: BTreeMap<String, f64>,
    /// Evaluation points (`n`, `u`, `t` or `x` depending on the check).
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    /// Secondary sequences, each aligned with `grid` unless noted.
    pub series: BTreeMap<String, Vec<f64>>,
    pub verdict: Verdict,
    pub notes: Vec<String>,
}

impl ConditionReport {
    fn new(name: &str) -> Self {
        Self {
            name: name.into(),
            params: BTreeMap::new(),
            grid: Vec::new(),
            values: Vec::new(),
            series: BTreeMap::new(),
            verdict: Verdict::Inconclusive,
            notes: Vec::new(),
        }
    }

    fn param(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.into(), value);
        self
    }

    pub fn series(&self, key: &str) -> Option<&[f64]> {
        self.series.get(key).map(Vec::as_slice)
    }

    pub fn last_value(&self) -> Option<f64> {
        self.values.last().copied()
    }
}

/// Marginals, centered observables and `τ_m²` prefixes for one chain.
struct ChainView {
    marginals: MarginalSequence,
    table: ObservableTable,
    tau_sq: Vec<f64>,
    doeblin: DoeblinBounds,
}

impl ChainView {
    fn new(chain: &ChainSpec, n: usize) -> Result<Self> {
        let marginals = chain.marginals(n)?;
        let table = chain.observable_table(&marginals);
        let doeblin = doeblin_from_marginals(chain, &marginals);
        let mut tau_sq = Vec::with_capacity(n);
        let mut acc = 0.0;
        for k in 1..=n {
            acc += second_moment_where(marginals.get(k), table.step(k), |_| true);
            tau_sq.push(acc);
        }
        Ok(Self {
            marginals,
            table,
            tau_sq,
            doeblin,
        })
    }

    fn tau_sq(&self, n: usize) -> f64 {
        self.tau_sq[n - 1]
    }

    fn atoms(&self, k: usize) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.table
            .step(k)
            .iter()
            .copied()
            .zip(self.marginals.get(k).iter().copied())
    }

    /// `|f_k(t)|²`.
    fn step_abs_sq(&self, k: usize, t: f64) -> f64 {
        let (mut re, mut im) = (0.0, 0.0);
        for (x, p) in self.atoms(k) {
            let (s, c) = (t * x).sin_cos();
            re += p * c;
            im += p * s;
        }
        re * re + im * im
    }
}

fn second_moment_where(probs: &[f64], values: &[f64], keep: impl Fn(f64) -> bool) -> f64 {
    values
        .iter()
        .zip(probs)
        .filter(|(v, _)| keep(**v))
        .map(|(v, p)| p * v * v)
        .sum()
}

fn check_n_grid(n_grid: &[usize]) -> Result<usize> {
    if n_grid.is_empty() {
        return Err(Error::Parameter("empty n grid".into()));
    }
    if n_grid[0] == 0 || n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Parameter(
            "n grid must be positive and strictly increasing".into(),
        ));
    }
    Ok(*n_grid.last().unwrap())
}

fn check_real_grid(grid: &[f64], what: &str) -> Result<()> {
    if grid.is_empty() || grid.iter().any(|v| !v.is_finite()) || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Parameter(format!(
            "{what} grid must be finite and strictly increasing"
        )));
    }
    Ok(())
}

fn nonincreasing(values: &[f64], slack: f64) -> bool {
    values.windows(2).all(|w| w[1] <= w[0] + slack)
}

#[cfg(test)]
pub(crate) mod fixtures {
    use crate::chain::{ChainSpec, StepKernel};

    /// Stationary ±1 chain with kernel `[[0.6, 0.4], [0.4, 0.6]]`.
    pub fn lattice() -> ChainSpec {
        let q = StepKernel::new(vec![vec![0.6, 0.4], vec![0.4, 0.6]]).unwrap();
        ChainSpec::homogeneous(vec![0.5, 0.5], q, vec![-1.0, 1.0]).unwrap()
    }

    /// Stationary uniform 3-state chain, values `{0, 1, √2}`,
    /// kernel `0.7 Π + 0.3 (cyclic shift)` with `Π` the projection on the
    /// uniform law, so `a = 0.7`, `b = 1.6`.
    pub fn nonlattice() -> ChainSpec {
        let rows = (0..3)
            .map(|x| {
                (0..3)
                    .map(|y| 0.7 / 3.0 + if (x + 1) % 3 == y { 0.3 } else { 0.0 })
                    .collect()
            })
            .collect();
        let q = StepKernel::new(rows).unwrap();
        ChainSpec::homogeneous(vec![1.0 / 3.0; 3], q, vec![0.0, 1.0, 2f64.sqrt()]).unwrap()
    }
}
