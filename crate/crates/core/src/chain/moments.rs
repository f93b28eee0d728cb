use serde::Serialize;

use super::spec::{ChainSpec, MarginalSequence, ObservableTable};
use crate::error::Result;

/// Exact second-order structure of `S_n = X_1 + ... + X_n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VarianceStats {
    /// `τ_n² = Σ E X_j²`.
    pub tau_sq: f64,
    /// `σ_n² = E S_n²`.
    pub sigma_sq: f64,
    /// `E X_j²`, j = 1..n.
    pub per_step_var: Vec<f64>,
    /// Means of the raw observables, `E g_j(ξ_j)`.
    pub per_step_mean: Vec<f64>,
    /// `Σ_{j<k} E X_j X_k`.
    pub cross_terms: f64,
    pub centered: bool,
}

impl VarianceStats {
    pub fn ratio(&self) -> f64 {
        self.sigma_sq / self.tau_sq
    }

    pub fn sigma(&self) -> f64 {
        self.sigma_sq.sqrt()
    }

    pub fn tau(&self) -> f64 {
        self.tau_sq.sqrt()
    }

    /// `τ_m²` for every prefix length `m = 1..=n`.
    pub fn tau_sq_prefix(&self) -> Vec<f64> {
        self.per_step_var
            .iter()
            .scan(0.0, |acc, v| {
                *acc += v;
                Some(*acc)
            })
            .collect()
    }
}

pub fn exact_moments(chain: &ChainSpec, n: usize) -> Result<VarianceStats> {
    let marginals = chain.marginals(n)?;
    let table = chain.observable_table(&marginals);
    Ok(moments_from_parts(chain, &marginals, &table))
}

/// `E X_j X_k = Σ_x P_j(x) x_j(x) [Q_{j+1} ⋯ Q_k x_k](x)`, accumulated in one
/// left-to-right sweep: `v_k = (v_{k-1} + P_{k-1} ∘ x_{k-1}) Q_k` holds the
/// signed measure `Σ_{j<k} (P_j ∘ x_j) Q_{j+1} ⋯ Q_k`, and `E X_j X_k` summed
/// over `j < k` is `v_k · x_k`.
pub fn moments_from_parts(chain: &ChainSpec, marginals: &MarginalSequence, table: &ObservableTable) -> VarianceStats {
    let n = marginals.len();
    let size = chain.size();
    let mut per_step_var = Vec::with_capacity(n);
    let mut carried = vec![0.0; size];
    let mut cross = 0.0;
    for k in 1..=n {
        let p = marginals.get(k);
        let x = table.step(k);
        if k >= 2 {
            let prev_p = marginals.get(k - 1);
            let prev_x = table.step(k - 1);
            for s in 0..size {
                carried[s] += prev_p[s] * prev_x[s];
            }
            carried = chain.kernel(k).push_forward(&carried);
            cross += carried.iter().zip(x).map(|(v, g)| v * g).sum::<f64>();
        }
        per_step_var.push(p.iter().zip(x).map(|(p, g)| p * g * g).sum());
    }
    let tau_sq: f64 = per_step_var.iter().sum();
    VarianceStats {
        tau_sq,
        sigma_sq: tau_sq + 2.0 * cross,
        per_step_var,
        per_step_mean: (1..=n).map(|k| table.raw_mean(k)).collect(),
        cross_terms: cross,
        centered: chain.centered(),
    }
}
