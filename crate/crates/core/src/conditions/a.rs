use super::{check_n_grid, check_real_grid, second_moment_where, ChainView, ConditionReport, Thresholds, Verdict};
use crate::chain::ChainSpec;
use crate::error::{Error, Result};

/// `G_n(u) = (γ/8) Σ_{k≤n} (1 - |f_k(u/τ_n)|²)` on `u_grid` and its
/// quadratic envelope constant `κ = min_u G_n(u)/u²`.
///
/// Every grid point must satisfy `1 ≤ |u| ≤ δ τ_n`.
pub fn condition_a_profile(
    chain: &ChainSpec,
    delta: f64,
    n: usize,
    u_grid: &[f64],
    th: &Thresholds,
) -> Result<ConditionReport> {
    if !(delta > 0.0) {
        return Err(Error::Parameter(format!("delta must be positive, got {delta}")));
    }
    check_real_grid(u_grid, "u")?;
    let view = ChainView::new(chain, n)?;
    let gamma = view.doeblin.require_gamma()?;
    let tau = view.tau_sq(n).sqrt();
    if let Some(u) = u_grid.iter().find(|u| u.abs() < 1.0 || u.abs() > delta * tau) {
        return Err(Error::Parameter(format!(
            "u = {u} outside 1 ≤ |u| ≤ δτ_n = {}",
            delta * tau
        )));
    }
    let mut report = ConditionReport::new("A")
        .param("delta", delta)
        .param("n", n as f64)
        .param("gamma", gamma)
        .param("tau_n", tau)
        .param("kappa_min", th.kappa_min);
    let mut ratios = Vec::with_capacity(u_grid.len());
    for &u in u_grid {
        let t = u / tau;
        let g: f64 = (1..=n).map(|k| 1.0 - view.step_abs_sq(k, t)).sum::<f64>() * gamma / 8.0;
        report.grid.push(u);
        report.values.push(g);
        ratios.push(g / (u * u));
    }
    let kappa = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    report.params.insert("kappa".into(), kappa);
    report.series.insert("ratio_to_u2".into(), ratios);
    report.verdict = if kappa >= th.kappa_min {
        Verdict::SatisfiedAtThisScale
    } else {
        Verdict::Violated
    };
    Ok(report)
}

/// Aggregate ratio `Σ_{k≤n} E X_k² 1{|X_k| > δ} / τ_n²` per `n`, with the
/// worst single-step ratio `max_{k≤n} E X_k² 1{|X_k| > δ} / E X_k²` in
/// series `per_step_worst`.
pub fn condition_a1_ratio(chain: &ChainSpec, delta: f64, n_grid: &[usize]) -> Result<ConditionReport> {
    if !(delta > 0.0) {
        return Err(Error::Parameter(format!("delta must be positive, got {delta}")));
    }
    let n_max = check_n_grid(n_grid)?;
    let view = ChainView::new(chain, n_max)?;
    let mut report = ConditionReport::new("A1").param("delta", delta);
    let mut worst = Vec::with_capacity(n_grid.len());
    let (mut tail_sum, mut worst_so_far, mut k_done) = (0.0, 0.0f64, 0);
    for &n in n_grid {
        for k in k_done + 1..=n {
            let (p, x) = (view.marginals.get(k), view.table.step(k));
            let tail = second_moment_where(p, x, |v| v.abs() > delta);
            let total = second_moment_where(p, x, |_| true);
            tail_sum += tail;
            if total > 0.0 {
                worst_so_far = worst_so_far.max(tail / total);
            }
        }
        k_done = n;
        let tau_sq = view.tau_sq(n);
        if tau_sq <= 0.0 {
            return Err(Error::Degenerate(format!("τ_n² = 0 at n = {n}")));
        }
        report.grid.push(n as f64);
        report.values.push(tail_sum / tau_sq);
        worst.push(worst_so_far);
    }
    let last = report.last_value().unwrap();
    let sufficient = *worst.last().unwrap() < 1.0;
    report.series.insert("per_step_worst".into(), worst);
    report.verdict = if last < 1.0 - 1e-9 {
        Verdict::SatisfiedAtThisScale
    } else {
        Verdict::Violated
    };
    if sufficient {
        report
            .notes
            .push("per-step sufficient form holds on the horizon".into());
    }
    Ok(report)
}
