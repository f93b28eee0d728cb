use std::f64::consts::PI;

use super::{check_n_grid, ChainView, ConditionReport, Thresholds, Verdict};
use crate::chain::ChainSpec;
use crate::error::{Error, Result};

/// `B_n(t) = γ/(8 ln τ_n) Σ_{k≤n} (1 - |f_k(t)|²)` on `t_steps` evenly spaced
/// points of `[t_lo, t_hi]` plus `u` itself.
///
/// `values[i]` is `inf_t B_n(t)` at `n = grid[i]`; series `b2_sup` holds
/// `sup_t (1/n) Σ_{k≤n} |f_k(t)|²`. Grid sizes with `τ_n ≤ e^{1/2}` are
/// skipped because `ln τ_n` is too small to divide by.
pub fn condition_b_profile(
    chain: &ChainSpec,
    u: f64,
    interval: (f64, f64),
    t_steps: usize,
    n_grid: &[usize],
    th: &Thresholds,
) -> Result<ConditionReport> {
    if u == 0.0 || !u.is_finite() {
        return Err(Error::Parameter("condition B is stated for u ≠ 0".into()));
    }
    let (lo, hi) = interval;
    if !(lo < u && u < hi) {
        return Err(Error::Parameter(format!("u = {u} must lie inside ({lo}, {hi})")));
    }
    if t_steps < 2 {
        return Err(Error::Parameter("need at least two t points".into()));
    }
    let n_max = check_n_grid(n_grid)?;
    let view = ChainView::new(chain, n_max)?;
    let gamma = view.doeblin.require_gamma()?;
    let mut ts: Vec<f64> = (0..t_steps)
        .map(|i| lo + (hi - lo) * i as f64 / (t_steps - 1) as f64)
        .collect();
    ts.push(u);
    ts.sort_by(f64::total_cmp);
    ts.dedup();

    let mut report = ConditionReport::new("B")
        .param("u", u)
        .param("t_lo", lo)
        .param("t_hi", hi)
        .param("gamma", gamma)
        .param("b_min", th.b_min);
    let mut deficit = vec![0.0; ts.len()];
    let mut abs_sum = vec![0.0; ts.len()];
    let mut k_done = 0;
    let mut b2 = Vec::new();
    let mut at_u = Vec::new();
    for &n in n_grid {
        for k in k_done + 1..=n {
            for (i, &t) in ts.iter().enumerate() {
                let s = view.step_abs_sq(k, t);
                deficit[i] += 1.0 - s;
                abs_sum[i] += s;
            }
        }
        k_done = n;
        let log_tau = 0.5 * view.tau_sq(n).ln();
        if log_tau <= 0.5 {
            report.notes.push(format!("n = {n} skipped: ln τ_n = {log_tau:.3}"));
            continue;
        }
        let scale = gamma / (8.0 * log_tau);
        let inf = deficit.iter().map(|d| scale * d.max(0.0)).fold(f64::INFINITY, f64::min);
        let iu = ts.iter().position(|&t| t == u).unwrap();
        report.grid.push(n as f64);
        report.values.push(inf);
        at_u.push(scale * deficit[iu].max(0.0));
        b2.push(abs_sum.iter().fold(0.0f64, |m, s| m.max(s / n as f64)));
    }
    if report.grid.is_empty() {
        return Err(Error::Parameter("every n in the grid has ln τ_n too small".into()));
    }
    report.series.insert("b2_sup".into(), b2);
    report.series.insert("b_at_u".into(), at_u);
    let last = report.last_value().unwrap();
    report.verdict = if last > th.b_min {
        Verdict::SatisfiedAtThisScale
    } else if last <= 1e-12 {
        Verdict::Violated
    } else {
        Verdict::Inconclusive
    };
    Ok(report)
}

/// `sup_t (1/n) Σ_{k≤n} |f_k(t)|²` over `t_steps` points of `[t_lo, t_hi]`,
/// an interval away from zero, for each `n`.
pub fn condition_b2_profile(
    chain: &ChainSpec,
    interval: (f64, f64),
    t_steps: usize,
    n_grid: &[usize],
) -> Result<ConditionReport> {
    let (lo, hi) = interval;
    if !(lo < hi) || (lo <= 0.0 && hi >= 0.0) {
        return Err(Error::Parameter(format!(
            "[{lo}, {hi}] must be a proper interval not containing 0"
        )));
    }
    if t_steps < 2 {
        return Err(Error::Parameter("need at least two t points".into()));
    }
    let n_max = check_n_grid(n_grid)?;
    let view = ChainView::new(chain, n_max)?;
    let ts: Vec<f64> = (0..t_steps)
        .map(|i| lo + (hi - lo) * i as f64 / (t_steps - 1) as f64)
        .collect();
    let mut report = ConditionReport::new("B2").param("t_lo", lo).param("t_hi", hi);
    let mut sums = vec![0.0; ts.len()];
    let mut k_done = 0;
    for &n in n_grid {
        for k in k_done + 1..=n {
            for (s, &t) in sums.iter_mut().zip(&ts) {
                *s += view.step_abs_sq(k, t);
            }
        }
        k_done = n;
        report.grid.push(n as f64);
        report.values.push(sums.iter().fold(0.0f64, |m, s| m.max(s / n as f64)));
    }
    report.verdict = if report.last_value().unwrap() < 1.0 - 1e-9 {
        Verdict::SatisfiedAtThisScale
    } else {
        Verdict::Violated
    };
    Ok(report)
}

/// `x ∈ A(u, ε)`: `|x| < M` and `|xu - πm| ≥ ε` for every integer `|m| ≤ M`.
pub fn in_rozanov_set(x: f64, u: f64, eps: f64, big_m: f64) -> bool {
    if x.abs() >= big_m {
        return false;
    }
    let m_max = big_m.floor() as i64;
    (-m_max..=m_max).all(|m| (x * u - PI * m as f64).abs() >= eps)
}

/// Centering constants `a_j` for condition B₁.
#[derive(Debug, Clone, PartialEq)]
pub enum B1Shifts {
    Zero,
    /// Per-step median of `X_j`.
    Median,
    Given(Vec<f64>),
}

/// `(1/ln τ_n) Σ_{j≤n} P(X_j - a_j ∈ A(u, ε))` per `n`.
///
/// Series `step_mass` holds the per-step masses for `j = 1..n_max` (not
/// aligned with the grid). The parameter `K_u` is the largest constant with
/// `|f_k(t)|² - 1 ≤ -¼ K_u ε² P(X_k ∈ A(u, ε))` on 21 points of
/// `|t - u| < ε/4M`.
pub fn condition_b1_mass(
    chain: &ChainSpec,
    u: f64,
    eps: f64,
    big_m: f64,
    shifts: &B1Shifts,
    n_grid: &[usize],
) -> Result<ConditionReport> {
    if u == 0.0 || !u.is_finite() {
        return Err(Error::Parameter("condition B1 is stated for u ≠ 0".into()));
    }
    if !(eps > 0.0 && big_m > 0.0) {
        return Err(Error::Parameter("eps and M must be positive".into()));
    }
    let n_max = check_n_grid(n_grid)?;
    let view = ChainView::new(chain, n_max)?;
    let shift = |k: usize| -> Result<f64> {
        Ok(match shifts {
            B1Shifts::Zero => 0.0,
            B1Shifts::Median => median(view.atoms(k)),
            B1Shifts::Given(a) => *a
                .get(k - 1)
                .ok_or_else(|| Error::Parameter(format!("no shift given for step {k}")))?,
        })
    };
    let mut inside_m = f64::INFINITY;
    let mut step_mass = Vec::with_capacity(n_max);
    let mut plain_mass = Vec::with_capacity(n_max);
    for k in 1..=n_max {
        let a = shift(k)?;
        let (mut shifted, mut plain, mut below) = (0.0, 0.0, 0.0);
        for (x, p) in view.atoms(k) {
            if in_rozanov_set(x - a, u, eps, big_m) {
                shifted += p;
            }
            if in_rozanov_set(x, u, eps, big_m) {
                plain += p;
            }
            if x.abs() < big_m {
                below += p;
            }
        }
        inside_m = inside_m.min(below);
        step_mass.push(shifted);
        plain_mass.push(plain);
    }
    if inside_m <= 0.0 {
        return Err(Error::Parameter(format!("inf_j P(|X_j| < M) = 0 for M = {big_m}")));
    }

    let half = eps / (4.0 * big_m);
    let mut k_u = f64::INFINITY;
    for (k, &mass) in plain_mass.iter().enumerate() {
        if mass <= 0.0 {
            continue;
        }
        for i in 0..21 {
            let t = u - half + 2.0 * half * (i as f64 + 0.5) / 21.0;
            let deficit = 1.0 - view.step_abs_sq(k + 1, t);
            k_u = k_u.min(4.0 * deficit / (eps * eps * mass));
        }
    }

    let mut report = ConditionReport::new("B1")
        .param("u", u)
        .param("eps", eps)
        .param("M", big_m)
        .param("inf_mass_below_M", inside_m);
    if k_u.is_finite() {
        report.params.insert("K_u".into(), k_u);
    }
    let mut cum = 0.0;
    let mut k_done = 0;
    for &n in n_grid {
        cum += step_mass[k_done..n].iter().sum::<f64>();
        k_done = n;
        let log_tau = 0.5 * view.tau_sq(n).ln();
        if log_tau <= 0.5 {
            report.notes.push(format!("n = {n} skipped: ln τ_n = {log_tau:.3}"));
            continue;
        }
        report.grid.push(n as f64);
        report.values.push(cum / log_tau);
    }
    if report.grid.is_empty() {
        return Err(Error::Parameter("every n in the grid has ln τ_n too small".into()));
    }
    let growing = report.values.windows(2).all(|w| w[1] >= w[0]);
    report.verdict = if step_mass.iter().all(|&m| m == 0.0) {
        Verdict::Violated
    } else if growing && report.values.len() > 1 && report.values.last().unwrap() >= &(2.0 * report.values[0]) {
        Verdict::SatisfiedAtThisScale
    } else {
        Verdict::Inconclusive
    };
    report.series.insert("step_mass".into(), step_mass);
    if k_u.is_finite() && k_u <= 0.0 {
        report.notes.push("fitted K_u is not positive".into());
    }
    Ok(report)
}

fn median(atoms: impl Iterator<Item = (f64, f64)>) -> f64 {
    let mut v: Vec<(f64, f64)> = atoms.filter(|a| a.1 > 0.0).collect();
    v.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut acc = 0.0;
    for (x, p) in &v {
        acc += p;
        if acc >= 0.5 {
            return *x;
        }
    }
    v.last().map_or(0.0, |a| a.0)
}
