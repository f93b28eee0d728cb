use std::cell::Cell;

use serde::Serialize;

use super::{check_n_grid, nonincreasing, ChainView, ConditionReport, Thresholds, Verdict};
use crate::chain::{moments_from_parts, ChainSpec};
use crate::charfn::CharFnProfile;
use crate::error::{Error, Result};
use crate::normal::normal_cdf;

/// Cap on trapezoid intervals before giving up on convergence.
const MAX_INTERVALS: usize = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Integral {
    pub value: f64,
    pub intervals: usize,
    pub converged: bool,
}

/// Composite trapezoid rule on `[a, b]`, halving the step (and reusing the
/// old nodes) until two successive values differ by at most
/// `rel_tol · |value|`.
pub fn trapezoid_adaptive(f: impl Fn(f64) -> f64, a: f64, b: f64, start: usize, rel_tol: f64) -> Integral {
    if b <= a {
        return Integral {
            value: 0.0,
            intervals: 0,
            converged: true,
        };
    }
    let mut n = start.max(1);
    let mut h = (b - a) / n as f64;
    let mut sum = 0.5 * (f(a) + f(b)) + (1..n).map(|i| f(a + i as f64 * h)).sum::<f64>();
    let mut value = h * sum;
    while n < MAX_INTERVALS {
        let mid: f64 = (0..n).map(|i| f(a + (i as f64 + 0.5) * h)).sum();
        sum += mid;
        n *= 2;
        h *= 0.5;
        let next = h * sum;
        let done = (next - value).abs() <= rel_tol * next.abs() || (next - value).abs() < 1e-300;
        value = next;
        if done {
            return Integral {
                value,
                intervals: n,
                converged: true,
            };
        }
    }
    Integral {
        value,
        intervals: n,
        converged: false,
    }
}

/// Per `n` in the grid:
///
/// * `values`: C₁ = `∫_{T ≤ |u| ≤ δσ_n} |φ_n(u/σ_n)| du`,
/// * `c2`: `σ_n ∫_{δ < |u| ≤ L} |φ_n(u)| du`,
/// * `c1_tau`, `c1_dominator`: C₁ with `τ_n` in place of `σ_n`, and
///   `∫_{T ≤ |u| ≤ δτ_n} exp(-G_n(u)) du` which must dominate it.
///
/// `max_domination_excess` records the largest
/// `|φ_n(u/τ_n)| - exp(-G_n(u))` seen on the integration nodes.
pub fn c1c2_diagnostics(
    chain: &ChainSpec,
    n_grid: &[usize],
    big_t: f64,
    delta: f64,
    big_l: f64,
    th: &Thresholds,
) -> Result<ConditionReport> {
    if !(0.0 < delta && delta < big_l) {
        return Err(Error::Parameter(format!(
            "need 0 < delta < L, got delta = {delta}, L = {big_l}"
        )));
    }
    if !(big_t > 0.0) {
        return Err(Error::Parameter(format!("T must be positive, got {big_t}")));
    }
    let n_max = check_n_grid(n_grid)?;
    let view = ChainView::new(chain, n_max)?;
    let gamma = view.doeblin.require_gamma()?;
    let (lo, hi) = view.doeblin.variance_sandwich();
    let mut report = ConditionReport::new("c1c2")
        .param("T", big_t)
        .param("delta", delta)
        .param("L", big_l)
        .param("gamma", gamma)
        .param("sandwich_lo", lo)
        .param("sandwich_hi", hi)
        .param(
            "c1_gaussian_limit",
            2.0 * (2.0 * std::f64::consts::PI).sqrt() * (1.0 - normal_cdf(big_t)),
        );
    let mut keys: Vec<(&str, Vec<f64>)> = ["c2", "c1_tau", "c1_dominator", "sigma_n", "tau_n"]
        .iter()
        .map(|k| (*k, Vec::new()))
        .collect();
    let mut excess_max = f64::NEG_INFINITY;
    let mut unconverged = 0;
    let tol = th.integration_rel_tol;
    for &n in n_grid {
        let profile = CharFnProfile::new(chain, n)?;
        let moments = moments_from_parts(chain, profile.marginals(), profile.table());
        let sigma = moments.sigma();
        let tau = view.tau_sq(n).sqrt();
        if sigma <= 0.0 {
            return Err(Error::Degenerate(format!("σ_n = 0 at n = {n}")));
        }
        let start = |width: f64, scale: f64| ((16.0 * width * scale).ceil() as usize).max(64);

        let c1 = trapezoid_adaptive(
            |u| profile.joint(u / sigma).norm(),
            big_t,
            delta * sigma,
            start(delta * sigma - big_t, 1.0),
            tol,
        );
        let c2 = trapezoid_adaptive(
            |u| profile.joint(u).norm(),
            delta,
            big_l,
            start(big_l - delta, sigma),
            tol,
        );
        let excess = Cell::new(f64::NEG_INFINITY);
        let g_n = |u: f64| (1..=n).map(|k| 1.0 - view.step_abs_sq(k, u / tau)).sum::<f64>() * gamma / 8.0;
        let c1_tau = trapezoid_adaptive(
            |u| {
                let phi = profile.joint(u / tau).norm();
                excess.set(excess.get().max(phi - (-g_n(u)).exp()));
                phi
            },
            big_t,
            delta * tau,
            start(delta * tau - big_t, 1.0),
            tol,
        );
        let dom = trapezoid_adaptive(
            |u| (-g_n(u)).exp(),
            big_t,
            delta * tau,
            start(delta * tau - big_t, 1.0),
            tol,
        );
        excess_max = excess_max.max(excess.get());
        unconverged += [c1, c2, c1_tau, dom].iter().filter(|i| !i.converged).count();

        report.grid.push(n as f64);
        report.values.push(2.0 * c1.value);
        for (key, v) in [
            ("c2", 2.0 * sigma * c2.value),
            ("c1_tau", 2.0 * c1_tau.value),
            ("c1_dominator", 2.0 * dom.value),
            ("sigma_n", sigma),
            ("tau_n", tau),
        ] {
            keys.iter_mut().find(|(k, _)| *k == key).unwrap().1.push(v);
        }
    }
    for (k, v) in keys {
        report.series.insert(k.into(), v);
    }
    report.params.insert("max_domination_excess".into(), excess_max);
    if unconverged > 0 {
        report
            .notes
            .push(format!("{unconverged} integrals hit the refinement cap"));
    }
    let dominated = excess_max <= 1e-10
        && report.series["c1_tau"]
            .iter()
            .zip(&report.series["c1_dominator"])
            .all(|(c, d)| *c <= d * (1.0 + 1e-6) + 1e-12);
    let c2 = &report.series["c2"];
    let c2_last = *c2.last().unwrap();
    report.verdict = if !dominated || c2_last >= th.c2_floor {
        Verdict::Violated
    } else if nonincreasing(c2, 1e-9) {
        Verdict::SatisfiedAtThisScale
    } else {
        Verdict::Inconclusive
    };
    if !dominated {
        report.notes.push("C1 integrand exceeds exp(-G_n) on the grid".into());
    }
    if c2_last >= th.c2_floor {
        report.notes.push("C2 integral does not vanish at the largest n".into());
    }
    Ok(report)
}
