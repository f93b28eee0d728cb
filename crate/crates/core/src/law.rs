//! Real distributions known through their truncated moments.
//!
//! Every tail diagnostic (Lindeberg, A1, UAN, slow variation, the norming
//! sequence) needs only `P(|X| > x)`, `E X 1{|X| ≤ x}`, `E X² 1{|X| ≤ x}`
//! and `E X² 1{|X| > x}`. [`FiniteLaw`] provides them exactly for a list of
//! atoms; [`crate::gauss_cf::DigitLaw`] for the infinite digit law.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailStats {
    pub x: f64,
    /// `P(|X| > x)`.
    pub tail_prob: f64,
    /// `E X 1{|X| ≤ x}`.
    pub trunc_mean: f64,
    /// `E X² 1{|X| ≤ x}`; this is `H(x)`.
    pub trunc_second: f64,
    /// `E X² 1{|X| > x}`, infinite for laws without a second moment.
    pub upper_second: f64,
}

impl TailStats {
    /// `E (X - E X 1{|X| ≤ x})² 1{|X| ≤ x}`.
    pub fn centered_trunc_second(&self) -> f64 {
        let m = self.trunc_mean;
        self.trunc_second - m * m * (1.0 + self.tail_prob)
    }
}

pub trait RealLaw: Sync {
    /// Truncated moments at each `x`; `xs` must be ascending.
    fn tail_stats(&self, xs: &[f64]) -> Vec<TailStats>;

    fn mean(&self) -> f64;

    /// `E X²`, possibly infinite.
    fn second_moment(&self) -> f64;

    fn stats_at(&self, x: f64) -> TailStats {
        self.tail_stats(&[x])[0]
    }

    fn has_finite_variance(&self) -> bool {
        self.second_moment().is_finite()
    }

    /// The atoms, for laws with finitely many.
    fn as_finite(&self) -> Option<&FiniteLaw> {
        None
    }
}

/// `b_n = sup {x : n H(x) ≥ x²}`.
///
/// A doubling grid from `x = 1e-6` is walked until `n H(x) ≤ x²/4` and
/// `n P(|X| > x) < 1/2`; past such a point `n H(y) < y²` for every `y > x`.
/// The last grid interval with an upcrossing is then bisected to relative
/// width 1e-13.
pub fn norming_constant(law: &dyn RealLaw, n: usize) -> f64 {
    let n = n as f64;
    let below = |x: f64| n * law.stats_at(x).trunc_second <= x * x;
    let mut x = 1e-6;
    let mut last_above = None;
    loop {
        let s = law.stats_at(x);
        let r = n * s.trunc_second / (x * x);
        if r > 1.0 {
            last_above = Some(x);
        } else if r <= 0.25 && n * s.tail_prob < 0.5 {
            break;
        }
        x *= 2.0;
    }
    let Some(mut lo) = last_above else {
        return 0.0;
    };
    let mut hi = 2.0 * lo;
    while hi - lo > 1e-13 * hi {
        let mid = 0.5 * (lo + hi);
        if below(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Finitely many atoms `(value, probability)`, sorted by `|value|`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiniteLaw {
    atoms: Vec<(f64, f64)>,
}

impl FiniteLaw {
    pub fn new(values: &[f64], probs: &[f64]) -> Result<Self> {
        if values.len() != probs.len() || values.is_empty() {
            return Err(Error::Dimension(format!(
                "{} values against {} probabilities",
                values.len(),
                probs.len()
            )));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Malformed(vec!["law: invalid atom".into()]));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Malformed(vec![format!("law: total mass {total} ≠ 1")]));
        }
        let mut atoms: Vec<(f64, f64)> = values
            .iter()
            .zip(probs)
            .filter(|(_, p)| **p > 0.0)
            .map(|(v, p)| (*v, *p))
            .collect();
        atoms.sort_by(|a, b| a.0.abs().total_cmp(&b.0.abs()).then(a.0.total_cmp(&b.0)));
        Ok(Self { atoms })
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.atoms.iter().map(|(v, p)| p * (v - m) * (v - m)).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.atoms.last().map_or(0.0, |a| a.0.abs())
    }

    /// The same law shifted to mean zero.
    pub fn centered(&self) -> Self {
        let m = self.mean();
        let mut atoms: Vec<_> = self.atoms.iter().map(|(v, p)| (v - m, *p)).collect();
        atoms.sort_by(|a, b| a.0.abs().total_cmp(&b.0.abs()).then(a.0.total_cmp(&b.0)));
        Self { atoms }
    }

    /// Law of `X - X*` with `X*` an independent copy: the self-convolution
    /// with the reflected law.
    pub fn symmetrized(&self) -> Self {
        let mut atoms = Vec::with_capacity(self.atoms.len() * self.atoms.len());
        for &(v, p) in &self.atoms {
            for &(w, q) in &self.atoms {
                atoms.push((v - w, p * q));
            }
        }
        atoms.sort_by(|a, b| a.0.abs().total_cmp(&b.0.abs()).then(a.0.total_cmp(&b.0)));
        Self { atoms }
    }
}

impl RealLaw for FiniteLaw {
    fn tail_stats(&self, xs: &[f64]) -> Vec<TailStats> {
        xs.iter()
            .map(|&x| {
                let mut s = TailStats {
                    x,
                    tail_prob: 0.0,
                    trunc_mean: 0.0,
                    trunc_second: 0.0,
                    upper_second: 0.0,
                };
                for &(v, p) in &self.atoms {
                    if v.abs() <= x {
                        s.trunc_mean += p * v;
                        s.trunc_second += p * v * v;
                    } else {
                        s.tail_prob += p;
                        s.upper_second += p * v * v;
                    }
                }
                s
            })
            .collect()
    }

    fn mean(&self) -> f64 {
        self.atoms.iter().map(|(v, p)| v * p).sum()
    }

    fn second_moment(&self) -> f64 {
        self.atoms.iter().map(|(v, p)| p * v * v).sum()
    }

    fn as_finite(&self) -> Option<&FiniteLaw> {
        Some(self)
    }
}
