use serde::Serialize;

use super::spec::{ChainSpec, MarginalSequence};
use crate::error::{Error, Result};

/// Position `(k, x, y)` of an extremal ratio `Q_k(x, y) / P_k(y)`.
pub type RatioSite = (usize, usize, usize);

/// Constants `a ≤ Q_k(x, A) / P_k(A) ≤ b` of the two-sided Doeblin condition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DoeblinBounds {
    pub a: f64,
    pub b: f64,
    /// `a⁴ / b`, zero when the condition fails.
    pub gamma: f64,
    pub min_at: Option<RatioSite>,
    pub max_at: Option<RatioSite>,
}

impl DoeblinBounds {
    pub fn holds(&self) -> bool {
        self.a > 0.0 && self.b.is_finite()
    }

    /// `gamma`, or an error when every bound built on it would be vacuous.
    pub fn require_gamma(&self) -> Result<f64> {
        if self.holds() && self.gamma > 0.0 {
            Ok(self.gamma)
        } else {
            Err(Error::DoeblinFails(format!(
                "a = {}, b = {} (minimum at {:?}, maximum at {:?})",
                self.a, self.b, self.min_at, self.max_at
            )))
        }
    }

    /// `[a/(2-a), (2-a)/a]`, the range of `σ_n² / τ_n²`.
    pub fn variance_sandwich(&self) -> (f64, f64) {
        (self.a / (2.0 - self.a), (2.0 - self.a) / self.a)
    }
}

/// Extremal singleton ratios over steps `2..=n`.
///
/// Only pairs with `P_{k-1}(x) > 0` and `P_k(y) > 0` count. Restricting to
/// singletons loses nothing: `Q_k(x, A) / P_k(A)` is a mediant of the
/// singleton ratios inside `A`. The virtual step 1 has constants `1, 1`.
pub fn doeblin_bounds(chain: &ChainSpec, n: usize) -> Result<DoeblinBounds> {
    let marginals = chain.marginals(n)?;
    Ok(doeblin_from_marginals(chain, &marginals))
}

pub fn doeblin_from_marginals(chain: &ChainSpec, marginals: &MarginalSequence) -> DoeblinBounds {
    let tol = chain.zero_tol();
    let mut a = 1.0_f64;
    let mut b = 1.0_f64;
    let mut min_at = None;
    let mut max_at = None;
    for k in 2..=marginals.len() {
        let prev = marginals.get(k - 1);
        let cur = marginals.get(k);
        let q = chain.kernel(k);
        for (x, &px) in prev.iter().enumerate() {
            if px <= tol {
                continue;
            }
            for (y, &py) in cur.iter().enumerate() {
                let qxy = q.get(x, y);
                let ratio = if py <= tol {
                    if qxy <= tol {
                        continue;
                    }
                    f64::INFINITY
                } else {
                    qxy / py
                };
                if ratio < a {
                    a = ratio;
                    min_at = Some((k, x, y));
                }
                if ratio > b {
                    b = ratio;
                    max_at = Some((k, x, y));
                }
            }
        }
    }
    if !b.is_finite() {
        a = 0.0;
    }
    let gamma = if a > 0.0 && b.is_finite() { a.powi(4) / b } else { 0.0 };
    DoeblinBounds {
        a,
        b,
        gamma,
        min_at,
        max_at,
    }
}
