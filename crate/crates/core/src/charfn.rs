//! Characteristic functions of additive functionals through twisted
//! transfer operators.
//!
//! `T_{u,k} h(x) = Σ_y h(y) e^{iu x_k(y)} Q_k(x, y)` is the conditional
//! expectation `E[h(ξ_k) e^{iuX_k} | ξ_{k-1} = x]`, so composing them from
//! the right computes `E e^{iuS_n}` exactly. Pair products `T_{k-1} ∘ T_k`
//! contract in sup norm at a rate controlled by `γ = a⁴/b`, which yields
//!
//! ```text
//! |E e^{iuS_n}|⁴ ≤ Π_{j=1..n} [1 - (γ/2)(1 - |f_j(u)|²)]
//! ‖T_{k-1} ∘ T_k‖² ≤ 1 - (γ/2)(1 - |f_{k-1}(u)|²)
//! ```
//!
//! [`nagaev_bound`] evaluates both sides and records every violation.

use num_complex::Complex64;
use serde::Serialize;

use crate::chain::{doeblin_from_marginals, ChainSpec, DoeblinBounds, MarginalSequence, ObservableTable};
use crate::error::{Error, Result};

/// Slack allowed on the bound inequalities.
pub const INEQ_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CharFnValue {
    pub u: f64,
    pub re: f64,
    pub im: f64,
}

impl CharFnValue {
    fn new(u: f64, z: Complex64) -> Self {
        Self { u, re: z.re, im: z.im }
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }

    pub fn abs(&self) -> f64 {
        self.value().norm()
    }
}

/// Dense complex square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    size: usize,
    entries: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn from_fn(size: usize, f: impl Fn(usize, usize) -> Complex64) -> Self {
        let entries = (0..size * size).map(|i| f(i / size, i % size)).collect();
        Self { size, entries }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, x: usize, y: usize) -> Complex64 {
        self.entries[x * self.size + y]
    }

    pub fn row(&self, x: usize) -> &[Complex64] {
        &self.entries[x * self.size..(x + 1) * self.size]
    }

    pub fn mul(&self, other: &ComplexMatrix) -> ComplexMatrix {
        let n = self.size;
        let mut entries = vec![Complex64::new(0.0, 0.0); n * n];
        for x in 0..n {
            for (y, &a) in self.row(x).iter().enumerate() {
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for (out, &b) in entries[x * n..(x + 1) * n].iter_mut().zip(other.row(y)) {
                    *out += a * b;
                }
            }
        }
        ComplexMatrix { size: n, entries }
    }

    pub fn apply(&self, h: &[Complex64]) -> Vec<Complex64> {
        (0..self.size)
            .map(|x| self.row(x).iter().zip(h).map(|(a, b)| a * b).sum())
            .collect()
    }
}

/// `M(x, y) = e^{iu x_k(y)} Q_k(x, y)` together with the rows that carry
/// conditioning mass.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferMatrix {
    pub u: f64,
    pub k: usize,
    pub matrix: ComplexMatrix,
    /// `P_{k-1}(x) > 0`; all rows for the virtual step `k = 1`.
    pub live_rows: Vec<bool>,
}

/// Operator norm on bounded functions: the largest absolute row sum over
/// rows whose mask entry is set (all rows when `live_rows` is `None`).
pub fn sup_norm(matrix: &ComplexMatrix, live_rows: Option<&[bool]>) -> f64 {
    (0..matrix.size())
        .filter(|&x| live_rows.is_none_or(|m| m[x]))
        .map(|x| matrix.row(x).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Everything needed to evaluate characteristic functions of one chain up to
/// horizon `n` at many frequencies.
#[derive(Debug, Clone)]
pub struct CharFnProfile<'a> {
    chain: &'a ChainSpec,
    n: usize,
    marginals: MarginalSequence,
    table: ObservableTable,
    doeblin: DoeblinBounds,
}

impl<'a> CharFnProfile<'a> {
    pub fn new(chain: &'a ChainSpec, n: usize) -> Result<Self> {
        let marginals = chain.marginals(n)?;
        let table = chain.observable_table(&marginals);
        let doeblin = doeblin_from_marginals(chain, &marginals);
        Ok(Self {
            chain,
            n,
            marginals,
            table,
            doeblin,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn doeblin(&self) -> &DoeblinBounds {
        &self.doeblin
    }

    pub fn marginals(&self) -> &MarginalSequence {
        &self.marginals
    }

    pub fn table(&self) -> &ObservableTable {
        &self.table
    }

    /// `f_k(u) = Σ_y P_k(y) e^{iu x_k(y)}`.
    pub fn step(&self, k: usize, u: f64) -> Complex64 {
        self.marginals
            .get(k)
            .iter()
            .zip(self.table.step(k))
            .map(|(&p, &x)| Complex64::from_polar(p, u * x))
            .sum()
    }

    pub fn transfer(&self, k: usize, u: f64) -> TransferMatrix {
        let size = self.chain.size();
        let phases: Vec<Complex64> = self
            .table
            .step(k)
            .iter()
            .map(|&x| Complex64::from_polar(1.0, u * x))
            .collect();
        let tol = self.chain.zero_tol();
        let (matrix, live_rows) = if k == 1 {
            let p1 = self.chain.initial();
            (ComplexMatrix::from_fn(size, |_, y| phases[y] * p1[y]), vec![true; size])
        } else {
            let q = self.chain.kernel(k);
            (
                ComplexMatrix::from_fn(size, |x, y| phases[y] * q.get(x, y)),
                self.marginals.get(k - 1).iter().map(|&p| p > tol).collect(),
            )
        };
        TransferMatrix {
            u,
            k,
            matrix,
            live_rows,
        }
    }

    /// `φ_n(u) = E e^{iuS_n}` by right-to-left matrix-vector products.
    pub fn joint(&self, u: f64) -> Complex64 {
        let size = self.chain.size();
        let mut v = vec![Complex64::new(1.0, 0.0); size];
        for k in (2..=self.n).rev() {
            let q = self.chain.kernel(k);
            let weighted: Vec<Complex64> = self
                .table
                .step(k)
                .iter()
                .zip(&v)
                .map(|(&x, &h)| h * Complex64::from_polar(1.0, u * x))
                .collect();
            v = (0..size)
                .map(|x| q.row(x).iter().zip(&weighted).map(|(&p, &w)| w * p).sum())
                .collect();
        }
        self.chain
            .initial()
            .iter()
            .zip(self.table.step(1))
            .zip(&v)
            .map(|((&p, &x), &h)| h * Complex64::from_polar(p, u * x))
            .sum()
    }

    /// `‖T_{k-1} ∘ T_k‖` for `k ≥ 2`, over rows with `P_{k-2}(x) > 0`.
    pub fn pair_norm(&self, k: usize, u: f64) -> f64 {
        assert!(k >= 2);
        let first = self.transfer(k - 1, u);
        let second = self.transfer(k, u);
        sup_norm(&first.matrix.mul(&second.matrix), Some(&first.live_rows))
    }

    pub fn bound(&self, u: f64) -> Result<BoundReport> {
        let gamma = self.doeblin.require_gamma()?;
        Ok(self.bound_with_gamma(u, gamma))
    }

    /// Both inequalities evaluated with a caller-supplied `γ`.
    pub fn bound_with_gamma(&self, u: f64, gamma: f64) -> BoundReport {
        let step_abs_sq: Vec<f64> = (1..=self.n).map(|k| self.step(k, u).norm_sqr()).collect();
        let factor = |s: f64| 1.0 - 0.5 * gamma * (1.0 - s);
        let product_bound = step_abs_sq.iter().map(|&s| factor(s)).product();
        let deficit: f64 = step_abs_sq.iter().map(|s| 1.0 - s).sum();
        let phi = self.joint(u);
        let exact_abs4 = phi.norm_sqr().powi(2);
        let mut violations = Vec::new();
        if exact_abs4 > product_bound + INEQ_TOL {
            violations.push(BoundViolation {
                u,
                k: None,
                lhs: exact_abs4,
                rhs: product_bound,
            });
        }
        let mut pair_norms_sq = Vec::with_capacity(self.n.saturating_sub(1));
        let mut pair_bounds = Vec::with_capacity(self.n.saturating_sub(1));
        for k in 2..=self.n {
            let norm = self.pair_norm(k, u);
            let lhs = norm * norm;
            let rhs = factor(step_abs_sq[k - 2]);
            if lhs > rhs + INEQ_TOL {
                violations.push(BoundViolation {
                    u,
                    k: Some(k),
                    lhs,
                    rhs,
                });
            }
            pair_norms_sq.push(lhs);
            pair_bounds.push(rhs);
        }
        BoundReport {
            u,
            gamma,
            phi: CharFnValue::new(u, phi),
            exact_abs4,
            product_bound,
            exp_relaxation: (-(gamma / 8.0) * deficit).exp(),
            step_abs_sq,
            pair_norms_sq,
            pair_bounds,
            violations,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundViolation {
    pub u: f64,
    /// `None` for the product bound, `Some(k)` for the pair `(k-1, k)`.
    pub k: Option<usize>,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub u: f64,
    pub gamma: f64,
    pub phi: CharFnValue,
    /// `|φ_n(u)|⁴`.
    pub exact_abs4: f64,
    /// `Π_j [1 - (γ/2)(1 - |f_j(u)|²)]`.
    pub product_bound: f64,
    /// `exp(-(γ/8) Σ_j (1 - |f_j(u)|²))`, which dominates `|φ_n(u)|`.
    pub exp_relaxation: f64,
    /// `|f_j(u)|²`, j = 1..n.
    pub step_abs_sq: Vec<f64>,
    /// `‖T_{k-1} ∘ T_k‖²`, k = 2..n.
    pub pair_norms_sq: Vec<f64>,
    /// `1 - (γ/2)(1 - |f_{k-1}(u)|²)`, k = 2..n.
    pub pair_bounds: Vec<f64>,
    pub violations: Vec<BoundViolation>,
}

impl BoundReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn step_charfn(chain: &ChainSpec, k: usize, u: f64) -> Result<CharFnValue> {
    let profile = CharFnProfile::new(chain, k)?;
    Ok(CharFnValue::new(u, profile.step(k, u)))
}

pub fn transfer_matrix(chain: &ChainSpec, k: usize, u: f64) -> Result<TransferMatrix> {
    if k == 0 {
        return Err(Error::OutOfRange("steps start at 1".into()));
    }
    Ok(CharFnProfile::new(chain, k)?.transfer(k, u))
}

pub fn exact_charfn(chain: &ChainSpec, n: usize, u: f64) -> Result<CharFnValue> {
    Ok(CharFnValue::new(u, CharFnProfile::new(chain, n)?.joint(u)))
}

pub fn nagaev_bound(chain: &ChainSpec, n: usize, u: f64) -> Result<BoundReport> {
    CharFnProfile::new(chain, n)?.bound(u)
}
