//! Continued-fraction digits under the Gauss measure.
//!
//! `x` has density `(ln 2)⁻¹ (1 + x)⁻¹` on `(0, 1)`; its first digit is
//! `⌊1/y⌋` with `y = 2^U - 1`. Iterating the Gauss map `x ↦ 1/x - ⌊1/x⌋` in
//! floating point loses about 3.4 bits per step, so [`GaussDigits`] instead
//! draws each remainder from its exact conditional law given the digits so
//! far. The digit process is then exact in law at any depth.
//!
//! The exact digit law is `P(d = k) = log₂(1 + 1/(k(k+2)))` with
//! `P(d ≥ m) = log₂(1 + 1/m)`.

use std::f64::consts::LN_2;

use rand::RngCore;
use rayon::prelude::*;
use serde::Serialize;

use crate::chain::{doeblin_from_marginals, ChainSpec, StepKernel};
use crate::error::{Error, Result};
use crate::law::{FiniteLaw, RealLaw, TailStats};
use crate::mixing::JointDistribution;
use crate::rng::{open01, Streams};

/// Digits per sample accepted by [`sample_digits`].
pub const MAX_DIGITS: usize = 30;

/// `P(d = k)`.
pub fn digit_probability(k: u64) -> f64 {
    assert!(k >= 1);
    let k = k as f64;
    (1.0 / (k * (k + 2.0))).ln_1p() / LN_2
}

/// `P(d ≥ m)`.
pub fn digit_tail(m: u64) -> f64 {
    assert!(m >= 1);
    (1.0 / m as f64).ln_1p() / LN_2
}

/// Law of the capped digit: states `1..=cap` then the overflow `d > cap`,
/// as 1-based `k`, or `k = cap + 1` for the overflow.
pub fn digit_marginal(k: u64, cap: u64) -> f64 {
    assert!(k >= 1 && k <= cap + 1);
    if k == cap + 1 {
        digit_tail(cap + 1)
    } else {
        digit_probability(k)
    }
}

/// Capped state index, `0..=cap`.
#[inline]
pub fn capped_state(digit: u64, cap: u64) -> usize {
    (digit.min(cap + 1) - 1) as usize
}

/// Gauss-map digits of a Gauss-distributed `x`, revealed one at a time.
///
/// After digits `d₁..d_n` with convergents `p_n/q_n`, the remainder
/// `y = Tⁿx` has density proportional to `1/((1 + s y)(1 + t y))` with
/// `s = q_{n-1}/q_n` and `t = (q_{n-1} + p_{n-1})/(q_n + p_n)`. Each digit is
/// `⌊1/y⌋` for a fresh inverse-transform draw of `y`; `s`, `t` and
/// `δ = t - s` follow `s ↦ 1/(d + s)`, which contracts, so no rounding error
/// builds up along the sequence.
#[derive(Debug, Clone)]
pub struct GaussDigits<R> {
    rng: R,
    s: f64,
    delta: f64,
    /// `(p_{n-1}, p_n, q_{n-1}, q_n)`, rescaled jointly when large.
    convergents: [f64; 4],
}

impl<R: RngCore> GaussDigits<R> {
    pub fn new(rng: R) -> Self {
        Self {
            rng,
            s: 0.0,
            delta: 1.0,
            convergents: [1.0, 0.0, 0.0, 1.0],
        }
    }

    fn remainder(&mut self) -> f64 {
        remainder_quantile(self.s, self.delta, open01(&mut self.rng))
    }

    #[inline]
    pub fn next_digit(&mut self) -> u64 {
        let (s, delta) = (self.s, self.delta);
        let v = open01(&mut self.rng);
        // 1/y for the remainder quantile, one division fewer than via y
        let inv = if delta == 0.0 {
            (1.0 + s - s * v) / v
        } else {
            let r = (v * (delta / (1.0 + s)).ln_1p()).exp_m1();
            (delta - s * r) / r
        };
        let d = (inv.floor() as u64).max(1);
        let df = d as f64;
        self.s = 1.0 / (df + s);
        if delta != 0.0 {
            let next = -delta * self.s / (df + s + delta);
            // see remainder_quantile; |δ| only shrinks from here
            self.delta = if next.abs() < DELTA_FLOOR { 0.0 } else { next };
        }
        let [p0, p1, q0, q1] = self.convergents;
        let mut c = [p1, df * p1 + p0, q1, df * q1 + q0];
        if c[3] > 1e200 {
            c.iter_mut().for_each(|v| *v *= 1e-200);
        }
        self.convergents = c;
        d
    }

    /// A point `x` whose expansion starts with the digits drawn so far,
    /// distributed as `x` given those digits. Consumes one draw.
    pub fn point(&mut self) -> f64 {
        let y = self.remainder();
        let [p0, p1, q0, q1] = self.convergents;
        (p1 + p0 * y) / (q1 + q0 * y)
    }
}

/// Below this `|δ|` the law differs from the `δ = 0` limit by less than
/// `|δ|`, and the general formula would run into subnormals.
const DELTA_FLOOR: f64 = 1e-250;

/// `y` with `P(Y ≤ y) = v` under the density `∝ 1/((1 + s y)(1 + (s + δ) y))`
/// on `(0, 1)`.
fn remainder_quantile(s: f64, delta: f64, v: f64) -> f64 {
    if delta.abs() < DELTA_FLOOR {
        return v / (1.0 + s - s * v);
    }
    let r = (v * (delta / (1.0 + s)).ln_1p()).exp_m1();
    r / (delta - s * r)
}

/// `count` rows of `n_digits` digits, row-major, plus for each row a point
/// `x` with that expansion.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaussSamples {
    pub count: usize,
    pub n_digits: usize,
    pub seed: u64,
    pub x: Vec<f64>,
    pub digits: Vec<u64>,
}

impl GaussSamples {
    pub fn row(&self, i: usize) -> &[u64] {
        &self.digits[i * self.n_digits..(i + 1) * self.n_digits]
    }
}

pub fn sample_digits(count: usize, n_digits: usize, seed: u64) -> Result<GaussSamples> {
    if n_digits == 0 || n_digits > MAX_DIGITS {
        return Err(Error::Parameter(format!(
            "digits per sample must be in 1..={MAX_DIGITS}, got {n_digits}"
        )));
    }
    let streams = Streams::new(seed);
    let mut digits = vec![0u64; count * n_digits];
    let mut x = vec![0.0; count];
    digits
        .par_chunks_mut(n_digits)
        .zip(x.par_iter_mut())
        .enumerate()
        .for_each(|(i, (row, x))| {
            let mut gen = GaussDigits::new(streams.stream(i as u64));
            row.iter_mut().for_each(|d| *d = gen.next_digit());
            *x = gen.point();
        });
    Ok(GaussSamples {
        count,
        n_digits,
        seed,
        x,
        digits,
    })
}

/// Counts of capped digit pairs `(d_j, d_{j+lag})` over all rows.
pub fn empirical_lag_counts(samples: &GaussSamples, cap: u64, lag: usize) -> Vec<Vec<u64>> {
    let size = cap as usize + 1;
    let mut counts = vec![vec![0u64; size]; size];
    for i in 0..samples.count {
        let row = samples.row(i);
        for j in 0..samples.n_digits.saturating_sub(lag) {
            counts[capped_state(row[j], cap)][capped_state(row[j + lag], cap)] += 1;
        }
    }
    counts
}

pub fn empirical_lag_joint(samples: &GaussSamples, cap: u64, lag: usize) -> Result<JointDistribution> {
    let counts = empirical_lag_counts(samples, cap, lag);
    let total: u64 = counts.iter().flatten().sum();
    if total == 0 {
        return Err(Error::Parameter(format!("no digit pairs at lag {lag}")));
    }
    JointDistribution::new(
        counts
            .iter()
            .map(|r| r.iter().map(|&c| c as f64 / total as f64).collect())
            .collect(),
    )
}

/// Extreme ratio `Q̂(x, y)/P̂(y)` with its binomial half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatioEstimate {
    pub value: f64,
    pub half_width: f64,
    /// 1-based capped states; `cap + 1` is the overflow.
    pub from: usize,
    pub to: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DoeblinEstimate {
    pub a: RatioEstimate,
    pub b: RatioEstimate,
    pub gamma: f64,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruncatedDigitChain {
    pub cap: u64,
    pub kernel: Vec<Vec<f64>>,
    /// Empirical law of the second coordinate of the counted pairs.
    pub marginal: Vec<f64>,
    pub pair_counts: Vec<Vec<u64>>,
    pub pairs: u64,
    pub sample_count: usize,
    pub doeblin: DoeblinEstimate,
    pub warnings: Vec<String>,
}

impl TruncatedDigitChain {
    pub fn size(&self) -> usize {
        self.cap as usize + 1
    }

    /// Stationary homogeneous chain started from the empirical marginal.
    pub fn to_chain_spec(&self, observable: Vec<f64>) -> Result<ChainSpec> {
        let kernel = StepKernel::new(self.kernel.clone())?;
        ChainSpec::homogeneous(self.marginal.clone(), kernel, observable)
    }

    /// Exact Doeblin constants of the empirical chain, for comparison.
    pub fn plug_in_doeblin(&self) -> Result<crate::chain::DoeblinBounds> {
        let chain = self.to_chain_spec(vec![0.0; self.size()])?;
        let marginals = chain.marginals(2)?;
        Ok(doeblin_from_marginals(&chain, &marginals))
    }
}

/// Lag-1 kernel of capped digits with Doeblin estimates and `z`-sigma
/// binomial half-widths. A cap that leaves empty cells is lowered until
/// every cell is populated, with a warning.
pub fn empirical_chain(samples: &GaussSamples, cap: u64, z: f64) -> Result<TruncatedDigitChain> {
    if cap == 0 {
        return Err(Error::Parameter("cap must be at least 1".into()));
    }
    let mut warnings = Vec::new();
    let mut cap = cap;
    let counts = loop {
        let counts = empirical_lag_counts(samples, cap, 1);
        if counts.iter().flatten().all(|&c| c > 0) {
            break counts;
        }
        if cap == 1 {
            return Err(Error::Parameter("too few digit pairs for any cap".into()));
        }
        warnings.push(format!("empty transition cells at cap {cap}; pooling more digits"));
        cap -= 1;
    };
    let size = cap as usize + 1;
    let pairs: u64 = counts.iter().flatten().sum();
    let row_totals: Vec<u64> = counts.iter().map(|r| r.iter().sum()).collect();
    let col_totals: Vec<u64> = (0..size).map(|y| counts.iter().map(|r| r[y]).sum()).collect();
    let marginal: Vec<f64> = col_totals.iter().map(|&c| c as f64 / pairs as f64).collect();
    let kernel: Vec<Vec<f64>> = counts
        .iter()
        .zip(&row_totals)
        .map(|(r, &t)| r.iter().map(|&c| c as f64 / t as f64).collect())
        .collect();
    let mut lo: Option<RatioEstimate> = None;
    let mut hi: Option<RatioEstimate> = None;
    for x in 0..size {
        for y in 0..size {
            let q = kernel[x][y];
            let p = marginal[y];
            let value = q / p;
            let rel = ((1.0 - q) / counts[x][y] as f64 + (1.0 - p) / col_totals[y] as f64).sqrt();
            let est = RatioEstimate {
                value,
                half_width: z * value * rel,
                from: x + 1,
                to: y + 1,
            };
            if lo.is_none_or(|l| value < l.value) {
                lo = Some(est);
            }
            if hi.is_none_or(|h| value > h.value) {
                hi = Some(est);
            }
        }
    }
    let (a, b) = (lo.unwrap(), hi.unwrap());
    Ok(TruncatedDigitChain {
        cap,
        kernel,
        marginal,
        pair_counts: counts,
        pairs,
        sample_count: samples.count,
        doeblin: DoeblinEstimate {
            a,
            b,
            gamma: a.value.powi(4) / b.value,
            z,
        },
        warnings,
    })
}

/// `g(k) = (-1)^k √k`.
#[inline]
pub fn alternating_root(k: u64) -> f64 {
    let r = (k as f64).sqrt();
    if k.is_multiple_of(2) {
        r
    } else {
        -r
    }
}

/// Values of `(-1)^k √k` on the capped states (overflow uses `k = cap`),
/// centered by the exact mean under the capped digit law.
pub fn infvar_observable(cap: u64) -> Vec<f64> {
    let mut g: Vec<f64> = (1..=cap).map(alternating_root).collect();
    g.push(alternating_root(cap));
    center_capped(g, cap)
}

/// `√min(k, cap)` on the capped states, centered: a bounded nonlattice
/// digit observable (values `√1, √2, √3` are rationally independent).
pub fn root_observable(cap: u64) -> Vec<f64> {
    let mut g: Vec<f64> = (1..=cap).map(|k| (k as f64).sqrt()).collect();
    g.push((cap as f64).sqrt());
    center_capped(g, cap)
}

fn center_capped(mut g: Vec<f64>, cap: u64) -> Vec<f64> {
    let mean: f64 = g
        .iter()
        .enumerate()
        .map(|(i, v)| v * digit_marginal(i as u64 + 1, cap))
        .sum();
    g.iter_mut().for_each(|v| *v -= mean);
    g
}

/// Capped law of `(-1)^d √min(d, cap)`, centered.
pub fn capped_infvar_law(cap: u64) -> FiniteLaw {
    let values = infvar_observable(cap);
    let probs: Vec<f64> = (1..=cap + 1).map(|k| digit_marginal(k, cap)).collect();
    FiniteLaw::new(&values, &probs).expect("digit law is a probability")
}

/// Exact parity-class prefix sums up to this index; closed forms beyond.
const EXACT_UPTO: u64 = 1 << 18;

/// Law of `X = (-1)^d √d - μ` for a Gauss-distributed digit `d`, with
/// `μ = E (-1)^d √d`. Infinite variance; `H(x) = E X² 1{|X| ≤ x}` grows
/// like `(2/ln 2) ln x`.
#[derive(Debug, Clone)]
pub struct DigitLaw {
    /// `prefix[s][k]`: sum over `j ≤ k` with `j ≡ k (mod 2)` of `p_j j^{s/2}`.
    prefix: [Vec<f64>; 3],
    mean: f64,
}

impl Default for DigitLaw {
    fn default() -> Self {
        Self::new()
    }
}

impl DigitLaw {
    pub fn new() -> Self {
        let len = EXACT_UPTO as usize + 1;
        let mut prefix = [vec![0.0; len], vec![0.0; len], vec![0.0; len]];
        // compensated running sums, one per parity class
        let mut acc = [[(0.0f64, 0.0f64); 2]; 3];
        for k in 1..len {
            let p = digit_probability(k as u64);
            let kf = k as f64;
            let terms = [p, p * kf.sqrt(), p * kf];
            for (s, &t) in terms.iter().enumerate() {
                let (sum, comp) = &mut acc[s][k % 2];
                let next = *sum + t;
                *comp += if sum.abs() >= t.abs() {
                    (*sum - next) + t
                } else {
                    (t - next) + *sum
                };
                *sum = next;
                prefix[s][k] = *sum + *comp;
            }
        }
        let mut law = Self { prefix, mean: 0.0 };
        law.mean = law.class_sum(1, 2, None) - law.class_sum(1, 1, None);
        law
    }

    /// `μ = E (-1)^d √d`.
    pub fn raw_mean(&self) -> f64 {
        self.mean
    }

    /// `Σ p_k k^{s/2}` over `k ≡ a (mod 2)` with `a ≤ k ≤ b` (`b = None`
    /// for no upper end; `s = 2` needs one). `a ≥ 1`.
    fn class_sum(&self, s: usize, a: u64, b: Option<u64>) -> f64 {
        let b = match b {
            Some(b) if b < a => return 0.0,
            Some(b) => Some(b - (b - a) % 2),
            None => None,
        };
        let mut total = 0.0;
        if a <= EXACT_UPTO {
            let top = b.unwrap_or(u64::MAX).min(EXACT_UPTO - (EXACT_UPTO - a) % 2);
            total += self.prefix[s][top as usize] - if a >= 3 { self.prefix[s][a as usize - 2] } else { 0.0 };
        }
        let first = if a > EXACT_UPTO {
            a
        } else {
            EXACT_UPTO + 1 + (EXACT_UPTO + 1 + a) % 2
        };
        if b.is_none_or(|b| b >= first) {
            total += analytic_class_sum(s, first as f64, b.map(|b| b as f64));
        }
        total
    }

    /// Inside `|X| ≤ x`, per parity: `(Σp, Σ p g, Σ p k)`.
    fn inside(&self, x: f64) -> (f64, f64, f64) {
        let mu = self.mean;
        let mut out = (0.0, 0.0, 0.0);
        for (parity, lo, hi, sign) in [(0u64, mu - x, mu + x, 1.0), (1u64, -x - mu, x - mu, -1.0)] {
            let Some((a, b)) = root_range(lo, hi, parity) else {
                continue;
            };
            out.0 += self.class_sum(0, a, Some(b));
            out.1 += sign * self.class_sum(1, a, Some(b));
            out.2 += self.class_sum(2, a, Some(b));
        }
        out
    }
}

/// Integers `k ≥ 1` with `k ≡ parity (mod 2)` and `lo ≤ √k ≤ hi`, as the
/// smallest and largest such `k`.
fn root_range(lo: f64, hi: f64, parity: u64) -> Option<(u64, u64)> {
    if hi < 1.0 {
        return None;
    }
    const HUGE: f64 = 4e18;
    let mut b = (hi * hi).min(HUGE).floor() as u64;
    while b > 0 && (b as f64).sqrt() > hi {
        b -= 1;
    }
    while (b as f64) < HUGE && ((b + 1) as f64).sqrt() <= hi {
        b += 1;
    }
    let mut a = if lo <= 1.0 {
        1
    } else {
        (lo * lo).min(HUGE).ceil() as u64
    };
    while a > 1 && ((a - 1) as f64).sqrt() >= lo {
        a -= 1;
    }
    while (a as f64).sqrt() < lo {
        a += 1;
    }
    if a % 2 != parity {
        a += 1;
    }
    if b % 2 != parity {
        b = b.checked_sub(1)?;
    }
    (a >= 1 && a <= b).then_some((a, b))
}

/// `Σ_{k = a, a+2, ..., ≤ b} p_k k^{s/2}` for `a > 2^18`, using
/// `p_k = (u - u²/2)/ln 2` with `u = 1/(k(k+2))` (relative error below `1/k³`).
fn analytic_class_sum(s: usize, a: f64, b: Option<f64>) -> f64 {
    // second term of ln(1 + u), u = 1/(k(k+2)) ≈ k⁻²
    let correction = -0.5 * step2_power_sum(4.0 - s as f64 / 2.0, a, b) / LN_2;
    correction
        + match s {
            0 => (1.0 / a - b.map_or(0.0, |b| 1.0 / (b + 2.0))) / (2.0 * LN_2),
            1 => {
                // k^{-1/2}/(k+2) = k^{-3/2} - 2k^{-5/2} + 4k^{-7/2} - 8k^{-9/2} + ...
                let mut total = 0.0;
                for (i, c) in [1.0, -2.0, 4.0, -8.0].iter().enumerate() {
                    let alpha = 1.5 + i as f64;
                    total += c * step2_power_sum(alpha, a, b);
                }
                total / LN_2
            }
            2 => {
                let b = b.expect("second moment tail diverges");
                // Σ 1/(k+2) over k = a, a+2, ..., b
                let q = (a + 2.0) / 2.0;
                let terms = (b - a) / 2.0 + 1.0;
                0.5 * digamma_difference(q, terms) / LN_2
            }
            _ => unreachable!(),
        }
}

/// `Σ_{k = a, a+2, ..., ≤ b} k^{-α}` via `2^{-α} ζ(α, a/2)`.
fn step2_power_sum(alpha: f64, a: f64, b: Option<f64>) -> f64 {
    let tail = |start: f64| 2f64.powf(-alpha) * hurwitz_large(alpha, start / 2.0);
    tail(a) - b.map_or(0.0, |b| tail(b + 2.0))
}

/// `ζ(α, q)` for large `q` (Euler–Maclaurin).
fn hurwitz_large(alpha: f64, q: f64) -> f64 {
    q.powf(1.0 - alpha) / (alpha - 1.0) + 0.5 * q.powf(-alpha) + alpha * q.powf(-alpha - 1.0) / 12.0
        - alpha * (alpha + 1.0) * (alpha + 2.0) * q.powf(-alpha - 3.0) / 720.0
}

/// `ψ(q + m) - ψ(q)` for large `q`, without cancelling the leading logs.
fn digamma_difference(q: f64, m: f64) -> f64 {
    let tail = |z: f64| {
        let z2 = z * z;
        -0.5 / z - 1.0 / (12.0 * z2) + 1.0 / (120.0 * z2 * z2) - 1.0 / (252.0 * z2 * z2 * z2)
    };
    (m / q).ln_1p() + (tail(q + m) - tail(q))
}

impl RealLaw for DigitLaw {
    fn tail_stats(&self, xs: &[f64]) -> Vec<TailStats> {
        let mu = self.mean;
        xs.iter()
            .map(|&x| {
                let (p, g, k) = self.inside(x);
                TailStats {
                    x,
                    tail_prob: (1.0 - p).max(0.0),
                    trunc_mean: g - mu * p,
                    trunc_second: k - 2.0 * mu * g + mu * mu * p,
                    upper_second: f64::INFINITY,
                }
            })
            .collect()
    }

    fn mean(&self) -> f64 {
        0.0
    }

    fn second_moment(&self) -> f64 {
        f64::INFINITY
    }
}
