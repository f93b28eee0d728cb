use serde::Serialize;

use crate::chain::{exact_moments, ChainSpec, PathSampler};
use crate::error::{Error, Result};
use crate::gauss_cf::{alternating_root, DigitLaw, GaussDigits};
use crate::law::norming_constant;
use crate::rng::{par_blocks, Streams};

/// A moving-average filter `Y_k = Σ_{i≥1} a_i X_{k+i}`, known through a
/// finite list `a_1..a_L` plus a bound on `Σ_{i>L} |a_i|`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearProcessSpec {
    pub coefficients: Vec<f64>,
    pub tail_bound: f64,
    /// `K_n`; coefficients past it are dropped.
    pub truncation: usize,
}

impl LinearProcessSpec {
    pub fn new(coefficients: Vec<f64>, tail_bound: f64, truncation: usize) -> Result<Self> {
        if coefficients.is_empty() || coefficients.iter().any(|a| !a.is_finite()) {
            return Err(Error::Parameter("need a finite, nonempty coefficient list".into()));
        }
        if !(tail_bound >= 0.0) {
            return Err(Error::Parameter(format!(
                "tail bound must be nonnegative, got {tail_bound}"
            )));
        }
        if truncation == 0 {
            return Err(Error::Parameter("truncation K_n must be positive".into()));
        }
        Ok(Self {
            coefficients,
            tail_bound,
            truncation,
        })
    }

    /// `a_i = r^i` while `r^i` is a normal float, `K_n = truncation`.
    pub fn geometric(ratio: f64, truncation: usize) -> Result<Self> {
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(Error::Parameter(format!("ratio must lie in (0, 1), got {ratio}")));
        }
        // subnormal r^i can round back to itself and never reach zero
        let coefficients: Vec<f64> = std::iter::successors(Some(ratio), |a| Some(a * ratio))
            .take_while(|&a| a >= f64::MIN_POSITIVE)
            .collect();
        let last = *coefficients.last().unwrap();
        Self::new(coefficients, last * ratio / (1.0 - ratio), truncation)
    }

    fn kept(&self) -> &[f64] {
        &self.coefficients[..self.coefficients.len().min(self.truncation)]
    }

    /// `A_j = a_1 + ... + a_j` over the kept coefficients.
    pub fn partials(&self) -> Vec<f64> {
        self.kept()
            .iter()
            .scan(0.0, |acc, a| {
                *acc += a;
                Some(*acc)
            })
            .collect()
    }

    pub fn limit(&self) -> f64 {
        *self.partials().last().unwrap()
    }

    /// `inf_j |A_j|`.
    pub fn min_partial(&self) -> f64 {
        self.partials().iter().fold(f64::INFINITY, |m, a| m.min(a.abs()))
    }

    /// Mass not represented by the kept coefficients.
    pub fn dropped_mass(&self) -> f64 {
        self.tail_bound
            + self.coefficients[self.kept().len()..]
                .iter()
                .map(|a| a.abs())
                .sum::<f64>()
    }

    /// `b_{n,i}` for `i = 1..=n + K_n`, cut after the last nonzero entry:
    /// `b_{n,1} = 0`, `b_{n,i} = A_{i-1}` for `2 ≤ i ≤ n` and
    /// `A_{i-1} - A_{i-n-1}` beyond, with `A_j = A_L` for `j ≥ L`.
    pub fn sum_coefficients(&self, n: usize) -> Vec<f64> {
        let partials = self.partials();
        let big_a = |j: usize| -> f64 {
            if j == 0 {
                0.0
            } else {
                partials[(j - 1).min(partials.len() - 1)]
            }
        };
        let horizon = n + partials.len().min(self.truncation);
        let mut b: Vec<f64> = (1..=horizon)
            .map(|i| match i {
                1 => 0.0,
                i if i <= n => big_a(i - 1),
                i => big_a(i - 1) - big_a(i - n - 1),
            })
            .collect();
        while b.len() > 1 && *b.last().unwrap() == 0.0 {
            b.pop();
        }
        b
    }
}

/// How the summands are formed.
#[derive(Debug, Clone, PartialEq)]
pub enum SumMode {
    Plain,
    /// `S_n = Σ a_k X_k` with `a_k = weights[(k - 1) mod len]`, each required
    /// to satisfy `m ≤ |a_k| ≤ M`.
    Weighted {
        weights: Vec<f64>,
        bounds: (f64, f64),
    },
    Linear(LinearProcessSpec),
}

impl SumMode {
    fn label(&self) -> &'static str {
        match self {
            SumMode::Plain => "plain",
            SumMode::Weighted { .. } => "weighted",
            SumMode::Linear(_) => "linear",
        }
    }
}

/// Which constant divides `S_n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NormingKind {
    /// Exact `σ_n = (E S_n²)^{1/2}`.
    Sigma,
    /// `v_n |A|` with `v_n² = E (X_1 + ... + X_n)²` (linear mode).
    VnTimesLimit,
    /// `b_n = sup {x : n H(x) ≥ x²}` (infinite variance).
    Constructed,
    /// Supplied with synthetic draws.
    Given,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormingValue {
    pub kind: NormingKind,
    pub value: f64,
}

/// Monte Carlo draws of `S_n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SumSamples {
    #[serde(skip)]
    pub values: Vec<f64>,
    pub n: usize,
    /// `plain`, `weighted`, `linear`, `infvar` or `synthetic`.
    pub mode: String,
    pub norming: NormingValue,
    /// Other normings computed alongside (linear mode reports both).
    pub alternatives: Vec<NormingValue>,
    pub seed: u64,
    /// Steps simulated per path.
    pub horizon: usize,
    pub warnings: Vec<String>,
}

impl SumSamples {
    /// Wrap externally generated draws, e.g. exact normals for estimator checks.
    pub fn from_draws(values: Vec<f64>, norming: f64) -> Result<Self> {
        if !(norming > 0.0 && norming.is_finite()) {
            return Err(Error::Parameter(format!("norming must be positive, got {norming}")));
        }
        if values.is_empty() {
            return Err(Error::Parameter("no draws".into()));
        }
        Ok(Self {
            values,
            n: 0,
            mode: "synthetic".into(),
            norming: NormingValue {
                kind: NormingKind::Given,
                value: norming,
            },
            alternatives: Vec::new(),
            seed: 0,
            horizon: 0,
            warnings: Vec::new(),
        })
    }

    pub fn count(&self) -> usize {
        self.values.len()
    }

    /// Swap in one of the alternative normings.
    pub fn with_norming(mut self, kind: NormingKind) -> Result<Self> {
        if self.norming.kind == kind {
            return Ok(self);
        }
        let i = self
            .alternatives
            .iter()
            .position(|v| v.kind == kind)
            .ok_or_else(|| Error::Parameter(format!("no {kind:?} norming computed for these samples")))?;
        std::mem::swap(&mut self.norming, &mut self.alternatives[i]);
        Ok(self)
    }

    /// `(mean, standard error)` of the draws.
    pub fn mean_and_stderr(&self) -> (f64, f64) {
        let n = self.values.len() as f64;
        let mean = self.values.iter().sum::<f64>() / n;
        let var = self.values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
        (mean, (var / n).sqrt())
    }
}

/// Additive functional `Σ_k values[(k-1)·size + ξ_k]` along `count` paths.
fn path_sums(chain: &ChainSpec, n: usize, count: usize, seed: u64) -> Result<Vec<f64>> {
    let marginals = chain.marginals(n)?;
    let table = chain.observable_table(&marginals);
    let sampler = PathSampler::new(chain, n, seed)?;
    let size = chain.size();
    let flat = table.as_flat();
    Ok(par_blocks(count as u64, |r| {
        r.map(|i| sampler.additive(i, size, flat)).collect::<Vec<_>>()
    })
    .concat())
}

fn sigma(chain: &ChainSpec, n: usize) -> Result<f64> {
    let s = exact_moments(chain, n)?.sigma();
    if !(s > 0.0) {
        return Err(Error::Degenerate(format!("σ_n = 0 at n = {n}")));
    }
    Ok(s)
}

/// Draws of `S_n` for `count` seeded paths.
pub fn build_sums(chain: &ChainSpec, n: usize, count: usize, seed: u64, mode: &SumMode) -> Result<SumSamples> {
    if n == 0 || count < 2 {
        return Err(Error::Parameter("need n ≥ 1 and at least two paths".into()));
    }
    let mut warnings = Vec::new();
    let mut alternatives = Vec::new();
    let (summed, horizon) = match mode {
        SumMode::Plain => (chain.clone(), n),
        SumMode::Weighted { weights, bounds } => {
            let (m, big_m) = *bounds;
            if !(0.0 < m && m <= big_m) {
                return Err(Error::Parameter(format!(
                    "weight bounds need 0 < m ≤ M, got ({m}, {big_m})"
                )));
            }
            if weights.is_empty() {
                return Err(Error::Parameter("empty weight list".into()));
            }
            if let Some((k, w)) = weights
                .iter()
                .enumerate()
                .find(|(_, w)| !(m <= w.abs() && w.abs() <= big_m))
            {
                return Err(Error::Parameter(format!(
                    "weight {w} at position {} outside [{m}, {big_m}]",
                    k + 1
                )));
            }
            let full: Vec<f64> = weights.iter().copied().cycle().take(n).collect();
            (chain.with_weights(&full)?, n)
        }
        SumMode::Linear(lp) => {
            if lp.truncation < n {
                return Err(Error::Parameter(format!(
                    "truncation K_n = {} is below n = {n}",
                    lp.truncation
                )));
            }
            let m = lp.min_partial();
            if !(m > 0.0) {
                return Err(Error::Parameter("linear mode needs inf_j |A_j| > 0".into()));
            }
            let tail = (n as f64).powf(1.5) * lp.dropped_mass();
            if tail > 1e-6 {
                warnings.push(format!("n^(3/2) times the dropped coefficient mass is {tail:.3e}"));
            }
            let b = lp.sum_coefficients(n);
            let v_n = sigma(chain, n)?;
            alternatives.push(NormingValue {
                kind: NormingKind::VnTimesLimit,
                value: v_n * lp.limit().abs(),
            });
            let horizon = b.len();
            (chain.with_weights(&b)?, horizon)
        }
    };
    let norming = NormingValue {
        kind: NormingKind::Sigma,
        value: sigma(&summed, horizon)?,
    };
    let values = path_sums(&summed, horizon, count, seed)?;
    Ok(SumSamples {
        values,
        n,
        mode: mode.label().into(),
        norming,
        alternatives,
        seed,
        horizon,
        warnings,
    })
}

/// Draws of `S_n = Σ_{k≤n} ((-1)^{d_k} √d_k - μ)` over Gauss-distributed
/// digit sequences, normed by the constructed `b_n` of the digit law.
pub fn build_digit_sums(law: &DigitLaw, n: usize, count: usize, seed: u64) -> Result<SumSamples> {
    if n == 0 || count < 2 {
        return Err(Error::Parameter("need n ≥ 1 and at least two paths".into()));
    }
    let mu = law.raw_mean();
    let streams = Streams::new(seed);
    let values = par_blocks(count as u64, |r| {
        r.map(|i| {
            let mut digits = GaussDigits::new(streams.stream(i));
            (0..n).map(|_| alternating_root(digits.next_digit()) - mu).sum::<f64>()
        })
        .collect::<Vec<_>>()
    })
    .concat();
    Ok(SumSamples {
        values,
        n,
        mode: "infvar".into(),
        norming: NormingValue {
            kind: NormingKind::Constructed,
            value: norming_constant(law, n),
        },
        alternatives: Vec::new(),
        seed,
        horizon: n,
        warnings: Vec::new(),
    })
}
