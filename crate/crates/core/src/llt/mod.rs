//! Monte Carlo checks of the local limit theorem.
//!
//! [`build_sums`] draws `S_n` along seeded paths (plain, weighted or
//! moving-average summands) and [`build_digit_sums`] does the same for the
//! infinite-variance digit observable. The scans compare
//! `√(2π) c_n E h(S_n - u)` with `exp(-u²/2c_n²) ∫h` for the attached
//! norming `c_n`.

mod sums;

use std::f64::consts::PI;

use serde::Serialize;

pub use sums::{build_digit_sums, build_sums, LinearProcessSpec, NormingKind, NormingValue, SumMode, SumSamples};

use crate::error::{Error, Result};
use crate::law::{norming_constant, RealLaw};
use crate::normal::normal_cdf;

/// Largest standard error the scans accept silently.
pub const TARGET_STDERR: f64 = 0.005;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowKind {
    /// `1 - |x|/w`.
    Triangular,
    /// `1 - (x/w)²`.
    Epanechnikov,
}

/// A height-one window supported on `[-w, w]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WindowFunction {
    pub kind: WindowKind,
    pub half_width: f64,
}

impl WindowFunction {
    pub fn new(kind: WindowKind, half_width: f64) -> Result<Self> {
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::Parameter(format!(
                "window half-width must be positive, got {half_width}"
            )));
        }
        Ok(Self { kind, half_width })
    }

    pub fn triangular(half_width: f64) -> Result<Self> {
        Self::new(WindowKind::Triangular, half_width)
    }

    pub fn epanechnikov(half_width: f64) -> Result<Self> {
        Self::new(WindowKind::Epanechnikov, half_width)
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        let r = x / self.half_width;
        match self.kind {
            WindowKind::Triangular => (1.0 - r.abs()).max(0.0),
            WindowKind::Epanechnikov => (1.0 - r * r).max(0.0),
        }
    }

    pub fn integral(&self) -> f64 {
        match self.kind {
            WindowKind::Triangular => self.half_width,
            WindowKind::Epanechnikov => 4.0 * self.half_width / 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LLTReport {
    pub u_grid: Vec<f64>,
    pub estimate: Vec<f64>,
    pub predicted: Vec<f64>,
    pub stderr: Vec<f64>,
    pub sup_abs_dev: f64,
    /// `max |estimate - predicted| / stderr`.
    pub sup_z: f64,
    /// Two-sided Bonferroni quantile at level 0.05 over the grid, times the
    /// largest standard error.
    pub bonferroni_margin: f64,
    pub norming: NormingValue,
    pub count: usize,
    /// Set when standard errors swamp the predicted values.
    pub inconclusive: bool,
    pub warnings: Vec<String>,
}

impl LLTReport {
    fn assemble(
        u_grid: &[f64],
        estimate: Vec<f64>,
        predicted: Vec<f64>,
        stderr: Vec<f64>,
        samples: &SumSamples,
    ) -> Self {
        let mut sup_abs_dev: f64 = 0.0;
        let mut sup_z: f64 = 0.0;
        for ((e, p), s) in estimate.iter().zip(&predicted).zip(&stderr) {
            let dev = (e - p).abs();
            sup_abs_dev = sup_abs_dev.max(dev);
            if *s > 0.0 {
                sup_z = sup_z.max(dev / s);
            }
        }
        let max_se = stderr.iter().copied().fold(0.0, f64::max);
        let mut warnings = samples.warnings.clone();
        if max_se > TARGET_STDERR {
            let needed = (samples.count() as f64 * (max_se / TARGET_STDERR).powi(2)).ceil();
            warnings.push(format!(
                "largest standard error {max_se:.2e} exceeds {TARGET_STDERR}; about {needed:.0} draws needed"
            ));
        }
        Self {
            u_grid: u_grid.to_vec(),
            estimate,
            predicted,
            stderr,
            sup_abs_dev,
            sup_z,
            bonferroni_margin: bonferroni_quantile(u_grid.len()) * max_se,
            norming: samples.norming,
            count: samples.count(),
            inconclusive: false,
            warnings,
        }
    }
}

/// `z` with `2(1 - Φ(z)) = 0.05 / m`.
fn bonferroni_quantile(m: usize) -> f64 {
    let target = 1.0 - 0.025 / m.max(1) as f64;
    let (mut lo, mut hi) = (0.0, 10.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if normal_cdf(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn check_grid(u_grid: &[f64], norming: f64) -> Result<()> {
    if u_grid.is_empty() {
        return Err(Error::Parameter("empty u grid".into()));
    }
    if let Some(u) = u_grid.iter().find(|u| !(u.abs() <= 3.0 * norming)) {
        return Err(Error::Parameter(format!(
            "u = {u} outside ±3 × norming = ±{}",
            3.0 * norming
        )));
    }
    Ok(())
}

fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_unstable_by(f64::total_cmp);
    v
}

/// `√(2π) c_n Ê h(S_n - u)` against `exp(-u²/2c_n²) ∫h` on `u_grid`.
pub fn llt_scan(samples: &SumSamples, h: &WindowFunction, u_grid: &[f64]) -> Result<LLTReport> {
    let c = samples.norming.value;
    check_grid(u_grid, c)?;
    let v = sorted(&samples.values);
    let count = v.len() as f64;
    let scale = (2.0 * PI).sqrt() * c;
    let w = h.half_width;
    let mut estimate = Vec::with_capacity(u_grid.len());
    let mut stderr = Vec::with_capacity(u_grid.len());
    for &u in u_grid {
        let lo = v.partition_point(|&s| s < u - w);
        let hi = v.partition_point(|&s| s <= u + w);
        let (mut s1, mut s2) = (0.0, 0.0);
        for &s in &v[lo..hi] {
            let y = h.eval(s - u);
            s1 += y;
            s2 += y * y;
        }
        let mean = s1 / count;
        let var = ((s2 / count - mean * mean) * count / (count - 1.0).max(1.0)).max(0.0);
        estimate.push(scale * mean);
        stderr.push(scale * (var / count).sqrt());
    }
    let predicted = u_grid
        .iter()
        .map(|u| (-u * u / (2.0 * c * c)).exp() * h.integral())
        .collect();
    Ok(LLTReport::assemble(u_grid, estimate, predicted, stderr, samples))
}

/// `√(2π) c_n P̂(c + u ≤ S_n ≤ d + u)` against `(d - c) exp(-u²/2c_n²)`.
///
/// The report is marked inconclusive when fewer than 100 draws are expected
/// inside some shifted interval, or a standard error exceeds a quarter of
/// the predicted value.
pub fn interval_scan(samples: &SumSamples, c: f64, d: f64, u_grid: &[f64]) -> Result<LLTReport> {
    if !(c < d) {
        return Err(Error::Parameter(format!("interval needs c < d, got [{c}, {d}]")));
    }
    let norm = samples.norming.value;
    check_grid(u_grid, norm)?;
    let v = sorted(&samples.values);
    let count = v.len() as f64;
    let scale = (2.0 * PI).sqrt() * norm;
    let mut estimate = Vec::with_capacity(u_grid.len());
    let mut stderr = Vec::with_capacity(u_grid.len());
    for &u in u_grid {
        let inside = v.partition_point(|&s| s <= d + u) - v.partition_point(|&s| s < c + u);
        let p = inside as f64 / count;
        estimate.push(scale * p);
        stderr.push(scale * (p * (1.0 - p) / count).sqrt());
    }
    let predicted: Vec<f64> = u_grid
        .iter()
        .map(|u| (d - c) * (-u * u / (2.0 * norm * norm)).exp())
        .collect();
    let sparse = predicted.iter().any(|p| p / scale * count < 100.0);
    let noisy = stderr.iter().zip(&predicted).any(|(s, p)| *s > 0.25 * p);
    let mut report = LLTReport::assemble(u_grid, estimate, predicted, stderr, samples);
    report.inconclusive = sparse || noisy;
    if sparse {
        report
            .warnings
            .push("fewer than 100 draws expected in some interval".into());
    }
    if noisy {
        report
            .warnings
            .push("standard errors exceed a quarter of the prediction".into());
    }
    Ok(report)
}

/// Kolmogorov–Smirnov distance between the law of `S_n / c_n` and `N(0, 1)`.
pub fn clt_ks(samples: &SumSamples) -> f64 {
    let c = samples.norming.value;
    let v = sorted(&samples.values);
    let count = v.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < v.len() {
        // ties form one jump of the empirical distribution function
        let mut j = i;
        while j + 1 < v.len() && v[j + 1] == v[i] {
            j += 1;
        }
        let f = normal_cdf(v[i] / c);
        d = d.max(f - i as f64 / count).max((j + 1) as f64 / count - f);
        i = j + 1;
    }
    d
}

/// Norming constants `b_n` with the diagnostics `b_n / b_{n-1}` and
/// `b_n² / (n H(b_n))`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormingSequence {
    pub n: Vec<usize>,
    pub b_n: Vec<f64>,
    /// `b_n / b_{n-1}`; `NaN` at `n = 1`.
    pub ratio_prev: Vec<f64>,
    pub h_ratio: Vec<f64>,
    pub finite_variance: bool,
    pub notes: Vec<String>,
}

pub fn norming_sequence(law: &dyn RealLaw, n_grid: &[usize]) -> Result<NormingSequence> {
    if n_grid.is_empty() || n_grid.contains(&0) {
        return Err(Error::Parameter("n grid must be nonempty and positive".into()));
    }
    if law.mean().abs() > 1e-9 {
        return Err(Error::Parameter(format!("law must be centered, mean = {}", law.mean())));
    }
    let b_n: Vec<f64> = n_grid.iter().map(|&n| norming_constant(law, n)).collect();
    let ratio_prev = n_grid
        .iter()
        .zip(&b_n)
        .map(|(&n, b)| {
            if n == 1 {
                f64::NAN
            } else {
                b / norming_constant(law, n - 1)
            }
        })
        .collect();
    let h_ratio = n_grid
        .iter()
        .zip(&b_n)
        .map(|(&n, &b)| b * b / (n as f64 * law.stats_at(b).trunc_second))
        .collect();
    let finite_variance = law.has_finite_variance();
    let mut notes = Vec::new();
    if finite_variance {
        notes.push("finite variance: b_n ≈ σ√n and the finite-variance theorem applies".into());
    }
    Ok(NormingSequence {
        n: n_grid.to_vec(),
        b_n,
        ratio_prev,
        h_ratio,
        finite_variance,
        notes,
    })
}
