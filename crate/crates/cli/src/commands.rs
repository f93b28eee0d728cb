use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{ArgGroup, Args, ValueEnum};
use serde::Serialize;
use serde_json::json;

use mixllt::chain::{doeblin_bounds, exact_moments, simulate_paths};
use mixllt::charfn::CharFnProfile;
use mixllt::conditions::{
    c1c2_diagnostics, condition_a1_ratio, condition_a_profile, condition_b1_mass, condition_b2_profile,
    condition_b_profile, infvar_diagnostics, lindeberg_profile, B1Shifts, ConditionReport, Norming, Thresholds,
    Verdict,
};
use mixllt::gauss_cf::{digit_probability, empirical_chain, root_observable, sample_digits, DigitLaw};
use mixllt::law::{FiniteLaw, RealLaw};
use mixllt::llt::{
    build_digit_sums, build_sums, clt_ks, interval_scan, llt_scan, LinearProcessSpec, NormingKind, SumMode,
    WindowFunction, WindowKind,
};
use mixllt::mixing::{lag_profile, mixing_coeffs};
use mixllt::{ChainSpec, JointDistribution, RawChainSpec};

use crate::output::Output;
use crate::Failure;

/// Outcome of a subcommand: `Some` names a violated inequality.
pub type Outcome = Result<Option<String>, Failure>;

const BRADLEY_TOL: f64 = 1e-10;
const SANDWICH_TOL: f64 = 1e-10;

fn load_chain(path: &Path) -> Result<ChainSpec, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))?;
    let raw = RawChainSpec::from_json(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    raw.validate()
        .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn require_spec(spec: &Option<PathBuf>) -> Result<ChainSpec, Failure> {
    match spec {
        Some(p) => load_chain(p),
        None => Err(Failure::usage("--spec is required")),
    }
}

fn parse_list<T: FromStr>(text: &str, what: &str) -> Result<Vec<T>, Failure> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| Failure::usage(format!("{what}: cannot parse {:?} in {text:?}", s.trim())))
        })
        .collect()
}

/// `a..b` (inclusive) or a comma list.
fn parse_lags(text: &str) -> Result<Vec<usize>, Failure> {
    if let Some((a, b)) = text.split_once("..") {
        let a: usize = a
            .trim()
            .parse()
            .map_err(|_| Failure::usage(format!("--lags: bad start in {text:?}")))?;
        let b: usize = b
            .trim()
            .parse()
            .map_err(|_| Failure::usage(format!("--lags: bad end in {text:?}")))?;
        if a > b {
            return Err(Failure::usage(format!("--lags: empty range {text:?}")));
        }
        Ok((a..=b).collect())
    } else {
        parse_list(text, "--lags")
    }
}

fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    (0..count)
        .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
        .collect()
}

/// `lo:hi:count` or a comma list.
fn parse_grid(text: &str, what: &str) -> Result<Vec<f64>, Failure> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() == 3 {
        let lo: f64 = parse_list(parts[0], what)?[0];
        let hi: f64 = parse_list(parts[1], what)?[0];
        let count: usize = parse_list(parts[2], what)?[0];
        if count == 0 || !(lo <= hi) {
            return Err(Failure::usage(format!(
                "{what}: need lo ≤ hi and count ≥ 1 in {text:?}"
            )));
        }
        return Ok(linspace(lo, hi, count));
    }
    parse_list(text, what)
}

fn horizon(chain: &ChainSpec, n: Option<usize>, fallback: usize) -> usize {
    n.or(chain.max_len()).unwrap_or(fallback)
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    spec: PathBuf,
    /// Horizon for the Doeblin constants and moments (default: the spec's length, else 100).
    #[arg(long)]
    n: Option<usize>,
}

pub fn validate(a: &ValidateArgs, out: &mut Output) -> Outcome {
    let chain = load_chain(&a.spec)?;
    let n = horizon(&chain, a.n, 100);
    let doeblin = doeblin_bounds(&chain, n)?;
    let moments = exact_moments(&chain, n)?;
    let (lo, hi) = doeblin.variance_sandwich();
    let ratio = moments.ratio();
    let checkable = doeblin.holds() && moments.tau_sq > 0.0;
    let sandwich_holds = !checkable || (lo - SANDWICH_TOL..=hi + SANDWICH_TOL).contains(&ratio);
    out.json(
        "summary.json",
        &json!({
            "states": chain.size(),
            "homogeneous": chain.is_homogeneous(),
            "centered": chain.centered(),
            "n": n,
            "doeblin": doeblin,
            "doeblin_holds": doeblin.holds(),
            "variance": {
                "tau_sq": moments.tau_sq,
                "sigma_sq": moments.sigma_sq,
                "ratio": ratio,
                "sandwich": [lo, hi],
                "sandwich_holds": sandwich_holds,
            },
        }),
    )?;
    Ok((!sandwich_holds).then(|| format!("σ_n²/τ_n² = {ratio} outside [{lo}, {hi}] at n = {n}")))
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    paths: usize,
}

pub fn simulate(a: &SimulateArgs, seed: u64, out: &mut Output) -> Outcome {
    let chain = load_chain(&a.spec)?;
    if a.n == 0 || a.paths == 0 {
        return Err(Failure::usage("--n and --paths must be positive"));
    }
    let batch = simulate_paths(&chain, a.n, a.paths, seed)?;
    let table = chain.observable_table(&chain.marginals(a.n)?);
    let mut rows = Vec::with_capacity(a.n * a.paths);
    let mut sums = Vec::with_capacity(a.paths);
    for (i, path) in batch.iter().enumerate() {
        let mut s = 0.0;
        for (k, &state) in path.iter().enumerate() {
            let x = table.step(k + 1)[state as usize];
            s += x;
            rows.push(vec![i as f64, (k + 1) as f64, state as f64, x]);
        }
        sums.push(s);
    }
    out.table("paths", &["path", "step", "state", "value"], &rows)?;
    let count = sums.len() as f64;
    let mean = sums.iter().sum::<f64>() / count;
    let var = sums.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (count - 1.0).max(1.0);
    let moments = exact_moments(&chain, a.n)?;
    out.json(
        "summary.json",
        &json!({
            "n": a.n,
            "paths": a.paths,
            "seed": seed,
            "sum_mean": mean,
            "sum_variance": var,
            "exact_sigma_sq": moments.sigma_sq,
            "exact_tau_sq": moments.tau_sq,
        }),
    )?;
    Ok(None)
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("source").required(true).args(["spec", "joint"])))]
pub struct MixingArgs {
    #[arg(long)]
    spec: Option<PathBuf>,
    /// A joint distribution as a JSON matrix of masses.
    #[arg(long)]
    joint: Option<PathBuf>,
    /// Lags as `a..b` (inclusive) or a comma list.
    #[arg(long, default_value = "1..5")]
    lags: String,
    /// Horizon swept for the starting time (default: one past the largest lag).
    #[arg(long)]
    n: Option<usize>,
}

pub fn mixing(a: &MixingArgs, out: &mut Output) -> Outcome {
    if let Some(path) = &a.joint {
        let text =
            fs::read_to_string(path).map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))?;
        let rows: Vec<Vec<f64>> =
            serde_json::from_str(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
        let c = mixing_coeffs(&JointDistribution::new(rows)?);
        let gap = c.bradley_gap();
        out.table(
            "mixing",
            &["psi_lower", "psi_upper", "rho", "bradley_gap"],
            &[vec![c.psi_lower, c.psi_upper, c.rho, gap]],
        )?;
        return Ok((gap < -BRADLEY_TOL).then(|| format!("ρ exceeds 1 - ψ' by {}", -gap)));
    }
    let chain = require_spec(&a.spec)?;
    let lags = parse_lags(&a.lags)?;
    let n =
        a.n.or(chain.max_len())
            .unwrap_or(lags.iter().max().copied().unwrap_or(1) + 1);
    let profile = lag_profile(&chain, &lags, n)?;
    let rows: Vec<Vec<f64>> = profile
        .iter()
        .map(|c| vec![c.lag as f64, c.psi_lower, c.psi_upper, c.rho, c.bradley_gap])
        .collect();
    out.table(
        "mixing",
        &["lag", "psi_lower", "psi_upper", "rho", "bradley_gap"],
        &rows,
    )?;
    Ok(profile
        .iter()
        .find(|c| c.bradley_gap < -BRADLEY_TOL)
        .map(|c| format!("ρ exceeds 1 - ψ' by {} at lag {}", -c.bradley_gap, c.lag)))
}

#[derive(Debug, Args)]
pub struct CharfnArgs {
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = -20.0, allow_negative_numbers = true)]
    u_min: f64,
    #[arg(long, default_value_t = 20.0, allow_negative_numbers = true)]
    u_max: f64,
    #[arg(long, default_value_t = 41)]
    u_steps: usize,
    /// Use this γ instead of the chain's a⁴/b.
    #[arg(long)]
    gamma: Option<f64>,
}

pub fn charfn(a: &CharfnArgs, out: &mut Output) -> Outcome {
    let chain = load_chain(&a.spec)?;
    if a.u_steps == 0 || !(a.u_min <= a.u_max) {
        return Err(Failure::usage("need --u-min ≤ --u-max and --u-steps ≥ 1"));
    }
    let profile = CharFnProfile::new(&chain, a.n)?;
    let gamma = match a.gamma {
        Some(g) if g > 0.0 && g.is_finite() => g,
        Some(g) => return Err(Failure::usage(format!("--gamma must be positive, got {g}"))),
        None => profile.doeblin().require_gamma()?,
    };
    let mut rows = Vec::with_capacity(a.u_steps);
    let mut violations = Vec::new();
    for u in linspace(a.u_min, a.u_max, a.u_steps) {
        let r = profile.bound_with_gamma(u, gamma);
        rows.push(vec![
            u,
            r.phi.re,
            r.phi.im,
            r.exact_abs4,
            r.product_bound,
            r.exp_relaxation,
        ]);
        violations.extend(r.violations);
    }
    out.table(
        "charfn",
        &["u", "re", "im", "abs4", "product_bound", "exp_relaxation"],
        &rows,
    )?;
    out.json(
        "summary.json",
        &json!({
            "n": a.n,
            "gamma": gamma,
            "gamma_source": if a.gamma.is_some() { "given" } else { "doeblin" },
            "doeblin": profile.doeblin(),
            "violations": violations,
        }),
    )?;
    Ok(violations.first().map(|v| match v.k {
        None => format!(
            "|φ_n(u)|⁴ = {} exceeds the product bound {} at u = {}",
            v.lhs, v.rhs, v.u
        ),
        Some(k) => format!(
            "pair norm² {} exceeds {} for steps ({}, {k}) at u = {}",
            v.lhs,
            v.rhs,
            k - 1,
            v.u
        ),
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Check {
    Lindeberg,
    #[value(name = "A")]
    A,
    #[value(name = "A1")]
    A1,
    #[value(name = "B")]
    B,
    #[value(name = "B1")]
    B1,
    #[value(name = "B2")]
    B2,
    C1c2,
    Infvar,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LawSource {
    /// `(-1)^d √d` for Gauss-distributed digits, centered.
    Digits,
    /// The first summand of `--spec`.
    Spec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Shifts {
    Zero,
    Median,
}

#[derive(Debug, Args)]
pub struct ConditionsArgs {
    #[arg(long, value_enum, ignore_case = true)]
    check: Check,
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Law for `infvar` (default: spec when given, else digits).
    #[arg(long, value_enum)]
    law: Option<LawSource>,
    #[arg(long, default_value = "10,100,1000")]
    n_grid: String,
    /// Horizon for check A (default: the largest grid size).
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    #[arg(long, default_value_t = 0.5)]
    delta: f64,
    #[arg(long, allow_negative_numbers = true)]
    u: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    t_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    t_max: Option<f64>,
    #[arg(long, default_value_t = 41)]
    t_steps: usize,
    /// Grid for check A as `lo:hi:count` or a list (default: 20 points on [1, δτ_n]).
    #[arg(long, allow_hyphen_values = true)]
    u_grid: Option<String>,
    #[arg(long, default_value_t = 1.0)]
    big_t: f64,
    #[arg(long, default_value_t = 4.0)]
    big_l: f64,
    #[arg(long, default_value_t = 2.0)]
    big_m: f64,
    #[arg(long, value_enum, default_value_t = Shifts::Zero)]
    shifts: Shifts,
    #[arg(long, default_value = "10,100,1000,10000")]
    x_grid: String,
}

fn required_u(u: Option<f64>) -> Result<f64, Failure> {
    u.ok_or_else(|| Failure::usage("--u is required for this check"))
}

fn spec_law(chain: &ChainSpec) -> Result<FiniteLaw, Failure> {
    Ok(FiniteLaw::new(chain.raw_observable(1), chain.initial())?.centered())
}

pub fn conditions(a: &ConditionsArgs, out: &mut Output) -> Outcome {
    let th = Thresholds::default();
    let n_grid: Vec<usize> = parse_list(&a.n_grid, "--n-grid")?;
    let report: ConditionReport = match a.check {
        Check::Infvar => {
            let x_grid: Vec<f64> = parse_list(&a.x_grid, "--x-grid")?;
            let source = a.law.unwrap_or(if a.spec.is_some() {
                LawSource::Spec
            } else {
                LawSource::Digits
            });
            let law: Box<dyn RealLaw> = match source {
                LawSource::Digits => Box::new(DigitLaw::new()),
                LawSource::Spec => Box::new(spec_law(&require_spec(&a.spec)?)?),
            };
            infvar_diagnostics(law.as_ref(), &n_grid, &x_grid, &Norming::Constructed)?
        }
        check => {
            let chain = require_spec(&a.spec)?;
            match check {
                Check::Lindeberg => lindeberg_profile(&chain, a.eps, &n_grid, &th)?,
                Check::A => {
                    let n = a.n.or(n_grid.iter().max().copied()).unwrap_or(1000);
                    let grid = match &a.u_grid {
                        Some(g) => parse_grid(g, "--u-grid")?,
                        None => linspace(1.0, a.delta * exact_moments(&chain, n)?.tau(), 20),
                    };
                    condition_a_profile(&chain, a.delta, n, &grid, &th)?
                }
                Check::A1 => condition_a1_ratio(&chain, a.delta, &n_grid)?,
                Check::B => {
                    let u = required_u(a.u)?;
                    let interval = (a.t_min.unwrap_or(u - 0.5), a.t_max.unwrap_or(u + 0.5));
                    condition_b_profile(&chain, u, interval, a.t_steps, &n_grid, &th)?
                }
                Check::B1 => {
                    let shifts = match a.shifts {
                        Shifts::Zero => B1Shifts::Zero,
                        Shifts::Median => B1Shifts::Median,
                    };
                    condition_b1_mass(&chain, required_u(a.u)?, a.eps, a.big_m, &shifts, &n_grid)?
                }
                Check::B2 => {
                    let interval = (a.t_min.unwrap_or(1.0), a.t_max.unwrap_or(2.0 * PI));
                    condition_b2_profile(&chain, interval, a.t_steps, &n_grid)?
                }
                Check::C1c2 => c1c2_diagnostics(&chain, &n_grid, a.big_t, a.delta, a.big_l, &th)?,
                Check::Infvar => unreachable!(),
            }
        }
    };
    out.json("report.json", &report)?;
    let violation = match a.check {
        Check::C1c2 => {
            let excess = report.params.get("max_domination_excess").copied().unwrap_or(0.0);
            (excess > 1e-10).then(|| format!("|φ_n(u/τ_n)| exceeds exp(-G_n(u)) by {excess}"))
        }
        Check::Infvar if report.verdict == Verdict::Violated => {
            Some("symmetrization chain for A₁ ⇒ A fails on the x grid".into())
        }
        _ => None,
    };
    Ok(violation)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Plain,
    Weighted,
    Linear,
    Infvar,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Window {
    Tri,
    Epa,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NormingChoice {
    /// Exact standard deviation of the simulated sum.
    Sigma,
    /// `v_n |A|` (linear mode).
    Vn,
}

#[derive(Debug, Args)]
pub struct LltArgs {
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Mode::Plain)]
    mode: Mode,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    paths: usize,
    #[arg(long, value_enum, default_value_t = Window::Tri)]
    window: Window,
    /// Window half-width.
    #[arg(long, default_value_t = 0.5)]
    width: f64,
    /// `lo:hi:count` or a list (default: 61 points over ±2 × norming).
    #[arg(long, allow_hyphen_values = true)]
    u_grid: Option<String>,
    /// Also estimate `√(2π) c_n P(S_n - u ∈ [c, d])`.
    #[arg(long, num_args = 2, value_names = ["C", "D"], allow_negative_numbers = true)]
    interval: Option<Vec<f64>>,
    /// Weights cycled over the steps (weighted mode).
    #[arg(long, allow_hyphen_values = true)]
    weights: Option<String>,
    /// `m,M` with `m ≤ |a_k| ≤ M` (default: the extremes of the weights).
    #[arg(long)]
    weight_bounds: Option<String>,
    /// Coefficients `a_i = ratio^i` (linear mode).
    #[arg(long, default_value_t = 0.5)]
    ratio: f64,
    /// Truncation `K_n` (linear mode, default n²).
    #[arg(long)]
    truncation: Option<usize>,
    #[arg(long, value_enum, default_value_t = NormingChoice::Sigma)]
    norming: NormingChoice,
    /// Exit 1 when the sup deviation of the window scan exceeds this.
    #[arg(long)]
    max_dev: Option<f64>,
    /// Exit 1 when the Kolmogorov distance to N(0, 1) exceeds this.
    #[arg(long)]
    max_ks: Option<f64>,
    /// Exit 1 when the interval scan deviates by more than this.
    #[arg(long)]
    max_interval_dev: Option<f64>,
}

#[derive(Serialize)]
struct LltSummary {
    mode: String,
    n: usize,
    paths: usize,
    seed: u64,
    horizon: usize,
    norming: mixllt::llt::NormingValue,
    alternatives: Vec<mixllt::llt::NormingValue>,
    window: WindowFunction,
    sup_abs_dev: f64,
    sup_z: f64,
    bonferroni_margin: f64,
    ks: f64,
    mean: f64,
    mean_stderr: f64,
    inconclusive: bool,
    interval: Option<serde_json::Value>,
    warnings: Vec<String>,
}

fn sum_mode(a: &LltArgs) -> Result<SumMode, Failure> {
    Ok(match a.mode {
        Mode::Plain => SumMode::Plain,
        Mode::Weighted => {
            let weights: Vec<f64> = parse_list(
                a.weights
                    .as_deref()
                    .ok_or_else(|| Failure::usage("weighted mode needs --weights"))?,
                "--weights",
            )?;
            let bounds = match &a.weight_bounds {
                Some(text) => match parse_list::<f64>(text, "--weight-bounds")?[..] {
                    [m, big_m] => (m, big_m),
                    _ => return Err(Failure::usage("--weight-bounds takes two values m,M")),
                },
                None => weights.iter().fold((f64::INFINITY, 0.0f64), |(m, big_m), w| {
                    (m.min(w.abs()), big_m.max(w.abs()))
                }),
            };
            SumMode::Weighted { weights, bounds }
        }
        Mode::Linear => {
            let truncation = a.truncation.unwrap_or(a.n.saturating_mul(a.n));
            SumMode::Linear(LinearProcessSpec::geometric(a.ratio, truncation)?)
        }
        Mode::Infvar => unreachable!(),
    })
}

pub fn llt(a: &LltArgs, seed: u64, out: &mut Output) -> Outcome {
    if a.n == 0 || a.paths < 2 {
        return Err(Failure::usage("--n must be positive and --paths at least 2"));
    }
    let mut samples = match a.mode {
        Mode::Infvar => build_digit_sums(&DigitLaw::new(), a.n, a.paths, seed)?,
        _ => build_sums(&require_spec(&a.spec)?, a.n, a.paths, seed, &sum_mode(a)?)?,
    };
    if a.norming == NormingChoice::Vn {
        samples = samples.with_norming(NormingKind::VnTimesLimit)?;
    }
    let c = samples.norming.value;
    let u_grid = match &a.u_grid {
        Some(g) => parse_grid(g, "--u-grid")?,
        None => (0..61).map(|i| c * (-2.0 + 4.0 * i as f64 / 60.0)).collect(),
    };
    let kind = match a.window {
        Window::Tri => WindowKind::Triangular,
        Window::Epa => WindowKind::Epanechnikov,
    };
    let h = WindowFunction::new(kind, a.width)?;
    let report = llt_scan(&samples, &h, &u_grid)?;
    let rows = |r: &mixllt::llt::LLTReport| -> Vec<Vec<f64>> {
        (0..r.u_grid.len())
            .map(|i| vec![r.u_grid[i], r.estimate[i], r.predicted[i], r.stderr[i]])
            .collect()
    };
    out.table("llt", &["u", "estimate", "predicted", "stderr"], &rows(&report))?;
    let ks = clt_ks(&samples);
    let (mean, mean_stderr) = samples.mean_and_stderr();
    let mut violations = Vec::new();
    let mut interval = None;
    if let Some(cd) = &a.interval {
        let (lo, hi) = (cd[0], cd[1]);
        let r = interval_scan(&samples, lo, hi, &u_grid)?;
        out.table("interval", &["u", "estimate", "predicted", "stderr"], &rows(&r))?;
        if let Some(tol) = a.max_interval_dev {
            if r.sup_abs_dev > tol {
                violations.push(format!("interval scan deviates by {} > {tol}", r.sup_abs_dev));
            }
        }
        interval = Some(json!({
            "c": lo,
            "d": hi,
            "sup_abs_dev": r.sup_abs_dev,
            "sup_z": r.sup_z,
            "bonferroni_margin": r.bonferroni_margin,
            "inconclusive": r.inconclusive,
        }));
    }
    if let Some(tol) = a.max_dev {
        if report.sup_abs_dev > tol {
            violations.push(format!("window scan deviates by {} > {tol}", report.sup_abs_dev));
        }
    }
    if let Some(tol) = a.max_ks {
        if ks > tol {
            violations.push(format!("Kolmogorov distance {ks} > {tol}"));
        }
    }
    out.json(
        "summary.json",
        &LltSummary {
            mode: samples.mode.clone(),
            n: a.n,
            paths: a.paths,
            seed,
            horizon: samples.horizon,
            norming: samples.norming,
            alternatives: samples.alternatives.clone(),
            window: h,
            sup_abs_dev: report.sup_abs_dev,
            sup_z: report.sup_z,
            bonferroni_margin: report.bonferroni_margin,
            ks,
            mean,
            mean_stderr,
            inconclusive: report.inconclusive,
            interval,
            warnings: report.warnings.clone(),
        },
    )?;
    Ok((!violations.is_empty()).then(|| violations.join("; ")))
}

#[derive(Debug, Args)]
pub struct GaussArgs {
    #[arg(long)]
    samples: usize,
    /// Digits per sample.
    #[arg(long, default_value_t = 2)]
    digits: usize,
    /// States `1..=cap` plus one overflow state.
    #[arg(long, default_value_t = 20)]
    cap: u64,
    /// Multiplier of the binomial standard errors.
    #[arg(long, default_value_t = 4.0)]
    z: f64,
}

pub fn gauss(a: &GaussArgs, seed: u64, out: &mut Output) -> Outcome {
    if a.samples == 0 {
        return Err(Failure::usage("--samples must be positive"));
    }
    if a.digits < 2 {
        return Err(Failure::usage("--digits must be at least 2 to form digit pairs"));
    }
    let samples = sample_digits(a.samples, a.digits, seed)?;
    let tc = empirical_chain(&samples, a.cap, a.z)?;
    let chain = tc.to_chain_spec(root_observable(tc.cap))?;
    let mut raw = serde_json::to_value(chain.to_raw()).expect("chain spec serialises");
    raw["description"] = json!("capped Gauss digits, observable sqrt(min(digit, cap)) centered");
    out.json("chain.json", &raw)?;

    let mut first = vec![0u64; tc.cap as usize];
    for i in 0..samples.count {
        let d = samples.row(i)[0];
        if d <= tc.cap {
            first[d as usize - 1] += 1;
        }
    }
    let count = samples.count as f64;
    let mut max_z: f64 = 0.0;
    let rows: Vec<Vec<f64>> = first
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let k = i as u64 + 1;
            let p = digit_probability(k);
            let se = (p * (1.0 - p) / count).sqrt();
            let empirical = c as f64 / count;
            max_z = max_z.max((empirical - p).abs() / se);
            vec![k as f64, empirical, p, se]
        })
        .collect();
    out.table("marginals", &["k", "empirical", "analytic", "stderr"], &rows)?;

    let d = &tc.doeblin;
    let in_range = d.a.value >= 0.2 - d.a.half_width && d.b.value <= 1.8 + d.b.half_width;
    out.json(
        "summary.json",
        &json!({
            "samples": a.samples,
            "digits": a.digits,
            "seed": seed,
            "requested_cap": a.cap,
            "cap": tc.cap,
            "pairs": tc.pairs,
            "doeblin": d,
            "plug_in_doeblin": tc.plug_in_doeblin()?,
            "within_nominal_range": in_range,
            "marginal_max_z": max_z,
            "warnings": tc.warnings,
        }),
    )?;
    Ok((!in_range).then(|| {
        format!(
            "digit-pair ratios [{}, {}] leave [0.2 - {}, 1.8 + {}]",
            d.a.value, d.b.value, d.a.half_width, d.b.half_width
        )
    }))
}
