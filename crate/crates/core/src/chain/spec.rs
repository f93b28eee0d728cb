use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on row sums and total masses.
pub const PROB_TOL: f64 = 1e-12;

/// Probabilities at or below this are treated as zero when forming ratios.
pub const DEFAULT_ZERO_TOL: f64 = 1e-15;

/// One transition kernel `Q_k(x, y)`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct StepKernel {
    size: usize,
    rows: Vec<f64>,
}

impl StepKernel {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let size = rows.len();
        let mut problems = Vec::new();
        for (x, row) in rows.iter().enumerate() {
            if row.len() != size {
                problems.push(format!("dimension: row {x} has {} entries, expected {size}", row.len()));
            }
        }
        if !problems.is_empty() {
            return Err(Error::Malformed(problems));
        }
        Self::from_flat(size, rows.into_iter().flatten().collect())
    }

    pub fn from_flat(size: usize, rows: Vec<f64>) -> Result<Self> {
        let kernel = Self { size, rows };
        let problems = kernel.violations("kernel");
        if problems.is_empty() {
            Ok(kernel)
        } else {
            Err(Error::Malformed(problems))
        }
    }

    /// Every row equal to `p`: the step is independent of the past.
    pub fn independent(p: &[f64]) -> Result<Self> {
        Self::from_flat(p.len(), p.iter().copied().cycle().take(p.len() * p.len()).collect())
    }

    pub fn identity(size: usize) -> Self {
        let mut rows = vec![0.0; size * size];
        for x in 0..size {
            rows[x * size + x] = 1.0;
        }
        Self { size, rows }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.rows[x * self.size..(x + 1) * self.size]
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.rows[x * self.size + y]
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.rows
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows.chunks(self.size).map(<[f64]>::to_vec).collect()
    }

    /// Row vector times kernel: `(p Q)(y) = Σ_x p(x) Q(x, y)`.
    pub fn push_forward(&self, p: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.size];
        for (x, &px) in p.iter().enumerate() {
            if px == 0.0 {
                continue;
            }
            for (o, &q) in out.iter_mut().zip(self.row(x)) {
                *o += px * q;
            }
        }
        out
    }

    /// Kernel times column vector: `(Q h)(x) = Σ_y Q(x, y) h(y)`.
    pub fn apply(&self, h: &[f64]) -> Vec<f64> {
        (0..self.size)
            .map(|x| self.row(x).iter().zip(h).map(|(q, v)| q * v).sum())
            .collect()
    }

    /// Matrix product `self · other`.
    pub fn then(&self, other: &StepKernel) -> StepKernel {
        let rows = (0..self.size).flat_map(|x| other.push_forward(self.row(x))).collect();
        StepKernel { size: self.size, rows }
    }

    fn violations(&self, label: &str) -> Vec<String> {
        let mut out = Vec::new();
        if self.size == 0 {
            out.push(format!("{label}: empty state space"));
            return out;
        }
        if self.rows.len() != self.size * self.size {
            out.push(format!(
                "{label}: dimension {} entries for {} states",
                self.rows.len(),
                self.size
            ));
            return out;
        }
        for x in 0..self.size {
            let row = self.row(x);
            if let Some(y) = row.iter().position(|v| !v.is_finite() || *v < 0.0) {
                out.push(format!("{label} row {x}: entry {y} = {} is not a probability", row[y]));
                continue;
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > PROB_TOL {
                out.push(format!("{label} row {x}: row sum {} ≠ 1", short(sum)));
            }
        }
        out
    }
}

fn short(v: f64) -> String {
    let s = format!("{v:.10}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

/// Transition kernels for steps `k = 2, 3, ...`.
#[derive(Debug, Clone, PartialEq)]
pub enum Kernels {
    Homogeneous(StepKernel),
    /// Entry `i` is `Q_{i+2}`.
    PerStep(Vec<StepKernel>),
}

/// Observables `g_k` for steps `k = 1, 2, ...`.
#[derive(Debug, Clone, PartialEq)]
pub enum Observables {
    Shared(Vec<f64>),
    /// Entry `i` is `g_{i+1}`.
    PerStep(Vec<Vec<f64>>),
}

/// JSON chain description, exactly as read from disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawChainSpec {
    pub states: usize,
    pub initial: Vec<f64>,
    pub kernels: RawKernels,
    pub observables: RawObservables,
    #[serde(default = "default_center")]
    pub center: bool,
}

fn default_center() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RawKernels {
    Single(Vec<Vec<f64>>),
    PerStep(Vec<Vec<Vec<f64>>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RawObservables {
    Single(Vec<f64>),
    PerStep(Vec<Vec<f64>>),
}

impl RawChainSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn validate(self) -> Result<ChainSpec> {
        validate_spec(self)
    }
}

/// Check a raw description and normalise it into a [`ChainSpec`].
///
/// All violations are collected, not only the first one.
pub fn validate_spec(raw: RawChainSpec) -> Result<ChainSpec> {
    let n = raw.states;
    let mut problems = Vec::new();
    if n == 0 {
        return Err(Error::Malformed(vec!["empty state space".into()]));
    }
    if raw.initial.len() != n {
        problems.push(format!(
            "dimension: initial has {} entries for {n} states",
            raw.initial.len()
        ));
    } else if raw.initial.iter().any(|p| !p.is_finite() || *p < 0.0) {
        problems.push("initial: negative or non-finite probability".into());
    } else {
        let total: f64 = raw.initial.iter().sum();
        if (total - 1.0).abs() > PROB_TOL {
            problems.push(format!("initial: total mass {} ≠ 1", short(total)));
        }
    }

    let mut check_kernel = |label: String, rows: Vec<Vec<f64>>| -> Option<StepKernel> {
        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
            problems.push(format!("dimension: {label} is not {n}x{n}"));
            return None;
        }
        let k = StepKernel {
            size: n,
            rows: rows.into_iter().flatten().collect(),
        };
        let v = k.violations(&label);
        if v.is_empty() {
            Some(k)
        } else {
            problems.extend(v);
            None
        }
    };
    let kernels = match raw.kernels {
        RawKernels::Single(rows) => check_kernel("kernel".into(), rows).map(Kernels::Homogeneous),
        RawKernels::PerStep(list) => {
            if list.is_empty() {
                // a one-step chain needs no kernels
                Some(Kernels::PerStep(Vec::new()))
            } else {
                let ks: Vec<_> = list
                    .into_iter()
                    .enumerate()
                    .map(|(i, rows)| check_kernel(format!("kernel {}", i + 2), rows))
                    .collect();
                ks.into_iter().collect::<Option<Vec<_>>>().map(Kernels::PerStep)
            }
        }
    };

    let observables = match raw.observables {
        RawObservables::Single(g) => {
            if g.len() != n {
                problems.push(format!("dimension: observable has {} values for {n} states", g.len()));
            } else if g.iter().any(|v| !v.is_finite()) {
                problems.push("observable: non-finite value".into());
            }
            Observables::Shared(g)
        }
        RawObservables::PerStep(gs) => {
            if gs.is_empty() {
                problems.push("observables: empty list".into());
            }
            for (i, g) in gs.iter().enumerate() {
                if g.len() != n {
                    problems.push(format!(
                        "dimension: observable {} has {} values for {n} states",
                        i + 1,
                        g.len()
                    ));
                } else if g.iter().any(|v| !v.is_finite()) {
                    problems.push(format!("observable {}: non-finite value", i + 1));
                }
            }
            Observables::PerStep(gs)
        }
    };

    match (problems.is_empty(), kernels) {
        (true, Some(kernels)) => Ok(ChainSpec {
            size: n,
            initial: raw.initial,
            kernels,
            observables,
            center: raw.center,
            zero_tol: DEFAULT_ZERO_TOL,
        }),
        _ => Err(Error::Malformed(problems)),
    }
}

/// A validated nonstationary finite-state chain with real observables.
///
/// Steps are numbered from 1; `ξ₁ ~ initial`, `ξ_k | ξ_{k-1} ~ Q_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainSpec {
    size: usize,
    initial: Vec<f64>,
    kernels: Kernels,
    observables: Observables,
    center: bool,
    zero_tol: f64,
}

impl ChainSpec {
    /// Homogeneous chain with a shared observable; validated like a JSON spec.
    pub fn homogeneous(initial: Vec<f64>, kernel: StepKernel, observable: Vec<f64>) -> Result<Self> {
        validate_spec(RawChainSpec {
            states: initial.len(),
            initial,
            kernels: RawKernels::Single(kernel.to_rows()),
            observables: RawObservables::Single(observable),
            center: true,
        })
    }

    pub fn new(initial: Vec<f64>, kernels: Kernels, observables: Observables, center: bool) -> Result<Self> {
        let raw = RawChainSpec {
            states: initial.len(),
            initial,
            kernels: match kernels {
                Kernels::Homogeneous(k) => RawKernels::Single(k.to_rows()),
                Kernels::PerStep(ks) => RawKernels::PerStep(ks.iter().map(StepKernel::to_rows).collect()),
            },
            observables: match observables {
                Observables::Shared(g) => RawObservables::Single(g),
                Observables::PerStep(gs) => RawObservables::PerStep(gs),
            },
            center,
        };
        validate_spec(raw)
    }

    pub fn to_raw(&self) -> RawChainSpec {
        RawChainSpec {
            states: self.size,
            initial: self.initial.clone(),
            kernels: match &self.kernels {
                Kernels::Homogeneous(k) => RawKernels::Single(k.to_rows()),
                Kernels::PerStep(ks) => RawKernels::PerStep(ks.iter().map(StepKernel::to_rows).collect()),
            },
            observables: match &self.observables {
                Observables::Shared(g) => RawObservables::Single(g.clone()),
                Observables::PerStep(gs) => RawObservables::PerStep(gs.clone()),
            },
            center: self.center,
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    pub fn kernels(&self) -> &Kernels {
        &self.kernels
    }

    pub fn is_homogeneous(&self) -> bool {
        matches!(self.kernels, Kernels::Homogeneous(_))
    }

    pub fn centered(&self) -> bool {
        self.center
    }

    pub fn with_centering(mut self, center: bool) -> Self {
        self.center = center;
        self
    }

    pub fn zero_tol(&self) -> f64 {
        self.zero_tol
    }

    pub fn with_zero_tol(mut self, tol: f64) -> Self {
        self.zero_tol = tol;
        self
    }

    /// Longest horizon the per-step data supports, `None` if unbounded.
    pub fn max_len(&self) -> Option<usize> {
        let from_kernels = match &self.kernels {
            Kernels::Homogeneous(_) => None,
            Kernels::PerStep(ks) => Some(ks.len() + 1),
        };
        let from_obs = match &self.observables {
            Observables::Shared(_) => None,
            Observables::PerStep(gs) => Some(gs.len()),
        };
        match (from_kernels, from_obs) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }

    pub fn check_len(&self, n: usize) -> Result<()> {
        if n == 0 {
            return Err(Error::Parameter("chain length n must be at least 1".into()));
        }
        match self.max_len() {
            Some(max) if n > max => Err(Error::OutOfRange(format!(
                "length {n} exceeds the {max} steps described by the spec"
            ))),
            _ => Ok(()),
        }
    }

    /// `Q_k` for `k ≥ 2`.
    pub fn kernel(&self, k: usize) -> &StepKernel {
        assert!(k >= 2, "kernels start at step 2");
        match &self.kernels {
            Kernels::Homogeneous(q) => q,
            Kernels::PerStep(ks) => &ks[k - 2],
        }
    }

    /// The observable `g_k` before any centering.
    pub fn raw_observable(&self, k: usize) -> &[f64] {
        assert!(k >= 1, "observables start at step 1");
        match &self.observables {
            Observables::Shared(g) => g,
            Observables::PerStep(gs) => &gs[k - 1],
        }
    }

    /// `P_k` for `k = 1..=n`.
    pub fn marginals(&self, n: usize) -> Result<MarginalSequence> {
        self.check_len(n)?;
        let mut marginals = Vec::with_capacity(n);
        marginals.push(self.initial.clone());
        for k in 2..=n {
            let next = self.kernel(k).push_forward(&marginals[k - 2]);
            marginals.push(next);
        }
        Ok(MarginalSequence { marginals })
    }

    /// Observable values per step, centered under `P_k` when the spec asks for it.
    pub fn observable_table(&self, marginals: &MarginalSequence) -> ObservableTable {
        let n = marginals.len();
        let mut values = Vec::with_capacity(n * self.size);
        let mut means = Vec::with_capacity(n);
        for k in 1..=n {
            let g = self.raw_observable(k);
            let mean: f64 = g.iter().zip(marginals.get(k)).map(|(v, p)| v * p).sum();
            means.push(mean);
            if self.center {
                values.extend(g.iter().map(|v| v - mean));
            } else {
                values.extend_from_slice(g);
            }
        }
        ObservableTable {
            size: self.size,
            values,
            means,
        }
    }

    /// Same chain with `g_k` replaced by `w_k · g_k` for `k = 1..=weights.len()`.
    pub fn with_weights(&self, weights: &[f64]) -> Result<ChainSpec> {
        if weights.is_empty() {
            return Err(Error::Parameter("empty weight vector".into()));
        }
        self.check_len(weights.len())?;
        let gs = weights
            .iter()
            .enumerate()
            .map(|(i, w)| self.raw_observable(i + 1).iter().map(|v| w * v).collect())
            .collect();
        Ok(ChainSpec {
            observables: Observables::PerStep(gs),
            ..self.clone()
        })
    }
}

/// `P_1, ..., P_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalSequence {
    marginals: Vec<Vec<f64>>,
}

impl MarginalSequence {
    pub fn len(&self) -> usize {
        self.marginals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.marginals.is_empty()
    }

    /// `P_k`, 1-based.
    pub fn get(&self, k: usize) -> &[f64] {
        &self.marginals[k - 1]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.marginals.iter().map(Vec::as_slice)
    }
}

/// Effective observable values `x_k(s)`, one row of `size` per step.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservableTable {
    size: usize,
    values: Vec<f64>,
    means: Vec<f64>,
}

impl ObservableTable {
    pub fn len(&self) -> usize {
        self.means.len()
    }

    pub fn is_empty(&self) -> bool {
        self.means.is_empty()
    }

    /// Values at step `k`, 1-based.
    pub fn step(&self, k: usize) -> &[f64] {
        &self.values[(k - 1) * self.size..k * self.size]
    }

    /// `E g_k(ξ_k)` of the raw observable.
    pub fn raw_mean(&self, k: usize) -> f64 {
        self.means[k - 1]
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.values
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw(rows: Vec<Vec<f64>>, g: Vec<f64>) -> RawChainSpec {
        RawChainSpec {
            states: 2,
            initial: vec![0.5, 0.5],
            kernels: RawKernels::Single(rows),
            observables: RawObservables::Single(g),
            center: true,
        }
    }

    #[test]
    fn accepts_well_formed_two_state() {
        let spec = validate_spec(raw(vec![vec![0.6, 0.4], vec![0.4, 0.6]], vec![-1.0, 1.0])).unwrap();
        assert_eq!(spec.size(), 2);
        assert!(spec.is_homogeneous());
        assert_eq!(spec.max_len(), None);
    }

    #[test]
    fn rejects_short_row_sum() {
        let err = validate_spec(raw(vec![vec![0.7, 0.2], vec![0.4, 0.6]], vec![-1.0, 1.0])).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("row sum 0.9 ≠ 1"), "{msg}");
        assert!(msg.contains("row 0"), "{msg}");
    }

    #[test]
    fn rejects_observable_dimension() {
        let err = validate_spec(raw(vec![vec![0.6, 0.4], vec![0.4, 0.6]], vec![0.0, 1.0, 2.0])).unwrap_err();
        assert!(err.to_string().contains("dimension"));
    }

    #[test]
    fn rejects_negative_entry_and_empty_space() {
        let err = validate_spec(raw(vec![vec![1.2, -0.2], vec![0.4, 0.6]], vec![0.0, 1.0])).unwrap_err();
        assert!(err.to_string().contains("not a probability"));
        let empty = RawChainSpec {
            states: 0,
            initial: vec![],
            kernels: RawKernels::Single(vec![]),
            observables: RawObservables::Single(vec![]),
            center: true,
        };
        assert!(validate_spec(empty)
            .unwrap_err()
            .to_string()
            .contains("empty state space"));
    }

    #[test]
    fn collects_every_violation() {
        let mut r = raw(vec![vec![0.7, 0.2], vec![0.5, 0.6]], vec![0.0]);
        r.initial = vec![0.5, 0.6];
        match validate_spec(r).unwrap_err() {
            Error::Malformed(list) => assert_eq!(list.len(), 4, "{list:?}"),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn json_shapes_parse() {
        let single = r#"{"states":2,"initial":[1,0],"kernels":[[0.6,0.4],[0.4,0.6]],"observables":[-1,1]}"#;
        let spec = RawChainSpec::from_json(single).unwrap().validate().unwrap();
        assert!(spec.centered());
        let per_step = r#"{"states":2,"initial":[1,0],
            "kernels":[[[0.6,0.4],[0.4,0.6]],[[0.5,0.5],[0.5,0.5]]],
            "observables":[[-1,1],[0,1],[2,3]],"center":false}"#;
        let spec = RawChainSpec::from_json(per_step).unwrap().validate().unwrap();
        assert_eq!(spec.max_len(), Some(3));
        assert!(spec.check_len(4).is_err());
        assert!(!spec.centered());
        let back = serde_json::to_string(&spec.to_raw()).unwrap();
        let again = RawChainSpec::from_json(&back).unwrap().validate().unwrap();
        assert_eq!(again, spec);
    }

    #[test]
    fn one_step_marginal_by_hand() {
        let mut r = raw(vec![vec![0.6, 0.4], vec![0.4, 0.6]], vec![-1.0, 1.0]);
        r.initial = vec![1.0, 0.0];
        let spec = validate_spec(r).unwrap();
        let m = spec.marginals(2).unwrap();
        assert_eq!(m.get(1), &[1.0, 0.0]);
        assert!((m.get(2)[0] - 0.6).abs() < 1e-15 && (m.get(2)[1] - 0.4).abs() < 1e-15);
    }

    #[test]
    fn doubly_stochastic_keeps_uniform() {
        let q = StepKernel::new(vec![vec![0.2, 0.5, 0.3], vec![0.5, 0.1, 0.4], vec![0.3, 0.4, 0.3]]).unwrap();
        let spec = ChainSpec::homogeneous(vec![1.0 / 3.0; 3], q, vec![0.0, 1.0, 2.0]).unwrap();
        for p in spec.marginals(20).unwrap().iter() {
            for v in p {
                assert!((v - 1.0 / 3.0).abs() < 1e-12);
            }
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn unit_weights_leave_table_bitwise_equal() {
        let q = StepKernel::new(vec![vec![0.6, 0.4], vec![0.3, 0.7]]).unwrap();
        let spec = ChainSpec::homogeneous(vec![0.2, 0.8], q, vec![0.3, 1.7]).unwrap();
        let m = spec.marginals(6).unwrap();
        let weighted = spec.with_weights(&[1.0; 6]).unwrap();
        assert_eq!(spec.observable_table(&m), weighted.observable_table(&m));
    }
}
