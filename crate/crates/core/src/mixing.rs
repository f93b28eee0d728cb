//! Lower/upper psi-mixing coefficients and maximal correlation between two
//! finite-valued variables, and the inequality `ρ ≤ 1 - ψ'` tying them.
//!
//! For a Markov chain the coefficients between `σ(ξ_1..ξ_m)` and
//! `σ(ξ_{m+k}, ...)` reduce to those of the pair `(ξ_m, ξ_{m+k})`, whose
//! joint law [`lag_joint`] computes exactly.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::chain::{ChainSpec, PROB_TOL};
use crate::error::{Error, Result};

/// Masses below this are dropped before normalising.
pub const ATOM_TOL: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq)]
pub struct JointDistribution {
    left_size: usize,
    right_size: usize,
    mass: Vec<f64>,
    left_marginal: Vec<f64>,
    right_marginal: Vec<f64>,
}

impl JointDistribution {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let left = rows.len();
        let right = rows.first().map_or(0, Vec::len);
        if left == 0 || right == 0 {
            return Err(Error::Malformed(vec!["empty joint distribution".into()]));
        }
        if rows.iter().any(|r| r.len() != right) {
            return Err(Error::Malformed(vec!["dimension: ragged joint matrix".into()]));
        }
        Self::from_flat(left, right, rows.into_iter().flatten().collect())
    }

    pub fn from_flat(left_size: usize, right_size: usize, mass: Vec<f64>) -> Result<Self> {
        if mass.len() != left_size * right_size {
            return Err(Error::Malformed(vec![format!(
                "dimension: {} masses for a {left_size}x{right_size} joint",
                mass.len()
            )]));
        }
        if mass.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::Malformed(vec!["joint: negative or non-finite mass".into()]));
        }
        let total: f64 = mass.iter().sum();
        if (total - 1.0).abs() > PROB_TOL {
            return Err(Error::Malformed(vec![format!("joint: total mass {total} ≠ 1")]));
        }
        let left_marginal = mass.chunks(right_size).map(|r| r.iter().sum()).collect();
        let right_marginal = (0..right_size)
            .map(|y| (0..left_size).map(|x| mass[x * right_size + y]).sum())
            .collect();
        Ok(Self {
            left_size,
            right_size,
            mass,
            left_marginal,
            right_marginal,
        })
    }

    pub fn left_size(&self) -> usize {
        self.left_size
    }

    pub fn right_size(&self) -> usize {
        self.right_size
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.mass[x * self.right_size + y]
    }

    pub fn left_marginal(&self) -> &[f64] {
        &self.left_marginal
    }

    pub fn right_marginal(&self) -> &[f64] {
        &self.right_marginal
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.mass.chunks(self.right_size).map(<[f64]>::to_vec).collect()
    }

    fn support(&self) -> (Vec<usize>, Vec<usize>) {
        let pick = |m: &[f64]| (0..m.len()).filter(|&i| m[i] > ATOM_TOL).collect::<Vec<_>>();
        (pick(&self.left_marginal), pick(&self.right_marginal))
    }
}

/// Joint law of `(ξ_m, ξ_{m+k})`: `p(x, y) = P_m(x) (Q_{m+1} ⋯ Q_{m+k})(x, y)`.
pub fn lag_joint(chain: &ChainSpec, m: usize, k: usize) -> Result<JointDistribution> {
    if m == 0 || k == 0 {
        return Err(Error::OutOfRange(format!("start {m} and lag {k} must both be ≥ 1")));
    }
    let marginals = chain
        .marginals(m + k)
        .map_err(|e| Error::OutOfRange(format!("start {m} + lag {k}: {e}")))?;
    let size = chain.size();
    let pm = marginals.get(m);
    let mut mass = Vec::with_capacity(size * size);
    for (x, &px) in pm.iter().enumerate() {
        let mut row = vec![0.0; size];
        row[x] = px;
        for step in m + 1..=m + k {
            row = chain.kernel(step).push_forward(&row);
        }
        mass.extend(row);
    }
    JointDistribution::from_flat(size, size, renormalise(mass))
}

// Rounding in long kernel products can leave the total a few ulps off 1.
fn renormalise(mut mass: Vec<f64>) -> Vec<f64> {
    let total: f64 = mass.iter().sum();
    if total > 0.0 {
        mass.iter_mut().for_each(|p| *p /= total);
    }
    mass
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MixingCoeffs {
    pub psi_lower: f64,
    pub psi_upper: f64,
    pub rho: f64,
    /// `max(ψ* - 1, 1 - ψ')`.
    pub psi: f64,
    /// A marginal has a single positive atom; coefficients are conventional.
    pub degenerate: bool,
    pub dropped_left: Vec<usize>,
    pub dropped_right: Vec<usize>,
}

impl MixingCoeffs {
    /// `(1 - ψ') - ρ`, nonnegative up to rounding.
    pub fn bradley_gap(&self) -> f64 {
        (1.0 - self.psi_lower) - self.rho
    }
}

/// Extremes of `p(x, y) / (p_X(x) p_Y(y))` over atoms with positive mass.
///
/// The event-level inf/sup is attained at single atoms: for fixed atoms of
/// `B` the ratio over `A` is a mediant of atomwise ratios, and likewise in
/// the other argument. Returns `(1, 1, true)` for degenerate marginals.
pub fn psi_coeffs(joint: &JointDistribution) -> (f64, f64, bool) {
    let (left, right) = joint.support();
    if left.len() < 2 || right.len() < 2 {
        return (1.0, 1.0, true);
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &x in &left {
        for &y in &right {
            let r = joint.get(x, y) / (joint.left_marginal[x] * joint.right_marginal[y]);
            lo = lo.min(r);
            hi = hi.max(r);
        }
    }
    (lo, hi, false)
}

/// Second singular value of `B(x, y) = p(x, y) / √(p_X(x) p_Y(y))`.
///
/// The top singular triple is `(1, √p_X, √p_Y)`; it is subtracted before the
/// decomposition so the answer is the largest remaining singular value.
pub fn rho_coeff(joint: &JointDistribution) -> (f64, bool) {
    let (left, right) = joint.support();
    if left.len() < 2 || right.len() < 2 {
        return (0.0, true);
    }
    let sl: Vec<f64> = left.iter().map(|&x| joint.left_marginal[x].sqrt()).collect();
    let sr: Vec<f64> = right.iter().map(|&y| joint.right_marginal[y].sqrt()).collect();
    let deflated = DMatrix::from_fn(left.len(), right.len(), |i, j| {
        joint.get(left[i], right[j]) / (sl[i] * sr[j]) - sl[i] * sr[j]
    });
    let top = deflated.singular_values().iter().copied().fold(0.0_f64, f64::max);
    (top.clamp(0.0, 1.0), false)
}

pub fn mixing_coeffs(joint: &JointDistribution) -> MixingCoeffs {
    let (psi_lower, psi_upper, degenerate) = psi_coeffs(joint);
    let (rho, _) = rho_coeff(joint);
    let drop = |m: &[f64]| (0..m.len()).filter(|&i| m[i] <= ATOM_TOL).collect::<Vec<_>>();
    MixingCoeffs {
        psi_lower,
        psi_upper,
        rho,
        psi: (psi_upper - 1.0).max(1.0 - psi_lower),
        degenerate,
        dropped_left: drop(&joint.left_marginal),
        dropped_right: drop(&joint.right_marginal),
    }
}

/// `(1 - ψ') - ρ`; never below `-1e-10`.
pub fn bradley_gap(joint: &JointDistribution) -> f64 {
    mixing_coeffs(joint).bradley_gap()
}

/// Coefficients at one lag over the finite horizon `n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LagCoeffs {
    pub lag: usize,
    /// `min_m ψ'(ξ_m, ξ_{m+lag})` over `1 ≤ m ≤ n - lag`.
    pub psi_lower: f64,
    pub psi_upper: f64,
    pub rho: f64,
    /// Smallest Bradley gap over the same starts.
    pub bradley_gap: f64,
}

/// Per-lag extremes over all starts `m` with `m + lag ≤ n`.
///
/// The coefficients are infima/suprema over every `m ≥ 1`; only the finite
/// horizon is swept.
pub fn lag_profile(chain: &ChainSpec, lags: &[usize], n: usize) -> Result<Vec<LagCoeffs>> {
    let mut out = Vec::with_capacity(lags.len());
    for &lag in lags {
        if lag == 0 || lag >= n {
            return Err(Error::OutOfRange(format!("lag {lag} needs 1 ≤ lag < horizon {n}")));
        }
        let mut acc = LagCoeffs {
            lag,
            psi_lower: f64::INFINITY,
            psi_upper: f64::NEG_INFINITY,
            rho: 0.0,
            bradley_gap: f64::INFINITY,
        };
        for m in 1..=n - lag {
            let c = mixing_coeffs(&lag_joint(chain, m, lag)?);
            acc.psi_lower = acc.psi_lower.min(c.psi_lower);
            acc.psi_upper = acc.psi_upper.max(c.psi_upper);
            acc.rho = acc.rho.max(c.rho);
            acc.bradley_gap = acc.bradley_gap.min(c.bradley_gap());
        }
        out.push(acc);
    }
    Ok(out)
}
