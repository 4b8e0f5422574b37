//! Empirical Rademacher complexity of the voter pool, the Hölder identity
//! behind the `L_p` combination complexity, and the resulting ensemble
//! risk bound.
//!
//! The bound has four summands:
//!
//! ```text
//! risk_S(α) + 4ℓ dim(α)^(1-1/p) ‖α‖_p R(H)
//!           + sqrt( ln(π² (dim(α)+1)² / 6δ) / 2m )
//!           + sqrt( ln log₂(2‖α‖_p) / m )
//! ```
//!
//! When `R(H)` is the sample estimate rather than its expectation, `δ` is
//! halved and the last summand tripled.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{dot, Variant};
use crate::error::{Error, Result};
use crate::stumps::{EvalMatrix, VoterPool};

pub const DEFAULT_DRAWS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RademacherEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub draws: usize,
    pub seed: u64,
}

/// Uniform ±1 signs for draw `draw`. Each draw owns its own ChaCha stream,
/// so draws can be generated in any order.
pub fn sign_vector(m: usize, seed: u64, draw: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(draw);
    (0..m)
        .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
        .collect()
}

/// `sup_h (1/m) Σ_k σ_k h(x_k)` over the columns of `eval`.
pub fn sup_correlation(eval: &EvalMatrix, sigma: &[f64]) -> f64 {
    let m = sigma.len() as f64;
    eval.columns()
        .map(|h| dot(h, sigma) / m)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Monte-Carlo estimate of the empirical Rademacher complexity of `pool`.
pub fn rademacher_mc(pool: &VoterPool, draws: usize, seed: u64) -> Result<RademacherEstimate> {
    if draws == 0 {
        return Err(Error::InvalidParameter("at least one draw is required".into()));
    }
    if pool.is_empty() {
        return Err(Error::InvalidParameter("voter pool is empty".into()));
    }
    let m = pool.samples();
    let values: Vec<f64> = (0..draws as u64)
        .into_par_iter()
        .map(|d| sup_correlation(pool.eval(), &sign_vector(m, seed, d)))
        .collect();
    let n = draws as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std_error = if draws > 1 {
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    } else {
        0.0
    };
    Ok(RademacherEstimate {
        mean,
        std_error,
        draws,
        seed,
    })
}

/// Hölder conjugate `q = p / (p - 1)`; `p = 1` gives `∞`, `p = ∞` gives 1.
pub fn conjugate(p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::Domain(format!("p must be at least 1, got {p}")));
    }
    Ok(if p == 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    })
}

/// `sup_{‖α‖_p = 1} α · v = ‖v‖_q`.
pub fn holder_sup(v: &[f64], p: f64) -> Result<f64> {
    let q = conjugate(p)?;
    Ok(if q.is_infinite() {
        v.iter().fold(0.0, |a, x| a.max(x.abs()))
    } else {
        v.iter().map(|x| x.abs().powf(q)).sum::<f64>().powf(1.0 / q)
    })
}

/// `n^(1 - 1/p)`, with `1/∞ = 0`.
pub fn combination_factor(n: usize, p: f64) -> f64 {
    let inv_p = if p.is_infinite() { 0.0 } else { 1.0 / p };
    (n as f64).powf(1.0 - inv_p)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lemma1Check {
    /// Per-draw supremum over the pool.
    pub sup: f64,
    /// Supremum over `n` voters and unit-`L_p` weights.
    pub lhs: f64,
    /// `n^(1 - 1/p)` times the pool supremum.
    pub rhs: f64,
}

/// For one sign vector, compares the complexity of unit-`L_p` combinations
/// of `n` voters with `n^(1-1/p)` times that of the pool. Every voter of the
/// combination achieves the pool supremum, so the combination supremum is
/// the `L_q` norm of `n` copies of it.
pub fn lemma1_check(pool: &VoterPool, p: f64, n: usize, sigma: &[f64]) -> Result<Lemma1Check> {
    conjugate(p)?;
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    if sigma.len() != pool.samples() {
        return Err(Error::DimensionMismatch {
            expected: pool.samples(),
            found: sigma.len(),
        });
    }
    let sup = sup_correlation(pool.eval(), sigma);
    let lhs = holder_sup(&vec![sup; n], p)?;
    let rhs = combination_factor(n, p) * sup;
    Ok(Lemma1Check { sup, lhs, rhs })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    /// Norm index, `1 ≤ p ≤ ∞`.
    pub p: f64,
    pub delta: f64,
    pub m: usize,
    /// Lipschitz constant of the clipped surrogate loss.
    pub lipschitz: f64,
    pub rademacher: f64,
    pub dim: usize,
    pub norm: f64,
    pub empirical_risk: f64,
    /// `rademacher` is a sample estimate rather than the expectation.
    pub empirical_rademacher: bool,
}

/// Lipschitz constant of the clipped quadratic loss.
pub const QUADRATIC_LIPSCHITZ: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundTerms {
    pub empirical_risk: f64,
    pub complexity: f64,
    pub confidence: f64,
    pub norm_term: f64,
    pub total: f64,
}

pub fn bound_value(inputs: &BoundInputs) -> Result<BoundTerms> {
    let BoundInputs {
        p,
        delta,
        m,
        lipschitz,
        rademacher,
        dim,
        norm,
        empirical_risk,
        empirical_rademacher,
    } = *inputs;
    conjugate(p)?;
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::Domain(format!("δ must lie in (0, 1], got {delta}")));
    }
    if m == 0 {
        return Err(Error::Domain("m must be at least 1".into()));
    }
    if !(lipschitz > 0.0) || !(rademacher >= 0.0) || !empirical_risk.is_finite() {
        return Err(Error::Domain(
            "ℓ must be positive, the Rademacher term non-negative and the risk finite".into(),
        ));
    }
    // ln log₂(2‖α‖) is negative below 1 and undefined at or below 1/2.
    if !(norm >= 1.0) || !norm.is_finite() {
        return Err(Error::Domain(format!(
            "‖α‖_p = {norm}: the log log₂(2‖α‖_p) term requires ‖α‖_p ≥ 1"
        )));
    }
    let (delta, last_factor) = if empirical_rademacher {
        (delta / 2.0, 3.0)
    } else {
        (delta, 1.0)
    };
    let m = m as f64;
    let complexity = 4.0 * lipschitz * combination_factor(dim, p) * norm * rademacher;
    let d1 = (dim + 1) as f64;
    let confidence = ((std::f64::consts::PI.powi(2) * d1 * d1 / (6.0 * delta)).ln() / (2.0 * m)).sqrt();
    let norm_term = last_factor * ((2.0 * norm).log2().ln() / m).sqrt();
    Ok(BoundTerms {
        empirical_risk,
        complexity,
        confidence,
        norm_term,
        total: empirical_risk + complexity + confidence + norm_term,
    })
}

/// Regularization strength suggested by the bound for each variant:
/// `4R` (L1), `8 sqrt(dim) R` (L2), `8 dim R` (L∞). Vanilla has none.
pub fn theoretical_lambda(variant: &Variant, rademacher: f64, dim: usize) -> Option<f64> {
    match variant {
        Variant::Vanilla => None,
        Variant::L1 { .. } => Some(4.0 * rademacher),
        Variant::L2 { .. } => Some(8.0 * (dim as f64).sqrt() * rademacher),
        Variant::Linf { .. } => Some(8.0 * dim as f64 * rademacher),
    }
}
