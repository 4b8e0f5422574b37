//! The QuadBoost training engine.
//!
//! Every round scans the pool for the voter whose outputs correlate most
//! with the current residuals (`g_j = μ_j - M_j = (1/m) Σ_k h_j(x_k) r_k`),
//! gives it the weight prescribed by the active [`WeightRule`] and updates
//! the residuals. Voters picked a second time accumulate the new step into
//! their existing entry, so `dim(α)` counts distinct voters.

mod ensemble;
pub mod rules;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::stumps::VoterPool;

pub use ensemble::{lp_norm, sign, Ensemble, Entry, RoundStats};
pub use rules::{
    weight_l1, weight_l2, weight_linf, weight_vanilla, LInf, Vanilla, Variant, WeightRule, L1, L2,
};

pub const DEFAULT_STOP_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoostConfig {
    #[serde(flatten)]
    pub variant: Variant,
    /// Maximum number of rounds `T`.
    pub rounds: usize,
    /// Run a reweighting pass after every this many rounds; 0 disables it.
    pub reweight_every: usize,
    pub stop_tolerance: f64,
    pub seed: u64,
}

impl BoostConfig {
    pub fn new(variant: Variant, rounds: usize) -> Self {
        Self {
            variant,
            rounds,
            reweight_every: 0,
            stop_tolerance: DEFAULT_STOP_TOLERANCE,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.variant.validate()?;
        if self.rounds == 0 {
            return Err(Error::InvalidParameter("T must be at least 1".into()));
        }
        if !(self.stop_tolerance >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "stop tolerance must be non-negative, got {}",
                self.stop_tolerance
            )));
        }
        Ok(())
    }
}

/// Inner product with a fixed summation order (four interleaved partial
/// sums), so results never depend on how voters are scheduled.
#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let chunks = a.len() / 4;
    for i in 0..chunks {
        for l in 0..4 {
            acc[l] += a[4 * i + l] * b[4 * i + l];
        }
    }
    let mut tail = 0.0;
    for i in 4 * chunks..a.len() {
        tail += a[i] * b[i];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// `g_j = (1/m) Σ_k h_j(x_k) r_k` for every voter.
pub fn edges(pool: &VoterPool, residuals: &[f64]) -> Vec<f64> {
    assert_eq!(residuals.len(), pool.samples(), "residual length");
    let m = residuals.len() as f64;
    pool.eval().columns().map(|h| dot(h, residuals) / m).collect()
}

/// `argmax_j |g_j|`, lowest index on ties.
pub fn select_voter(g: &[f64]) -> (usize, f64) {
    let mut best = (0, g.first().copied().unwrap_or(0.0));
    for (j, &v) in g.iter().enumerate().skip(1) {
        if v.abs() > best.1.abs() {
            best = (j, v);
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RoundOutcome {
    Step(RoundStats),
    /// No voter has an edge above the rule's stopping threshold; the
    /// ensemble is unchanged.
    Stop,
}

pub fn boost_round(
    ensemble: &mut Ensemble,
    pool: &VoterPool,
    rule: &dyn WeightRule,
    stop_tolerance: f64,
) -> Result<RoundOutcome> {
    let g = edges(pool, ensemble.residuals());
    let (voter, edge) = select_voter(&g);
    if !(edge.abs() > rule.stop_threshold(stop_tolerance)) {
        return Ok(RoundOutcome::Stop);
    }
    let eta = pool.eta(voter);
    let step = rule.weight(edge, eta)?;
    if step == 0.0 {
        return Ok(RoundOutcome::Stop);
    }
    ensemble.add_to_weight(pool, voter, step);
    let round = ensemble.count_round();
    Ok(RoundOutcome::Step(RoundStats {
        round,
        voter,
        edge,
        eta,
        step,
        weight: ensemble.weight_of(voter),
        quadratic_risk: ensemble.quadratic_risk(),
        training_error: ensemble.training_error(),
        voters: ensemble.dim(),
    }))
}

/// Revisits every voter in insertion order: removes its contribution,
/// recomputes its edge against the rest of the ensemble and assigns the
/// weight given by `rule`. Voters whose weight becomes zero are dropped.
pub fn reweight_pass(ensemble: &mut Ensemble, pool: &VoterPool, rule: &dyn WeightRule) -> Result<()> {
    let voters: Vec<usize> = ensemble.entries().iter().map(|e| e.voter).collect();
    let m = pool.samples() as f64;
    for voter in voters {
        let old = ensemble.weight_of(voter);
        let h = pool.column(voter);
        let r = ensemble.residuals_mut();
        for (r, h) in r.iter_mut().zip(h) {
            *r += old * h;
        }
        let g = dot(h, r) / m;
        let new = rule.weight(g, pool.eta(voter))?;
        for (r, h) in r.iter_mut().zip(h) {
            *r -= new * h;
        }
        ensemble.overwrite_weight(voter, new);
    }
    ensemble.prune();
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    RoundLimit,
    SmallEdge,
}

#[derive(Debug, Clone)]
pub struct Training {
    pub ensemble: Ensemble,
    pub history: Vec<RoundStats>,
    pub stop: StopReason,
    pub reweight_passes: usize,
}

/// Trains on `train`, whose rows must be the rows `pool` was evaluated on.
pub fn train(train: &Dataset, pool: &VoterPool, config: &BoostConfig) -> Result<Training> {
    let rule = config.variant.rule()?;
    train_with(&train.labels(), pool, config, rule.as_ref(), &mut |_, _| {})
}

/// Runs up to `config.rounds` rounds with an explicit weight rule, calling
/// `observer` after every round (and after any reweighting pass it
/// triggers).
pub fn train_with(
    labels: &[f64],
    pool: &VoterPool,
    config: &BoostConfig,
    rule: &dyn WeightRule,
    observer: &mut dyn FnMut(&Ensemble, &RoundStats),
) -> Result<Training> {
    config.validate()?;
    if pool.is_empty() {
        return Err(Error::InvalidParameter("voter pool is empty".into()));
    }
    if labels.len() != pool.samples() {
        return Err(Error::DimensionMismatch {
            expected: pool.samples(),
            found: labels.len(),
        });
    }
    let mut ensemble = Ensemble::empty(labels, pool.len());
    let mut history = Vec::new();
    let mut stop = StopReason::RoundLimit;
    let mut reweight_passes = 0;
    for t in 1..=config.rounds {
        let stats = match boost_round(&mut ensemble, pool, rule, config.stop_tolerance)? {
            RoundOutcome::Step(s) => s,
            RoundOutcome::Stop => {
                stop = StopReason::SmallEdge;
                break;
            }
        };
        history.push(stats);
        if config.reweight_every > 0 && t % config.reweight_every == 0 {
            reweight_pass(&mut ensemble, pool, rule)?;
            reweight_passes += 1;
        }
        observer(&ensemble, &stats);
    }
    Ok(Training {
        ensemble,
        history,
        stop,
        reweight_passes,
    })
}

fn check_pool_fits(pool: &VoterPool, ds: &Dataset) -> Result<()> {
    match pool.stumps().iter().map(|s| s.attribute).max() {
        Some(a) if a >= ds.attribute_count => Err(Error::DimensionMismatch {
            expected: a + 1,
            found: ds.attribute_count,
        }),
        _ => Ok(()),
    }
}

/// Weighted scores `α · h(x)` on an arbitrary dataset.
pub fn scores(ensemble: &Ensemble, pool: &VoterPool, ds: &Dataset) -> Result<Vec<f64>> {
    check_pool_fits(pool, ds)?;
    Ok(ds
        .samples
        .iter()
        .map(|s| {
            ensemble
                .entries()
                .iter()
                .map(|e| e.weight * pool.stumps()[e.voter].output(&s.features) as f64)
                .sum()
        })
        .collect())
}

/// `sgn(α · h(x))` with `sgn(0) = -1`.
pub fn predict(ensemble: &Ensemble, pool: &VoterPool, ds: &Dataset) -> Result<Vec<i8>> {
    Ok(scores(ensemble, pool, ds)?
        .into_iter()
        .map(|s| sign(s) as i8)
        .collect())
}

pub fn zero_one_error(ensemble: &Ensemble, pool: &VoterPool, ds: &Dataset) -> Result<f64> {
    let pred = predict(ensemble, pool, ds)?;
    let wrong = pred
        .iter()
        .zip(&ds.samples)
        .filter(|(p, s)| **p != s.label)
        .count();
    Ok(wrong as f64 / ds.len() as f64)
}

pub fn quadratic_risk(ensemble: &Ensemble) -> f64 {
    ensemble.quadratic_risk()
}

#[cfg(test)]
mod tests;
