//! AdaBoost over the same stump pool, used as the reference baseline.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::engine::{dot, Ensemble};
use crate::error::{Error, Result};
use crate::stumps::VoterPool;

/// Weight given to a voter with zero weighted error, `ln(10^15) / 2`.
pub fn zero_error_weight() -> f64 {
    1e15f64.ln() / 2.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaRound {
    pub round: usize,
    pub voter: usize,
    /// Weighted error `ε_t`.
    pub error: f64,
    /// `γ_t = 1/2 - ε_t`.
    pub edge: f64,
    pub alpha: f64,
    pub training_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AdaStop {
    RoundLimit,
    PerfectVoter,
    NoEdge,
}

/// Example weights and the voter ensemble between rounds.
#[derive(Debug, Clone)]
pub struct AdaState {
    pub sample_weights: Vec<f64>,
    pub ensemble: Ensemble,
}

#[derive(Debug, Clone)]
pub struct AdaBoostRun {
    pub state: AdaState,
    pub history: Vec<AdaRound>,
    pub stop: AdaStop,
}

pub fn adaboost_train(train: &Dataset, pool: &VoterPool, rounds: usize) -> Result<AdaBoostRun> {
    adaboost_train_with(&train.labels(), pool, rounds, &mut |_, _| {})
}

/// Runs up to `rounds` rounds, calling `observer` after each accepted one.
pub fn adaboost_train_with(
    labels: &[f64],
    pool: &VoterPool,
    rounds: usize,
    observer: &mut dyn FnMut(&AdaState, &AdaRound),
) -> Result<AdaBoostRun> {
    if rounds == 0 {
        return Err(Error::InvalidParameter("T must be at least 1".into()));
    }
    if pool.is_empty() {
        return Err(Error::InvalidParameter("voter pool is empty".into()));
    }
    let m = labels.len();
    if m != pool.samples() {
        return Err(Error::DimensionMismatch {
            expected: pool.samples(),
            found: m,
        });
    }
    // miss[j][k] = 1 where voter j errs on example k; exact zeros keep the
    // ε = 0 case detectable.
    let miss: Vec<Vec<f64>> = pool
        .eval()
        .columns()
        .map(|h| {
            h.iter()
                .zip(labels)
                .map(|(h, y)| if h * y < 0.0 { 1.0 } else { 0.0 })
                .collect()
        })
        .collect();

    let mut state = AdaState {
        sample_weights: vec![1.0 / m as f64; m],
        ensemble: Ensemble::empty(labels, pool.len()),
    };
    let mut history = Vec::new();
    let mut stop = AdaStop::RoundLimit;
    for round in 1..=rounds {
        let (voter, error) = miss
            .iter()
            .map(|c| dot(c, &state.sample_weights))
            .enumerate()
            .fold((0, f64::INFINITY), |best, (j, e)| if e < best.1 { (j, e) } else { best });
        if error >= 0.5 {
            stop = AdaStop::NoEdge;
            break;
        }
        let alpha = if error <= 0.0 {
            zero_error_weight()
        } else {
            0.5 * ((1.0 - error) / error).ln()
        };
        state.ensemble.add_to_weight(pool, voter, alpha);

        let h = pool.column(voter);
        for ((w, y), h) in state.sample_weights.iter_mut().zip(labels).zip(h) {
            *w *= (-alpha * y * h).exp();
        }
        let total: f64 = state.sample_weights.iter().sum();
        state.sample_weights.iter_mut().for_each(|w| *w /= total);

        let stats = AdaRound {
            round,
            voter,
            error,
            edge: 0.5 - error,
            alpha,
            training_error: state.ensemble.training_error(),
        };
        history.push(stats);
        observer(&state, &stats);
        if error <= 0.0 {
            stop = AdaStop::PerfectVoter;
            break;
        }
    }
    Ok(AdaBoostRun {
        state,
        history,
        stop,
    })
}

/// `exp(-2γ²T)`, the training-error guarantee after `T` rounds with edge at
/// least `γ`.
pub fn adaboost_bound(gamma: f64, rounds: usize) -> Result<f64> {
    if !(gamma > 0.0 && gamma <= 0.5) {
        return Err(Error::Domain(format!("γ must lie in (0, 1/2], got {gamma}")));
    }
    if rounds == 0 {
        return Err(Error::Domain("T must be at least 1".into()));
    }
    Ok((-2.0 * gamma * gamma * rounds as f64).exp())
}

/// Rounds after which `exp(-2γ²T)` falls to `ε`: `ln(1/ε) / (2γ²)`.
pub fn adaboost_rounds_for(gamma: f64, epsilon: f64) -> f64 {
    (1.0 / epsilon).ln() / (2.0 * gamma * gamma)
}

/// `Π_t sqrt(1 - 4γ_t²)` over a run's history.
pub fn product_bound(history: &[AdaRound]) -> f64 {
    history
        .iter()
        .map(|r| (1.0 - 4.0 * r.edge * r.edge).max(0.0).sqrt())
        .product()
}
