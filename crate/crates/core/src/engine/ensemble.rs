use serde::{Deserialize, Serialize};

use crate::stumps::VoterPool;

/// A voter of the pool and its weight in the vote.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    pub voter: usize,
    pub weight: f64,
}

/// Weighted voters plus the residuals `r_k = y_k - Σ_j α_j h_j(x_k)` on the
/// training sample. Each pool voter appears at most once.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    entries: Vec<Entry>,
    slot: Vec<Option<usize>>,
    labels: Vec<f64>,
    residuals: Vec<f64>,
    rounds: usize,
}

impl Ensemble {
    /// Empty ensemble over a pool of `voters` voters; residuals start at `y`.
    pub fn empty(labels: &[f64], voters: usize) -> Self {
        Self {
            entries: Vec::new(),
            slot: vec![None; voters],
            labels: labels.to_vec(),
            residuals: labels.to_vec(),
            rounds: 0,
        }
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn residuals(&self) -> &[f64] {
        &self.residuals
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    /// `dim(α)`: number of voters with a nonzero weight.
    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.weight).collect()
    }

    pub fn weight_of(&self, voter: usize) -> f64 {
        self.slot[voter].map_or(0.0, |i| self.entries[i].weight)
    }

    /// `(1/m) Σ r_k²`.
    pub fn quadratic_risk(&self) -> f64 {
        self.residuals.iter().map(|r| r * r).sum::<f64>() / self.residuals.len() as f64
    }

    /// Training zero-one error of `sgn(score)`, with `sgn(0) = -1`.
    pub fn training_error(&self) -> f64 {
        let wrong = self
            .labels
            .iter()
            .zip(&self.residuals)
            .filter(|(y, r)| sign(*y - *r) != **y)
            .count();
        wrong as f64 / self.labels.len() as f64
    }

    /// Adds `delta` to the weight of `voter` (inserting it if absent) and
    /// updates the residuals. A weight that lands exactly on zero removes
    /// the entry.
    pub fn add_to_weight(&mut self, pool: &VoterPool, voter: usize, delta: f64) {
        let h = pool.column(voter);
        for (r, h) in self.residuals.iter_mut().zip(h) {
            *r -= delta * h;
        }
        match self.slot[voter] {
            Some(i) => self.entries[i].weight += delta,
            None => {
                self.slot[voter] = Some(self.entries.len());
                self.entries.push(Entry {
                    voter,
                    weight: delta,
                });
            }
        }
        if self.weight_of(voter) == 0.0 {
            self.prune();
        }
    }

    /// Replaces the weight of `voter` by `weight`, updating residuals.
    pub fn set_weight(&mut self, pool: &VoterPool, voter: usize, weight: f64) {
        let old = self.weight_of(voter);
        let h = pool.column(voter);
        for (r, h) in self.residuals.iter_mut().zip(h) {
            *r += old * h;
            *r -= weight * h;
        }
        match self.slot[voter] {
            Some(i) => self.entries[i].weight = weight,
            None => {
                self.slot[voter] = Some(self.entries.len());
                self.entries.push(Entry { voter, weight });
            }
        }
        if weight == 0.0 {
            self.prune();
        }
    }

    /// Boosting rounds that changed the ensemble so far.
    pub fn rounds(&self) -> usize {
        self.rounds
    }

    pub(crate) fn count_round(&mut self) -> usize {
        self.rounds += 1;
        self.rounds
    }

    pub(crate) fn residuals_mut(&mut self) -> &mut [f64] {
        &mut self.residuals
    }

    /// Overwrites a stored weight without touching the residuals.
    pub(crate) fn overwrite_weight(&mut self, voter: usize, weight: f64) {
        if let Some(i) = self.slot[voter] {
            self.entries[i].weight = weight;
        }
    }

    pub(crate) fn prune(&mut self) {
        self.entries.retain(|e| e.weight != 0.0);
        self.slot.iter_mut().for_each(|s| *s = None);
        for (i, e) in self.entries.iter().enumerate() {
            self.slot[e.voter] = Some(i);
        }
    }

    /// Scores `Σ_j α_j h_j(x_k)` recomputed from the pool.
    pub fn scores(&self, pool: &VoterPool) -> Vec<f64> {
        let mut s = vec![0.0; pool.samples()];
        for e in &self.entries {
            for (s, h) in s.iter_mut().zip(pool.column(e.voter)) {
                *s += e.weight * h;
            }
        }
        s
    }

    /// Residuals `y - score` recomputed from scratch.
    pub fn recomputed_residuals(&self, pool: &VoterPool) -> Vec<f64> {
        self.labels
            .iter()
            .zip(self.scores(pool))
            .map(|(y, s)| y - s)
            .collect()
    }
}

/// `+1` for positive scores, `-1` otherwise.
#[inline]
pub fn sign(score: f64) -> f64 {
    if score > 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// `‖α‖_p`; `p = ∞` gives the max norm.
pub fn lp_norm(weights: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        weights.iter().fold(0.0, |m, a| m.max(a.abs()))
    } else if p == 1.0 {
        weights.iter().map(|a| a.abs()).sum()
    } else {
        weights
            .iter()
            .map(|a| a.abs().powf(p))
            .sum::<f64>()
            .powf(1.0 / p)
    }
}

/// Everything recorded about one boosting round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundStats {
    /// 1-based round number.
    pub round: usize,
    pub voter: usize,
    /// `g = μ_j - M_j` of the selected voter before the update.
    pub edge: f64,
    pub eta: f64,
    /// Weight change applied this round.
    pub step: f64,
    /// Weight of the voter after the round.
    pub weight: f64,
    pub quadratic_risk: f64,
    pub training_error: f64,
    /// `dim(α)` after the round.
    pub voters: usize,
}
