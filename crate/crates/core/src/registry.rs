//! Boosting algorithms behind a common trait, looked up by name.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::baselines::{adaboost_train_with, AdaRound};
use crate::engine::{train_with, BoostConfig, Entry, RoundStats, Variant};
use crate::error::{Error, Result};
use crate::stumps::VoterPool;

/// Hyperparameter assignment, keyed by name.
pub type Params = BTreeMap<String, f64>;

pub const ROUNDS: &str = "rounds";
pub const LAMBDA: &str = "lambda";
pub const ALPHA_MAX: &str = "alpha_max";

/// A tunable hyperparameter and its default log-scale search range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperParam {
    pub name: &'static str,
    pub min: f64,
    pub max: f64,
    pub integer: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum History {
    QuadBoost(Vec<RoundStats>),
    AdaBoost(Vec<AdaRound>),
}

impl History {
    pub fn len(&self) -> usize {
        match self {
            History::QuadBoost(h) => h.len(),
            History::AdaBoost(h) => h.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// One CSV row per round, with a header.
    pub fn to_csv(&self) -> Result<String> {
        fn write<T: Serialize>(rows: &[T], header: &[&str]) -> Result<String> {
            let mut w = csv::Writer::from_writer(Vec::new());
            if rows.is_empty() {
                w.write_record(header)?;
            }
            for r in rows {
                w.serialize(r)?;
            }
            let bytes = w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?;
            Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
        }
        match self {
            History::QuadBoost(h) => write(
                h,
                &["round", "voter", "edge", "eta", "step", "weight", "quadratic_risk", "training_error", "voters"],
            ),
            History::AdaBoost(h) => write(
                h,
                &["round", "voter", "error", "edge", "alpha", "training_error"],
            ),
        }
    }
}

/// Result of one training run: the weights at each requested round count
/// and the full round history.
#[derive(Debug, Clone)]
pub struct Fit {
    /// `(rounds, entries)` for every requested checkpoint, in request
    /// order. A checkpoint past an early stop holds the final ensemble.
    pub snapshots: Vec<(usize, Vec<Entry>)>,
    pub history: History,
}

impl Fit {
    pub fn last(&self) -> &[Entry] {
        self.snapshots.last().map(|s| s.1.as_slice()).unwrap_or(&[])
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FitOptions {
    pub reweight_every: usize,
    /// Hard limit on `T`.
    pub max_rounds: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            reweight_every: 0,
            max_rounds: 10_000,
        }
    }
}

pub trait Algorithm: Send + Sync {
    fn name(&self) -> &'static str;

    fn hyperparameters(&self) -> Vec<HyperParam>;

    /// Trains on `labels` (the rows of `pool`) for `max(checkpoints)`
    /// rounds and snapshots the ensemble after each checkpoint round count.
    fn fit(
        &self,
        labels: &[f64],
        pool: &VoterPool,
        params: &Params,
        options: &FitOptions,
        checkpoints: &[usize],
    ) -> Result<Fit>;

    /// Round budget implied by `params`: the `rounds` hyperparameter if the
    /// algorithm has one, the cap otherwise.
    fn rounds(&self, params: &Params, options: &FitOptions) -> usize {
        let t = params
            .get(ROUNDS)
            .map_or(options.max_rounds, |&t| t.round().max(1.0) as usize);
        t.min(options.max_rounds)
    }
}

fn param(params: &Params, name: &str) -> Result<f64> {
    params
        .get(name)
        .copied()
        .ok_or_else(|| Error::InvalidParameter(format!("missing hyperparameter {name:?}")))
}

fn check_checkpoints(checkpoints: &[usize]) -> Result<usize> {
    match checkpoints.iter().max() {
        Some(&t) if t > 0 && !checkpoints.contains(&0) => Ok(t),
        _ => Err(Error::InvalidParameter(
            "checkpoints must be non-empty round counts of at least 1".into(),
        )),
    }
}

/// Records entries at checkpoint rounds; later checkpoints fall back to the
/// final state.
struct Snapshots<'a> {
    checkpoints: &'a [usize],
    taken: Vec<Option<Vec<Entry>>>,
}

impl<'a> Snapshots<'a> {
    fn new(checkpoints: &'a [usize]) -> Self {
        Self {
            checkpoints,
            taken: vec![None; checkpoints.len()],
        }
    }

    fn observe(&mut self, round: usize, entries: &[Entry]) {
        for (c, slot) in self.checkpoints.iter().zip(&mut self.taken) {
            if *c == round {
                *slot = Some(entries.to_vec());
            }
        }
    }

    fn finish(self, final_entries: &[Entry]) -> Vec<(usize, Vec<Entry>)> {
        self.checkpoints
            .iter()
            .zip(self.taken)
            .map(|(&c, s)| (c, s.unwrap_or_else(|| final_entries.to_vec())))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VariantKind {
    Vanilla,
    L1,
    L2,
    Linf,
}

/// One member of the QuadBoost family.
pub struct QuadBoost {
    kind: VariantKind,
}

impl QuadBoost {
    pub fn new(kind: VariantKind) -> Self {
        Self { kind }
    }

    pub fn variant(&self, params: &Params) -> Result<Variant> {
        let v = match self.kind {
            VariantKind::Vanilla => Variant::Vanilla,
            VariantKind::L1 => Variant::L1 {
                lambda: param(params, LAMBDA)?,
            },
            VariantKind::L2 => Variant::L2 {
                lambda: param(params, LAMBDA)?,
            },
            VariantKind::Linf => Variant::Linf {
                alpha_max: param(params, ALPHA_MAX)?,
            },
        };
        v.validate()?;
        Ok(v)
    }
}

impl Algorithm for QuadBoost {
    fn name(&self) -> &'static str {
        match self.kind {
            VariantKind::Vanilla => "quadboost-vanilla",
            VariantKind::L1 => "quadboost-l1",
            VariantKind::L2 => "quadboost-l2",
            VariantKind::Linf => "quadboost-linf",
        }
    }

    fn hyperparameters(&self) -> Vec<HyperParam> {
        let rounds = |min, max| HyperParam {
            name: ROUNDS,
            min,
            max,
            integer: true,
        };
        let real = |name, min, max| HyperParam {
            name,
            min,
            max,
            integer: false,
        };
        match self.kind {
            VariantKind::Vanilla => vec![rounds(1.0, 1e3)],
            VariantKind::L1 => vec![real(LAMBDA, 1e-4, 1.0)],
            VariantKind::L2 => vec![real(LAMBDA, 1.0, 1e3), rounds(10.0, 1e5)],
            VariantKind::Linf => vec![real(ALPHA_MAX, 1e-4, 1e-1), rounds(1.0, 1e5)],
        }
    }

    fn fit(
        &self,
        labels: &[f64],
        pool: &VoterPool,
        params: &Params,
        options: &FitOptions,
        checkpoints: &[usize],
    ) -> Result<Fit> {
        let rounds = check_checkpoints(checkpoints)?;
        let variant = self.variant(params)?;
        let rule = variant.rule()?;
        let mut config = BoostConfig::new(variant, rounds);
        config.reweight_every = options.reweight_every;
        let mut snaps = Snapshots::new(checkpoints);
        let t = train_with(labels, pool, &config, rule.as_ref(), &mut |e, s| {
            snaps.observe(s.round, e.entries())
        })?;
        Ok(Fit {
            snapshots: snaps.finish(t.ensemble.entries()),
            history: History::QuadBoost(t.history),
        })
    }
}

pub struct AdaBoost;

impl Algorithm for AdaBoost {
    fn name(&self) -> &'static str {
        "adaboost"
    }

    fn hyperparameters(&self) -> Vec<HyperParam> {
        vec![HyperParam {
            name: ROUNDS,
            min: 1e2,
            max: 1e6,
            integer: true,
        }]
    }

    fn fit(
        &self,
        labels: &[f64],
        pool: &VoterPool,
        _params: &Params,
        _options: &FitOptions,
        checkpoints: &[usize],
    ) -> Result<Fit> {
        let rounds = check_checkpoints(checkpoints)?;
        let mut snaps = Snapshots::new(checkpoints);
        let run = adaboost_train_with(labels, pool, rounds, &mut |s, r| {
            snaps.observe(r.round, s.ensemble.entries())
        })?;
        Ok(Fit {
            snapshots: snaps.finish(run.state.ensemble.entries()),
            history: History::AdaBoost(run.history),
        })
    }
}

#[derive(Default)]
pub struct Registry {
    algorithms: Vec<Box<dyn Algorithm>>,
}

impl Registry {
    pub fn new() -> Self {
        Self::default()
    }

    /// The four QuadBoost variants and AdaBoost.
    pub fn standard() -> Self {
        let mut r = Self::new();
        for kind in [
            VariantKind::Vanilla,
            VariantKind::L1,
            VariantKind::L2,
            VariantKind::Linf,
        ] {
            r.register(Box::new(QuadBoost::new(kind)));
        }
        r.register(Box::new(AdaBoost));
        r
    }

    /// Adds an algorithm, replacing any previous one with the same name.
    pub fn register(&mut self, algorithm: Box<dyn Algorithm>) {
        self.algorithms.retain(|a| a.name() != algorithm.name());
        self.algorithms.push(algorithm);
    }

    pub fn get(&self, name: &str) -> Result<&dyn Algorithm> {
        self.algorithms
            .iter()
            .find(|a| a.name() == name)
            .map(|a| a.as_ref())
            .ok_or_else(|| Error::UnknownAlgorithm(name.to_owned()))
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.algorithms.iter().map(|a| a.name()).collect()
    }
}
