//! Serializable trained models: weights over stumps plus everything needed
//! to score raw feature vectors.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Normalizer};
use crate::engine::{sign, Entry};
use crate::error::{Error, Result};
use crate::stumps::{Stump, VoterPool};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedStump {
    pub attribute: usize,
    pub threshold: f64,
    pub polarity: i8,
    pub weight: f64,
}

impl WeightedStump {
    pub fn stump(&self) -> Stump {
        Stump::new(self.attribute, self.threshold, self.polarity)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub train_quadratic_risk: f64,
    pub train_error: f64,
    pub test_error: Option<f64>,
    pub voters: usize,
    pub rounds: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub schema_version: u32,
    pub algorithm: String,
    pub params: BTreeMap<String, f64>,
    pub reweight_every: usize,
    /// Seed of the train/test split the model was fit on.
    pub split_seed: u64,
    pub attribute_count: usize,
    /// Applied to raw features before the stumps.
    pub normalizer: Option<Normalizer>,
    pub entries: Vec<WeightedStump>,
    /// Every stump of the pool, in pool order.
    pub pool: Vec<Stump>,
    pub metrics: Metrics,
}

impl Model {
    pub fn weighted_stumps(pool: &VoterPool, entries: &[Entry]) -> Vec<WeightedStump> {
        entries
            .iter()
            .map(|e| {
                let s = pool.stumps()[e.voter];
                WeightedStump {
                    attribute: s.attribute,
                    threshold: s.threshold,
                    polarity: s.polarity,
                    weight: e.weight,
                }
            })
            .collect()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.weight).collect()
    }

    /// Score of an already normalized feature vector.
    pub fn score(&self, features: &[f64]) -> f64 {
        self.entries
            .iter()
            .map(|e| e.weight * e.stump().output(features) as f64)
            .sum()
    }

    fn check_width(&self, width: usize) -> Result<()> {
        if width != self.attribute_count {
            return Err(Error::DimensionMismatch {
                expected: self.attribute_count,
                found: width,
            });
        }
        Ok(())
    }

    /// Predictions on a normalized dataset.
    pub fn predict(&self, ds: &Dataset) -> Result<Vec<i8>> {
        self.check_width(ds.attribute_count)?;
        Ok(ds
            .samples
            .iter()
            .map(|s| sign(self.score(&s.features)) as i8)
            .collect())
    }

    /// Predictions on raw feature rows, normalized with the stored
    /// normalizer first.
    pub fn predict_raw(&self, rows: &[Vec<f64>]) -> Result<Vec<i8>> {
        rows.iter()
            .map(|x| {
                self.check_width(x.len())?;
                let z = match &self.normalizer {
                    Some(n) => n.transform(x)?,
                    None => x.clone(),
                };
                Ok(sign(self.score(&z)) as i8)
            })
            .collect()
    }

    pub fn error(&self, ds: &Dataset) -> Result<f64> {
        let pred = self.predict(ds)?;
        let wrong = pred
            .iter()
            .zip(&ds.samples)
            .filter(|(p, s)| **p != s.label)
            .count();
        Ok(wrong as f64 / ds.len() as f64)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: Model = serde_json::from_str(text)?;
        if model.schema_version != SCHEMA_VERSION {
            return Err(Error::InvalidParameter(format!(
                "unsupported model schema version {}",
                model.schema_version
            )));
        }
        Ok(model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{apply_normalizer, fit_normalizer, noisy_linear};
    use crate::engine::{train, BoostConfig, Variant};
    use crate::stumps::generate_pool;

    fn trained() -> (Model, Dataset, Dataset) {
        let raw = noisy_linear(80, 3, 0.1, 2);
        let norm = fit_normalizer(&raw);
        let ds = apply_normalizer(&norm, &raw).unwrap();
        let pool = generate_pool(&ds, 5).unwrap();
        let t = train(&ds, &pool, &BoostConfig::new(Variant::Vanilla, 30)).unwrap();
        let model = Model {
            schema_version: SCHEMA_VERSION,
            algorithm: "quadboost-vanilla".into(),
            params: BTreeMap::from([("rounds".to_owned(), 30.0)]),
            reweight_every: 0,
            split_seed: 0,
            attribute_count: 3,
            normalizer: Some(norm),
            entries: Model::weighted_stumps(&pool, t.ensemble.entries()),
            pool: pool.stumps().to_vec(),
            metrics: Metrics::default(),
        };
        let scores = t.ensemble.scores(&pool);
        for (s, x) in scores.iter().zip(&ds.samples) {
            assert!((s - model.score(&x.features)).abs() < 1e-12);
        }
        (model, raw, ds)
    }

    #[test]
    fn json_round_trip_preserves_predictions() {
        let (model, raw, ds) = trained();
        let back = Model::from_json(&model.to_json().unwrap()).unwrap();
        assert_eq!(back, model);
        let rows: Vec<Vec<f64>> = raw.samples.iter().map(|s| s.features.clone()).collect();
        assert_eq!(back.predict_raw(&rows).unwrap(), model.predict(&ds).unwrap());
    }

    #[test]
    fn rejects_wrong_width_and_version() {
        let (mut model, _, _) = trained();
        assert!(matches!(
            model.predict_raw(&[vec![0.0; 2]]),
            Err(Error::DimensionMismatch { expected: 3, found: 2 })
        ));
        model.schema_version = 99;
        assert!(Model::from_json(&model.to_json().unwrap()).is_err());
    }
}
