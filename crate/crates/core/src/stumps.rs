//! Decision stumps and the finite, negation-closed voter pool built from
//! them.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};

pub const DEFAULT_PER_ATTRIBUTE: usize = 10;

/// `polarity` if `x[attribute] <= threshold`, `-polarity` otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stump {
    pub attribute: usize,
    pub threshold: f64,
    pub polarity: i8,
}

impl Stump {
    pub fn new(attribute: usize, threshold: f64, polarity: i8) -> Self {
        debug_assert!(polarity == 1 || polarity == -1);
        Self {
            attribute,
            threshold,
            polarity,
        }
    }

    pub fn complement(&self) -> Self {
        Self {
            polarity: -self.polarity,
            ..*self
        }
    }

    #[inline]
    pub fn output(&self, x: &[f64]) -> i8 {
        if x[self.attribute] <= self.threshold {
            self.polarity
        } else {
            -self.polarity
        }
    }
}

pub fn stump_eval(stump: &Stump, x: &[f64]) -> Result<i8> {
    if stump.attribute >= x.len() {
        return Err(Error::AttributeOutOfRange {
            index: stump.attribute,
            len: x.len(),
        });
    }
    Ok(stump.output(x))
}

/// Voter outputs on a fixed sample, stored voter-contiguous: column `j`
/// holds `h_j(x_1), ..., h_j(x_m)` as ±1.0.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl EvalMatrix {
    pub fn from_columns(rows: usize, columns: Vec<Vec<f64>>) -> Self {
        let cols = columns.len();
        let mut data = Vec::with_capacity(rows * cols);
        for c in columns {
            assert_eq!(c.len(), rows, "ragged evaluation column");
            data.extend(c);
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn column(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[col * self.rows + row]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.rows.max(1)).take(self.cols)
    }

    /// The sub-matrix made of the given rows, in that order.
    pub fn select_rows(&self, rows: &[usize]) -> EvalMatrix {
        let columns = self
            .columns()
            .map(|c| rows.iter().map(|&r| c[r]).collect())
            .collect();
        EvalMatrix::from_columns(rows.len(), columns)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VoterPool {
    stumps: Vec<Stump>,
    eval: EvalMatrix,
    etas: Vec<f64>,
}

impl VoterPool {
    /// Builds a pool and evaluates it on `ds`.
    pub fn new(stumps: Vec<Stump>, ds: &Dataset) -> Result<Self> {
        let eval = eval_pool(&stumps, ds)?;
        Ok(Self::from_parts(stumps, eval))
    }

    pub fn from_parts(stumps: Vec<Stump>, eval: EvalMatrix) -> Self {
        assert_eq!(stumps.len(), eval.cols());
        let etas = eval
            .columns()
            .map(|c| c.iter().map(|h| h * h).sum::<f64>() / c.len() as f64)
            .collect();
        Self { stumps, eval, etas }
    }

    pub fn stumps(&self) -> &[Stump] {
        &self.stumps
    }

    pub fn eval(&self) -> &EvalMatrix {
        &self.eval
    }

    /// Number of voters `n`.
    pub fn len(&self) -> usize {
        self.stumps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stumps.is_empty()
    }

    /// Number of samples `m` the pool was evaluated on.
    pub fn samples(&self) -> usize {
        self.eval.rows()
    }

    #[inline]
    pub fn column(&self, j: usize) -> &[f64] {
        self.eval.column(j)
    }

    /// Same voters, evaluation restricted to a subset of the samples.
    pub fn select_rows(&self, rows: &[usize]) -> VoterPool {
        VoterPool::from_parts(self.stumps.clone(), self.eval.select_rows(rows))
    }

    /// `η_j = (1/m) Σ_k h_j(x_k)²`.
    #[inline]
    pub fn eta(&self, j: usize) -> f64 {
        self.etas[j]
    }

    /// For every voter, the index of a voter whose column is its exact
    /// negation, if any.
    pub fn complements(&self) -> Vec<Option<usize>> {
        (0..self.len())
            .map(|j| {
                let cj = self.column(j);
                (0..self.len()).find(|&i| {
                    self.column(i).iter().zip(cj).all(|(a, b)| *a == -*b)
                })
            })
            .collect()
    }
}

/// `n = 2 × per_attribute × attribute_count` stumps. For each attribute the
/// thresholds sit at the training quantiles `i / (per_attribute + 1)`;
/// each threshold contributes the pair (+1, -1) at consecutive indices.
pub fn generate_pool(train: &Dataset, per_attribute: usize) -> Result<VoterPool> {
    if per_attribute == 0 {
        return Err(Error::InvalidParameter(
            "at least one stump per attribute is required".into(),
        ));
    }
    let mut stumps = Vec::with_capacity(2 * per_attribute * train.attribute_count);
    for attribute in 0..train.attribute_count {
        let mut values = train.column(attribute);
        values.sort_by(f64::total_cmp);
        for i in 1..=per_attribute {
            let threshold = quantile(&values, i as f64 / (per_attribute + 1) as f64);
            let stump = Stump::new(attribute, threshold, 1);
            stumps.push(stump);
            stumps.push(stump.complement());
        }
    }
    VoterPool::new(stumps, train)
}

/// Linear interpolation between order statistics of sorted `values`.
fn quantile(sorted: &[f64], level: f64) -> f64 {
    let pos = level * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Entry `(k, j)` is `h_j(x_k)`.
pub fn eval_pool(stumps: &[Stump], ds: &Dataset) -> Result<EvalMatrix> {
    if let Some(s) = stumps.iter().find(|s| s.attribute >= ds.attribute_count) {
        return Err(Error::DimensionMismatch {
            expected: s.attribute + 1,
            found: ds.attribute_count,
        });
    }
    let columns = stumps
        .par_iter()
        .map(|s| {
            ds.samples
                .iter()
                .map(|x| s.output(&x.features) as f64)
                .collect()
        })
        .collect();
    Ok(EvalMatrix::from_columns(ds.len(), columns))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{noisy_linear, LabeledSample};

    #[test]
    fn stump_outputs() {
        let s = Stump::new(0, 0.5, 1);
        assert_eq!(stump_eval(&s, &[0.2]).unwrap(), 1);
        assert_eq!(stump_eval(&s, &[0.7]).unwrap(), -1);
        assert_eq!(stump_eval(&s.complement(), &[0.2]).unwrap(), -1);
        assert_eq!(stump_eval(&s, &[0.5]).unwrap(), 1);
        assert!(matches!(
            stump_eval(&Stump::new(3, 0.0, 1), &[0.1]),
            Err(Error::AttributeOutOfRange { index: 3, len: 1 })
        ));
    }

    #[test]
    fn pool_size_and_symmetry() {
        let ds = noisy_linear(40, 3, 0.1, 5);
        let pool = generate_pool(&ds, 10).unwrap();
        assert_eq!(pool.len(), 60);
        for (j, c) in pool.complements().iter().enumerate() {
            assert!(c.is_some(), "voter {j} has no complement");
        }
        for j in 0..pool.len() {
            assert_eq!(pool.eta(j), 1.0);
        }
    }

    #[test]
    fn single_threshold_at_median() {
        let samples = [-0.9, 0.9]
            .iter()
            .map(|&v| LabeledSample {
                features: vec![v],
                label: 1,
            })
            .collect();
        let ds = Dataset::new("t", 1, samples).unwrap();
        let pool = generate_pool(&ds, 1).unwrap();
        assert_eq!(pool.len(), 2);
        assert_eq!(pool.stumps()[0].threshold, 0.0);
        assert_eq!(pool.column(0), &[1.0, -1.0]);
        assert_eq!(pool.column(1), &[-1.0, 1.0]);
    }

    #[test]
    fn re_evaluation_matches_stored_matrix() {
        let ds = noisy_linear(30, 4, 0.0, 2);
        let pool = generate_pool(&ds, 3).unwrap();
        assert_eq!(&eval_pool(pool.stumps(), &ds).unwrap(), pool.eval());

        let one = ds.subset(&[4]);
        let m = eval_pool(&pool.stumps()[..1], &one).unwrap();
        assert_eq!((m.rows(), m.cols()), (1, 1));
        assert_eq!(
            m.get(0, 0),
            stump_eval(&pool.stumps()[0], &one.samples[0].features).unwrap() as f64
        );
    }

    #[test]
    fn eval_rejects_narrow_dataset() {
        let ds = noisy_linear(5, 1, 0.0, 2);
        assert!(eval_pool(&[Stump::new(2, 0.0, 1)], &ds).is_err());
    }
}
