//! Dataset ingestion, hyperbolic-tangent normalization and the random
//! train/test and k-fold partitions used by the experiment protocol.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Upper bound on the training-set size of [`split_train_test`].
pub const MAX_TRAIN: usize = 500;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledSample {
    pub features: Vec<f64>,
    /// Always -1 or +1.
    pub label: i8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub name: String,
    pub attribute_count: usize,
    pub samples: Vec<LabeledSample>,
}

impl Dataset {
    /// Builds a dataset, checking that every sample has `attribute_count`
    /// features and a ±1 label.
    pub fn new(
        name: impl Into<String>,
        attribute_count: usize,
        samples: Vec<LabeledSample>,
    ) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Empty);
        }
        for (row, s) in samples.iter().enumerate() {
            if s.features.len() != attribute_count {
                return Err(Error::DimensionMismatch {
                    expected: attribute_count,
                    found: s.features.len(),
                });
            }
            if s.label != 1 && s.label != -1 {
                return Err(Error::NonBinaryLabel {
                    row,
                    value: s.label as f64,
                });
            }
        }
        Ok(Self {
            name: name.into(),
            attribute_count,
            samples,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Labels as ±1.0, in sample order.
    pub fn labels(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.label as f64).collect()
    }

    /// Values of one attribute across all samples.
    pub fn column(&self, attribute: usize) -> Vec<f64> {
        self.samples.iter().map(|s| s.features[attribute]).collect()
    }

    /// The samples at `rows`, in that order.
    pub fn subset(&self, rows: &[usize]) -> Dataset {
        Dataset {
            name: self.name.clone(),
            attribute_count: self.attribute_count,
            samples: rows.iter().map(|&i| self.samples[i].clone()).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CsvOptions {
    /// Column holding the label; `None` selects the last column.
    pub label_column: Option<usize>,
    /// Skip the first row.
    pub header: bool,
}

pub fn load_csv(path: impl AsRef<Path>, options: CsvOptions) -> Result<Dataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_csv(&name, &text, options)
}

/// Parses comma-separated text. Rows are numbered from 1 as they appear in
/// the file, columns from 0.
pub fn parse_csv(name: &str, text: &str, options: CsvOptions) -> Result<Dataset> {
    let rows = read_rows(text, options.header)?;
    let Some((_, first)) = rows.first() else {
        return Err(Error::Empty);
    };
    let columns = first.len();
    if columns < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least one feature column and a label column, found {columns} column(s)"
        )));
    }
    let label_column = options.label_column.unwrap_or(columns - 1);
    if label_column >= columns {
        return Err(Error::LabelColumn {
            column: label_column,
            columns,
        });
    }

    let mut samples = Vec::with_capacity(rows.len());
    for (line, cells) in &rows {
        if cells.len() != columns {
            return Err(Error::RaggedRow {
                row: *line,
                expected: columns,
                found: cells.len(),
            });
        }
        let mut features = Vec::with_capacity(columns - 1);
        let mut label = 0;
        for (column, cell) in cells.iter().enumerate() {
            let value = parse_cell(cell, *line, column)?;
            if column == label_column {
                label = parse_label(value, *line)?;
            } else {
                features.push(value);
            }
        }
        samples.push(LabeledSample { features, label });
    }
    Dataset::new(name, columns - 1, samples)
}

/// Parses rows whose columns are all features (no label). Used at
/// prediction time.
pub fn parse_unlabeled_csv(text: &str, header: bool) -> Result<Vec<Vec<f64>>> {
    let rows = read_rows(text, header)?;
    let Some((_, first)) = rows.first() else {
        return Err(Error::Empty);
    };
    let columns = first.len();
    rows.iter()
        .map(|(line, cells)| {
            if cells.len() != columns {
                return Err(Error::RaggedRow {
                    row: *line,
                    expected: columns,
                    found: cells.len(),
                });
            }
            cells
                .iter()
                .enumerate()
                .map(|(c, cell)| parse_cell(cell, *line, c))
                .collect()
        })
        .collect()
}

fn read_rows(text: &str, header: bool) -> Result<Vec<(usize, Vec<String>)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 1;
        let record = record.map_err(|e| Error::InvalidParameter(format!("row {line}: {e}")))?;
        if header && i == 0 {
            continue;
        }
        if record.len() == 1 && record[0].trim().is_empty() {
            continue;
        }
        rows.push((line, record.iter().map(|c| c.trim().to_owned()).collect()));
    }
    Ok(rows)
}

fn parse_cell(cell: &str, row: usize, column: usize) -> Result<f64> {
    match cell.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::Parse {
            row,
            column,
            value: cell.to_owned(),
        }),
    }
}

fn parse_label(value: f64, row: usize) -> Result<i8> {
    if value == 1.0 {
        Ok(1)
    } else if value == -1.0 || value == 0.0 {
        Ok(-1)
    } else {
        Err(Error::NonBinaryLabel { row, value })
    }
}

/// Per-attribute `x ↦ tanh((x - center) / scale)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub center: Vec<f64>,
    pub scale: Vec<f64>,
}

/// Fits centers (means) and scales (population standard deviations) on the
/// training set. Constant attributes get scale 1.
pub fn fit_normalizer(train: &Dataset) -> Normalizer {
    let m = train.len() as f64;
    let d = train.attribute_count;
    let mut center = vec![0.0; d];
    let mut scale = vec![0.0; d];
    for s in &train.samples {
        for (c, x) in center.iter_mut().zip(&s.features) {
            *c += x;
        }
    }
    center.iter_mut().for_each(|c| *c /= m);
    for s in &train.samples {
        for ((v, x), c) in scale.iter_mut().zip(&s.features).zip(&center) {
            *v += (x - c) * (x - c);
        }
    }
    for v in &mut scale {
        let std = (*v / m).sqrt();
        *v = if std > 0.0 && std.is_finite() { std } else { 1.0 };
    }
    Normalizer { center, scale }
}

impl Normalizer {
    pub fn attribute_count(&self) -> usize {
        self.center.len()
    }

    pub fn transform(&self, features: &[f64]) -> Result<Vec<f64>> {
        if features.len() != self.center.len() {
            return Err(Error::DimensionMismatch {
                expected: self.center.len(),
                found: features.len(),
            });
        }
        Ok(features
            .iter()
            .zip(self.center.iter().zip(&self.scale))
            .map(|(x, (c, s))| ((x - c) / s).tanh())
            .collect())
    }
}

pub fn apply_normalizer(norm: &Normalizer, ds: &Dataset) -> Result<Dataset> {
    if ds.attribute_count != norm.attribute_count() {
        return Err(Error::DimensionMismatch {
            expected: norm.attribute_count(),
            found: ds.attribute_count,
        });
    }
    let samples = ds
        .samples
        .iter()
        .map(|s| {
            Ok(LabeledSample {
                features: norm.transform(&s.features)?,
                label: s.label,
            })
        })
        .collect::<Result<_>>()?;
    Ok(Dataset {
        name: ds.name.clone(),
        attribute_count: ds.attribute_count,
        samples,
    })
}

/// Training-set size used by [`split_train_test`]: at least half of the
/// examples, at most [`MAX_TRAIN`].
pub fn train_size(m: usize) -> usize {
    m.div_ceil(2).min(MAX_TRAIN)
}

fn permutation(m: usize, seed: u64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..m).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    idx
}

/// Row indices of the (train, test) split for `m` samples.
pub fn split_indices(m: usize, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if m < 2 {
        return Err(Error::TooFewSamples {
            samples: m,
            folds: 2,
        });
    }
    let mut perm = permutation(m, seed);
    let test = perm.split_off(train_size(m));
    Ok((perm, test))
}

pub fn split_train_test(ds: &Dataset, seed: u64) -> Result<(Dataset, Dataset)> {
    let (train, test) = split_indices(ds.len(), seed)?;
    Ok((ds.subset(&train), ds.subset(&test)))
}

/// Validation folds as index lists. The first `m % k` folds hold one extra
/// sample.
pub fn kfold_indices(m: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!("k-fold needs k >= 2, got {k}")));
    }
    if m < k {
        return Err(Error::TooFewSamples {
            samples: m,
            folds: k,
        });
    }
    let perm = permutation(m, seed);
    let (base, extra) = (m / k, m % k);
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let len = base + usize::from(f < extra);
        folds.push(perm[start..start + len].to_vec());
        start += len;
    }
    Ok(folds)
}

/// Complement of validation fold `fold`, in increasing fold order.
pub fn fold_training_rows(folds: &[Vec<usize>], fold: usize) -> Vec<usize> {
    folds
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != fold)
        .flat_map(|(_, f)| f.iter().copied())
        .collect()
}

pub fn kfold(ds: &Dataset, k: usize, seed: u64) -> Result<Vec<(Dataset, Dataset)>> {
    let folds = kfold_indices(ds.len(), k, seed)?;
    Ok((0..k)
        .map(|f| {
            (
                ds.subset(&fold_training_rows(&folds, f)),
                ds.subset(&folds[f]),
            )
        })
        .collect())
}

/// Synthetic data: features uniform in (-1, 1), labels given by the sign of
/// a random linear rule and flipped with probability `noise`.
pub fn noisy_linear(m: usize, attributes: usize, noise: f64, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w: Vec<f64> = (0..attributes).map(|_| rng.random_range(-1.0..1.0)).collect();
    let samples = (0..m)
        .map(|_| {
            let features: Vec<f64> = (0..attributes)
                .map(|_| rng.random_range(-0.999..0.999))
                .collect();
            let score: f64 = features.iter().zip(&w).map(|(x, w)| x * w).sum();
            let mut label = if score > 0.0 { 1 } else { -1 };
            if rng.random_bool(noise) {
                label = -label;
            }
            LabeledSample { features, label }
        })
        .collect();
    Dataset {
        name: format!("noisy-linear-{m}x{attributes}"),
        attribute_count: attributes,
        samples,
    }
}
