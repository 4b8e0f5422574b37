//! Hyperparameter selection by k-fold cross-validation and the
//! multi-dataset comparison table.
//!
//! Pipeline per dataset: random split into a training set of at most 500
//! examples and a test set, tanh normalization fit on the training set,
//! stump pool generated on the training set, k-fold CV over a log-scale
//! grid, refit of the winning cell on the whole training set, one
//! evaluation on the test set.

use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{
    apply_normalizer, fit_normalizer, fold_training_rows, kfold_indices, load_csv,
    split_train_test, CsvOptions, Dataset, Normalizer,
};
use crate::engine::{sign, Entry};
use crate::error::{Error, Result};
use crate::model::{Metrics, Model, SCHEMA_VERSION};
use crate::registry::{Algorithm, FitOptions, History, HyperParam, Params, Registry, ROUNDS};
use crate::stumps::{generate_pool, EvalMatrix, VoterPool, DEFAULT_PER_ATTRIBUTE};

pub const DEFAULT_GRID_COUNT: usize = 10;
pub const DEFAULT_FOLDS: usize = 5;
pub const DEFAULT_ROUNDS_CAP: usize = 10_000;

/// `count` log-spaced values in `[min, max]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridAxis {
    pub name: String,
    pub min: f64,
    pub max: f64,
    pub count: usize,
    pub integer: bool,
}

impl GridAxis {
    pub fn from_default(h: &HyperParam) -> Self {
        Self {
            name: h.name.to_owned(),
            min: h.min,
            max: h.max,
            count: DEFAULT_GRID_COUNT,
            integer: h.integer,
        }
    }

    /// Parses `name=min:max:count`.
    pub fn parse(text: &str) -> Result<(String, f64, f64, usize)> {
        let bad = || Error::InvalidParameter(format!("grid {text:?} is not name=min:max:count"));
        let (name, range) = text.split_once('=').ok_or_else(bad)?;
        let parts: Vec<&str> = range.split(':').collect();
        let [min, max, count] = parts.as_slice() else {
            return Err(bad());
        };
        let min: f64 = min.trim().parse().map_err(|_| bad())?;
        let max: f64 = max.trim().parse().map_err(|_| bad())?;
        let count: usize = count.trim().parse().map_err(|_| bad())?;
        if !(min > 0.0 && max >= min && count >= 1) {
            return Err(Error::InvalidParameter(format!(
                "grid {text:?}: need 0 < min <= max and count >= 1"
            )));
        }
        Ok((name.trim().to_owned(), min, max, count))
    }

    /// Grid values. Integer axes are rounded, clamped to `cap` and
    /// deduplicated, keeping first occurrences.
    pub fn values(&self, cap: usize) -> Vec<f64> {
        let (lo, hi) = (self.min.log10(), self.max.log10());
        let raw = (0..self.count).map(|i| {
            if self.count == 1 {
                self.min
            } else {
                10f64.powf(lo + (hi - lo) * i as f64 / (self.count - 1) as f64)
            }
        });
        if !self.integer {
            return raw.collect();
        }
        let mut out: Vec<f64> = Vec::new();
        for v in raw {
            let v = v.round().max(1.0).min(cap as f64);
            if !out.contains(&v) {
                out.push(v);
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub dataset: PathBuf,
    pub csv: CsvOptions,
    pub algorithm: String,
    /// Overrides of the algorithm's default grid, `(name, min, max, count)`.
    pub grid: Vec<(String, f64, f64, usize)>,
    pub folds: usize,
    pub seed: u64,
    pub max_rounds_cap: usize,
    pub per_attribute: usize,
    pub reweight_every: usize,
}

impl ExperimentSpec {
    pub fn new(dataset: impl Into<PathBuf>, algorithm: impl Into<String>) -> Self {
        Self {
            dataset: dataset.into(),
            csv: CsvOptions::default(),
            algorithm: algorithm.into(),
            grid: Vec::new(),
            folds: DEFAULT_FOLDS,
            seed: 0,
            max_rounds_cap: DEFAULT_ROUNDS_CAP,
            per_attribute: DEFAULT_PER_ATTRIBUTE,
            reweight_every: 0,
        }
    }

    pub fn fit_options(&self) -> FitOptions {
        FitOptions {
            reweight_every: self.reweight_every,
            max_rounds: self.max_rounds_cap,
        }
    }

    /// The algorithm's axes, with overrides applied.
    pub fn axes(&self, algorithm: &dyn Algorithm) -> Result<Vec<GridAxis>> {
        let mut axes: Vec<GridAxis> = algorithm
            .hyperparameters()
            .iter()
            .map(GridAxis::from_default)
            .collect();
        for (name, min, max, count) in &self.grid {
            let axis = axes.iter_mut().find(|a| &a.name == name).ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "{} has no hyperparameter {name:?}",
                    algorithm.name()
                ))
            })?;
            axis.min = *min;
            axis.max = *max;
            axis.count = *count;
        }
        Ok(axes)
    }
}

/// A normalized train/test split with its stump pool.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub train: Dataset,
    pub test: Dataset,
    pub normalizer: Normalizer,
    pub pool: VoterPool,
}

pub fn prepare(raw: &Dataset, seed: u64, per_attribute: usize) -> Result<Prepared> {
    let (train, test) = split_train_test(raw, seed)?;
    let normalizer = fit_normalizer(&train);
    let train = apply_normalizer(&normalizer, &train)?;
    let test = apply_normalizer(&normalizer, &test)?;
    let pool = generate_pool(&train, per_attribute)?;
    Ok(Prepared {
        train,
        test,
        normalizer,
        pool,
    })
}

/// Seed of the fold permutation, derived from the split seed.
pub fn fold_seed(seed: u64) -> u64 {
    seed.wrapping_add(0x9E37_79B9_7F4A_7C15)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub params: Params,
    pub fold_risks: Vec<f64>,
    pub mean_risk: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    /// CV training time per cell. Cells that share a run (same non-T
    /// hyperparameters) all report that run's time.
    pub cell_seconds: Vec<f64>,
    /// Summed training wall-clock of every CV run.
    pub cv_seconds: f64,
    pub final_seconds: f64,
    /// `cv_seconds + final_seconds`.
    pub train_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistorySummary {
    pub rounds: usize,
    pub final_quadratic_risk: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub dataset: String,
    pub algorithm: String,
    pub config: ExperimentSpec,
    pub train_size: usize,
    pub test_size: usize,
    pub voters: usize,
    pub grid: Vec<(String, Vec<f64>)>,
    pub cells: Vec<Cell>,
    pub selected_index: usize,
    pub selected: Params,
    pub test_risk: f64,
    pub train_risk: f64,
    pub history: HistorySummary,
    pub model: Model,
    pub timing: Option<Timing>,
}

impl Report {
    /// JSON with the timing fields removed, for reproducibility checks.
    pub fn without_timing(&self) -> Report {
        Report {
            timing: None,
            ..self.clone()
        }
    }
}

/// Zero-one error of `entries` on samples whose voter outputs are `eval`.
fn eval_error(eval: &EvalMatrix, labels: &[f64], entries: &[Entry]) -> f64 {
    let mut scores = vec![0.0; labels.len()];
    for e in entries {
        for (s, h) in scores.iter_mut().zip(eval.column(e.voter)) {
            *s += e.weight * h;
        }
    }
    let wrong = scores
        .iter()
        .zip(labels)
        .filter(|(s, y)| sign(**s) != **y)
        .count();
    wrong as f64 / labels.len() as f64
}

fn cartesian(axes: &[(String, Vec<f64>)]) -> Vec<Params> {
    let mut cells = vec![Params::new()];
    for (name, values) in axes {
        cells = cells
            .into_iter()
            .flat_map(|p| {
                values.iter().map(move |v| {
                    let mut p = p.clone();
                    p.insert(name.clone(), *v);
                    p
                })
            })
            .collect();
    }
    cells
}

/// Loads `spec.dataset` and runs [`cv_select_dataset`].
pub fn cv_select(spec: &ExperimentSpec, registry: &Registry) -> Result<Report> {
    let raw = load_csv(&spec.dataset, spec.csv)?;
    cv_select_dataset(&raw, spec, registry)
}

pub fn cv_select_dataset(raw: &Dataset, spec: &ExperimentSpec, registry: &Registry) -> Result<Report> {
    let algorithm = registry.get(&spec.algorithm)?;
    if spec.max_rounds_cap == 0 {
        return Err(Error::InvalidParameter("the rounds cap must be at least 1".into()));
    }
    let prepared = prepare(raw, spec.seed, spec.per_attribute)?;
    let folds = kfold_indices(prepared.train.len(), spec.folds, fold_seed(spec.seed))?;
    cross_validate(&prepared, &folds, algorithm, spec, &raw.name)
}

/// CV over a prepared split with explicit folds.
pub fn cross_validate(
    prepared: &Prepared,
    folds: &[Vec<usize>],
    algorithm: &dyn Algorithm,
    spec: &ExperimentSpec,
    dataset_name: &str,
) -> Result<Report> {
    let options = spec.fit_options();
    let grid: Vec<(String, Vec<f64>)> = spec
        .axes(algorithm)?
        .iter()
        .map(|a| (a.name.clone(), a.values(spec.max_rounds_cap)))
        .collect();
    let cells = cartesian(&grid);

    // Cells that differ only in T share one run, evaluated at each T.
    let mut groups: Vec<(Params, Vec<usize>)> = Vec::new();
    let mut cell_slot = Vec::with_capacity(cells.len());
    for cell in &cells {
        let mut key = cell.clone();
        key.remove(ROUNDS);
        let t = algorithm.rounds(cell, &options);
        let g = match groups.iter().position(|(k, _)| *k == key) {
            Some(g) => g,
            None => {
                groups.push((key, Vec::new()));
                groups.len() - 1
            }
        };
        let ts = &mut groups[g].1;
        let i = ts.iter().position(|&x| x == t).unwrap_or_else(|| {
            ts.push(t);
            ts.len() - 1
        });
        cell_slot.push((g, i));
    }

    let labels = prepared.train.labels();
    let tasks: Vec<(usize, usize)> = (0..groups.len())
        .flat_map(|g| (0..folds.len()).map(move |f| (g, f)))
        .collect();
    let outcomes: Vec<Result<(Vec<f64>, f64)>> = tasks
        .par_iter()
        .map(|&(g, f)| {
            let train_rows = fold_training_rows(folds, f);
            let val_rows = &folds[f];
            let pool = prepared.pool.select_rows(&train_rows);
            let y: Vec<f64> = train_rows.iter().map(|&i| labels[i]).collect();
            let val_eval = prepared.pool.eval().select_rows(val_rows);
            let val_y: Vec<f64> = val_rows.iter().map(|&i| labels[i]).collect();
            let (params, checkpoints) = &groups[g];
            let start = Instant::now();
            let fit = algorithm.fit(&y, &pool, params, &options, checkpoints)?;
            let seconds = start.elapsed().as_secs_f64();
            let risks = fit
                .snapshots
                .iter()
                .map(|(_, e)| eval_error(&val_eval, &val_y, e))
                .collect();
            Ok((risks, seconds))
        })
        .collect();
    let mut per_task = Vec::with_capacity(outcomes.len());
    for o in outcomes {
        per_task.push(o?);
    }
    let cv_seconds: f64 = per_task.iter().map(|(_, s)| s).sum();

    let cells: Vec<Cell> = cells
        .into_iter()
        .zip(&cell_slot)
        .map(|(params, &(g, i))| {
            let fold_risks: Vec<f64> = (0..folds.len())
                .map(|f| per_task[g * folds.len() + f].0[i])
                .collect();
            let mean_risk = fold_risks.iter().sum::<f64>() / fold_risks.len() as f64;
            Cell {
                params,
                fold_risks,
                mean_risk,
            }
        })
        .collect();
    let selected_index = cells
        .iter()
        .enumerate()
        .fold(0, |best, (i, c)| if c.mean_risk < cells[best].mean_risk { i } else { best });
    let selected = cells[selected_index].params.clone();

    let start = Instant::now();
    let trained = fit_model(prepared, algorithm, &selected, spec)?;
    let final_seconds = start.elapsed().as_secs_f64();
    let test_risk = trained.model.metrics.test_error.unwrap_or(f64::NAN);
    let train_risk = trained.model.metrics.train_error;
    let final_quadratic_risk = match &trained.history {
        History::QuadBoost(h) => h.last().map(|s| s.quadratic_risk),
        History::AdaBoost(_) => None,
    };
    let cell_seconds = cell_slot
        .iter()
        .map(|&(g, _)| {
            (0..folds.len())
                .map(|f| per_task[g * folds.len() + f].1)
                .sum()
        })
        .collect();

    Ok(Report {
        schema_version: SCHEMA_VERSION,
        dataset: dataset_name.to_owned(),
        algorithm: algorithm.name().to_owned(),
        config: spec.clone(),
        train_size: prepared.train.len(),
        test_size: prepared.test.len(),
        voters: prepared.pool.len(),
        grid,
        cells,
        selected_index,
        selected,
        test_risk,
        train_risk,
        history: HistorySummary {
            rounds: trained.history.len(),
            final_quadratic_risk,
        },
        model: trained.model,
        timing: Some(Timing {
            cell_seconds,
            cv_seconds,
            final_seconds,
            train_seconds: cv_seconds + final_seconds,
        }),
    })
}

fn quadratic_risk(eval: &EvalMatrix, labels: &[f64], entries: &[Entry]) -> f64 {
    let mut r = labels.to_vec();
    for e in entries {
        for (r, h) in r.iter_mut().zip(eval.column(e.voter)) {
            *r -= e.weight * h;
        }
    }
    r.iter().map(|r| r * r).sum::<f64>() / r.len() as f64
}

#[derive(Debug, Clone)]
pub struct Trained {
    pub model: Model,
    pub history: History,
}

/// Fits `params` on the whole training split and scores the model on both
/// splits.
pub fn fit_model(
    prepared: &Prepared,
    algorithm: &dyn Algorithm,
    params: &Params,
    spec: &ExperimentSpec,
) -> Result<Trained> {
    let options = spec.fit_options();
    let labels = prepared.train.labels();
    let rounds = algorithm.rounds(params, &options);
    let fit = algorithm.fit(&labels, &prepared.pool, params, &options, &[rounds])?;
    let entries = fit.last();
    let mut model = Model {
        schema_version: SCHEMA_VERSION,
        algorithm: algorithm.name().to_owned(),
        params: params.clone(),
        reweight_every: spec.reweight_every,
        split_seed: spec.seed,
        attribute_count: prepared.train.attribute_count,
        normalizer: Some(prepared.normalizer.clone()),
        entries: Model::weighted_stumps(&prepared.pool, entries),
        pool: prepared.pool.stumps().to_vec(),
        metrics: Metrics::default(),
    };
    let test_error = if prepared.test.is_empty() {
        None
    } else {
        Some(model.error(&prepared.test)?)
    };
    model.metrics = Metrics {
        train_quadratic_risk: quadratic_risk(prepared.pool.eval(), &labels, entries),
        train_error: eval_error(prepared.pool.eval(), &labels, entries),
        test_error,
        voters: entries.len(),
        rounds: fit.history.len(),
    };
    Ok(Trained {
        model,
        history: fit.history,
    })
}

/// Marks every entry equal to the row minimum.
pub fn mark_row_minimum(row: &[Option<f64>]) -> Vec<bool> {
    let min = row.iter().flatten().fold(f64::INFINITY, |a, &b| a.min(b));
    row.iter().map(|v| *v == Some(min)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub dataset: String,
    pub risks: Vec<Option<f64>>,
    pub best: Vec<bool>,
    pub errors: Vec<Option<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchTable {
    pub schema_version: u32,
    pub algorithms: Vec<String>,
    pub rows: Vec<BenchRow>,
    /// Mean training seconds per algorithm over the datasets it ran on.
    pub mean_seconds: Option<Vec<Option<f64>>>,
    pub reports: Vec<Report>,
}

impl BenchTable {
    pub fn without_timing(&self) -> BenchTable {
        BenchTable {
            mean_seconds: None,
            reports: self.reports.iter().map(Report::without_timing).collect(),
            ..self.clone()
        }
    }

    /// Aligned plain-text rendering; the row minimum carries a `*`.
    pub fn to_text(&self) -> String {
        let mut header = vec!["dataset".to_owned()];
        header.extend(self.algorithms.iter().cloned());
        let mut lines = vec![header];
        for row in &self.rows {
            let mut line = vec![row.dataset.clone()];
            for ((r, b), e) in row.risks.iter().zip(&row.best).zip(&row.errors) {
                line.push(match (r, e) {
                    (Some(r), _) => format!("{r:.3}{}", if *b { "*" } else { "" }),
                    (None, Some(_)) => "error".into(),
                    (None, None) => "-".into(),
                });
            }
            lines.push(line);
        }
        if let Some(secs) = &self.mean_seconds {
            let mut line = vec!["mean time (s)".to_owned()];
            line.extend(
                secs.iter()
                    .map(|s| s.map_or("-".into(), |s| format!("{s:.3}"))),
            );
            lines.push(line);
        }
        let widths: Vec<usize> = (0..lines[0].len())
            .map(|c| lines.iter().map(|l| l[c].chars().count()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for line in &lines {
            let cells: Vec<String> = line
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(i, (s, w))| {
                    if i == 0 {
                        format!("{s:<w$}")
                    } else {
                        format!("{s:>w$}")
                    }
                })
                .collect();
            out.push_str(cells.join("  ").trim_end());
            out.push('\n');
        }
        out
    }
}

/// Runs every spec, grouping results into one row per dataset and one
/// column per algorithm (both in first-seen order). A failing spec is
/// recorded in its cell and the others still run.
pub fn bench(specs: &[ExperimentSpec], registry: &Registry) -> Result<BenchTable> {
    if specs.is_empty() {
        return Err(Error::InvalidParameter("bench needs at least one experiment".into()));
    }
    let mut datasets: Vec<PathBuf> = Vec::new();
    let mut algorithms: Vec<String> = Vec::new();
    for s in specs {
        if !datasets.contains(&s.dataset) {
            datasets.push(s.dataset.clone());
        }
        if !algorithms.contains(&s.algorithm) {
            algorithms.push(s.algorithm.clone());
        }
    }
    let mut rows: Vec<BenchRow> = datasets
        .iter()
        .map(|d| BenchRow {
            dataset: d
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default(),
            risks: vec![None; algorithms.len()],
            best: vec![false; algorithms.len()],
            errors: vec![None; algorithms.len()],
        })
        .collect();
    let mut seconds: Vec<Vec<f64>> = vec![Vec::new(); algorithms.len()];
    let mut reports = Vec::new();
    for spec in specs {
        let r = datasets.iter().position(|d| *d == spec.dataset).unwrap();
        let c = algorithms.iter().position(|a| *a == spec.algorithm).unwrap();
        match cv_select(spec, registry) {
            Ok(report) => {
                rows[r].risks[c] = Some(report.test_risk);
                if let Some(t) = &report.timing {
                    seconds[c].push(t.train_seconds);
                }
                reports.push(report);
            }
            Err(e) => rows[r].errors[c] = Some(e.to_string()),
        }
    }
    for row in &mut rows {
        row.best = mark_row_minimum(&row.risks);
    }
    let mean_seconds = seconds
        .iter()
        .map(|s| (!s.is_empty()).then(|| s.iter().sum::<f64>() / s.len() as f64))
        .collect();
    Ok(BenchTable {
        schema_version: SCHEMA_VERSION,
        algorithms,
        rows,
        mean_seconds: Some(mean_seconds),
        reports,
    })
}
