use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use quadboost::bounds::{bound_value, rademacher_mc, theoretical_lambda, BoundInputs, QUADRATIC_LIPSCHITZ};
use quadboost::data::{apply_normalizer, load_csv, parse_unlabeled_csv, CsvOptions};
use quadboost::engine::{lp_norm, Variant};
use quadboost::experiment::{
    bench, cv_select, fit_model, prepare, ExperimentSpec, GridAxis, DEFAULT_FOLDS, DEFAULT_ROUNDS_CAP,
};
use quadboost::model::{Model, SCHEMA_VERSION};
use quadboost::registry::{Params, Registry, ALPHA_MAX, LAMBDA, ROUNDS};
use quadboost::stumps::{VoterPool, DEFAULT_PER_ATTRIBUTE};
use quadboost::verify::{lemma1_report, run_checks, RuleProvider, StandardRules};

mod mutate;

#[derive(Parser)]
#[command(name = "quadboost", version, about = "Quadratic-loss boosting over decision stumps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one model with fixed hyperparameters.
    Train(TrainArgs),
    /// Predict labels with a saved model.
    Predict(PredictArgs),
    /// Select hyperparameters by k-fold cross-validation.
    Cv(CvArgs),
    /// Cross-validate several algorithms on several datasets.
    Bench(BenchArgs),
    /// Evaluate the generalization bound.
    Bound(BoundArgs),
    /// Run the built-in invariant checks.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct DataArgs {
    /// Column of the label (0-based); defaults to the last column.
    #[arg(long)]
    label_col: Option<usize>,
    /// The first row is a header.
    #[arg(long)]
    header: bool,
}

impl DataArgs {
    fn options(&self) -> CsvOptions {
        CsvOptions {
            label_column: self.label_col,
            header: self.header,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, default_value = "quadboost-vanilla")]
    algo: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Run a reweighting pass every K rounds (0 = never).
    #[arg(long, default_value_t = 0)]
    reweight_every: usize,
    #[arg(long, default_value_t = DEFAULT_ROUNDS_CAP)]
    max_rounds_cap: usize,
    /// Thresholds per attribute in the stump pool.
    #[arg(long, default_value_t = DEFAULT_PER_ATTRIBUTE)]
    stumps: usize,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    csv: DataArgs,
    #[command(flatten)]
    run: RunArgs,
    #[arg(long)]
    rounds: Option<usize>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    alpha_max: Option<f64>,
    /// Model JSON output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-round history as CSV.
    #[arg(long)]
    history: Option<PathBuf>,
    /// Stump pool as JSON.
    #[arg(long)]
    pool: Option<PathBuf>,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    csv: DataArgs,
    /// The file has feature columns only.
    #[arg(long)]
    unlabeled: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CvArgs {
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    csv: DataArgs,
    #[command(flatten)]
    run: RunArgs,
    #[arg(long, default_value_t = DEFAULT_FOLDS)]
    folds: usize,
    /// Grid override, `name=min:max:count` (log-spaced); repeatable.
    #[arg(long, value_parser = parse_grid)]
    grid: Vec<(String, f64, f64, usize)>,
    /// Report JSON output; printed to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Dataset CSV; repeatable.
    #[arg(long, required = true)]
    data: Vec<PathBuf>,
    #[command(flatten)]
    csv: DataArgs,
    /// Algorithm; repeatable. Defaults to every registered algorithm.
    #[arg(long)]
    algo: Vec<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_FOLDS)]
    folds: usize,
    #[arg(long, value_parser = parse_grid)]
    grid: Vec<(String, f64, f64, usize)>,
    #[arg(long, default_value_t = 0)]
    reweight_every: usize,
    #[arg(long, default_value_t = DEFAULT_ROUNDS_CAP)]
    max_rounds_cap: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BoundArgs {
    /// Norm index; `inf` for the max norm.
    #[arg(long, default_value_t = 1.0)]
    p: f64,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    /// Take ‖α‖, dim(α), m, the risk and the Rademacher estimate from a
    /// model and a dataset instead of the flags below.
    #[arg(long, requires = "data")]
    model: Option<PathBuf>,
    #[arg(long)]
    data: Option<PathBuf>,
    #[command(flatten)]
    csv: DataArgs,
    #[arg(long, default_value_t = 1000)]
    draws: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    rademacher: Option<f64>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    norm: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    risk: f64,
    /// The Rademacher value is a sample estimate (halves δ, triples the
    /// last term).
    #[arg(long)]
    empirical: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Print per-draw Lemma 1 comparisons instead of running the checks.
    #[arg(long)]
    lemma1: bool,
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    #[arg(long, default_value_t = 4)]
    n: usize,
    #[arg(long, default_value_t = 10)]
    draws: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Swap in a broken weight rule to confirm the checks catch it.
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(mutate::NAMES))]
    mutate: Option<String>,
}

fn parse_grid(s: &str) -> std::result::Result<(String, f64, f64, usize), String> {
    GridAxis::parse(s).map_err(|e| e.to_string())
}

fn write_out(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn train(args: TrainArgs) -> Result<()> {
    let registry = Registry::standard();
    let algorithm = registry.get(&args.run.algo)?;
    let mut params = Params::new();
    for h in algorithm.hyperparameters() {
        let value = match h.name {
            ROUNDS => args.rounds.map(|r| r as f64),
            LAMBDA => args.lambda,
            ALPHA_MAX => args.alpha_max,
            other => bail!("no flag for hyperparameter {other}"),
        };
        let Some(value) = value else {
            bail!("{} needs --{}", algorithm.name(), h.name.replace('_', "-"));
        };
        params.insert(h.name.to_owned(), value);
    }
    let mut spec = ExperimentSpec::new(&args.data, &args.run.algo);
    spec.seed = args.run.seed;
    spec.reweight_every = args.run.reweight_every;
    spec.max_rounds_cap = args.run.max_rounds_cap;
    spec.per_attribute = args.run.stumps;

    let raw = load_csv(&args.data, args.csv.options())?;
    let prepared = prepare(&raw, spec.seed, spec.per_attribute)?;
    let trained = fit_model(&prepared, algorithm, &params, &spec)?;
    let m = &trained.model.metrics;
    eprintln!(
        "{}: {} rounds, {} voters, train error {:.4}, quadratic risk {:.4}, test error {}",
        algorithm.name(),
        m.rounds,
        m.voters,
        m.train_error,
        m.train_quadratic_risk,
        m.test_error.map_or("n/a".into(), |e| format!("{e:.4}")),
    );
    if let Some(path) = &args.history {
        fs::write(path, trained.history.to_csv()?).with_context(|| format!("writing {}", path.display()))?;
    }
    if let Some(path) = &args.pool {
        let text = serde_json::to_string_pretty(&json!({
            "schema_version": SCHEMA_VERSION,
            "stumps": prepared.pool.stumps(),
        }))?;
        fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    }
    write_out(args.out.as_deref(), &trained.model.to_json()?)
}

fn read_model(path: &Path) -> Result<Model> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(Model::from_json(&text)?)
}

fn predict(args: PredictArgs) -> Result<()> {
    let model = read_model(&args.model)?;
    let (predictions, error) = if args.unlabeled {
        let text = fs::read_to_string(&args.data).with_context(|| format!("reading {}", args.data.display()))?;
        let rows = parse_unlabeled_csv(&text, args.csv.header)?;
        (model.predict_raw(&rows)?, None)
    } else {
        let ds = load_csv(&args.data, args.csv.options())?;
        let rows: Vec<Vec<f64>> = ds.samples.iter().map(|s| s.features.clone()).collect();
        let pred = model.predict_raw(&rows)?;
        let wrong = pred.iter().zip(&ds.samples).filter(|(p, s)| **p != s.label).count();
        let error = wrong as f64 / ds.len() as f64;
        eprintln!("error {error:.4} on {} examples", ds.len());
        (pred, Some(error))
    };
    match &args.out {
        Some(path) => {
            let text = serde_json::to_string_pretty(&json!({
                "schema_version": SCHEMA_VERSION,
                "predictions": predictions,
                "error": error,
            }))?;
            fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
        }
        None => {
            for p in predictions {
                println!("{p}");
            }
        }
    }
    Ok(())
}

fn cv(args: CvArgs) -> Result<()> {
    let mut spec = ExperimentSpec::new(&args.data, &args.run.algo);
    spec.csv = args.csv.options();
    spec.grid = args.grid;
    spec.folds = args.folds;
    spec.seed = args.run.seed;
    spec.max_rounds_cap = args.run.max_rounds_cap;
    spec.per_attribute = args.run.stumps;
    spec.reweight_every = args.run.reweight_every;
    let report = cv_select(&spec, &Registry::standard())?;
    eprintln!(
        "{} on {}: selected {:?} (mean CV error {:.4}), test error {:.4}",
        report.algorithm,
        report.dataset,
        report.selected,
        report.cells[report.selected_index].mean_risk,
        report.test_risk
    );
    write_out(args.out.as_deref(), &serde_json::to_string_pretty(&report)?)
}

fn bench_cmd(args: BenchArgs) -> Result<()> {
    let registry = Registry::standard();
    let algos: Vec<String> = if args.algo.is_empty() {
        registry.names().into_iter().map(str::to_owned).collect()
    } else {
        args.algo
    };
    let mut specs = Vec::new();
    for data in &args.data {
        for algo in &algos {
            let mut spec = ExperimentSpec::new(data, algo);
            spec.csv = args.csv.options();
            spec.grid = args.grid.clone();
            spec.folds = args.folds;
            spec.seed = args.seed;
            spec.max_rounds_cap = args.max_rounds_cap;
            spec.reweight_every = args.reweight_every;
            specs.push(spec);
        }
    }
    let table = bench(&specs, &registry)?;
    print!("{}", table.to_text());
    for row in &table.rows {
        for (algo, err) in algos.iter().zip(&row.errors) {
            if let Some(e) = err {
                eprintln!("{} / {algo}: {e}", row.dataset);
            }
        }
    }
    if let Some(path) = &args.out {
        fs::write(path, serde_json::to_string_pretty(&table)?)
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn bound(args: BoundArgs) -> Result<()> {
    let mut extra = BTreeMap::new();
    let inputs = match (&args.model, &args.data) {
        (Some(model_path), Some(data)) => {
            let model = read_model(model_path)?;
            let mut ds = load_csv(data, args.csv.options())?;
            if let Some(n) = &model.normalizer {
                ds = apply_normalizer(n, &ds)?;
            }
            let pool = VoterPool::new(model.pool.clone(), &ds)?;
            let estimate = rademacher_mc(&pool, args.draws, args.seed)?;
            // Clipped quadratic loss min((1 - y f)², 1).
            let risk = ds
                .samples
                .iter()
                .map(|s| {
                    let margin = s.label as f64 * model.score(&s.features);
                    ((1.0 - margin).powi(2)).min(1.0)
                })
                .sum::<f64>()
                / ds.len() as f64;
            extra.insert("rademacher_std_error", json!(estimate.std_error));
            extra.insert("rademacher_draws", json!(estimate.draws));
            let weights = model.weights();
            let dim = weights.len();
            for (name, variant) in [
                ("lambda_l1", Variant::L1 { lambda: 0.0 }),
                ("lambda_l2", Variant::L2 { lambda: 0.0 }),
                ("lambda_linf", Variant::Linf { alpha_max: 1.0 }),
            ] {
                extra.insert(name, json!(theoretical_lambda(&variant, estimate.mean, dim)));
            }
            BoundInputs {
                p: args.p,
                delta: args.delta,
                m: ds.len(),
                lipschitz: QUADRATIC_LIPSCHITZ,
                rademacher: estimate.mean,
                dim,
                norm: lp_norm(&weights, args.p),
                empirical_risk: risk,
                empirical_rademacher: true,
            }
        }
        _ => {
            let need = |name: &str| anyhow::anyhow!("--{name} is required without --model");
            BoundInputs {
                p: args.p,
                delta: args.delta,
                m: args.m.ok_or_else(|| need("m"))?,
                lipschitz: QUADRATIC_LIPSCHITZ,
                rademacher: args.rademacher.ok_or_else(|| need("rademacher"))?,
                dim: args.dim.ok_or_else(|| need("dim"))?,
                norm: args.norm.ok_or_else(|| need("norm"))?,
                empirical_risk: args.risk,
                empirical_rademacher: args.empirical,
            }
        }
    };
    let terms = bound_value(&inputs)?;
    let report = json!({
        "schema_version": SCHEMA_VERSION,
        "inputs": inputs,
        "terms": {
            "empirical_risk": terms.empirical_risk,
            "complexity": terms.complexity,
            "confidence": terms.confidence,
            "norm_term": terms.norm_term,
        },
        "total": terms.total,
        "details": extra,
    });
    write_out(args.out.as_deref(), &serde_json::to_string_pretty(&report)?)
}

fn verify(args: VerifyArgs) -> Result<bool> {
    if args.lemma1 {
        let checks = lemma1_report(args.p, args.n, args.draws, args.seed)?;
        let mut ok = true;
        for (d, c) in checks.iter().enumerate() {
            let equal = (c.lhs - c.rhs).abs() <= 1e-12;
            ok &= equal;
            println!(
                "draw {d:>3}: lhs {:.15} rhs {:.15} {}",
                c.lhs,
                c.rhs,
                if equal { "equal" } else { "DIFFERENT" }
            );
        }
        return Ok(ok);
    }
    let mutant;
    let rules: &dyn RuleProvider = match args.mutate {
        Some(name) => {
            mutant = mutate::Mutant(name);
            &mutant
        }
        None => &StandardRules,
    };
    let checks = run_checks(rules)?;
    for c in &checks {
        println!(
            "{} {:<26} margin {:>11.3e}  {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.margin,
            c.detail
        );
    }
    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    if !failed.is_empty() {
        eprintln!("violated: {}", failed.join(", "));
    }
    Ok(failed.is_empty())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Train(a) => train(a).map(|_| true),
        Command::Predict(a) => predict(a).map(|_| true),
        Command::Cv(a) => cv(a).map(|_| true),
        Command::Bench(a) => bench_cmd(a).map(|_| true),
        Command::Bound(a) => bound(a).map(|_| true),
        Command::Verify(a) => verify(a),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
