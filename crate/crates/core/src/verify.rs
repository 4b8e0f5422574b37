//! Self-checks of the training and bound invariants on built-in synthetic
//! data. Weight rules come from a [`RuleProvider`] so that deliberately
//! broken rules can be plugged in and shown to be caught.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::baselines::adaboost_train_with;
use crate::bounds::{bound_value, lemma1_check, sign_vector, BoundInputs, Lemma1Check, QUADRATIC_LIPSCHITZ};
use crate::data::{noisy_linear, Dataset};
use crate::engine::{train_with, BoostConfig, Ensemble, RoundStats, Variant, WeightRule};
use crate::error::Result;
use crate::stumps::{generate_pool, VoterPool};

pub const DATA_SEED: u64 = 7;
pub const SAMPLES: usize = 200;
pub const ATTRIBUTES: usize = 5;
pub const NOISE: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    /// Distance to the violation threshold; negative when violated.
    pub margin: f64,
    pub detail: String,
}

impl CheckResult {
    fn new(name: &str, margin: f64, detail: String) -> Self {
        Self {
            name: name.to_owned(),
            passed: margin >= 0.0,
            margin,
            detail,
        }
    }
}

/// Source of the weight rule for each variant.
pub trait RuleProvider {
    fn rule(&self, variant: &Variant) -> Result<Box<dyn WeightRule>>;
}

pub struct StandardRules;

impl RuleProvider for StandardRules {
    fn rule(&self, variant: &Variant) -> Result<Box<dyn WeightRule>> {
        variant.rule()
    }
}

/// The synthetic problem shared by all checks.
pub fn synthetic() -> Result<(Dataset, VoterPool)> {
    let ds = noisy_linear(SAMPLES, ATTRIBUTES, NOISE, DATA_SEED);
    let pool = generate_pool(&ds, 10)?;
    Ok((ds, pool))
}

struct Run {
    history: Vec<RoundStats>,
    /// Risk before the first round followed by the risk after each round.
    risks: Vec<f64>,
    objective: Vec<f64>,
    ensemble: Ensemble,
}

fn run(
    ds: &Dataset,
    pool: &VoterPool,
    variant: Variant,
    rounds: usize,
    rules: &dyn RuleProvider,
) -> Result<Run> {
    let rule = rules.rule(&variant)?;
    let labels = ds.labels();
    let start = labels.iter().map(|y| y * y).sum::<f64>() / labels.len() as f64;
    let mut risks = vec![start];
    let mut objective = vec![start];
    let config = BoostConfig::new(variant, rounds);
    let training = train_with(&labels, pool, &config, rule.as_ref(), &mut |e, _| {
        risks.push(e.quadratic_risk());
        objective.push(e.quadratic_risk() + rule.penalty(&e.weights()));
    })?;
    Ok(Run {
        history: training.history,
        risks,
        objective,
        ensemble: training.ensemble,
    })
}

fn worst(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(f64::NEG_INFINITY, f64::max)
}

fn exact_decrease(ds: &Dataset, pool: &VoterPool, rules: &dyn RuleProvider) -> Result<CheckResult> {
    let r = run(ds, pool, Variant::Vanilla, 100, rules)?;
    let dev = worst(r.history.iter().enumerate().map(|(t, s)| {
        (r.risks[t + 1] - (r.risks[t] - s.edge * s.edge / s.eta)).abs()
    }));
    Ok(CheckResult::new(
        "exact-decrease",
        1e-10 - dev.max(0.0),
        format!("max |risk_after - (risk_before - g²/η)| = {dev:.3e} over {} rounds (tolerance 1e-10)", r.history.len()),
    ))
}

fn convergence_bound(ds: &Dataset, pool: &VoterPool, rules: &dyn RuleProvider) -> Result<CheckResult> {
    let mut margin = f64::INFINITY;
    let mut detail = Vec::new();
    for t in [10, 50] {
        let r = run(ds, pool, Variant::Vanilla, t, rules)?;
        let gamma = r.history.iter().map(|s| s.edge.abs()).fold(f64::INFINITY, f64::min);
        let done = r.history.len() as f64;
        let bound = 1.0 - done * gamma * gamma;
        let risk = *r.risks.last().unwrap();
        margin = margin.min(bound + 1e-9 - risk);
        detail.push(format!("T={t}: risk {risk:.6} vs 1 - Tγ² = {bound:.6}"));
    }
    Ok(CheckResult::new("convergence-bound", margin, detail.join("; ")))
}

const ALL_VARIANTS: [Variant; 4] = [
    Variant::Vanilla,
    Variant::L1 { lambda: 0.01 },
    Variant::L2 { lambda: 1.0 },
    Variant::Linf { alpha_max: 0.05 },
];

fn zero_one_below_quadratic(ds: &Dataset, pool: &VoterPool, rules: &dyn RuleProvider) -> Result<CheckResult> {
    let mut margin = f64::INFINITY;
    for v in ALL_VARIANTS {
        let r = run(ds, pool, v, 100, rules)?;
        for s in &r.history {
            margin = margin.min(s.quadratic_risk - s.training_error);
        }
    }
    Ok(CheckResult::new(
        "zero-one-below-quadratic",
        margin,
        format!("min over rounds and variants of quadratic risk - zero-one error = {margin:.3e}"),
    ))
}

fn residual_identity(ds: &Dataset, pool: &VoterPool, rules: &dyn RuleProvider) -> Result<CheckResult> {
    let mut dev: f64 = 0.0;
    for v in ALL_VARIANTS {
        let r = run(ds, pool, v, 100, rules)?;
        let fresh = r.ensemble.recomputed_residuals(pool);
        dev = dev.max(worst(fresh.iter().zip(r.ensemble.residuals()).map(|(a, b)| (a - b).abs())));
    }
    Ok(CheckResult::new(
        "residual-identity",
        1e-9 - dev,
        format!("max |r - (y - α·h)| = {dev:.3e} (tolerance 1e-9)"),
    ))
}

fn l1_objective_monotone(ds: &Dataset, pool: &VoterPool, rules: &dyn RuleProvider) -> Result<CheckResult> {
    let mut rise = f64::NEG_INFINITY;
    for lambda in [1e-3, 1e-2, 5e-2] {
        let r = run(ds, pool, Variant::L1 { lambda }, 200, rules)?;
        rise = rise.max(worst(r.objective.windows(2).map(|w| w[1] - w[0])));
    }
    Ok(CheckResult::new(
        "l1-objective-monotone",
        1e-12 - rise.max(0.0),
        format!("largest per-round increase of risk + 2λ‖α‖₁ = {rise:.3e}"),
    ))
}

/// Scalar objective whose minimizer each rule must return.
fn scalar_objective(variant: &Variant, g: f64, eta: f64, a: f64) -> f64 {
    let base = eta * a * a - 2.0 * g * a;
    match *variant {
        Variant::Vanilla | Variant::Linf { .. } => base,
        Variant::L1 { lambda } => base + 2.0 * lambda * a.abs(),
        Variant::L2 { lambda } => base + lambda * a * a,
    }
}

fn rule_optimality(rules: &dyn RuleProvider) -> Result<CheckResult> {
    const POINTS: usize = 20_001;
    const HALF_WIDTH: f64 = 10.0;
    let step = 2.0 * HALF_WIDTH / (POINTS - 1) as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(DATA_SEED);
    let mut margin = f64::INFINITY;
    let mut detail = String::from("all rules match grid minimizers");
    for _ in 0..200 {
        let g = rng.random_range(-1.0..1.0);
        let eta = rng.random_range(0.5..1.5);
        let c = rng.random_range(0.01..1.0);
        for variant in [
            Variant::Vanilla,
            Variant::L1 { lambda: c },
            Variant::L2 { lambda: c },
            Variant::Linf { alpha_max: c },
        ] {
            let (lo, hi) = match variant {
                Variant::Linf { alpha_max } => (-alpha_max, alpha_max),
                _ => (-HALF_WIDTH, HALF_WIDTH),
            };
            let best = (0..POINTS)
                .map(|i| lo + (hi - lo) * i as f64 / (POINTS - 1) as f64)
                .map(|a| (a, scalar_objective(&variant, g, eta, a)))
                .fold((0.0, f64::INFINITY), |b, x| if x.1 < b.1 { x } else { b })
                .0;
            let got = rules.rule(&variant)?.weight(g, eta)?;
            let m = 2.0 * step - (got - best).abs();
            if m < margin {
                margin = m;
                if m < 0.0 {
                    detail = format!(
                        "{} rule gave {got:.6} for g={g:.4}, η={eta:.4}, c={c:.4}; grid minimizer {best:.6}",
                        variant.name()
                    );
                }
            }
        }
    }
    Ok(CheckResult::new("rule-optimality", margin, detail))
}

fn reductions(ds: &Dataset, pool: &VoterPool, rules: &dyn RuleProvider) -> Result<CheckResult> {
    let base = run(ds, pool, Variant::Vanilla, 100, rules)?;
    let mut failures = Vec::new();
    for v in [
        Variant::L1 { lambda: 0.0 },
        Variant::L2 { lambda: 0.0 },
        Variant::Linf { alpha_max: 1e9 },
    ] {
        let r = run(ds, pool, v, 100, rules)?;
        if r.history != base.history || r.ensemble.weights() != base.ensemble.weights() {
            failures.push(v.name());
        }
    }
    let detail = if failures.is_empty() {
        "λ=0 and α_max=1e9 reproduce vanilla exactly".to_owned()
    } else {
        format!("differs from vanilla: {}", failures.join(", "))
    };
    Ok(CheckResult::new(
        "reductions",
        if failures.is_empty() { 0.0 } else { -1.0 },
        detail,
    ))
}

/// Per-draw Lemma 1 comparisons on a 60-stump pool.
pub fn lemma1_report(p: f64, n: usize, draws: usize, seed: u64) -> Result<Vec<Lemma1Check>> {
    let ds = noisy_linear(SAMPLES, 3, NOISE, DATA_SEED);
    let pool = generate_pool(&ds, 10)?;
    (0..draws as u64)
        .map(|d| lemma1_check(&pool, p, n, &sign_vector(pool.samples(), seed, d)))
        .collect()
}

fn lemma1() -> Result<CheckResult> {
    let mut dev: f64 = 0.0;
    for p in [1.0, 1.5, 2.0, 4.0] {
        for n in [1, 2, 5, 16] {
            for c in lemma1_report(p, n, 100, DATA_SEED)? {
                dev = dev.max((c.lhs - c.rhs).abs());
            }
        }
    }
    Ok(CheckResult::new(
        "lemma1",
        1e-12 - dev,
        format!("max |lhs - rhs| = {dev:.3e} over p ∈ {{1,1.5,2,4}}, n ∈ {{1,2,5,16}}, 100 draws"),
    ))
}

fn adaboost_bound(ds: &Dataset, pool: &VoterPool) -> Result<CheckResult> {
    let mut margin = f64::INFINITY;
    let mut sum = 0.0;
    adaboost_train_with(&ds.labels(), pool, 200, &mut |_, r| {
        sum += r.edge * r.edge;
        margin = margin.min((-2.0 * sum).exp() + 1e-9 - r.training_error);
    })?;
    Ok(CheckResult::new(
        "adaboost-bound",
        margin,
        format!("min over rounds of exp(-2Σγ²) - training error = {margin:.3e}"),
    ))
}

fn bound_dim_dependence() -> Result<CheckResult> {
    let term = |p: f64, dim: usize| -> Result<f64> {
        Ok(bound_value(&BoundInputs {
            p,
            delta: 0.05,
            m: 200,
            lipschitz: QUADRATIC_LIPSCHITZ,
            rademacher: 0.1,
            dim,
            norm: 2.0,
            empirical_risk: 0.3,
            empirical_rademacher: false,
        })?
        .complexity)
    };
    let dims = [1, 2, 5, 10, 50, 100];
    let mut margin = f64::INFINITY;
    for w in dims.windows(2) {
        margin = margin.min(0.0 - (term(1.0, w[1])? - term(1.0, w[0])?).abs());
        for p in [2.0, f64::INFINITY] {
            let rise = term(p, w[1])? - term(p, w[0])?;
            if rise <= 0.0 {
                margin = margin.min(rise - f64::MIN_POSITIVE);
            }
        }
    }
    Ok(CheckResult::new(
        "bound-dim-dependence",
        if margin.is_infinite() { 0.0 } else { margin },
        "complexity term constant in dim(α) at p=1, increasing at p=2 and p=∞".to_owned(),
    ))
}

/// Runs every check with the given rules.
pub fn run_checks(rules: &dyn RuleProvider) -> Result<Vec<CheckResult>> {
    let (ds, pool) = synthetic()?;
    Ok(vec![
        exact_decrease(&ds, &pool, rules)?,
        convergence_bound(&ds, &pool, rules)?,
        zero_one_below_quadratic(&ds, &pool, rules)?,
        residual_identity(&ds, &pool, rules)?,
        l1_objective_monotone(&ds, &pool, rules)?,
        rule_optimality(rules)?,
        reductions(&ds, &pool, rules)?,
        lemma1()?,
        adaboost_bound(&ds, &pool)?,
        bound_dim_dependence()?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::Vanilla;

    #[test]
    fn standard_rules_pass_everything() {
        for c in run_checks(&StandardRules).unwrap() {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }

    struct Shrunk;
    impl WeightRule for Shrunk {
        fn name(&self) -> &str {
            "shrunk"
        }
        fn weight(&self, g: f64, eta: f64) -> Result<f64> {
            Ok(0.9 * g / eta)
        }
    }

    struct BrokenVanilla;
    impl RuleProvider for BrokenVanilla {
        fn rule(&self, variant: &Variant) -> Result<Box<dyn WeightRule>> {
            match variant {
                Variant::Vanilla => Ok(Box::new(Shrunk)),
                v => v.rule(),
            }
        }
    }

    struct L2IgnoresLambda;
    impl RuleProvider for L2IgnoresLambda {
        fn rule(&self, variant: &Variant) -> Result<Box<dyn WeightRule>> {
            match variant {
                Variant::L2 { lambda } if *lambda > 0.0 => Ok(Box::new(Vanilla)),
                v => v.rule(),
            }
        }
    }

    fn failed(rules: &dyn RuleProvider) -> Vec<String> {
        run_checks(rules)
            .unwrap()
            .into_iter()
            .filter(|c| !c.passed)
            .map(|c| c.name)
            .collect()
    }

    #[test]
    fn broken_rules_are_caught() {
        let f = failed(&BrokenVanilla);
        assert!(f.contains(&"exact-decrease".to_owned()), "{f:?}");
        assert!(f.contains(&"rule-optimality".to_owned()), "{f:?}");
        assert_eq!(failed(&L2IgnoresLambda), vec!["rule-optimality".to_owned()]);
    }

    #[test]
    fn lemma1_report_shape() {
        let r = lemma1_report(2.0, 4, 5, 1).unwrap();
        assert_eq!(r.len(), 5);
        for c in r {
            assert_eq!(c.rhs, 2.0 * c.sup);
            assert!((c.lhs - c.rhs).abs() <= 1e-12);
        }
    }
}
