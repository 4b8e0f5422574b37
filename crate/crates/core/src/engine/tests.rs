use proptest::prelude::*;

use super::*;
use crate::data::{noisy_linear, LabeledSample};
use crate::stumps::{generate_pool, EvalMatrix, Stump};

/// Pool made directly from columns; the stumps are placeholders.
fn pool_from_columns(columns: Vec<Vec<f64>>) -> VoterPool {
    let rows = columns[0].len();
    let stumps = (0..columns.len()).map(|_| Stump::new(0, 0.0, 1)).collect();
    VoterPool::from_parts(stumps, EvalMatrix::from_columns(rows, columns))
}

fn brute_risk(labels: &[f64], pool: &VoterPool, entries: &[Entry]) -> f64 {
    let m = labels.len();
    (0..m)
        .map(|k| {
            let s: f64 = entries
                .iter()
                .map(|e| e.weight * pool.eval().get(k, e.voter))
                .sum();
            (labels[k] - s).powi(2)
        })
        .sum::<f64>()
        / m as f64
}

fn synthetic(seed: u64) -> (Dataset, VoterPool) {
    let ds = noisy_linear(200, 5, 0.1, seed);
    let pool = generate_pool(&ds, 10).unwrap();
    (ds, pool)
}

#[test]
fn edges_examples() {
    let y = vec![1.0, -1.0, 1.0];
    let pool = pool_from_columns(vec![y.clone(), vec![-1.0, 1.0, -1.0], vec![1.0, 1.0, 1.0]]);
    let g = edges(&pool, &y);
    assert_eq!(g[0], 1.0);
    assert_eq!(g[1], -g[0]);
    assert!((g[2] - 1.0 / 3.0).abs() < 1e-15);

    let pool = pool_from_columns(vec![vec![1.0, 1.0]]);
    assert_eq!(edges(&pool, &[0.5, -0.5])[0], 0.0);
}

#[test]
fn select_voter_examples() {
    assert_eq!(select_voter(&[0.1, -0.4, 0.3]), (1, -0.4));
    assert_eq!(select_voter(&[0.2, -0.2]), (0, 0.2));
    assert_eq!(select_voter(&[0.0, 0.0, 0.0]), (0, 0.0));
}

#[test]
fn vanilla_step_on_four_examples_drops_risk_by_g_squared() {
    let y = vec![1.0, 1.0, 1.0, -1.0];
    let pool = pool_from_columns(vec![vec![1.0; 4], y.clone()]);
    let mut ens = Ensemble::empty(&y, 2);
    ens.set_weight(&pool, 0, 1.4);
    let before = brute_risk(&y, &pool, ens.entries());
    let g = edges(&pool, ens.residuals())[1];
    assert!((g - 0.3).abs() < 1e-12);
    let alpha = weight_vanilla(g, pool.eta(1)).unwrap();
    ens.add_to_weight(&pool, 1, alpha);
    let after = brute_risk(&y, &pool, ens.entries());
    assert!((before - after - 0.09).abs() < 1e-12, "{before} -> {after}");
}

#[test]
fn perfect_voter_fits_in_one_round() {
    let y = vec![1.0, -1.0, -1.0, 1.0];
    let pool = pool_from_columns(vec![vec![1.0; 4], y.clone()]);
    let mut ens = Ensemble::empty(&y, 2);
    let out = boost_round(&mut ens, &pool, &Vanilla, DEFAULT_STOP_TOLERANCE).unwrap();
    let RoundOutcome::Step(s) = out else { panic!("expected a step") };
    assert_eq!((s.voter, s.step), (1, 1.0));
    assert!(ens.residuals().iter().all(|r| *r == 0.0));
    assert_eq!(ens.quadratic_risk(), 0.0);
    assert_eq!(ens.training_error(), 0.0);
}

#[test]
fn l1_dead_zone_stops_without_change() {
    let (ds, pool) = synthetic(1);
    let y = ds.labels();
    let max_edge = edges(&pool, &y).iter().fold(0.0f64, |a, g| a.max(g.abs()));
    let mut ens = Ensemble::empty(&y, pool.len());
    let rule = L1 { lambda: max_edge };
    let out = boost_round(&mut ens, &pool, &rule, DEFAULT_STOP_TOLERANCE).unwrap();
    assert_eq!(out, RoundOutcome::Stop);
    assert!(ens.is_empty());
    assert_eq!(ens.residuals(), y.as_slice());
}

#[test]
fn reweighting_an_optimal_single_voter_is_a_fixed_point() {
    let (ds, pool) = synthetic(2);
    let mut ens = Ensemble::empty(&ds.labels(), pool.len());
    boost_round(&mut ens, &pool, &Vanilla, 0.0).unwrap();
    let before = ens.entries()[0];
    reweight_pass(&mut ens, &pool, &Vanilla).unwrap();
    let after = ens.entries()[0];
    assert_eq!(before.voter, after.voter);
    assert!((before.weight - after.weight).abs() < 1e-14);
}

#[test]
fn reweighting_two_identical_voters_matches_joint_grid_minimum() {
    let y = vec![1.0, 1.0, -1.0, 1.0, -1.0];
    let h = vec![1.0, 1.0, -1.0, -1.0, -1.0];
    let pool = pool_from_columns(vec![h.clone(), h.clone()]);
    let mut ens = Ensemble::empty(&y, 2);
    ens.set_weight(&pool, 0, 0.9);
    ens.set_weight(&pool, 1, -0.35);
    reweight_pass(&mut ens, &pool, &Vanilla).unwrap();
    let total: f64 = ens.weights().iter().sum();
    let risk = ens.quadratic_risk();

    // Oracle: joint minimization over a 2-D grid with step 1e-3.
    let mut best = (f64::INFINITY, 0.0);
    for i in -1500..=1500 {
        let a = i as f64 * 1e-3;
        for j in (-1500..=1500).step_by(10) {
            let b = j as f64 * 1e-3;
            let e = [Entry { voter: 0, weight: a }, Entry { voter: 1, weight: b }];
            let r = brute_risk(&y, &pool, &e);
            if r < best.0 {
                best = (r, a + b);
            }
        }
    }
    assert!(risk <= best.0 + 1e-12, "pass risk {risk} above grid minimum {}", best.0);
    assert!((total - best.1).abs() <= 2e-3, "total weight {total} vs {}", best.1);
}

#[test]
fn l1_reweighting_with_large_lambda_prunes_and_keeps_objective() {
    let (ds, pool) = synthetic(3);
    let config = BoostConfig::new(Variant::Vanilla, 30);
    let t = train(&ds, &pool, &config).unwrap();
    let mut ens = t.ensemble;
    let rule = L1 { lambda: 0.05 };
    let objective = |e: &Ensemble| e.quadratic_risk() + rule.penalty(&e.weights());
    let before = (objective(&ens), ens.dim());
    reweight_pass(&mut ens, &pool, &rule).unwrap();
    assert!(ens.dim() < before.1, "no entry was removed");
    assert!(objective(&ens) <= before.0 + 1e-12);
    assert!(ens.entries().iter().all(|e| e.weight != 0.0));
}

#[test]
fn one_stump_separable_data_is_fit_in_one_round() {
    let samples = (0..20)
        .map(|i| {
            let x = i as f64 / 10.0 - 1.0;
            LabeledSample {
                features: vec![x, 0.3],
                label: if i < 10 { 1 } else { -1 },
            }
        })
        .collect();
    let ds = Dataset::new("sep", 2, samples).unwrap();
    let pool = generate_pool(&ds, 1).unwrap();
    let t = train(&ds, &pool, &BoostConfig::new(Variant::Vanilla, 1)).unwrap();
    assert_eq!(t.history.len(), 1);
    assert_eq!(zero_one_error(&t.ensemble, &pool, &ds).unwrap(), 0.0);
}

#[test]
fn vanilla_history_obeys_decrease_and_convergence_bound() {
    let (ds, pool) = synthetic(4);
    let t = train(&ds, &pool, &BoostConfig::new(Variant::Vanilla, 50)).unwrap();
    let mut prev = 1.0;
    let mut gamma = f64::INFINITY;
    for s in &t.history {
        assert!((prev - s.edge * s.edge / s.eta - s.quadratic_risk).abs() < 1e-10);
        assert!(s.training_error <= s.quadratic_risk + 1e-12);
        gamma = gamma.min(s.edge.abs());
        prev = s.quadratic_risk;
    }
    let bound = 1.0 - t.history.len() as f64 * gamma * gamma;
    assert!(t.ensemble.quadratic_risk() <= bound + 1e-9);
}

#[test]
fn training_is_deterministic() {
    let (ds, pool) = synthetic(5);
    let mut config = BoostConfig::new(Variant::L1 { lambda: 0.01 }, 80);
    config.reweight_every = 7;
    let a = train(&ds, &pool, &config).unwrap();
    let b = train(&ds, &pool, &config).unwrap();
    assert_eq!(a.history, b.history);
    assert_eq!(a.ensemble, b.ensemble);
}

#[test]
fn prediction_sign_conventions() {
    let y = vec![1.0, -1.0];
    let samples = vec![
        LabeledSample { features: vec![-0.5], label: 1 },
        LabeledSample { features: vec![0.5], label: -1 },
    ];
    let ds = Dataset::new("t", 1, samples).unwrap();
    let pool = generate_pool(&ds, 1).unwrap();

    let empty = Ensemble::empty(&y, pool.len());
    assert_eq!(predict(&empty, &pool, &ds).unwrap(), vec![-1, -1]);
    assert_eq!(empty.quadratic_risk(), 1.0);

    let mut one = Ensemble::empty(&y, pool.len());
    one.set_weight(&pool, 0, 1.0);
    let expected: Vec<i8> = pool.column(0).iter().map(|h| *h as i8).collect();
    assert_eq!(predict(&one, &pool, &ds).unwrap(), expected);

    let mut neg = Ensemble::empty(&y, pool.len());
    neg.set_weight(&pool, 0, -1.0);
    let flipped: Vec<i8> = expected.iter().map(|p| -p).collect();
    assert_eq!(predict(&neg, &pool, &ds).unwrap(), flipped);
    assert_eq!(zero_one_error(&one, &pool, &ds).unwrap(), 0.0);
    assert_eq!(one.quadratic_risk(), 0.0);
}

#[test]
fn invalid_configs_are_rejected() {
    let (ds, pool) = synthetic(6);
    assert!(train(&ds, &pool, &BoostConfig::new(Variant::Vanilla, 0)).is_err());
    assert!(train(&ds, &pool, &BoostConfig::new(Variant::L2 { lambda: -1.0 }, 5)).is_err());
    let short = ds.subset(&[0, 1, 2]);
    assert!(train(&short, &pool, &BoostConfig::new(Variant::Vanilla, 5)).is_err());
}

/// Quadratic risk through the margin / correlation decomposition, with
/// every correlation recomputed against the prefix of earlier steps.
fn decomposition_risk(labels: &[f64], pool: &VoterPool, steps: &[(usize, f64)]) -> f64 {
    let m = labels.len() as f64;
    let mut prefix = vec![0.0; labels.len()];
    let mut total = 1.0;
    for &(voter, alpha) in steps {
        let h = pool.column(voter);
        let mu: f64 = h.iter().zip(labels).map(|(h, y)| h * y).sum::<f64>() / m;
        let corr: f64 = h.iter().zip(&prefix).map(|(h, s)| h * s).sum::<f64>() / m;
        let eta: f64 = h.iter().map(|h| h * h).sum::<f64>() / m;
        total += -2.0 * alpha * (mu - corr) + alpha * alpha * eta;
        for (s, h) in prefix.iter_mut().zip(h) {
            *s += alpha * h;
        }
    }
    total
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn residual_identity_and_decomposition(seed in 0u64..1000, rounds in 1usize..60, every in 0usize..6) {
        let (ds, pool) = synthetic(seed);
        let y = ds.labels();
        let mut config = BoostConfig::new(Variant::Vanilla, rounds);
        let plain = train(&ds, &pool, &config).unwrap();
        let steps: Vec<_> = plain.history.iter().map(|s| (s.voter, s.step)).collect();
        let direct = brute_risk(&y, &pool, plain.ensemble.entries());
        prop_assert!((decomposition_risk(&y, &pool, &steps) - direct).abs() < 1e-9);

        config.reweight_every = every;
        config.variant = Variant::L1 { lambda: 0.002 };
        let t = train(&ds, &pool, &config).unwrap();
        let fresh = t.ensemble.recomputed_residuals(&pool);
        for (a, b) in fresh.iter().zip(t.ensemble.residuals()) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn penalized_objective_never_increases(seed in 0u64..1000, lambda in 0.0f64..0.1, every in 0usize..5) {
        let (ds, pool) = synthetic(seed);
        for variant in [Variant::Vanilla, Variant::L1 { lambda }] {
            let rule = variant.rule().unwrap();
            let mut config = BoostConfig::new(variant, 40);
            config.reweight_every = every;
            let mut prev = 1.0;
            let mut ok = true;
            train_with(&ds.labels(), &pool, &config, rule.as_ref(), &mut |e, _| {
                let obj = e.quadratic_risk() + rule.penalty(&e.weights());
                ok &= obj <= prev + 1e-12;
                prev = obj;
            }).unwrap();
            prop_assert!(ok, "objective increased for {:?}", variant);
        }
    }

    #[test]
    fn reweight_passes_never_increase_their_objective(seed in 0u64..1000, lambda in 0.0f64..2.0) {
        let (ds, pool) = synthetic(seed);
        let warm = train(&ds, &pool, &BoostConfig::new(Variant::Vanilla, 25)).unwrap();
        for rule in [&Vanilla as &dyn WeightRule, &L1 { lambda: lambda / 20.0 }, &L2 { lambda }] {
            let mut ens = warm.ensemble.clone();
            let before = ens.quadratic_risk() + rule.penalty(&ens.weights());
            reweight_pass(&mut ens, &pool, rule).unwrap();
            let after = ens.quadratic_risk() + rule.penalty(&ens.weights());
            prop_assert!(after <= before + 1e-12, "{}: {} -> {}", rule.name(), before, after);
        }
    }

    #[test]
    fn zero_one_error_below_quadratic_risk(seed in 0u64..1000, lambda in 0.0f64..0.05) {
        let (ds, pool) = synthetic(seed);
        for variant in [Variant::Vanilla, Variant::L1 { lambda }, Variant::Linf { alpha_max: 0.05 }] {
            let t = train(&ds, &pool, &BoostConfig::new(variant, 40)).unwrap();
            for s in &t.history {
                prop_assert!(s.training_error <= s.quadratic_risk + 1e-12);
            }
            let err = zero_one_error(&t.ensemble, &pool, &ds).unwrap();
            prop_assert!(err <= t.ensemble.quadratic_risk() + 1e-12);
        }
    }
}
