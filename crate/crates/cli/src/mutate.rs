//! Deliberately broken weight rules for `verify --mutate`. Each one should
//! make at least one check fail.

use quadboost::engine::{Variant, WeightRule};
use quadboost::verify::RuleProvider;
use quadboost::Result;

pub const NAMES: [&str; 4] = ["vanilla-shrink", "l1-half-threshold", "l2-no-lambda", "linf-no-clamp"];

struct Shrink;

impl WeightRule for Shrink {
    fn name(&self) -> &str {
        "vanilla-shrink"
    }

    fn weight(&self, g: f64, eta: f64) -> Result<f64> {
        Ok(0.9 * g / eta)
    }
}

/// Soft threshold at λ/2 instead of λ; the stopping rule is left intact.
struct HalfThreshold {
    lambda: f64,
}

impl WeightRule for HalfThreshold {
    fn name(&self) -> &str {
        "l1-half-threshold"
    }

    fn weight(&self, g: f64, eta: f64) -> Result<f64> {
        let t = self.lambda / 2.0;
        Ok(if g > t {
            (g - t) / eta
        } else if g < -t {
            (g + t) / eta
        } else {
            0.0
        })
    }

    fn stop_threshold(&self, tolerance: f64) -> f64 {
        self.lambda + tolerance
    }

    fn penalty(&self, weights: &[f64]) -> f64 {
        2.0 * self.lambda * weights.iter().map(|w| w.abs()).sum::<f64>()
    }
}

struct Unclamped;

impl WeightRule for Unclamped {
    fn name(&self) -> &str {
        "unclamped"
    }

    fn weight(&self, g: f64, eta: f64) -> Result<f64> {
        Ok(g / eta)
    }
}

pub struct Mutant(pub String);

impl RuleProvider for Mutant {
    fn rule(&self, variant: &Variant) -> Result<Box<dyn WeightRule>> {
        Ok(match (self.0.as_str(), *variant) {
            ("vanilla-shrink", Variant::Vanilla) => Box::new(Shrink),
            ("l1-half-threshold", Variant::L1 { lambda }) => Box::new(HalfThreshold { lambda }),
            ("l2-no-lambda", Variant::L2 { .. }) => Box::new(Unclamped),
            ("linf-no-clamp", Variant::Linf { .. }) => Box::new(Unclamped),
            _ => return variant.rule(),
        })
    }
}
