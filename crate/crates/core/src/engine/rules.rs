//! Closed-form voter-weight rules.
//!
//! Each rule minimizes, over a single weight `α`, the scalar objective
//! `-2αg + α²η + penalty(α)` where `g = μ_j - M_j` is the voter's edge
//! against the current residuals and `η = (1/m) Σ h_j(x_k)²`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn check_eta(eta: f64) -> Result<()> {
    if eta > 0.0 && eta.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("η must be positive, got {eta}")))
    }
}

/// `α = g / η`. Adding the voter lowers the quadratic risk by `g² / η`.
pub fn weight_vanilla(g: f64, eta: f64) -> Result<f64> {
    check_eta(eta)?;
    Ok(g / eta)
}

/// Soft threshold: `(g - λ)/η` above `λ`, `-(-g - λ)/η` below `-λ`, zero in
/// between.
pub fn weight_l1(g: f64, eta: f64, lambda: f64) -> Result<f64> {
    check_eta(eta)?;
    Ok(if g > lambda {
        (g - lambda) / eta
    } else if -g > lambda {
        -(-g - lambda) / eta
    } else {
        0.0
    })
}

/// Ridge shrinkage `g / (η + λ)`.
pub fn weight_l2(g: f64, eta: f64, lambda: f64) -> Result<f64> {
    check_eta(eta)?;
    Ok(g / (eta + lambda))
}

/// `g / η` clamped to `[-α_max, α_max]`.
pub fn weight_linf(g: f64, eta: f64, alpha_max: f64) -> Result<f64> {
    check_eta(eta)?;
    if !(alpha_max > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "α_max must be positive, got {alpha_max}"
        )));
    }
    Ok(if g.abs() / eta <= alpha_max {
        g / eta
    } else {
        alpha_max * g.signum()
    })
}

/// A voter-weight update strategy used by the boosting engine.
pub trait WeightRule: Send + Sync {
    fn name(&self) -> &str;

    /// Weight minimizing the rule's scalar objective for edge `g`.
    fn weight(&self, g: f64, eta: f64) -> Result<f64>;

    /// Training stops once the largest edge magnitude is at or below this.
    fn stop_threshold(&self, tolerance: f64) -> f64 {
        tolerance
    }

    /// Regularization term added to the quadratic risk; the sum is the
    /// objective each step of this rule does not increase.
    fn penalty(&self, _weights: &[f64]) -> f64 {
        0.0
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Vanilla;

#[derive(Debug, Clone, Copy)]
pub struct L1 {
    pub lambda: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct L2 {
    pub lambda: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct LInf {
    pub alpha_max: f64,
}

impl WeightRule for Vanilla {
    fn name(&self) -> &str {
        "vanilla"
    }

    fn weight(&self, g: f64, eta: f64) -> Result<f64> {
        weight_vanilla(g, eta)
    }
}

impl WeightRule for L1 {
    fn name(&self) -> &str {
        "l1"
    }

    fn weight(&self, g: f64, eta: f64) -> Result<f64> {
        weight_l1(g, eta, self.lambda)
    }

    fn stop_threshold(&self, tolerance: f64) -> f64 {
        self.lambda + tolerance
    }

    fn penalty(&self, weights: &[f64]) -> f64 {
        2.0 * self.lambda * weights.iter().map(|a| a.abs()).sum::<f64>()
    }
}

impl WeightRule for L2 {
    fn name(&self) -> &str {
        "l2"
    }

    fn weight(&self, g: f64, eta: f64) -> Result<f64> {
        weight_l2(g, eta, self.lambda)
    }

    fn penalty(&self, weights: &[f64]) -> f64 {
        self.lambda * weights.iter().map(|a| a * a).sum::<f64>()
    }
}

impl WeightRule for LInf {
    fn name(&self) -> &str {
        "linf"
    }

    fn weight(&self, g: f64, eta: f64) -> Result<f64> {
        weight_linf(g, eta, self.alpha_max)
    }
}

/// The QuadBoost variant together with its regularization parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "lowercase")]
pub enum Variant {
    Vanilla,
    L1 { lambda: f64 },
    L2 { lambda: f64 },
    Linf { alpha_max: f64 },
}

impl Variant {
    pub fn name(&self) -> &'static str {
        match self {
            Variant::Vanilla => "vanilla",
            Variant::L1 { .. } => "l1",
            Variant::L2 { .. } => "l2",
            Variant::Linf { .. } => "linf",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Variant::Vanilla => Ok(()),
            Variant::L1 { lambda } | Variant::L2 { lambda } => {
                if lambda >= 0.0 && lambda.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(format!(
                        "λ must be a non-negative number, got {lambda}"
                    )))
                }
            }
            Variant::Linf { alpha_max } => {
                if alpha_max > 0.0 && !alpha_max.is_nan() {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(format!(
                        "α_max must be positive, got {alpha_max}"
                    )))
                }
            }
        }
    }

    pub fn rule(&self) -> Result<Box<dyn WeightRule>> {
        self.validate()?;
        Ok(match *self {
            Variant::Vanilla => Box::new(Vanilla),
            Variant::L1 { lambda } => Box::new(L1 { lambda }),
            Variant::L2 { lambda } => Box::new(L2 { lambda }),
            Variant::Linf { alpha_max } => Box::new(LInf { alpha_max }),
        })
    }
}
