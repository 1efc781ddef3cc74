//! Per-packet transmission cost models.
//!
//! A cost model maps a transmission duration `τ > 0` to a positive cost
//! `w(τ)`. Every model here is strictly convex and strictly decreasing, which
//! is all the energy schedulers rely on.

use std::fmt;

use serde::{Deserialize, Serialize};

pub trait CostModel: Send + Sync {
    /// `w(τ)` for `τ > 0`.
    fn evaluate(&self, tau: f64) -> f64;

    /// The unique `τ` with `w(τ) = cost`. Returns `+∞` when `cost` is at or
    /// below the infimum of `w` (no finite duration is cheap enough).
    fn inverse(&self, cost: f64) -> f64;

    /// `w'(τ)`. The default is a central difference.
    fn derivative(&self, tau: f64) -> f64 {
        let h = 1e-6 * tau.max(1e-12);
        (self.evaluate(tau + h) - self.evaluate(tau - h)) / (2.0 * h)
    }

    fn label(&self) -> String;
}

/// `w(τ) = 1/τ`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct InverseCost;

impl CostModel for InverseCost {
    fn evaluate(&self, tau: f64) -> f64 {
        1.0 / tau
    }

    fn inverse(&self, cost: f64) -> f64 {
        if cost <= 0.0 {
            f64::INFINITY
        } else {
            1.0 / cost
        }
    }

    fn derivative(&self, tau: f64) -> f64 {
        -1.0 / (tau * tau)
    }

    fn label(&self) -> String {
        "inverse".to_string()
    }
}

/// Energy needed to push `bits` through a unit-bandwidth AWGN link in time
/// `τ`: `w(τ) = τ·(2^{b/τ} − 1)`.
///
/// `w` decreases towards `b·ln 2` as `τ → ∞`, so [`CostModel::inverse`] is
/// only finite above that floor. It overflows for `τ ≲ b·ln2/709`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShannonCost {
    pub bits: f64,
}

const SHANNON_INVERSE_RTOL: f64 = 1e-12;

impl ShannonCost {
    pub fn new(bits: f64) -> Self {
        assert!(bits > 0.0 && bits.is_finite(), "bits must be positive");
        Self { bits }
    }

    fn floor(&self) -> f64 {
        self.bits * std::f64::consts::LN_2
    }
}

impl CostModel for ShannonCost {
    fn evaluate(&self, tau: f64) -> f64 {
        tau * (self.floor() / tau).exp_m1()
    }

    fn inverse(&self, cost: f64) -> f64 {
        if !(cost > self.floor()) {
            return f64::INFINITY;
        }
        if cost == f64::INFINITY {
            return 0.0;
        }
        // bracket, then bisect on the decreasing function
        let mut lo = 1.0_f64;
        while self.evaluate(lo) < cost {
            lo *= 0.5;
        }
        let mut hi = 1.0_f64;
        while self.evaluate(hi) > cost {
            hi *= 2.0;
            if !hi.is_finite() {
                return f64::INFINITY;
            }
        }
        while hi - lo > SHANNON_INVERSE_RTOL * hi {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.evaluate(mid) > cost {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    fn derivative(&self, tau: f64) -> f64 {
        let x = self.floor() / tau;
        x.exp_m1() - x * x.exp()
    }

    fn label(&self) -> String {
        format!("shannon({})", self.bits)
    }
}

/// Serializable selector for the built-in cost models.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
#[derive(Default)]
pub enum CostKind {
    #[default]
    Inverse,
    Shannon { bits: f64 },
}


impl CostKind {
    pub fn build(&self) -> Box<dyn CostModel> {
        match *self {
            CostKind::Inverse => Box::new(InverseCost),
            CostKind::Shannon { bits } => Box::new(ShannonCost::new(bits)),
        }
    }
}

impl fmt::Display for CostKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CostKind::Inverse => write!(f, "inverse"),
            CostKind::Shannon { bits } => write!(f, "shannon({bits})"),
        }
    }
}
