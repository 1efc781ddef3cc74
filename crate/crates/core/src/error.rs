use thiserror::Error;

use crate::feasibility::FeasibilityVerdict;
use crate::model::Schedule;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("instance is infeasible ({} violated condition(s))", .0.violations.len())]
    Infeasible(FeasibilityVerdict),

    /// The instance has a forced idle point (`d_i > T_pre,i`) and must be
    /// decomposed before calling a single-segment scheduler.
    #[error("packet {0} has an inter-arrival gap longer than its pre-delay; decompose first")]
    NotDecomposed(usize),

    #[error("energy budget {available} is insufficient; at least {required} is needed")]
    InsufficientBudget { required: f64, available: f64 },

    #[error("oracle feasible region is empty: {0}")]
    OracleInfeasible(String),

    #[error("oracle did not converge after {iterations} iterations (best cost {best_cost})")]
    OracleNoConvergence {
        iterations: usize,
        best: Schedule,
        best_cost: f64,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
