//! Offline packet scheduling under two-sided (pre- and post-transmission)
//! delay constraints.
//!
//! Energy minimization lives in [`energy`], completion-time minimization
//! under an energy budget in [`time`]. [`oracle`] holds independent numerical
//! solvers used to check both, [`structure`] classifies schedules and
//! [`bench`] runs randomized comparisons against simpler baselines.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod cost;
pub mod energy;
pub mod error;
pub mod feasibility;
pub mod model;
pub mod oracle;
pub mod structure;
pub mod time;

pub use cost::{CostKind, CostModel, InverseCost, ShannonCost};
pub use energy::{
    cost_independence_check, schedule_energy, schedule_energy_traced, schedule_energy_two_sided,
    schedule_energy_with_cost, schedule_single_deadline, Batch, BatchKind, EnergyRun,
};
pub use error::{Error, Result};
pub use feasibility::{
    check_feasibility, decompose, Decomposition, FeasibilityRule, FeasibilityVerdict, FeasibilityViolation,
    Segment,
};
pub use model::{
    completion_time, derive_bounds, eq_tolerance, total_cost, verify_schedule, verify_time_schedule, Bound,
    BudgetedInstance, DerivedBounds, ProblemInstance, Schedule, VerificationReport, Violation, ViolationKind,
};
pub use oracle::{oracle_energy, oracle_time, OracleConfig, OracleMode};
pub use structure::{check_lemma1, classify, classify_unchecked, GroupKind, ScheduleStructure, SubgroupLabel};
pub use time::{
    schedule_time_post, schedule_time_two_sided, schedule_time_with, CaseTag, TimeScheduleResult,
};
