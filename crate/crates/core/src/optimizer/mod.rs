//! Per-epoch aggregation optimizer.

pub mod oracle;
pub mod problem;
pub mod solve;

pub use oracle::brute_force_oracle;
pub use problem::{
    is_feasible, max_violation, objective, objective_parts, violations, AggregationDecision, Constraints,
    EpochState, LmuState, ObjectiveParts, SensorState, WbanState, FEASIBILITY_TOL,
};
pub use solve::{solve, DualIterate, SolveReport, SolverParams};
