//! Three-way contingency-table analysis with information-divergence
//! projections.
//!
//! The crate represents outcome x exposure x confounder tables over dense
//! product domains, projects them onto marginal-constraint families by
//! iterative proportional fitting (structural-parity de-confounding, the
//! delta-mixture disparity flow, and maximum-entropy logistic fits), and
//! compares effect-size estimators: crude, stratified, Mantel-Haenszel
//! pooled, and confounding-free.
//!
//! Everything operates on immutable values and is freely shareable across
//! threads; projections are deterministic for identical inputs and
//! configuration.

pub mod error;
pub mod estimators;
pub mod flow;
pub mod io;
pub mod projection;
pub mod sampling;
pub mod schema;
pub mod table;

pub use error::{Error, Result};
pub use estimators::{
    effect_report, effect_reports, mh_or, mh_rr, odds, stratified_or, stratified_rr, two_way_or,
    two_way_rr, EffectReport, Estimate, StratumEffects,
};
pub use flow::{delta_sweep, mh_or_monotone, sweep_from_csv, sweep_to_csv, SweepRecord};
pub use projection::{
    dp_projection, ipf_project, logit_maxent, parity_logit, pr_projection, Delta,
    MarginalConstraint, ProjectionResult, SolverConfig,
};
pub use sampling::{
    asymptotic_log_hypergeometric, log_hypergeometric, log_multinomial, SampleCounts,
};
pub use schema::{Role, Schema, Variable};
pub use table::{Distribution, MarginalSpec, Table};
