//! Two-stage, latency-aware bidding for tiered (cold/hot) cloud storage.
//!
//! Stage one decides which storage bids to accept and whether the second
//! copy of each accepted file lives in cold or hot storage. Stage two runs
//! once per access slot: it accepts access bids and schedules each accepted
//! file's requests across the tiers so that every accepted request meets its
//! latency requirement under an M/G/1 model of each tier.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`]: domain types, unit conventions, linear feasibility and profit.
//! * [`latency`]: closed-form M/G/1 service moments, waiting time and latency.
//! * [`scenario`]: synthetic file populations, scenario sets, slot draws.
//! * [`relax`]: sigmoid integrality penalty and the relaxed objective.
//! * [`solver`]: penalty-continuation projected-gradient solver, rounding,
//!   and a brute-force oracle for tiny instances.
//! * [`baselines`]: independent-stages and greedy comparison methods.
//! * [`des`]: discrete-event simulation of one tier, used to check the
//!   queueing formulas.
//! * [`harness`]: experiment plans, sweeps and report emission.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::too_many_arguments, clippy::type_complexity)]

pub mod baselines;
pub mod des;
pub mod error;
pub mod harness;
pub mod latency;
pub mod model;
pub mod relax;
pub mod scenario;
pub mod solver;
pub mod units;

pub use error::{Error, Result};
pub use model::{
    FeasibilityReport, FileSpec, ProfitBreakdown, ProfitMode, Scenario, StageOneDecision, StageTwoDecision, SystemConfig, Tier,
};
