#![forbid(unsafe_code)]

//! Schedulers for parallelizable jobs that share a divisible server under a
//! concave speedup function.
//!
//! A job allocated bandwidth `theta` is served at rate `s(theta)`, where `s`
//! is strictly increasing and strictly concave with `s(0) = 0`. Given job
//! sizes, per-job weights, and a total bandwidth `B`, the [`scheduler`]
//! module computes the schedule minimizing the weighted sum of completion
//! times. The solver, SmartFill, works stage by stage: each stage fixes the
//! allocation of the next job to complete and splits the remaining bandwidth
//! among the longer jobs via generalized water filling ([`gwf`]), keeping the
//! ratios of marginal service rates constant across stages.
//!
//! Other pieces:
//!
//! - [`speedup`]: the concave function families, their derivatives and
//!   inverse derivatives, and axiom validation.
//! - [`baselines`]: heSRPT (exact for power-law speedup, fitted-power
//!   approximation otherwise) and an equal-split policy.
//! - [`oracle`]: brute-force minimizers for two- and three-job instances,
//!   kept independent of the solver for cross-checking.
//! - [`instance`], [`experiment`], [`verification`]: file formats, benchmark
//!   sweeps, and randomized self-checks backing the `smartfill` CLI.

pub mod baselines;
pub mod experiment;
pub mod gwf;
pub mod instance;
pub mod oracle;
pub mod scheduler;
pub mod speedup;
pub mod verification;

pub use baselines::{equal_split, fit_power, hesrpt_approx, hesrpt_power, PowerFit};
pub use gwf::{
    bisect_waterfill, closed_form_waterfill, gwf_solve, verify_cap, CapInstance, WaterFillSolution,
};
pub use scheduler::{
    linearity_check, realize_schedule, smartfill, verify_cdr, Job, ProblemInstance, ScheduleMatrix,
    ScheduleResult,
};
pub use speedup::{RegularDescriptor, SpeedupFamily, SpeedupFunction, SpeedupSpec};
