//! Sharp bounds on the survivor average causal effect (SACE) for outcomes
//! truncated by death, using survival information from multiple follow-up
//! times, a one-parameter copula over the potential survival times, and a
//! linear-programming bounds engine, with Bayesian posterior inference via
//! compatible-region rejection sampling.

// Domain guards are written as `!(x > 0.0)` on purpose: the negated form
// rejects NaN, which the suggested `x <= 0.0` would let through. Indexed
// loops are kept in the numeric kernels (grids, tableau rows) where the
// index mirrors the notation.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod bayes;
pub mod bounds;
pub mod cli;
pub mod copula;
pub mod error;
pub mod input;
pub mod linprog;
pub mod model;

pub use bayes::{BayesConfig, BayesSummary, CredibleInterval, PosteriorDraw};
pub use bounds::{BoundsResult, BoundsStatus, SweepResult};
pub use copula::{CopulaFamily, CopulaSpec, JointSurvivalPMF};
pub use error::{Error, Result};
pub use input::{parse_input_file, ParsedInput};
pub use model::{
    Arm, CountData, FollowUpSchedule, GroundTruth, LargeSampleInput, MarginalSurvival, OutcomeRisk,
};
