//! Simulation library for upper-tail stochastic bandits.
//!
//! The value of an arm is the upper endpoint `F^{-1}(1 - alpha/2)` of its
//! central prediction interval rather than its mean. [`policies`] provides
//! ACP-UCB1, which learns that value from a conformal score-quantile
//! correction of empirical central anchors, alongside the mean-based UCB1
//! benchmark. [`engine`] runs seeded episodes and records pseudo-regret under
//! both metrics, and [`theory`] evaluates the closed-form Gaussian comparison
//! between the two objectives.

// `!(x > 0.0)` style checks are intentional: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod conformal;
pub mod dists;
pub mod empquant;
pub mod engine;
pub mod error;
pub mod policies;
pub mod rng;
pub mod special;
pub mod theory;

pub use conformal::{AdaptiveLevelConfig, ArmState, ConformalEndpoint};
pub use dists::{DistributionSpec, Family, PopulationSummary};
pub use empquant::Sample;
pub use engine::{
    run_episode, run_replications, EpisodeResult, ExperimentResult, Instance, RegretLedger,
};
pub use error::{Error, Result};
pub use policies::{PolicyConfig, PolicyKind, Warmup};
pub use rng::RandomStream;
