//! Sequential ranking and selection as a stochastic control problem.
//!
//! - [`bayes`]: conjugate Beta–Bernoulli and normal known-variance beliefs.
//! - [`exact`]: exact optimal allocation/selection for finite-support models
//!   by backward induction, with an exhaustive oracle.
//! - [`policies`]: allocation and selection rules for independent normal
//!   beliefs (AOAP, multi-step AOAP, two-factor VFA, OCBA, KG, equal
//!   allocation) and the asymptotically optimal sampling ratios.
//! - [`vfa`]: gradient-based Monte Carlo learning of VFA weights.
//! - [`experiment`]: the macro-replication harness estimating IPCS curves.

pub mod bayes;
pub mod error;
pub mod exact;
pub mod experiment;
pub mod policies;
pub mod rng;
pub mod vfa;

pub use bayes::{BetaBelief, GaussianBelief, GaussianPrior, GroundTruth, NormalPriorSpec};
pub use error::{Error, Result};
pub use exact::{DiscreteModel, DiscreteState, Reward, SolvedPolicy};
pub use experiment::{ExperimentConfig, IpcsCurve, PolicySpec, ResultTable, Scenario, VarianceMode};
pub use policies::{AllocationRule, BeliefVector, RatioVector};
pub use vfa::{Activation, SaConfig, VfaWeights};
