//! Online learning with costly features in piece-wise stationary
//! contextual bandits.
//!
//! Each round the learner picks which features to pay for, sees their
//! values and then picks an action. [`policies::NccUcrl2`] does this with
//! sliding-window optimistic estimates; [`policies::Oracle`] knows the true
//! parameters and serves as the regret baseline. [`harness`] runs policies
//! against [`environment`]s and [`dataio`] reads and writes the files.

pub mod dataio;
pub mod environment;
pub mod error;
pub mod estimators;
pub mod feature_space;
pub mod harness;
pub mod optimism;
pub mod policies;

pub use dataio::config::{ConfigIssue, ExperimentConfig, Preset};
pub use environment::{Environment, EnvironmentConfig, RoundDraw};
pub use error::{Error, Result};
pub use estimators::{LearnerState, RoundRecord};
pub use feature_space::{FeatureSpace, ObservationSet, PartialIndex, PartialStateVector, StateVector};
pub use harness::{run_experiment, run_policies, ResolvedEnvironment, RoundOutcome, RunResult};
pub use optimism::{solve_optimistic_gain, ConfidenceConfig, OptimisticSolution};
pub use policies::{Oracle, Policy, PolicyDecision, PolicyKind, PolicyParams, PolicySpec, TrueParameters};
