//! Strategic linear contextual bandits.
//!
//! Arms privately observe contexts and report possibly gamed versions; a
//! mechanism selects one arm per round and observes only the reported
//! contexts and the realized reward. The crate provides the environment,
//! per-arm ridge estimators, the mechanisms (grim-trigger and baselines),
//! arm strategies, a seeded simulator, and regret/equilibrium metrics.

pub mod arms;
pub mod chance;
pub mod config;
pub mod environment;
pub mod error;
pub mod estimator;
pub mod geometry;
pub mod mechanism;
pub mod metrics;
pub mod output;
pub mod simulator;

pub use arms::{Observation, Strategy, StrategyKind};
pub use chance::{Chance, SeededChance};
pub use config::ExperimentConfig;
pub use environment::{EnvironmentSpec, NoiseModel, TrueContextSequence};
pub use error::{Error, Result};
pub use estimator::{ArmEstimator, ScoreMode};
pub use geometry::Vector;
pub use mechanism::{Mechanism, MechanismConfig, MechanismKind, PublicScore, Selection};
