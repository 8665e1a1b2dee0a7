//! Reinforcement-learning tuning of a four-parameter path-tracking
//! controller, evaluated on a fixed-step kinematic vehicle simulator.
//!
//! Module map:
//! - [`sim`]: vehicle plant, odometry noise, closed-loop runner
//! - [`paths`]: maneuver geometry, map zones, reference selection
//! - [`controller`]: error transforms and the control laws
//! - [`supervisor`]: gain scheduling, speed limit, reward monitor
//! - [`rl`]: educated Q-Learning over the gains
//! - [`eval`]: MSE protocol, gain comparisons, circuit run
//! - [`exec`]: sequential or rayon-parallel batch execution

pub mod controller;
pub mod error;
pub mod eval;
pub mod exec;
pub mod paths;
pub mod rl;
pub mod scenario;
pub mod sim;
pub mod supervisor;

pub use controller::{ControlCommand, GainSet};
pub use error::{Error, Result};
pub use exec::Exec;
pub use paths::{Maneuver, ReferencePath, Zone};
pub use scenario::Scenario;
pub use sim::{NoiseModel, Outcome, Pose, SimConfig, TrajectoryLog};
