//! Simulation and analysis toolkit for a two-mass, friction-modulated
//! crawling robot.
//!
//! * [`model`]: parameters, state-space realizations and force laws.
//! * [`numerics`]: matrix exponential, ZOH discretization, rank and bases.
//! * [`controllability`]: controllability matrices and reachable subspaces.
//! * [`simulation`]: the sampled friction-feedback loop and its traces.
//! * [`gait`]: four-phase anchoring gait, PID pressure loops and stride metrics.
//! * [`experiments`]: configuration, sweeps, calibration and file output.

pub mod controllability;
pub mod gait;
pub mod error;
pub mod experiments;
pub mod model;
pub mod numerics;
pub mod simulation;

pub use error::{Error, Result};
