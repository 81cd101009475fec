//! Shortest-path constrained reinforcement learning on tabular MDPs.

pub mod agent;
pub mod constraint;
pub mod distance;
pub mod error;
pub mod gridworld;
pub mod harness;
pub mod mdp;
pub mod rnet;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Real;

/// Double-precision aliases for the common case.
pub type Mdp = mdp::TabularMdp<f64>;
pub type Policy = mdp::PolicyTable<f64>;
pub type Traj = mdp::Trajectory<f64>;
pub type RNet = rnet::RNetModel<f64>;
pub type Task = gridworld::GridTask<f64>;

pub type MdpF32 = mdp::TabularMdp<f32>;
pub type PolicyF32 = mdp::PolicyTable<f32>;
pub type TrajF32 = mdp::Trajectory<f32>;
pub type RNetF32 = rnet::RNetModel<f32>;
