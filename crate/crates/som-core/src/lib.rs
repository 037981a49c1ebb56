//! Self other-modeling agents for two-player turn-based grid games.
//!
//! An agent reuses its own policy network to model its opponent: the goal
//! input slots are swapped, the opponent's observed actions supervise an
//! online gradient search over a goal estimate, and the estimate's argmax
//! feeds back into the agent's own acting network. The crate provides the
//! tape autodiff underneath, the recurrent policy nets, three grid games,
//! A3C-style training with baseline agents, and the analysis metrics.

pub mod agents;
pub mod autodiff;
pub mod envs;
pub mod metrics;
pub mod neural;
pub mod rng;
pub mod training;

pub use autodiff::{Graph, NodeId, ParamId, ParamSet, Tensor};
