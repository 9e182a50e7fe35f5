//! Exploration in multi-task gridworlds with deep generative models.
//!
//! A masked convolutional VAE learns the distribution of world images from
//! partial observations; a Gaussian-Bernoulli RBM clusters its latents so
//! that posterior samples decode to single coherent worlds rather than
//! blends. Agents plan over an aggregate value function of sampled worlds,
//! and an exploration bonus derived from the encoder Jacobian steers them
//! toward the cells that most inform which world they are in.

pub mod agents;
pub mod bonus;
pub mod error;
pub mod gridworld;
pub mod harness;
pub mod metrics;
pub mod numerics;
pub mod planner;
pub mod rbm;
pub mod rng;
pub mod sampler;
pub mod vae;

pub use error::{Error, Result};
pub use gridworld::{Action, Cell, Environment, Observation, TaskVariant, WorldSpec};
pub use numerics::Tensor;
