//! Jacobian exploration bonus.
//!
//! `B(s) = alpha * tanh(eps + |d mu / d x_s|)`, where `x_s` are the RGB
//! inputs of cell `s` and the norm is the Frobenius norm of the `d x 3`
//! Jacobian slice. The bonus is a pure function of the model and the
//! current observation; nothing is carried between calls.

use std::str::FromStr;

use crate::error::{Error, Result};
use crate::gridworld::{Cell, Observation};
use crate::planner::RewardMap;
use crate::vae::VaeModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BonusMode {
    /// `R + B`.
    Add,
    /// `max(R, B)`.
    Max,
}

impl FromStr for BonusMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "add" => Ok(BonusMode::Add),
            "max" => Ok(BonusMode::Max),
            other => Err(Error::invalid(format!("unknown bonus mode `{other}` (add|max)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BonusConfig {
    /// Bonus ceiling. The planner pays the bonus on every visit, so a cell
    /// held forever is worth up to `alpha / (1 - gamma)`; keeping `alpha`
    /// at or below `1 - gamma` stops that from outbidding a goal.
    pub alpha: f64,
    /// Offset inside the tanh.
    pub epsilon: f64,
    pub mode: BonusMode,
    /// Only unobserved cells get a Jacobian term; observed cells keep the
    /// floor `alpha * tanh(epsilon)`.
    pub unseen_only: bool,
}

impl Default for BonusConfig {
    fn default() -> Self {
        BonusConfig {
            alpha: 0.05,
            epsilon: 0.01,
            mode: BonusMode::Max,
            unseen_only: true,
        }
    }
}

impl BonusConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) {
            return Err(Error::invalid(format!("bonus alpha must be positive, got {}", self.alpha)));
        }
        if !(self.epsilon >= 0.0) {
            return Err(Error::invalid(format!("bonus epsilon must be non-negative, got {}", self.epsilon)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BonusField {
    pub height: usize,
    pub width: usize,
    pub values: Vec<f64>,
}

impl BonusField {
    pub fn at(&self, cell: Cell) -> f64 {
        self.values[cell.r * self.width + cell.c]
    }

    /// Maps per-cell Jacobian norms through `alpha * tanh(eps + n)`.
    pub fn from_norms(height: usize, width: usize, norms: &[f64], cfg: &BonusConfig) -> Self {
        BonusField {
            height,
            width,
            values: norms.iter().map(|n| cfg.alpha * (cfg.epsilon + n).tanh()).collect(),
        }
    }
}

/// Per-cell Frobenius norm of a `[d, 3, H, W]` Jacobian.
pub fn cell_jacobian_norms(jac: &crate::numerics::Tensor) -> Vec<f64> {
    let d = jac.dims()[0];
    let hw = jac.dims()[2] * jac.dims()[3];
    let data = jac.data();
    let mut sq = vec![0.0; hw];
    for k in 0..d {
        for ch in 0..3 {
            let base = (k * 3 + ch) * hw;
            for (p, s) in sq.iter_mut().enumerate() {
                *s += data[base + p] * data[base + p];
            }
        }
    }
    sq.into_iter().map(f64::sqrt).collect()
}

pub fn compute_bonus(vae: &VaeModel, obs: &Observation, cfg: &BonusConfig) -> Result<BonusField> {
    cfg.validate()?;
    let jac = vae.encoder_jacobian(&obs.encoder_input())?;
    let mut norms = cell_jacobian_norms(&jac);
    if cfg.unseen_only {
        for (n, &m) in norms.iter_mut().zip(obs.mask.data()) {
            if m != 0.0 {
                *n = 0.0;
            }
        }
    }
    Ok(BonusField::from_norms(obs.height(), obs.width(), &norms, cfg))
}

/// Folds the bonus into a reward map. Terminal flags are untouched.
pub fn combine_reward(map: &RewardMap, bonus: &BonusField, mode: BonusMode) -> Result<RewardMap> {
    if (map.height, map.width) != (bonus.height, bonus.width) {
        return Err(Error::shape(format!(
            "reward map {}x{} vs bonus {}x{}",
            map.height, map.width, bonus.height, bonus.width
        )));
    }
    let reward = map
        .reward
        .iter()
        .zip(&bonus.values)
        .map(|(&r, &b)| match mode {
            BonusMode::Add => r + b,
            BonusMode::Max => r.max(b),
        })
        .collect();
    Ok(RewardMap {
        height: map.height,
        width: map.width,
        reward,
        terminal: map.terminal.clone(),
    })
}
