//! Value iteration over deduced reward maps, the aggregate value function
//! across sampled MDPs, and epsilon-greedy action selection with action
//! persistence.
//!
//! Rewards are paid on entering a cell. Terminal cells are absorbing with
//! value 0, so `Q(s, a) = R(s') + gamma * V(s')` where `s'` is the
//! deterministic, boundary-clamped successor.

use rand::Rng as _;

use crate::bonus::{combine_reward, BonusField, BonusMode};
use crate::error::Result;
use crate::gridworld::{next_cell, Action, Cell};
use crate::rng::Rng;

/// Per-cell entry reward and terminal flag, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardMap {
    pub height: usize,
    pub width: usize,
    pub reward: Vec<f64>,
    pub terminal: Vec<bool>,
}

impl RewardMap {
    pub fn empty(height: usize, width: usize) -> Self {
        RewardMap {
            height,
            width,
            reward: vec![0.0; height * width],
            terminal: vec![false; height * width],
        }
    }

    pub fn index(&self, cell: Cell) -> usize {
        cell.r * self.width + cell.c
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValueFunction {
    pub height: usize,
    pub width: usize,
    pub values: Vec<f64>,
}

impl ValueFunction {
    pub fn at(&self, cell: Cell) -> f64 {
        self.values[cell.r * self.width + cell.c]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanConfig {
    pub gamma: f64,
    pub vi_iterations: usize,
    pub epsilon: f64,
    /// Steps each selected action is held for.
    pub tau: usize,
    /// MDP samples per replan.
    pub samples: usize,
    pub persist: Persist,
    /// Paste observed pixels over decoded samples before deducing rewards.
    pub composite_observed: bool,
}

/// What is reused between replans.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Persist {
    /// Repeat the selected action until the next replan.
    Action,
    /// Keep the aggregate value function and act epsilon-greedily on it at
    /// every step.
    Value,
}

impl std::str::FromStr for Persist {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "action" => Ok(Persist::Action),
            "value" => Ok(Persist::Value),
            other => Err(crate::error::Error::invalid(format!(
                "unknown persistence mode `{other}` (action|value)"
            ))),
        }
    }
}

impl Persist {
    pub fn name(self) -> &'static str {
        match self {
            Persist::Action => "action",
            Persist::Value => "value",
        }
    }
}

impl Default for PlanConfig {
    fn default() -> Self {
        PlanConfig {
            gamma: 0.95,
            vi_iterations: 40,
            epsilon: 0.1,
            tau: 3,
            samples: 10,
            persist: Persist::Value,
            composite_observed: true,
        }
    }
}

/// Counters shared by the planning pipeline.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Telemetry {
    pub replans: usize,
    pub value_iterations: usize,
    pub bonus_computations: usize,
}

fn successors(height: usize, width: usize) -> Vec<[usize; 4]> {
    (0..height * width)
        .map(|i| {
            let cell = Cell::new(i / width, i % width);
            Action::ALL.map(|a| {
                let n = next_cell(cell, a, height, width);
                n.r * width + n.c
            })
        })
        .collect()
}

/// `iterations` synchronous Bellman sweeps from `V = 0`.
pub fn value_iteration(map: &RewardMap, gamma: f64, iterations: usize) -> ValueFunction {
    value_iteration_traced(map, gamma, iterations).0
}

/// Also returns the max-norm change of every sweep.
pub fn value_iteration_traced(map: &RewardMap, gamma: f64, iterations: usize) -> (ValueFunction, Vec<f64>) {
    let n = map.height * map.width;
    let succ = successors(map.height, map.width);
    let mut v = vec![0.0; n];
    let mut next = vec![0.0; n];
    let mut residuals = Vec::with_capacity(iterations);
    for _ in 0..iterations {
        let mut delta: f64 = 0.0;
        for s in 0..n {
            next[s] = if map.terminal[s] {
                0.0
            } else {
                succ[s]
                    .iter()
                    .map(|&t| map.reward[t] + gamma * v[t])
                    .fold(f64::NEG_INFINITY, f64::max)
            };
            delta = delta.max((next[s] - v[s]).abs());
        }
        std::mem::swap(&mut v, &mut next);
        residuals.push(delta);
    }
    (
        ValueFunction {
            height: map.height,
            width: map.width,
            values: v,
        },
        residuals,
    )
}

/// Mean value and mean entry reward over a set of MDP hypotheses.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateValue {
    pub value: ValueFunction,
    pub reward: Vec<f64>,
    pub gamma: f64,
}

impl AggregateValue {
    pub fn q(&self, pos: Cell, action: Action) -> f64 {
        let n = next_cell(pos, action, self.value.height, self.value.width);
        let i = n.r * self.value.width + n.c;
        self.reward[i] + self.gamma * self.value.values[i]
    }

    /// Highest-`Q` action; ties go to the earlier action in [`Action::ALL`].
    pub fn greedy(&self, pos: Cell) -> Action {
        let mut best = Action::ALL[0];
        let mut best_q = self.q(pos, best);
        for a in &Action::ALL[1..] {
            let q = self.q(pos, *a);
            if q > best_q {
                best = *a;
                best_q = q;
            }
        }
        best
    }
}

/// Value-iterates every map (after folding in `bonus`, if any) and averages
/// cell-wise in index order.
pub fn aggregate_value(
    maps: &[&RewardMap],
    cfg: &PlanConfig,
    bonus: Option<(&BonusField, BonusMode)>,
    telemetry: &mut Telemetry,
) -> Result<AggregateValue> {
    let first = maps
        .first()
        .ok_or_else(|| crate::error::Error::invalid("aggregate_value needs at least one MDP"))?;
    let (h, w) = (first.height, first.width);
    let n = h * w;
    let mut value = vec![0.0; n];
    let mut reward = vec![0.0; n];
    for map in maps {
        let combined;
        let map = match bonus {
            Some((field, mode)) => {
                combined = combine_reward(map, field, mode)?;
                &combined
            }
            None => *map,
        };
        let v = value_iteration(map, cfg.gamma, cfg.vi_iterations);
        telemetry.value_iterations += 1;
        for i in 0..n {
            value[i] += v.values[i];
            reward[i] += map.reward[i];
        }
    }
    let k = 1.0 / maps.len() as f64;
    value.iter_mut().for_each(|x| *x *= k);
    reward.iter_mut().for_each(|x| *x *= k);
    Ok(AggregateValue {
        value: ValueFunction {
            height: h,
            width: w,
            values: value,
        },
        reward,
        gamma: cfg.gamma,
    })
}

/// Epsilon-greedy: one uniform draw decides explore vs exploit, a second
/// (only when exploring) picks the action.
pub fn select_action(agg: &AggregateValue, pos: Cell, epsilon: f64, rng: &mut Rng) -> Action {
    if rng.random::<f64>() < epsilon {
        Action::ALL[rng.random_range(0..4)]
    } else {
        agg.greedy(pos)
    }
}

/// Replans every `tau` steps and, in between, reuses either the selected
/// action or the aggregate value function.
#[derive(Debug, Clone)]
pub struct PersistentController {
    tau: usize,
    mode: Persist,
    countdown: usize,
    action: Option<Action>,
    value: Option<AggregateValue>,
}

impl PersistentController {
    pub fn new(tau: usize, mode: Persist) -> Self {
        assert!(tau >= 1, "tau must be at least 1");
        PersistentController {
            tau,
            mode,
            countdown: 0,
            action: None,
            value: None,
        }
    }

    /// Forget the held plan; the next step replans.
    pub fn reset(&mut self) {
        self.countdown = 0;
        self.action = None;
        self.value = None;
    }

    /// One environment step at `pos`. `plan` is called only when the held
    /// plan has expired.
    pub fn step(
        &mut self,
        pos: Cell,
        epsilon: f64,
        rng: &mut Rng,
        plan: impl FnOnce(&mut Rng) -> Result<AggregateValue>,
    ) -> Result<Action> {
        let replan = self.countdown == 0;
        if replan {
            self.countdown = self.tau;
        }
        self.countdown -= 1;
        match self.mode {
            Persist::Action => match self.action {
                Some(a) if !replan => Ok(a),
                _ => {
                    let agg = plan(rng)?;
                    let a = select_action(&agg, pos, epsilon, rng);
                    self.action = Some(a);
                    Ok(a)
                }
            },
            Persist::Value => {
                let agg = match self.value.take() {
                    Some(agg) if !replan => agg,
                    _ => plan(rng)?,
                };
                let a = select_action(&agg, pos, epsilon, rng);
                self.value = Some(agg);
                Ok(a)
            }
        }
    }
}
