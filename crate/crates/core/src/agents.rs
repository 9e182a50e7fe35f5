//! The evaluated policies and the episode runner.
//!
//! * [`RandomAgent`]: uniform over moves that change position; used for
//!   data collection.
//! * [`StrlAgent`]: value iteration over the visible world only, with an
//!   annealed pseudo-reward on unseen cells.
//! * [`MtrlAgent`]: posterior MDP sampling + aggregate value function,
//!   optionally with the Jacobian bonus (MTRL-alpha) or without (MTRL-0).

use std::str::FromStr;

use rand::Rng as _;

use crate::bonus::{compute_bonus, BonusConfig};
use crate::error::{Error, Result};
use crate::gridworld::{next_cell, Action, Cell, Environment, Observation, Palette, Role, TaskVariant, WorldSpec};
use crate::metrics::EpisodeRecord;
use crate::planner::{aggregate_value, AggregateValue, PersistentController, PlanConfig, RewardMap, Telemetry};
use crate::rbm::RbmModel;
use crate::rng::Rng;
use crate::sampler::sample_mdps;
use crate::vae::VaeModel;

pub trait Agent {
    fn name(&self) -> &'static str;

    /// Called before the first step of every episode.
    fn begin_episode(&mut self);

    fn act(&mut self, obs: &Observation, rng: &mut Rng) -> Result<Action>;

    fn telemetry(&self) -> Telemetry {
        Telemetry::default()
    }
}

/// Uniform over actions that move the agent.
#[derive(Debug, Clone, Default)]
pub struct RandomAgent;

pub fn legal_moves(pos: Cell, height: usize, width: usize) -> Vec<Action> {
    Action::ALL
        .into_iter()
        .filter(|&a| next_cell(pos, a, height, width) != pos)
        .collect()
}

pub fn random_policy_step(obs: &Observation, rng: &mut Rng) -> Action {
    let moves = legal_moves(obs.agent_pos, obs.height(), obs.width());
    moves[rng.random_range(0..moves.len())]
}

impl Agent for RandomAgent {
    fn name(&self) -> &'static str {
        "random"
    }

    fn begin_episode(&mut self) {}

    fn act(&mut self, obs: &Observation, rng: &mut Rng) -> Result<Action> {
        Ok(random_policy_step(obs, rng))
    }
}

/// Over which horizon the STRL step index `n` counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnnealScope {
    /// `n` restarts at 0 every episode.
    Episode,
    /// `n` counts every step the agent has taken.
    Lifetime,
}

impl FromStr for AnnealScope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "episode" => Ok(AnnealScope::Episode),
            "lifetime" => Ok(AnnealScope::Lifetime),
            other => Err(Error::invalid(format!("unknown anneal scope `{other}` (episode|lifetime)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrlConfig {
    /// Pseudo-reward on unseen cells at step 0.
    pub eps0: f64,
    /// Per-step anneal factor.
    pub kappa: f64,
    pub scope: AnnealScope,
}

impl Default for StrlConfig {
    fn default() -> Self {
        StrlConfig {
            eps0: 0.3,
            kappa: 0.9,
            scope: AnnealScope::Episode,
        }
    }
}

impl StrlConfig {
    pub fn pseudo_reward(&self, n: usize) -> f64 {
        self.eps0 * self.kappa.powi(n as i32)
    }
}

/// Reward map from observed cells only; unseen cells pay `pseudo`.
pub fn visible_reward_map(obs: &Observation, palette: &Palette, pseudo: f64) -> RewardMap {
    let (h, w) = (obs.height(), obs.width());
    let hw = h * w;
    let img = obs.image.data();
    let mut map = RewardMap::empty(h, w);
    for p in 0..hw {
        if obs.mask.data()[p] == 0.0 {
            map.reward[p] = pseudo;
            continue;
        }
        match palette.classify([img[p], img[hw + p], img[2 * hw + p]]) {
            Role::Success => {
                map.reward[p] = 1.0;
                map.terminal[p] = true;
            }
            Role::Failure => {
                map.reward[p] = -1.0;
                map.terminal[p] = true;
            }
            _ => {}
        }
    }
    map
}

#[derive(Debug, Clone)]
pub struct StrlAgent {
    palette: Palette,
    plan: PlanConfig,
    cfg: StrlConfig,
    controller: PersistentController,
    step_n: usize,
    telemetry: Telemetry,
}

impl StrlAgent {
    pub fn new(palette: Palette, plan: PlanConfig, cfg: StrlConfig) -> Self {
        StrlAgent {
            palette,
            controller: PersistentController::new(plan.tau, plan.persist),
            plan,
            cfg,
            step_n: 0,
            telemetry: Telemetry::default(),
        }
    }

    pub fn step_index(&self) -> usize {
        self.step_n
    }
}

/// The STRL plan at step `n`: value iteration over the visible world.
pub fn strl_plan(
    obs: &Observation,
    step_n: usize,
    palette: &Palette,
    plan: &PlanConfig,
    cfg: &StrlConfig,
    telemetry: &mut Telemetry,
) -> Result<AggregateValue> {
    let map = visible_reward_map(obs, palette, cfg.pseudo_reward(step_n));
    aggregate_value(&[&map], plan, None, telemetry)
}

impl Agent for StrlAgent {
    fn name(&self) -> &'static str {
        "strl"
    }

    fn begin_episode(&mut self) {
        self.controller.reset();
        if self.cfg.scope == AnnealScope::Episode {
            self.step_n = 0;
        }
    }

    fn act(&mut self, obs: &Observation, rng: &mut Rng) -> Result<Action> {
        let (palette, plan, cfg, n) = (&self.palette, &self.plan, &self.cfg, self.step_n);
        let telemetry = &mut self.telemetry;
        let a = self.controller.step(obs.agent_pos, plan.epsilon, rng, |_| {
            telemetry.replans += 1;
            strl_plan(obs, n, palette, plan, cfg, telemetry)
        })?;
        self.step_n += 1;
        Ok(a)
    }

    fn telemetry(&self) -> Telemetry {
        self.telemetry
    }
}

/// Generative-model agent. With `bonus = None` this is MTRL-0.
#[derive(Debug, Clone)]
pub struct MtrlAgent<'m> {
    vae: &'m VaeModel,
    rbm: &'m RbmModel,
    palette: Palette,
    plan: PlanConfig,
    bonus: Option<BonusConfig>,
    controller: PersistentController,
    telemetry: Telemetry,
}

impl<'m> MtrlAgent<'m> {
    pub fn new(
        vae: &'m VaeModel,
        rbm: &'m RbmModel,
        palette: Palette,
        plan: PlanConfig,
        bonus: Option<BonusConfig>,
    ) -> Self {
        MtrlAgent {
            vae,
            rbm,
            palette,
            controller: PersistentController::new(plan.tau, plan.persist),
            plan,
            bonus,
            telemetry: Telemetry::default(),
        }
    }
}

/// One MTRL replan: sample MDPs, optionally add the bonus, aggregate.
#[allow(clippy::too_many_arguments)]
pub fn mtrl_plan(
    obs: &Observation,
    vae: &VaeModel,
    rbm: &RbmModel,
    palette: &Palette,
    plan: &PlanConfig,
    bonus: Option<&BonusConfig>,
    telemetry: &mut Telemetry,
    rng: &mut Rng,
) -> Result<AggregateValue> {
    let samples = sample_mdps(vae, rbm, obs, plan.samples, palette, plan.composite_observed, rng)?;
    let maps: Vec<&RewardMap> = samples.iter().map(|s| &s.rewards).collect();
    let field = match bonus {
        Some(cfg) => {
            telemetry.bonus_computations += 1;
            Some((compute_bonus(vae, obs, cfg)?, cfg.mode))
        }
        None => None,
    };
    aggregate_value(&maps, plan, field.as_ref().map(|(f, m)| (f, *m)), telemetry)
}

impl Agent for MtrlAgent<'_> {
    fn name(&self) -> &'static str {
        if self.bonus.is_some() {
            "mtrl-alpha"
        } else {
            "mtrl0"
        }
    }

    fn begin_episode(&mut self) {
        self.controller.reset();
    }

    fn act(&mut self, obs: &Observation, rng: &mut Rng) -> Result<Action> {
        let (vae, rbm, palette, plan, bonus) = (self.vae, self.rbm, &self.palette, &self.plan, self.bonus.as_ref());
        let telemetry = &mut self.telemetry;
        self.controller.step(obs.agent_pos, plan.epsilon, rng, |rng| {
            telemetry.replans += 1;
            mtrl_plan(obs, vae, rbm, palette, plan, bonus, telemetry, rng)
        })
    }

    fn telemetry(&self) -> Telemetry {
        self.telemetry
    }
}

/// Full trajectory of one episode.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub record: EpisodeRecord,
    /// Agent position after reset and after every step.
    pub positions: Vec<Cell>,
}

/// Runs one episode to termination (success, failure or the step cap).
pub fn run_episode(
    agent: &mut dyn Agent,
    world: &WorldSpec,
    variant: TaskVariant,
    episode: usize,
    rng: &mut Rng,
) -> Result<Trajectory> {
    let (mut env, mut obs) = Environment::reset(world, variant);
    agent.begin_episode();
    let mut positions = vec![obs.agent_pos];
    loop {
        let action = agent.act(&obs, rng)?;
        let step = env.step(action)?;
        positions.push(step.observation.agent_pos);
        if step.done {
            return Ok(Trajectory {
                record: EpisodeRecord {
                    episode,
                    agent: agent.name().to_string(),
                    variant,
                    steps: env.steps(),
                    reward: step.reward,
                    forced_termination: step.forced_termination,
                },
                positions,
            });
        }
        obs = step.observation;
    }
}
