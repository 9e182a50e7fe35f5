//! Flat `key = value` run configuration.
//!
//! Blank lines and lines starting with `#` are ignored. Unknown keys are
//! errors. Any key can also be overridden from the environment as
//! `MTGM_<KEY>` with dots replaced by underscores and letters upper-cased,
//! e.g. `MTGM_VAE_EPOCHS=40`.

use std::path::Path;

use crate::agents::{AnnealScope, StrlConfig};
use crate::bonus::{BonusConfig, BonusMode};
use crate::error::{Error, Result};
use crate::planner::PlanConfig;
use crate::rbm::RbmTrainConfig;
use crate::vae::{VaeConfig, VaeTrainConfig};

pub const ENV_PREFIX: &str = "MTGM_";

/// Every recognised key, in documentation order.
pub const KEYS: &[&str] = &[
    "world",
    "seed",
    "collect.episodes",
    "eval.episodes",
    "vae.latent_dim",
    "vae.encoder_std",
    "vae.recon_std",
    "vae.mask_channel",
    "vae.epochs",
    "vae.batch_size",
    "vae.lr",
    "rbm.hidden",
    "rbm.sigma",
    "rbm.epochs",
    "rbm.batch_size",
    "rbm.lr",
    "plan.gamma",
    "plan.vi_iterations",
    "plan.epsilon",
    "plan.tau",
    "plan.samples",
    "plan.persist",
    "plan.composite_observed",
    "bonus.alpha",
    "bonus.epsilon",
    "bonus.mode",
    "bonus.unseen_only",
    "strl.eps0",
    "strl.kappa",
    "strl.anneal",
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Built-in world name (`bw-e`, `bw-h`) or path to a world file.
    pub world: String,
    pub seed: u64,
    pub collect_episodes: usize,
    pub eval_episodes: usize,
    /// Height and width are taken from the world at run time.
    pub vae: VaeConfig,
    pub vae_train: VaeTrainConfig,
    pub rbm_hidden: usize,
    pub rbm_sigma: f64,
    pub rbm_train: RbmTrainConfig,
    pub plan: PlanConfig,
    pub bonus: BonusConfig,
    pub strl: StrlConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            world: "bw-e".into(),
            seed: 0,
            collect_episodes: 400,
            eval_episodes: 500,
            vae: VaeConfig::default(),
            vae_train: VaeTrainConfig::default(),
            rbm_hidden: 1,
            rbm_sigma: 0.1,
            rbm_train: RbmTrainConfig::default(),
            plan: PlanConfig::default(),
            bonus: BonusConfig::default(),
            strl: StrlConfig::default(),
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("`{key}`: cannot parse `{value}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" => Ok(true),
        "false" | "0" => Ok(false),
        _ => Err(Error::Config(format!("`{key}`: expected true/false, got `{value}`"))),
    }
}

fn env_name(key: &str) -> String {
    format!("{ENV_PREFIX}{}", key.replace('.', "_").to_ascii_uppercase())
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "world" => self.world = v.to_string(),
            "seed" => self.seed = parse(key, v)?,
            "collect.episodes" => self.collect_episodes = parse(key, v)?,
            "eval.episodes" => self.eval_episodes = parse(key, v)?,
            "vae.latent_dim" => self.vae.latent_dim = parse(key, v)?,
            "vae.encoder_std" => self.vae.encoder_std = parse(key, v)?,
            "vae.recon_std" => self.vae.recon_std = parse(key, v)?,
            "vae.mask_channel" => self.vae.mask_channel = parse_bool(key, v)?,
            "vae.epochs" => self.vae_train.epochs = parse(key, v)?,
            "vae.batch_size" => self.vae_train.batch_size = parse(key, v)?,
            "vae.lr" => self.vae_train.adam.lr = parse(key, v)?,
            "rbm.hidden" => self.rbm_hidden = parse(key, v)?,
            "rbm.sigma" => self.rbm_sigma = parse(key, v)?,
            "rbm.epochs" => self.rbm_train.epochs = parse(key, v)?,
            "rbm.batch_size" => self.rbm_train.batch_size = parse(key, v)?,
            "rbm.lr" => self.rbm_train.lr = parse(key, v)?,
            "plan.gamma" => self.plan.gamma = parse(key, v)?,
            "plan.vi_iterations" => self.plan.vi_iterations = parse(key, v)?,
            "plan.epsilon" => self.plan.epsilon = parse(key, v)?,
            "plan.tau" => self.plan.tau = parse(key, v)?,
            "plan.samples" => self.plan.samples = parse(key, v)?,
            "plan.persist" => self.plan.persist = v.parse()?,
            "plan.composite_observed" => self.plan.composite_observed = parse_bool(key, v)?,
            "bonus.alpha" => self.bonus.alpha = parse(key, v)?,
            "bonus.epsilon" => self.bonus.epsilon = parse(key, v)?,
            "bonus.mode" => self.bonus.mode = v.parse::<BonusMode>().map_err(|e| Error::Config(e.to_string()))?,
            "bonus.unseen_only" => self.bonus.unseen_only = parse_bool(key, v)?,
            "strl.eps0" => self.strl.eps0 = parse(key, v)?,
            "strl.kappa" => self.strl.kappa = parse(key, v)?,
            "strl.anneal" => self.strl.scope = v.parse::<AnnealScope>().map_err(|e| Error::Config(e.to_string()))?,
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    /// Current value of `key` in the same text form [`RunConfig::set`] accepts.
    pub fn get(&self, key: &str) -> Option<String> {
        let s = match key {
            "world" => self.world.clone(),
            "seed" => self.seed.to_string(),
            "collect.episodes" => self.collect_episodes.to_string(),
            "eval.episodes" => self.eval_episodes.to_string(),
            "vae.latent_dim" => self.vae.latent_dim.to_string(),
            "vae.encoder_std" => self.vae.encoder_std.to_string(),
            "vae.recon_std" => self.vae.recon_std.to_string(),
            "vae.mask_channel" => self.vae.mask_channel.to_string(),
            "vae.epochs" => self.vae_train.epochs.to_string(),
            "vae.batch_size" => self.vae_train.batch_size.to_string(),
            "vae.lr" => self.vae_train.adam.lr.to_string(),
            "rbm.hidden" => self.rbm_hidden.to_string(),
            "rbm.sigma" => self.rbm_sigma.to_string(),
            "rbm.epochs" => self.rbm_train.epochs.to_string(),
            "rbm.batch_size" => self.rbm_train.batch_size.to_string(),
            "rbm.lr" => self.rbm_train.lr.to_string(),
            "plan.gamma" => self.plan.gamma.to_string(),
            "plan.vi_iterations" => self.plan.vi_iterations.to_string(),
            "plan.epsilon" => self.plan.epsilon.to_string(),
            "plan.tau" => self.plan.tau.to_string(),
            "plan.samples" => self.plan.samples.to_string(),
            "plan.persist" => self.plan.persist.name().to_string(),
            "plan.composite_observed" => self.plan.composite_observed.to_string(),
            "bonus.alpha" => self.bonus.alpha.to_string(),
            "bonus.epsilon" => self.bonus.epsilon.to_string(),
            "bonus.mode" => match self.bonus.mode {
                BonusMode::Add => "add".into(),
                BonusMode::Max => "max".into(),
            },
            "bonus.unseen_only" => self.bonus.unseen_only.to_string(),
            "strl.eps0" => self.strl.eps0.to_string(),
            "strl.kappa" => self.strl.kappa.to_string(),
            "strl.anneal" => match self.strl.scope {
                AnnealScope::Episode => "episode".into(),
                AnnealScope::Lifetime => "lifetime".into(),
            },
            _ => return None,
        };
        Some(s)
    }

    /// Applies `key = value` lines on top of `self`.
    pub fn merge_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", i + 1)))?;
            self.set(k.trim(), v).map_err(|e| Error::Config(format!("line {}: {e}", i + 1)))?;
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        cfg.merge_text(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Applies `MTGM_*` variables from `vars`. A variable with the prefix
    /// that names no key is an error.
    pub fn apply_env<I, K, V>(&mut self, vars: I) -> Result<()>
    where
        I: IntoIterator<Item = (K, V)>,
        K: AsRef<str>,
        V: AsRef<str>,
    {
        for (name, value) in vars {
            let name = name.as_ref();
            if !name.starts_with(ENV_PREFIX) {
                continue;
            }
            let key = KEYS
                .iter()
                .find(|k| env_name(k) == name)
                .ok_or_else(|| Error::Config(format!("unknown environment override `{name}`")))?;
            self.set(key, value.as_ref())
                .map_err(|e| Error::Config(format!("{name}: {e}")))?;
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.collect_episodes == 0 || self.eval_episodes == 0 {
            return fail("episode counts must be positive".into());
        }
        if self.vae_train.batch_size == 0 || self.rbm_train.batch_size == 0 {
            return fail("batch sizes must be positive".into());
        }
        if self.vae.latent_dim == 0 || self.rbm_hidden == 0 {
            return fail("vae.latent_dim and rbm.hidden must be positive".into());
        }
        if !(self.vae.encoder_std > 0.0 && self.vae.recon_std > 0.0 && self.rbm_sigma > 0.0) {
            return fail("standard deviations must be positive".into());
        }
        if !(self.vae_train.adam.lr > 0.0 && self.rbm_train.lr > 0.0) {
            return fail("learning rates must be positive".into());
        }
        if !(self.plan.gamma > 0.0 && self.plan.gamma < 1.0) {
            return fail(format!("plan.gamma must be in (0,1), got {}", self.plan.gamma));
        }
        if !(0.0..=1.0).contains(&self.plan.epsilon) {
            return fail(format!("plan.epsilon must be in [0,1], got {}", self.plan.epsilon));
        }
        if self.plan.tau == 0 || self.plan.samples == 0 {
            return fail("plan.tau and plan.samples must be at least 1".into());
        }
        if !(self.strl.kappa > 0.0 && self.strl.kappa < 1.0) {
            return fail(format!("strl.kappa must be in (0,1), got {}", self.strl.kappa));
        }
        self.bonus.validate().map_err(|e| Error::Config(e.to_string()))
    }

    /// Every key with its current value, one `key = value` per line.
    pub fn to_text(&self) -> String {
        KEYS.iter()
            .map(|k| format!("{k} = {}\n", self.get(k).expect("listed key")))
            .collect()
    }

    pub fn vae_config(&self, height: usize, width: usize) -> VaeConfig {
        VaeConfig { height, width, ..self.vae }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_text() {
        let cfg = RunConfig::default();
        assert_eq!(RunConfig::parse(&cfg.to_text()).unwrap(), cfg);
        assert_eq!(cfg.to_text().lines().count(), KEYS.len());
    }

    #[test]
    fn unknown_key_rejected() {
        let err = RunConfig::parse("vae.epochs = 3\nvae.epoch = 4\n").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        assert!(RunConfig::parse("no equals sign").is_err());
        assert!(RunConfig::parse("plan.gamma = 1.5").is_err());
    }

    #[test]
    fn comments_and_values() {
        let cfg = RunConfig::parse("# c\n\nworld = bw-h\nbonus.mode = add\nstrl.anneal = lifetime\n").unwrap();
        assert_eq!(cfg.world, "bw-h");
        assert_eq!(cfg.bonus.mode, BonusMode::Add);
        assert_eq!(cfg.strl.scope, AnnealScope::Lifetime);
    }

    #[test]
    fn env_overrides() {
        let mut cfg = RunConfig::default();
        cfg.apply_env([("MTGM_VAE_BATCH_SIZE", "7"), ("PATH", "/bin"), ("MTGM_PLAN_TAU", "2")])
            .unwrap();
        assert_eq!(cfg.vae_train.batch_size, 7);
        assert_eq!(cfg.plan.tau, 2);
        assert!(cfg.apply_env([("MTGM_NOPE", "1")]).is_err());
        assert!(cfg.apply_env([("MTGM_SEED", "x")]).is_err());
    }

    #[test]
    fn every_key_is_settable() {
        let cfg = RunConfig::default();
        for k in KEYS {
            let mut c = cfg.clone();
            c.set(k, &cfg.get(k).unwrap()).unwrap();
            assert_eq!(c, cfg, "{k}");
        }
    }
}
