//! Posterior MDP sampling: encode the observation, draw RBM hidden states
//! from `p(h | z)`, take the MAP latent `a + W h` for each, and decode it
//! into a concrete world image with deduced rewards. Optionally the
//! observed pixels are pasted over each decoded image first, so every
//! hypothesis agrees with what has actually been seen.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::gridworld::{Observation, Palette, Role};
use crate::numerics::Tensor;
use crate::planner::RewardMap;
use crate::rbm::RbmModel;
use crate::rng::Rng;
use crate::vae::VaeModel;

/// One sampled world hypothesis.
#[derive(Debug, Clone, PartialEq)]
pub struct MdpSample {
    /// Decoded `[3, H, W]` world image.
    pub image: Tensor,
    pub rewards: RewardMap,
    /// Hidden state that produced this sample.
    pub hidden: Vec<u8>,
}

/// Classifies every cell to its nearest palette colour. Success cells pay
/// +1 and failure cells -1, both terminal; everything else is 0.
pub fn deduce_mdp(image: &Tensor, palette: &Palette) -> Result<RewardMap> {
    let &[3, h, w] = image.dims() else {
        return Err(Error::shape(format!("world image must be [3,H,W], got {:?}", image.dims())));
    };
    let hw = h * w;
    let d = image.data();
    let mut map = RewardMap::empty(h, w);
    for p in 0..hw {
        match palette.classify([d[p], d[hw + p], d[2 * hw + p]]) {
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
    Ok(map)
}

/// `image` with every observed pixel of `obs` replaced by its observed value.
pub fn composite_observed(image: &Tensor, obs: &Observation) -> Result<Tensor> {
    if image.dims() != obs.image.dims() {
        return Err(Error::shape(format!(
            "decoded image {:?} does not match observation {:?}",
            image.dims(),
            obs.image.dims()
        )));
    }
    let hw = obs.height() * obs.width();
    let mask = obs.mask.data();
    let seen = obs.image.data();
    let mut out = image.clone();
    for (i, x) in out.data_mut().iter_mut().enumerate() {
        if mask[i % hw] != 0.0 {
            *x = seen[i];
        }
    }
    Ok(out)
}

/// Draws `k` MDP hypotheses for `obs`. Identical hidden states share one
/// decode; the returned list is in draw order. With `composite`, observed
/// pixels override the decoded ones before rewards are deduced.
pub fn sample_mdps(
    vae: &VaeModel,
    rbm: &RbmModel,
    obs: &Observation,
    k: usize,
    palette: &Palette,
    composite: bool,
    rng: &mut Rng,
) -> Result<Vec<MdpSample>> {
    if k == 0 {
        return Err(Error::invalid("need at least one MDP sample"));
    }
    let z = vae.encode(&obs.encoder_input())?;
    let hidden: Vec<Vec<u8>> = (0..k)
        .map(|_| rbm.sample_hidden(&z, rng))
        .collect::<Result<_>>()?;
    let mut decoded: BTreeMap<Vec<u8>, (Tensor, RewardMap)> = BTreeMap::new();
    let mut out = Vec::with_capacity(k);
    for h in hidden {
        if !decoded.contains_key(&h) {
            let z_map = rbm.visible_conditional_mean(&h)?;
            let mut image = vae.decode(&z_map)?;
            if composite {
                image = composite_observed(&image, obs)?;
            }
            let rewards = deduce_mdp(&image, palette)?;
            decoded.insert(h.clone(), (image, rewards));
        }
        let (image, rewards) = &decoded[&h];
        out.push(MdpSample {
            image: image.clone(),
            rewards: rewards.clone(),
            hidden: h,
        });
    }
    Ok(out)
}
