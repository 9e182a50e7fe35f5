//! Gaussian-Bernoulli RBM over VAE latents.
//!
//! Energy `E(v,h) = |v - a|^2 / (2 sigma^2) - b.h - v.W h / sigma^2` with
//! `W: [N_v, N_h]`. Both conditionals follow from it:
//! `p(h_j = 1 | v) = logistic(b_j + (W^T v)_j / sigma^2)` and
//! `p(v | h) = N(a + W h, sigma^2 I)`. `sigma` is a fixed hyperparameter.

use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::numerics::{sigmoid, Tensor};
use crate::rng::Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct RbmModel {
    /// `[N_v, N_h]`.
    pub weights: Tensor,
    /// Visible bias `[N_v]`.
    pub visible_bias: Tensor,
    /// Hidden bias `[N_h]`.
    pub hidden_bias: Tensor,
    sigma: f64,
}

impl RbmModel {
    /// Small random weights, zero biases.
    pub fn new(n_visible: usize, n_hidden: usize, sigma: f64, rng: &mut Rng) -> Result<Self> {
        if n_visible == 0 || n_hidden == 0 {
            return Err(Error::invalid("RBM needs at least one visible and one hidden unit"));
        }
        let weights = Tensor::from_fn(&[n_visible, n_hidden], |_| {
            let n: f64 = rng.sample(StandardNormal);
            0.01 * n
        });
        Self::from_parts(weights, Tensor::zeros(&[n_visible]), Tensor::zeros(&[n_hidden]), sigma)
    }

    pub fn from_parts(weights: Tensor, visible_bias: Tensor, hidden_bias: Tensor, sigma: f64) -> Result<Self> {
        let &[nv, nh] = weights.dims() else {
            return Err(Error::shape(format!("RBM weights must be [N_v,N_h], got {:?}", weights.dims())));
        };
        if visible_bias.dims() != [nv] || hidden_bias.dims() != [nh] {
            return Err(Error::shape(format!(
                "RBM biases {:?}/{:?} do not match weights {:?}",
                visible_bias.dims(),
                hidden_bias.dims(),
                weights.dims()
            )));
        }
        if !(sigma > 0.0) {
            return Err(Error::invalid(format!("RBM sigma must be positive, got {sigma}")));
        }
        Ok(RbmModel {
            weights,
            visible_bias,
            hidden_bias,
            sigma,
        })
    }

    pub fn n_visible(&self) -> usize {
        self.weights.dims()[0]
    }

    pub fn n_hidden(&self) -> usize {
        self.weights.dims()[1]
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    fn check_visible(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.n_visible() {
            return Err(Error::shape(format!(
                "visible vector has {} entries, RBM expects {}",
                v.len(),
                self.n_visible()
            )));
        }
        Ok(())
    }

    /// `p(h_j = 1 | v)` for every hidden unit.
    pub fn hidden_posterior(&self, v: &Tensor) -> Result<Tensor> {
        self.check_visible(v.data())?;
        Ok(self.hidden_probs(v.data()))
    }

    fn hidden_probs(&self, v: &[f64]) -> Tensor {
        let (nv, nh) = (self.n_visible(), self.n_hidden());
        let w = self.weights.data();
        let inv_var = 1.0 / (self.sigma * self.sigma);
        Tensor::from_fn(&[nh], |j| {
            let act: f64 = (0..nv).map(|i| w[i * nh + j] * v[i]).sum();
            sigmoid(self.hidden_bias.data()[j] + act * inv_var)
        })
    }

    /// Mean of `p(v | h) = a + W h`; also the MAP visible state for `h`.
    pub fn visible_conditional_mean(&self, h: &[u8]) -> Result<Tensor> {
        if h.len() != self.n_hidden() {
            return Err(Error::shape(format!(
                "hidden state has {} entries, RBM expects {}",
                h.len(),
                self.n_hidden()
            )));
        }
        if let Some(bad) = h.iter().find(|&&x| x > 1) {
            return Err(Error::invalid(format!("hidden state must be binary, found {bad}")));
        }
        Ok(self.visible_mean(h))
    }

    fn visible_mean(&self, h: &[u8]) -> Tensor {
        let (nv, nh) = (self.n_visible(), self.n_hidden());
        let w = self.weights.data();
        Tensor::from_fn(&[nv], |i| {
            self.visible_bias.data()[i]
                + (0..nh).filter(|&j| h[j] == 1).map(|j| w[i * nh + j]).sum::<f64>()
        })
    }

    pub fn sample_hidden(&self, v: &Tensor, rng: &mut Rng) -> Result<Vec<u8>> {
        let p = self.hidden_posterior(v)?;
        Ok(bernoulli(p.data(), rng))
    }

    pub fn sample_visible(&self, h: &[u8], rng: &mut Rng) -> Result<Tensor> {
        let mean = self.visible_conditional_mean(h)?;
        Ok(mean.map(|m| {
            let n: f64 = rng.sample(StandardNormal);
            m + self.sigma * n
        }))
    }

    /// `E(v, h)`.
    pub fn energy(&self, v: &[f64], h: &[u8]) -> f64 {
        let (nv, nh) = (self.n_visible(), self.n_hidden());
        let inv_var = 1.0 / (self.sigma * self.sigma);
        let w = self.weights.data();
        let quad: f64 = v
            .iter()
            .zip(self.visible_bias.data())
            .map(|(x, a)| (x - a).powi(2))
            .sum::<f64>()
            * 0.5
            * inv_var;
        let bias: f64 = (0..nh).filter(|&j| h[j] == 1).map(|j| self.hidden_bias.data()[j]).sum();
        let inter: f64 = (0..nv)
            .map(|i| v[i] * (0..nh).filter(|&j| h[j] == 1).map(|j| w[i * nh + j]).sum::<f64>())
            .sum();
        quad - bias - inter * inv_var
    }

    /// Mean-field one-step reconstruction `a + W p(h|v)`.
    pub fn reconstruct_mean(&self, v: &Tensor) -> Result<Tensor> {
        self.check_visible(v.data())?;
        let p = self.hidden_probs(v.data());
        let (nv, nh) = (self.n_visible(), self.n_hidden());
        let w = self.weights.data();
        Ok(Tensor::from_fn(&[nv], |i| {
            self.visible_bias.data()[i] + (0..nh).map(|j| w[i * nh + j] * p.data()[j]).sum::<f64>()
        }))
    }
}

fn bernoulli(p: &[f64], rng: &mut Rng) -> Vec<u8> {
    p.iter().map(|&pj| u8::from(rng.random::<f64>() < pj)).collect()
}

/// Parameter increments of one CD-1 step, before scaling by the learning rate.
#[derive(Debug, Clone)]
pub struct CdUpdate {
    pub weights: Tensor,
    pub visible_bias: Tensor,
    pub hidden_bias: Tensor,
}

/// CD-1 statistics for `batch: [B, N_v]`: positive phase at the data,
/// negative phase after one Gibbs round trip.
pub fn cd1_gradient(model: &RbmModel, batch: &Tensor, rng: &mut Rng) -> Result<CdUpdate> {
    let &[b, nv] = batch.dims() else {
        return Err(Error::shape(format!("RBM batch must be [B,N_v], got {:?}", batch.dims())));
    };
    if nv != model.n_visible() {
        return Err(Error::shape(format!(
            "RBM batch visible axis: expected {}, got {nv}",
            model.n_visible()
        )));
    }
    let nh = model.n_hidden();
    let inv_var = 1.0 / (model.sigma * model.sigma);
    let mut dw = Tensor::zeros(&[nv, nh]);
    let mut da = Tensor::zeros(&[nv]);
    let mut db = Tensor::zeros(&[nh]);
    for s in 0..b {
        let v0 = batch.slab(s);
        let ph0 = model.hidden_probs(v0);
        let h0 = bernoulli(ph0.data(), rng);
        let mean = model.visible_mean(&h0);
        let v1: Vec<f64> = mean
            .data()
            .iter()
            .map(|m| {
                let n: f64 = rng.sample(StandardNormal);
                m + model.sigma * n
            })
            .collect();
        let ph1 = model.hidden_probs(&v1);
        let (dwd, dad, dbd) = (dw.data_mut(), da.data_mut(), db.data_mut());
        for i in 0..nv {
            for j in 0..nh {
                dwd[i * nh + j] += (v0[i] * ph0.data()[j] - v1[i] * ph1.data()[j]) * inv_var;
            }
            dad[i] += (v0[i] - v1[i]) * inv_var;
        }
        for j in 0..nh {
            dbd[j] += ph0.data()[j] - ph1.data()[j];
        }
    }
    let k = 1.0 / b as f64;
    dw.scale(k);
    da.scale(k);
    db.scale(k);
    Ok(CdUpdate {
        weights: dw,
        visible_bias: da,
        hidden_bias: db,
    })
}

/// One CD-1 ascent step. `sigma` is never touched.
pub fn cd1_update(model: &mut RbmModel, batch: &Tensor, lr: f64, rng: &mut Rng) -> Result<()> {
    if batch.dims().first().copied().unwrap_or(0) == 0 {
        return Err(Error::invalid("RBM batch is empty"));
    }
    let g = cd1_gradient(model, batch, rng)?;
    for (p, d) in [
        (&mut model.weights, &g.weights),
        (&mut model.visible_bias, &g.visible_bias),
        (&mut model.hidden_bias, &g.hidden_bias),
    ] {
        for (x, dx) in p.data_mut().iter_mut().zip(d.data()) {
            *x += lr * dx;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RbmTrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
}

impl Default for RbmTrainConfig {
    fn default() -> Self {
        RbmTrainConfig {
            epochs: 100,
            batch_size: 64,
            lr: 1e-2,
        }
    }
}

/// Mean one-step reconstruction error `|v - reconstruct_mean(v)|^2`.
pub fn reconstruction_error(model: &RbmModel, data: &Tensor) -> Result<f64> {
    let n = data.dims()[0];
    let mut total = 0.0;
    for s in 0..n {
        let v = data.slab_tensor(s);
        let r = model.reconstruct_mean(&v)?;
        total += v.data().iter().zip(r.data()).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
    }
    Ok(total / n as f64)
}

/// Shuffled mini-batch CD-1. Returns the reconstruction error after every
/// epoch. The visible bias starts at the data mean.
pub fn train_rbm(model: &mut RbmModel, data: &Tensor, cfg: &RbmTrainConfig, rng: &mut Rng) -> Result<Vec<f64>> {
    let &[n, nv] = data.dims() else {
        return Err(Error::shape(format!("RBM data must be [N,N_v], got {:?}", data.dims())));
    };
    if n == 0 {
        return Err(Error::invalid("RBM training set is empty"));
    }
    if nv != model.n_visible() {
        return Err(Error::shape(format!("RBM data has {nv} visible units, model {}", model.n_visible())));
    }
    if cfg.batch_size == 0 {
        return Err(Error::invalid("batch_size must be positive"));
    }
    for i in 0..nv {
        model.visible_bias.data_mut()[i] = (0..n).map(|s| data.slab(s)[i]).sum::<f64>() / n as f64;
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut log = Vec::with_capacity(cfg.epochs);
    for _ in 0..cfg.epochs {
        order.shuffle(rng);
        for chunk in order.chunks(cfg.batch_size) {
            let mut rows = Vec::with_capacity(chunk.len() * nv);
            for &i in chunk {
                rows.extend_from_slice(data.slab(i));
            }
            let batch = Tensor::from_vec(&[chunk.len(), nv], rows)?;
            cd1_update(model, &batch, cfg.lr, rng)?;
        }
        log.push(reconstruction_error(model, data)?);
    }
    Ok(log)
}
