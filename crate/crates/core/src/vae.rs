//! Convolutional VAE trained with a mask-weighted reconstruction loss.
//!
//! Encoder: `conv(4->8, s2) -> relu -> conv(8->16, s2) -> relu -> dense -> mu`.
//! Decoder: `dense -> relu -> [up2x -> conv -> relu] x2 -> conv(->3) -> sigmoid`.
//! The last conv has an untied bias, one per output pixel and channel.
//! The encoder variance is fixed at `encoder_std^2 * I`, so the only
//! learned encoder output is the mean. Unobserved pixels (mask 0) carry no
//! reconstruction penalty and are zeroed before they reach the encoder.

use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::numerics::{
    activation_backward_cached, activation_forward, adam_step, conv2d_backward,
    conv2d_backward_input, conv2d_forward, dense_backward, dense_backward_input, dense_forward,
    upsample2x_backward, upsample2x_forward, Activation, AdamConfig, AdamState, Tensor,
};
use crate::rng::Rng;

const ENC1: usize = 8;
const ENC2: usize = 16;
const DEC0: usize = 16;
const DEC1: usize = 8;
const DEC2: usize = 8;
const K: usize = 3;

const PARAM_NAMES: [&str; 14] = [
    "encoder.conv1.kernels",
    "encoder.conv1.bias",
    "encoder.conv2.kernels",
    "encoder.conv2.bias",
    "encoder.head.weights",
    "encoder.head.bias",
    "decoder.dense.weights",
    "decoder.dense.bias",
    "decoder.conv1.kernels",
    "decoder.conv1.bias",
    "decoder.conv2.kernels",
    "decoder.conv2.bias",
    "decoder.out.kernels",
    "decoder.out.bias",
];

// Parameter slots, in `PARAM_NAMES` order.
const E1W: usize = 0;
const E1B: usize = 1;
const E2W: usize = 2;
const E2B: usize = 3;
const EHW: usize = 4;
const EHB: usize = 5;
const DDW: usize = 6;
const DDB: usize = 7;
const D1W: usize = 8;
const D1B: usize = 9;
const D2W: usize = 10;
const D2B: usize = 11;
const DOW: usize = 12;
const DOB: usize = 13;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VaeConfig {
    pub height: usize,
    pub width: usize,
    pub latent_dim: usize,
    /// Fixed encoder standard deviation `c`.
    pub encoder_std: f64,
    /// Reconstruction standard deviation; each observed pixel is weighted
    /// by `1 / recon_std^2`.
    pub recon_std: f64,
    /// Feed the mask to the encoder as a fourth channel.
    pub mask_channel: bool,
}

impl Default for VaeConfig {
    fn default() -> Self {
        VaeConfig {
            height: 28,
            width: 28,
            latent_dim: 16,
            encoder_std: 0.1,
            recon_std: 0.1,
            mask_channel: true,
        }
    }
}

impl VaeConfig {
    fn validate(&self) -> Result<()> {
        if !self.height.is_multiple_of(4) || !self.width.is_multiple_of(4) || self.height < 4 || self.width < 4 {
            return Err(Error::invalid(format!(
                "VAE needs spatial dims divisible by 4, got {}x{}",
                self.height, self.width
            )));
        }
        if self.latent_dim == 0 {
            return Err(Error::invalid("latent_dim must be positive"));
        }
        if !(self.encoder_std > 0.0) || !(self.recon_std > 0.0) {
            return Err(Error::invalid("encoder_std and recon_std must be positive"));
        }
        Ok(())
    }

    fn in_channels(&self) -> usize {
        if self.mask_channel {
            4
        } else {
            3
        }
    }

    fn bottleneck(&self) -> (usize, usize) {
        (self.height / 4, self.width / 4)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VaeModel {
    config: VaeConfig,
    params: Vec<Tensor>,
}

fn param_dims(cfg: &VaeConfig) -> Vec<Vec<usize>> {
    let (h4, w4) = cfg.bottleneck();
    let flat = ENC2 * h4 * w4;
    let d = cfg.latent_dim;
    vec![
        vec![ENC1, cfg.in_channels(), K, K],
        vec![ENC1],
        vec![ENC2, ENC1, K, K],
        vec![ENC2],
        vec![d, flat],
        vec![d],
        vec![DEC0 * h4 * w4, d],
        vec![DEC0 * h4 * w4],
        vec![DEC1, DEC0, K, K],
        vec![DEC1],
        vec![DEC2, DEC1, K, K],
        vec![DEC2],
        vec![3, DEC2, K, K],
        vec![3, cfg.height, cfg.width],
    ]
}

/// Intermediate activations of one encoder pass.
struct EncoderTrace {
    input: Tensor,
    pre1: Tensor,
    act1: Tensor,
    pre2: Tensor,
    act2: Tensor,
    mu: Tensor,
}

/// Intermediate activations of one decoder pass.
struct DecoderTrace {
    z: Tensor,
    pre0: Tensor,
    act0: Tensor,
    up1: Tensor,
    pre1: Tensor,
    act1: Tensor,
    up2: Tensor,
    pre2: Tensor,
    act2: Tensor,
    pre_out: Tensor,
    out: Tensor,
}

/// Loss value and gradients for one batch.
#[derive(Debug, Clone)]
pub struct LossOutput {
    /// Batch mean of `KL + masked reconstruction`.
    pub loss: f64,
    pub kl: f64,
    pub recon: f64,
    /// One gradient per parameter, in [`VaeModel::param_names`] order.
    pub grads: Vec<Tensor>,
    /// `d loss / d images`, `[B, 3, H, W]`.
    pub image_grad: Tensor,
}

/// Observed images with their masks.
#[derive(Debug, Clone, PartialEq)]
pub struct VaeBatch {
    images: Tensor,
    masks: Tensor,
}

impl VaeBatch {
    /// `images: [B,3,H,W]`, `masks: [B,1,H,W]` with entries in {0,1}.
    pub fn new(images: Tensor, masks: Tensor) -> Result<Self> {
        let &[b, 3, h, w] = images.dims() else {
            return Err(Error::shape(format!(
                "batch images must be [B,3,H,W], got {:?}",
                images.dims()
            )));
        };
        if masks.dims() != [b, 1, h, w] {
            return Err(Error::shape(format!(
                "batch masks must be [{b},1,{h},{w}], got {:?}",
                masks.dims()
            )));
        }
        if let Some(bad) = masks.data().iter().find(|&&m| m != 0.0 && m != 1.0) {
            return Err(Error::invalid(format!("mask entries must be 0 or 1, found {bad}")));
        }
        Ok(VaeBatch { images, masks })
    }

    pub fn from_pairs(pairs: &[(Tensor, Tensor)]) -> Result<Self> {
        let images: Vec<Tensor> = pairs.iter().map(|(i, _)| i.clone()).collect();
        let masks: Vec<Tensor> = pairs.iter().map(|(_, m)| m.clone()).collect();
        Self::new(Tensor::stack(&images)?, Tensor::stack(&masks)?)
    }

    pub fn len(&self) -> usize {
        self.images.dims()[0]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn images(&self) -> &Tensor {
        &self.images
    }

    pub fn masks(&self) -> &Tensor {
        &self.masks
    }

    pub fn image(&self, i: usize) -> Tensor {
        self.images.slab_tensor(i)
    }

    pub fn mask(&self, i: usize) -> Tensor {
        self.masks.slab_tensor(i)
    }

    /// `[4,H,W]` encoder input for sample `i`, with unobserved pixels zeroed.
    pub fn encoder_input(&self, i: usize) -> Tensor {
        let (h, w) = (self.images.dims()[2], self.images.dims()[3]);
        masked_input(self.images.slab(i), self.masks.slab(i), h, w)
    }

    pub fn select(&self, idx: &[usize]) -> VaeBatch {
        let (h, w) = (self.images.dims()[2], self.images.dims()[3]);
        let mut img = Vec::with_capacity(idx.len() * 3 * h * w);
        let mut msk = Vec::with_capacity(idx.len() * h * w);
        for &i in idx {
            img.extend_from_slice(self.images.slab(i));
            msk.extend_from_slice(self.masks.slab(i));
        }
        VaeBatch {
            images: Tensor::from_vec(&[idx.len(), 3, h, w], img).expect("batch dims"),
            masks: Tensor::from_vec(&[idx.len(), 1, h, w], msk).expect("batch dims"),
        }
    }
}

fn masked_input(image: &[f64], mask: &[f64], h: usize, w: usize) -> Tensor {
    let hw = h * w;
    let mut data = Vec::with_capacity(4 * hw);
    for ch in 0..3 {
        data.extend(image[ch * hw..(ch + 1) * hw].iter().zip(mask).map(|(x, m)| x * m));
    }
    data.extend_from_slice(mask);
    Tensor::from_vec(&[4, h, w], data).expect("encoder input dims")
}

/// `z = mu + c * eps`, `eps ~ N(0, I)`.
pub fn reparameterize(mu: &Tensor, c: f64, rng: &mut Rng) -> Tensor {
    mu.map(|m| {
        let eps: f64 = rng.sample(StandardNormal);
        m + c * eps
    })
}

/// Closed-form `KL(N(mu, c^2 I) || N(0, I))`.
pub fn kl_divergence(mu: &Tensor, c: f64) -> f64 {
    let c2 = c * c;
    0.5 * mu.data().iter().map(|m| m * m + c2 - 1.0 - c2.ln()).sum::<f64>()
}

impl VaeModel {
    /// He-initialised weights, zero biases.
    pub fn new(config: VaeConfig, rng: &mut Rng) -> Result<Self> {
        config.validate()?;
        let params = param_dims(&config)
            .into_iter()
            .zip(PARAM_NAMES)
            .map(|(dims, name)| {
                if name.ends_with("bias") {
                    return Tensor::zeros(&dims);
                }
                let fan_in: usize = dims[1..].iter().product();
                let std = (2.0 / fan_in as f64).sqrt();
                Tensor::from_fn(&dims, |_| {
                    let n: f64 = rng.sample(StandardNormal);
                    n * std
                })
            })
            .collect();
        Ok(VaeModel { config, params })
    }

    pub fn from_params(config: VaeConfig, params: Vec<Tensor>) -> Result<Self> {
        config.validate()?;
        let dims = param_dims(&config);
        if params.len() != dims.len() {
            return Err(Error::shape(format!(
                "VAE expects {} parameter tensors, got {}",
                dims.len(),
                params.len()
            )));
        }
        for ((p, d), name) in params.iter().zip(&dims).zip(PARAM_NAMES) {
            if p.dims() != d.as_slice() {
                return Err(Error::shape(format!(
                    "{name}: expected {d:?}, got {:?}",
                    p.dims()
                )));
            }
        }
        Ok(VaeModel { config, params })
    }

    pub fn config(&self) -> &VaeConfig {
        &self.config
    }

    pub fn param_names() -> &'static [&'static str] {
        &PARAM_NAMES
    }

    pub fn params(&self) -> &[Tensor] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Tensor] {
        &mut self.params
    }

    /// Sets the per-pixel output bias to the logit of the observed mean of
    /// each pixel in `data` (clamped to `[0.01, 0.99]`); pixels never
    /// observed use the mean over all observed pixels of their channel.
    pub fn init_output_bias(&mut self, data: &VaeBatch) {
        let (h, w) = (self.config.height, self.config.width);
        let hw = h * w;
        let mut sum = vec![0.0; 3 * hw];
        let mut count = vec![0.0; hw];
        for i in 0..data.len() {
            let x = data.images.slab(i);
            for (p, &m) in data.masks.slab(i).iter().enumerate() {
                count[p] += m;
                for ch in 0..3 {
                    sum[ch * hw + p] += m * x[ch * hw + p];
                }
            }
        }
        let total: f64 = count.iter().sum();
        let logit = |v: f64| {
            let v = v.clamp(0.01, 0.99);
            (v / (1.0 - v)).ln()
        };
        let bias = self.params[DOB].data_mut();
        for ch in 0..3 {
            let channel_sum: f64 = sum[ch * hw..(ch + 1) * hw].iter().sum();
            let fallback = if total > 0.0 { channel_sum / total } else { 0.5 };
            for p in 0..hw {
                let mean = if count[p] > 0.0 { sum[ch * hw + p] / count[p] } else { fallback };
                bias[ch * hw + p] = logit(mean);
            }
        }
    }

    /// Zeroes the encoder's final dense layer, making `mu` constant.
    pub fn zero_encoder_head(&mut self) {
        self.params[EHW].fill(0.0);
        self.params[EHB].fill(0.0);
    }

    fn check_input(&self, input: &Tensor) -> Result<()> {
        let (h, w) = (self.config.height, self.config.width);
        if input.dims() != [4, h, w] {
            return Err(Error::shape(format!(
                "encoder input must be [4,{h},{w}] (masked RGB + mask), got {:?}",
                input.dims()
            )));
        }
        Ok(())
    }

    fn encoder_forward(&self, input4: &Tensor) -> EncoderTrace {
        let input = if self.config.mask_channel {
            input4.clone()
        } else {
            let hw = self.config.height * self.config.width;
            Tensor::from_vec(
                &[3, self.config.height, self.config.width],
                input4.data()[..3 * hw].to_vec(),
            )
            .expect("rgb slice")
        };
        let p = &self.params;
        let pre1 = conv2d_forward(&input, &p[E1W], &p[E1B], 2).expect("encoder conv1");
        let act1 = activation_forward(Activation::Relu, &pre1);
        let pre2 = conv2d_forward(&act1, &p[E2W], &p[E2B], 2).expect("encoder conv2");
        let act2 = activation_forward(Activation::Relu, &pre2);
        let mu = dense_forward(&act2, &p[EHW], &p[EHB]).expect("encoder head");
        EncoderTrace {
            input,
            pre1,
            act1,
            pre2,
            act2,
            mu,
        }
    }

    /// Backpropagates `d_mu`. Accumulates parameter gradients into `grads`
    /// when given; returns the gradient with respect to the 4-channel input
    /// when `want_input` is set.
    fn encoder_backward(
        &self,
        t: &EncoderTrace,
        d_mu: &Tensor,
        grads: Option<&mut [Tensor]>,
        want_input: bool,
    ) -> Option<Tensor> {
        let p = &self.params;
        let input4 = |g: Tensor| -> Tensor {
            if self.config.mask_channel {
                g
            } else {
                let mut data = g.into_data();
                data.extend(std::iter::repeat_n(0.0, self.config.height * self.config.width));
                Tensor::from_vec(&[4, self.config.height, self.config.width], data)
                    .expect("input grad dims")
            }
        };
        match grads {
            Some(grads) => {
                let head = dense_backward(&t.act2, &p[EHW], d_mu).expect("head backward");
                let (pg, d_act2) = head.into_parts();
                grads[EHW].add_assign(&pg[0].1);
                grads[EHB].add_assign(&pg[1].1);
                let d_pre2 =
                    activation_backward_cached(Activation::Relu, &t.pre2, &t.act2, &d_act2);
                let c2 = conv2d_backward(&t.act1, &p[E2W], 2, &d_pre2).expect("conv2 backward");
                grads[E2W].add_assign(c2.param("kernels"));
                grads[E2B].add_assign(c2.param("bias"));
                let d_pre1 =
                    activation_backward_cached(Activation::Relu, &t.pre1, &t.act1, &c2.input);
                let c1 = conv2d_backward(&t.input, &p[E1W], 2, &d_pre1).expect("conv1 backward");
                grads[E1W].add_assign(c1.param("kernels"));
                grads[E1B].add_assign(c1.param("bias"));
                want_input.then(|| input4(c1.input))
            }
            None => {
                let d_act2 = dense_backward_input(t.act2.dims(), &p[EHW], d_mu);
                let d_pre2 =
                    activation_backward_cached(Activation::Relu, &t.pre2, &t.act2, &d_act2);
                let d_act1 = conv2d_backward_input(t.act1.dims(), &p[E2W], 2, &d_pre2);
                let d_pre1 =
                    activation_backward_cached(Activation::Relu, &t.pre1, &t.act1, &d_act1);
                want_input.then(|| {
                    input4(conv2d_backward_input(t.input.dims(), &p[E1W], 2, &d_pre1))
                })
            }
        }
    }

    fn decoder_forward(&self, z: &Tensor) -> DecoderTrace {
        let p = &self.params;
        let (h4, w4) = self.config.bottleneck();
        let pre0 = dense_forward(z, &p[DDW], &p[DDB])
            .expect("decoder dense")
            .reshape(&[DEC0, h4, w4])
            .expect("bottleneck dims");
        let act0 = activation_forward(Activation::Relu, &pre0);
        let up1 = upsample2x_forward(&act0).expect("upsample1");
        let pre1 = conv2d_forward(&up1, &p[D1W], &p[D1B], 1).expect("decoder conv1");
        let act1 = activation_forward(Activation::Relu, &pre1);
        let up2 = upsample2x_forward(&act1).expect("upsample2");
        let pre2 = conv2d_forward(&up2, &p[D2W], &p[D2B], 1).expect("decoder conv2");
        let act2 = activation_forward(Activation::Relu, &pre2);
        let mut pre_out = conv2d_forward(&act2, &p[DOW], &Tensor::zeros(&[3]), 1).expect("decoder out");
        pre_out.add_assign(&p[DOB]);
        let out = activation_forward(Activation::Sigmoid, &pre_out);
        DecoderTrace {
            z: z.clone(),
            pre0,
            act0,
            up1,
            pre1,
            act1,
            up2,
            pre2,
            act2,
            pre_out,
            out,
        }
    }

    /// Accumulates decoder gradients and returns `d loss / d z`.
    fn decoder_backward(&self, t: &DecoderTrace, d_out: &Tensor, grads: &mut [Tensor]) -> Tensor {
        let p = &self.params;
        let d_pre_out =
            activation_backward_cached(Activation::Sigmoid, &t.pre_out, &t.out, d_out);
        let co = conv2d_backward(&t.act2, &p[DOW], 1, &d_pre_out).expect("out backward");
        grads[DOW].add_assign(co.param("kernels"));
        grads[DOB].add_assign(&d_pre_out);
        let d_pre2 = activation_backward_cached(Activation::Relu, &t.pre2, &t.act2, &co.input);
        let c2 = conv2d_backward(&t.up2, &p[D2W], 1, &d_pre2).expect("conv2 backward");
        grads[D2W].add_assign(c2.param("kernels"));
        grads[D2B].add_assign(c2.param("bias"));
        let d_act1 = upsample2x_backward(&c2.input).expect("upsample2 backward");
        let d_pre1 = activation_backward_cached(Activation::Relu, &t.pre1, &t.act1, &d_act1);
        let c1 = conv2d_backward(&t.up1, &p[D1W], 1, &d_pre1).expect("conv1 backward");
        grads[D1W].add_assign(c1.param("kernels"));
        grads[D1B].add_assign(c1.param("bias"));
        let d_act0 = upsample2x_backward(&c1.input).expect("upsample1 backward");
        let d_pre0 = activation_backward_cached(Activation::Relu, &t.pre0, &t.act0, &d_act0);
        let dd = dense_backward(&t.z, &p[DDW], &d_pre0).expect("dense backward");
        grads[DDW].add_assign(dd.param("weights"));
        grads[DDB].add_assign(dd.param("bias"));
        dd.input
    }

    /// Mean embedding of a `[4,H,W]` input (masked RGB, then mask).
    pub fn encode(&self, input: &Tensor) -> Result<Tensor> {
        self.check_input(input)?;
        Ok(self.encoder_forward(input).mu)
    }

    /// Full-world `[3,H,W]` prediction in `[0,1]`.
    pub fn decode(&self, z: &Tensor) -> Result<Tensor> {
        if z.len() != self.config.latent_dim {
            return Err(Error::shape(format!(
                "latent must have {} entries, got {}",
                self.config.latent_dim,
                z.len()
            )));
        }
        let z = Tensor::from_vec(&[z.len()], z.data().to_vec())?;
        let (h, w) = (self.config.height, self.config.width);
        self.decoder_forward(&z).out.reshape(&[3, h, w])
    }

    /// `d mu_k / d x_{c,r,col}` over the RGB input channels: `[d, 3, H, W]`.
    /// One backward pass per latent dimension.
    pub fn encoder_jacobian(&self, input: &Tensor) -> Result<Tensor> {
        self.check_input(input)?;
        let trace = self.encoder_forward(input);
        let d = self.config.latent_dim;
        let (h, w) = (self.config.height, self.config.width);
        let hw = h * w;
        let mut jac = Tensor::zeros(&[d, 3, h, w]);
        for k in 0..d {
            let mut seed = Tensor::zeros(&[d]);
            seed.data_mut()[k] = 1.0;
            let g = self
                .encoder_backward(&trace, &seed, None, true)
                .expect("input gradient requested");
            jac.slab_mut(k).copy_from_slice(&g.data()[..3 * hw]);
        }
        Ok(jac)
    }

    /// Mask-weighted VAE loss and its gradients, averaged over the batch.
    ///
    /// Per sample: `KL(N(mu, c^2 I) || N(0,I)) + sum_i m_i ((y_i - x_i)/sigma)^2`,
    /// with `z = mu + c * eps` drawn from `rng` (one draw per sample, in
    /// batch order).
    pub fn masked_loss(&self, batch: &VaeBatch, rng: &mut Rng) -> Result<LossOutput> {
        let (h, w) = (self.config.height, self.config.width);
        if batch.images.dims()[2..] != [h, w] {
            return Err(Error::shape(format!(
                "batch spatial dims {:?} do not match model {h}x{w}",
                &batch.images.dims()[2..]
            )));
        }
        if batch.is_empty() {
            return Err(Error::invalid("empty batch"));
        }
        let hw = h * w;
        let b = batch.len();
        let c = self.config.encoder_std;
        let inv_var = 1.0 / (self.config.recon_std * self.config.recon_std);
        let mut grads: Vec<Tensor> = self.params.iter().map(|p| Tensor::zeros(p.dims())).collect();
        let mut image_grad = Tensor::zeros(batch.images.dims());
        let (mut kl_sum, mut recon_sum) = (0.0, 0.0);

        for i in 0..b {
            let x = batch.images.slab(i);
            let m = batch.masks.slab(i);
            let input = masked_input(x, m, h, w);
            let enc = self.encoder_forward(&input);
            let z = reparameterize(&enc.mu, c, rng);
            let dec = self.decoder_forward(&z);
            let y = dec.out.data();

            kl_sum += kl_divergence(&enc.mu, c);
            let mut d_out = Tensor::zeros(dec.out.dims());
            let ig = image_grad.slab_mut(i);
            {
                let dd = d_out.data_mut();
                for ch in 0..3 {
                    for p in 0..hw {
                        if m[p] == 0.0 {
                            continue;
                        }
                        let j = ch * hw + p;
                        let diff = y[j] - x[j];
                        recon_sum += diff * diff * inv_var;
                        dd[j] = 2.0 * diff * inv_var;
                        ig[j] = -dd[j];
                    }
                }
            }
            let d_z = self.decoder_backward(&dec, &d_out, &mut grads);
            let mut d_mu = d_z;
            d_mu.add_assign(&enc.mu);
            let d_in = self
                .encoder_backward(&enc, &d_mu, Some(&mut grads), true)
                .expect("input gradient requested");
            let d_in = d_in.data();
            for ch in 0..3 {
                for p in 0..hw {
                    ig[ch * hw + p] += m[p] * d_in[ch * hw + p];
                }
            }
        }

        let scale = 1.0 / b as f64;
        grads.iter_mut().for_each(|g| g.scale(scale));
        image_grad.scale(scale);
        Ok(LossOutput {
            loss: (kl_sum + recon_sum) * scale,
            kl: kl_sum * scale,
            recon: recon_sum * scale,
            grads,
            image_grad,
        })
    }

    /// Mean squared error of the mean reconstruction over observed pixels
    /// (all three channels), pooled over the batch.
    pub fn masked_reconstruction_mse(&self, batch: &VaeBatch) -> Result<f64> {
        let hw = self.config.height * self.config.width;
        let (mut se, mut n) = (0.0, 0usize);
        for i in 0..batch.len() {
            let mu = self.encode(&batch.encoder_input(i))?;
            let y = self.decode(&mu)?;
            let x = batch.images.slab(i);
            let m = batch.masks.slab(i);
            for ch in 0..3 {
                for p in 0..hw {
                    if m[p] != 0.0 {
                        se += (y.data()[ch * hw + p] - x[ch * hw + p]).powi(2);
                        n += 1;
                    }
                }
            }
        }
        Ok(if n == 0 { 0.0 } else { se / n as f64 })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VaeTrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
}

impl Default for VaeTrainConfig {
    fn default() -> Self {
        VaeTrainConfig {
            epochs: 120,
            batch_size: 128,
            adam: AdamConfig::default(),
        }
    }
}

/// Mini-batch Adam training over a shuffled dataset. Returns the mean
/// per-sample loss of every epoch.
pub fn train_vae(
    model: &mut VaeModel,
    data: &VaeBatch,
    cfg: &VaeTrainConfig,
    rng: &mut Rng,
) -> Result<Vec<f64>> {
    train_vae_with(model, data, cfg, rng, |_, _, _| {})
}

/// [`train_vae`] with a per-epoch callback `(epoch, mean_loss, model)`.
pub fn train_vae_with(
    model: &mut VaeModel,
    data: &VaeBatch,
    cfg: &VaeTrainConfig,
    rng: &mut Rng,
    mut on_epoch: impl FnMut(usize, f64, &VaeModel),
) -> Result<Vec<f64>> {
    if data.is_empty() {
        return Err(Error::invalid("VAE training set is empty"));
    }
    if cfg.batch_size == 0 {
        return Err(Error::invalid("batch_size must be positive"));
    }
    if cfg.epochs > 0 {
        model.init_output_bias(data);
    }
    let mut state = AdamState::zeros_like(&model.params);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut log = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        order.shuffle(rng);
        let mut total = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let batch = data.select(chunk);
            let out = model.masked_loss(&batch, rng)?;
            total += out.loss * chunk.len() as f64;
            adam_step(&mut model.params, &out.grads, &mut state, &cfg.adam);
        }
        let mean = total / data.len() as f64;
        log.push(mean);
        on_epoch(epoch + 1, mean, model);
    }
    Ok(log)
}
