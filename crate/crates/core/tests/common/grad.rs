//! Central finite-difference checks for every differentiable op.

use mtgm_core::numerics::*;
use mtgm_core::rng::{seeded, Rng};
use mtgm_core::vae::{VaeBatch, VaeConfig, VaeModel};
use rand::Rng as _;

/// Relative error with an absolute floor so that two values that are both
/// numerically zero compare equal.
pub fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-7)
}

#[derive(Debug, Clone, Default)]
pub struct Report {
    pub name: String,
    pub cases: usize,
    pub skipped: usize,
    pub max_rel: f64,
    /// `(analytic, numeric)` at the worst case.
    pub worst: (f64, f64),
}

impl Report {
    fn new(name: &str) -> Self {
        Report { name: name.to_string(), ..Report::default() }
    }

    pub fn passes(&self, tol: f64, min_cases: usize) -> bool {
        self.cases >= min_cases && self.max_rel < tol
    }
}

/// Checks one coordinate. `f(delta)` evaluates the scalar objective with
/// the coordinate shifted by `delta`. When the forward and backward
/// one-sided slopes disagree the coordinate sits on a ReLU kink, where the
/// derivative is undefined, and it is skipped.
fn check(report: &mut Report, analytic: f64, h: f64, mut f: impl FnMut(f64) -> f64) {
    let (lo, mid, hi) = (f(-h), f(0.0), f(h));
    if rel_err((hi - mid) / h, (mid - lo) / h) > 1e-3 {
        report.skipped += 1;
        return;
    }
    let numeric = (hi - lo) / (2.0 * h);
    report.cases += 1;
    let e = rel_err(analytic, numeric);
    if e > report.max_rel {
        report.max_rel = e;
        report.worst = (analytic, numeric);
    }
}

fn randn(dims: &[usize], rng: &mut Rng) -> Tensor {
    Tensor::from_fn(dims, |_| rng.random_range(-1.0..1.0))
}

const H: f64 = 1e-5;

/// Objective `sum(r * layer(x))` checked against every parameter and the
/// input, on `cases` random coordinates.
fn layer_check(
    name: &str,
    cases: usize,
    rng: &mut Rng,
    make: &mut dyn FnMut(&mut Rng) -> (Vec<Tensor>, Tensor),
    forward: &dyn Fn(&[Tensor], &Tensor) -> Tensor,
    backward: &dyn Fn(&[Tensor], &Tensor, &Tensor) -> (Vec<Tensor>, Tensor),
) -> Report {
    let mut report = Report::new(name);
    while report.cases < cases {
        let (params, x) = make(rng);
        let out = forward(&params, &x);
        let r = randn(out.dims(), rng);
        let (pg, xg) = backward(&params, &x, &r);
        let slot = rng.random_range(0..=params.len());
        if slot == params.len() {
            let i = rng.random_range(0..x.len());
            check(&mut report, xg.data()[i], H, |d| {
                let mut xs = x.clone();
                xs.data_mut()[i] += d;
                forward(&params, &xs).dot(&r)
            });
        } else {
            let i = rng.random_range(0..params[slot].len());
            check(&mut report, pg[slot].data()[i], H, |d| {
                let mut ps = params.clone();
                ps[slot].data_mut()[i] += d;
                forward(&ps, &x).dot(&r)
            });
        }
    }
    report
}

pub fn conv_report(stride: usize, cases: usize, rng: &mut Rng) -> Report {
    layer_check(
        &format!("conv2d stride {stride}"),
        cases,
        rng,
        &mut |rng| {
            let cin = rng.random_range(1..4);
            let cout = rng.random_range(1..4);
            let h = rng.random_range(3..9);
            let w = rng.random_range(3..9);
            (vec![randn(&[cout, cin, 3, 3], rng), randn(&[cout], rng)], randn(&[cin, h, w], rng))
        },
        &|p, x| conv2d_forward(x, &p[0], &p[1], stride).unwrap(),
        &|p, x, r| {
            let g = conv2d_backward(x, &p[0], stride, r).unwrap();
            (vec![g.param("kernels").clone(), g.param("bias").clone()], g.input.clone())
        },
    )
}

pub fn dense_report(cases: usize, rng: &mut Rng) -> Report {
    layer_check(
        "dense",
        cases,
        rng,
        &mut |rng| {
            let n = rng.random_range(1..12);
            let m = rng.random_range(1..6);
            (vec![randn(&[m, n], rng), randn(&[m], rng)], randn(&[n], rng))
        },
        &|p, x| dense_forward(x, &p[0], &p[1]).unwrap(),
        &|p, x, r| {
            let g = dense_backward(x, &p[0], r).unwrap();
            (vec![g.param("weights").clone(), g.param("bias").clone()], g.input.clone())
        },
    )
}

pub fn activation_report(kind: Activation, cases: usize, rng: &mut Rng) -> Report {
    layer_check(
        &format!("{kind:?}"),
        cases,
        rng,
        &mut |rng| (vec![], randn(&[rng.random_range(1..20)], rng).map(|v| v * 4.0)),
        &|_, x| activation_forward(kind, x),
        &|_, x, r| (vec![], activation_backward(kind, x, r).unwrap()),
    )
}

pub fn upsample_report(cases: usize, rng: &mut Rng) -> Report {
    layer_check(
        "upsample2x",
        cases,
        rng,
        &mut |rng| {
            let c = rng.random_range(1..4);
            (vec![], randn(&[c, rng.random_range(1..5), rng.random_range(1..5)], rng))
        },
        &|_, x| upsample2x_forward(x).unwrap(),
        &|_, _, r| (vec![], upsample2x_backward(r).unwrap()),
    )
}

/// Fresh model with random biases, so that no pre-activation sits exactly
/// at a ReLU kink on all-zero regions.
pub fn random_vae(cfg: VaeConfig, rng: &mut Rng) -> VaeModel {
    let mut m = VaeModel::new(cfg, rng).unwrap();
    let names = VaeModel::param_names();
    for (p, name) in m.params_mut().iter_mut().zip(names) {
        if name.ends_with("bias") {
            p.data_mut().iter_mut().for_each(|b| *b = rng.random_range(-0.2..0.2));
        }
    }
    m
}

pub fn small_vae_config() -> VaeConfig {
    VaeConfig {
        height: 8,
        width: 8,
        latent_dim: 4,
        encoder_std: 0.3,
        recon_std: 1.0,
        mask_channel: true,
    }
}

/// Random batch with binary masks and images zeroed off-mask.
pub fn random_batch(cfg: &VaeConfig, b: usize, p_mask: f64, rng: &mut Rng) -> VaeBatch {
    let (h, w) = (cfg.height, cfg.width);
    let masks = Tensor::from_fn(&[b, 1, h, w], |_| f64::from(u8::from(rng.random::<f64>() < p_mask)));
    let mut images = Tensor::from_fn(&[b, 3, h, w], |_| rng.random::<f64>());
    for i in 0..b {
        let m = masks.slab(i).to_vec();
        let img = images.slab_mut(i);
        for ch in 0..3 {
            for p in 0..h * w {
                img[ch * h * w + p] *= m[p];
            }
        }
    }
    VaeBatch::new(images, masks).unwrap()
}

/// Full masked VAE loss: parameter gradients and observed-pixel gradients.
/// The reparameterisation noise is pinned by reusing one seed per
/// evaluation.
pub fn vae_loss_reports(cases: usize, rng: &mut Rng) -> (Report, Report) {
    let cfg = small_vae_config();
    let mut params_report = Report::new("masked VAE loss (parameters)");
    let mut image_report = Report::new("masked VAE loss (observed pixels)");
    while params_report.cases < cases || image_report.cases < cases {
        let model = random_vae(cfg, rng);
        let batch = random_batch(&cfg, 3, 0.6, rng);
        let noise_seed: u64 = rng.random();
        let out = model.masked_loss(&batch, &mut seeded(noise_seed)).unwrap();
        for _ in 0..10 {
            let slot = rng.random_range(0..model.params().len());
            let i = rng.random_range(0..model.params()[slot].len());
            check(&mut params_report, out.grads[slot].data()[i], H, |d| {
                let mut m = model.clone();
                m.params_mut()[slot].data_mut()[i] += d;
                m.masked_loss(&batch, &mut seeded(noise_seed)).unwrap().loss
            });
        }
        let hw = cfg.height * cfg.width;
        let mut found = 0;
        while found < 10 {
            let s = rng.random_range(0..batch.len());
            let p = rng.random_range(0..hw);
            if batch.masks().slab(s)[p] == 0.0 {
                continue;
            }
            found += 1;
            let j = rng.random_range(0..3) * hw + p;
            let flat = s * 3 * hw + j;
            check(&mut image_report, out.image_grad.data()[flat], H, |d| {
                let mut images = batch.images().clone();
                images.data_mut()[flat] += d;
                let b = VaeBatch::new(images, batch.masks().clone()).unwrap();
                model.masked_loss(&b, &mut seeded(noise_seed)).unwrap().loss
            });
        }
    }
    (params_report, image_report)
}

/// `encoder_jacobian` against finite differences of `encode` on RGB inputs.
pub fn jacobian_report(cases: usize, rng: &mut Rng) -> Report {
    let cfg = small_vae_config();
    let mut report = Report::new("encoder Jacobian");
    let hw = cfg.height * cfg.width;
    while report.cases < cases {
        let model = random_vae(cfg, rng);
        let batch = random_batch(&cfg, 1, 0.5, rng);
        let input = batch.encoder_input(0);
        let jac = model.encoder_jacobian(&input).unwrap();
        for _ in 0..10 {
            let k = rng.random_range(0..cfg.latent_dim);
            let j = rng.random_range(0..3 * hw);
            check(&mut report, jac.data()[k * 3 * hw + j], H, |d| {
                let mut x = input.clone();
                x.data_mut()[j] += d;
                model.encode(&x).unwrap().data()[k]
            });
        }
    }
    report
}

/// Every report the gradient criterion covers.
pub fn all_reports(cases: usize, seed: u64) -> Vec<(Report, f64)> {
    let mut rng = seeded(seed);
    let (loss_p, loss_x) = vae_loss_reports(cases, &mut rng);
    vec![
        (conv_report(1, cases, &mut rng), 1e-4),
        (conv_report(2, cases, &mut rng), 1e-4),
        (dense_report(cases, &mut rng), 1e-4),
        (activation_report(Activation::Relu, cases, &mut rng), 1e-4),
        (activation_report(Activation::Sigmoid, cases, &mut rng), 1e-4),
        (activation_report(Activation::Tanh, cases, &mut rng), 1e-4),
        (upsample_report(cases, &mut rng), 1e-4),
        (loss_p, 1e-4),
        (loss_x, 1e-4),
        (jacobian_report(cases, &mut rng), 1e-3),
    ]
}
