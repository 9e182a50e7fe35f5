mod common;

use common::grad::*;
use mtgm_core::numerics::Activation;
use mtgm_core::rng::seeded;

#[test]
fn conv_layers_match_finite_differences() {
    let mut rng = seeded(11);
    for stride in [1, 2] {
        let r = conv_report(stride, 150, &mut rng);
        assert!(r.passes(1e-4, 150), "{r:?}");
    }
}

#[test]
fn dense_matches_finite_differences() {
    let r = dense_report(150, &mut seeded(12));
    assert!(r.passes(1e-4, 150), "{r:?}");
}

#[test]
fn activations_match_finite_differences() {
    let mut rng = seeded(13);
    for kind in [Activation::Relu, Activation::Sigmoid, Activation::Tanh] {
        let r = activation_report(kind, 150, &mut rng);
        assert!(r.passes(1e-4, 150), "{r:?}");
    }
}

#[test]
fn upsample_matches_finite_differences() {
    let r = upsample_report(150, &mut seeded(14));
    assert!(r.passes(1e-4, 150), "{r:?}");
}

#[test]
fn masked_loss_matches_finite_differences() {
    let (p, x) = vae_loss_reports(120, &mut seeded(15));
    assert!(p.passes(1e-4, 120), "{p:?}");
    assert!(x.passes(1e-4, 120), "{x:?}");
}

#[test]
fn jacobian_matches_finite_differences() {
    let r = jacobian_report(120, &mut seeded(16));
    assert!(r.passes(1e-3, 120), "{r:?}");
}
