use criterion::{criterion_group, criterion_main, Criterion};
use mtgm_core::bonus::{compute_bonus, BonusConfig};
use mtgm_core::numerics::{conv2d_backward, conv2d_forward};
use mtgm_core::planner::{value_iteration, RewardMap};
use mtgm_core::rng::seeded;
use mtgm_core::vae::{VaeConfig, VaeModel};
use mtgm_core::{Environment, TaskVariant, Tensor, WorldSpec};
use rand::Rng as _;

fn conv(c: &mut Criterion) {
    let mut rng = seeded(1);
    let input = Tensor::from_fn(&[16, 28, 28], |_| rng.random_range(-1.0..1.0));
    let kernels = Tensor::from_fn(&[16, 16, 3, 3], |_| rng.random_range(-0.1..0.1));
    let bias = Tensor::zeros(&[16]);
    let upstream = Tensor::from_fn(&[16, 14, 14], |_| rng.random_range(-1.0..1.0));
    c.bench_function("conv2d forward 16x28x28 k3 s2", |b| {
        b.iter(|| conv2d_forward(&input, &kernels, &bias, 2).unwrap())
    });
    c.bench_function("conv2d backward 16x28x28 k3 s2", |b| {
        b.iter(|| conv2d_backward(&input, &kernels, 2, &upstream).unwrap())
    });
}

fn vae(c: &mut Criterion) {
    let mut rng = seeded(2);
    let world = WorldSpec::builtin("bw-e").unwrap();
    let model = VaeModel::new(VaeConfig::default(), &mut rng).unwrap();
    let (_, obs) = Environment::reset(&world, TaskVariant::A);
    let input = obs.encoder_input();
    let z = model.encode(&input).unwrap();
    c.bench_function("vae encode 28x28", |b| b.iter(|| model.encode(&input).unwrap()));
    c.bench_function("vae decode 28x28", |b| b.iter(|| model.decode(&z).unwrap()));
    c.bench_function("jacobian bonus 28x28", |b| {
        b.iter(|| compute_bonus(&model, &obs, &BonusConfig::default()).unwrap())
    });
}

fn planning(c: &mut Criterion) {
    let mut map = RewardMap::empty(28, 28);
    for (i, r) in [(25 * 28 + 3, 1.0), (25 * 28 + 24, -1.0)] {
        map.terminal[i] = true;
        map.reward[i] = r;
    }
    c.bench_function("value iteration 28x28 x40", |b| b.iter(|| value_iteration(&map, 0.95, 40)));
}

criterion_group!(benches, conv, vae, planning);
criterion_main!(benches);
