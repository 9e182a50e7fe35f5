//! Chi-square checks of the stochastic pieces against their stated
//! distributions, at the 1% level with fixed seeds.

mod common;

use common::oracles::{chi_square, CHI2_CRIT_001};
use mtgm_core::agents::{legal_moves, random_policy_step};
use mtgm_core::harness::pipeline::draw_variant;
use mtgm_core::planner::{select_action, AggregateValue, ValueFunction};
use mtgm_core::rng::{derive_rng, seeded};
use mtgm_core::{Action, Cell, Environment, TaskVariant, WorldSpec};

fn action_index(a: Action) -> usize {
    Action::ALL.iter().position(|&b| b == a).unwrap()
}

#[test]
fn random_policy_is_uniform_over_legal_moves() {
    let world = WorldSpec::builtin("bw-e").unwrap();
    let (_, mut obs) = Environment::reset(&world, TaskVariant::A);
    let mut rng = seeded(31);
    for pos in [Cell::new(10, 10), Cell::new(0, 10), Cell::new(0, 0)] {
        obs.agent_pos = pos;
        let legal = legal_moves(pos, world.height, world.width);
        let mut counts = vec![0usize; legal.len()];
        for _ in 0..8000 {
            let a = random_policy_step(&obs, &mut rng);
            counts[legal.iter().position(|&b| b == a).expect("illegal move drawn")] += 1;
        }
        let probs = vec![1.0 / legal.len() as f64; legal.len()];
        let chi2 = chi_square(&counts, &probs);
        assert!(chi2 < CHI2_CRIT_001[legal.len() - 1], "{pos:?}: {counts:?} chi2 {chi2}");
    }
}

#[test]
fn full_exploration_is_uniform_over_actions() {
    let agg = AggregateValue {
        value: ValueFunction { height: 3, width: 3, values: vec![0.0; 9] },
        reward: vec![0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        gamma: 0.9,
    };
    let mut rng = seeded(32);
    let mut counts = [0usize; 4];
    for _ in 0..8000 {
        counts[action_index(select_action(&agg, Cell::new(1, 1), 1.0, &mut rng))] += 1;
    }
    let chi2 = chi_square(&counts, &[0.25; 4]);
    assert!(chi2 < CHI2_CRIT_001[3], "{counts:?} chi2 {chi2}");
}

#[test]
fn epsilon_greedy_mixes_at_the_stated_rate() {
    // Greedy is Up; with epsilon = 0.2 Up has 0.8 + 0.05 and others 0.05.
    let agg = AggregateValue {
        value: ValueFunction { height: 3, width: 3, values: vec![0.0; 9] },
        reward: vec![0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        gamma: 0.9,
    };
    let mut rng = seeded(33);
    let mut counts = [0usize; 4];
    for _ in 0..8000 {
        counts[action_index(select_action(&agg, Cell::new(1, 1), 0.2, &mut rng))] += 1;
    }
    let mut probs = [0.05; 4];
    probs[action_index(Action::Up)] = 0.85;
    let chi2 = chi_square(&counts, &probs);
    assert!(chi2 < CHI2_CRIT_001[3], "{counts:?} chi2 {chi2}");
}

#[test]
fn variant_draws_are_fair() {
    let mut counts = [0usize; 2];
    for i in 0..4000 {
        counts[draw_variant(&mut derive_rng(5, &format!("eval-variant/{i}"))).index()] += 1;
    }
    let chi2 = chi_square(&counts, &[0.5, 0.5]);
    assert!(chi2 < CHI2_CRIT_001[1], "{counts:?} chi2 {chi2}");
}
