//! Independent reference computations. Nothing here calls the code under
//! test except to read model parameters.

use mtgm_core::gridworld::{next_cell, Action, Cell};
use mtgm_core::planner::RewardMap;
use mtgm_core::rbm::RbmModel;

/// `E(v, h)` written out from the parameters.
pub fn rbm_energy(model: &RbmModel, v: &[f64], h: &[u8]) -> f64 {
    let s2 = model.sigma() * model.sigma();
    let a = model.visible_bias.data();
    let b = model.hidden_bias.data();
    let w = model.weights.data();
    let nh = model.n_hidden();
    let mut e = 0.0;
    for i in 0..v.len() {
        e += (v[i] - a[i]).powi(2) / (2.0 * s2);
    }
    for j in 0..nh {
        if h[j] == 1 {
            e -= b[j];
            for i in 0..v.len() {
                e -= v[i] * w[i * nh + j] / s2;
            }
        }
    }
    e
}

/// `p(h = 1 | v)` for a single hidden unit by normalising the joint over
/// both hidden states.
pub fn rbm_posterior_by_enumeration(model: &RbmModel, v: &[f64]) -> f64 {
    let e0 = rbm_energy(model, v, &[0]);
    let e1 = rbm_energy(model, v, &[1]);
    let m = e0.min(e1);
    let (p0, p1) = ((-(e0 - m)).exp(), (-(e1 - m)).exp());
    p1 / (p0 + p1)
}

/// Mean of `p(v | h)` for two visible units, by trapezoid quadrature of
/// `v * exp(-E(v, h))` over a box of +-12 sigma around the visible bias
/// shifted by the weights. For a Gaussian integrand the trapezoid rule
/// converges geometrically in the step, so 1e-10 is reachable.
pub fn rbm_visible_mean_by_quadrature(model: &RbmModel, h: &[u8]) -> [f64; 2] {
    assert_eq!(model.n_visible(), 2);
    let s = model.sigma();
    let a = model.visible_bias.data();
    let w = model.weights.data();
    let nh = model.n_hidden();
    let centre: Vec<f64> = (0..2)
        .map(|i| a[i] + (0..nh).filter(|&j| h[j] == 1).map(|j| w[i * nh + j]).sum::<f64>())
        .collect();
    let n = 400;
    let half = 12.0 * s;
    let step = 2.0 * half / n as f64;
    let grid = |i: usize| -> Vec<f64> { (0..=n).map(|k| centre[i] - half + k as f64 * step).collect() };
    let (g0, g1) = (grid(0), grid(1));
    let e_ref = rbm_energy(model, &centre, h);
    let (mut z, mut m0, mut m1) = (0.0, 0.0, 0.0);
    for (i, &x) in g0.iter().enumerate() {
        for (k, &y) in g1.iter().enumerate() {
            let wt = if i == 0 || i == n { 0.5 } else { 1.0 } * if k == 0 || k == n { 0.5 } else { 1.0 };
            let p = wt * (-(rbm_energy(model, &[x, y], h) - e_ref)).exp();
            z += p;
            m0 += p * x;
            m1 += p * y;
        }
    }
    [m0 / z, m1 / z]
}

fn successor(map: &RewardMap, s: usize, a: Action) -> usize {
    let c = next_cell(Cell::new(s / map.width, s % map.width), a, map.height, map.width);
    c.r * map.width + c.c
}

/// Dense Gaussian elimination with partial pivoting.
fn solve(mut m: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Vec<f64> {
    let n = rhs.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs())).unwrap();
        m.swap(col, piv);
        rhs.swap(col, piv);
        for row in col + 1..n {
            let f = m[row][col] / m[col][col];
            if f != 0.0 {
                for k in col..n {
                    m[row][k] -= f * m[col][k];
                }
                rhs[row] -= f * rhs[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| m[row][k] * x[k]).sum();
        x[row] = (rhs[row] - s) / m[row][row];
    }
    x
}

/// Optimal values by evaluating every deterministic stationary policy
/// exactly (`(I - gamma P) V = P R`) and taking the state-wise maximum.
/// Feasible up to about 8 non-terminal cells.
pub fn optimal_values_by_policy_enumeration(map: &RewardMap, gamma: f64) -> Vec<f64> {
    let n = map.height * map.width;
    let free: Vec<usize> = (0..n).filter(|&s| !map.terminal[s]).collect();
    assert!(free.len() <= 8, "too many states to enumerate");
    let mut best = vec![f64::NEG_INFINITY; n];
    for s in 0..n {
        if map.terminal[s] {
            best[s] = 0.0;
        }
    }
    let total = 4usize.pow(free.len() as u32);
    for code in 0..total {
        let mut c = code;
        let policy: Vec<Action> = free
            .iter()
            .map(|_| {
                let a = Action::ALL[c % 4];
                c /= 4;
                a
            })
            .collect();
        let k = free.len();
        let mut m = vec![vec![0.0; k]; k];
        let mut rhs = vec![0.0; k];
        for (row, (&s, &a)) in free.iter().zip(&policy).enumerate() {
            m[row][row] += 1.0;
            let t = successor(map, s, a);
            rhs[row] = map.reward[t];
            if let Some(col) = free.iter().position(|&f| f == t) {
                m[row][col] -= gamma;
            }
        }
        let v = solve(m, rhs);
        for (row, &s) in free.iter().enumerate() {
            best[s] = best[s].max(v[row]);
        }
    }
    best
}

/// Optimal values when only terminal cells pay: the best discounted
/// terminal payoff over every self-avoiding path, or 0 for never
/// terminating. Revisiting a cell only adds discount, so simple paths
/// suffice.
pub fn optimal_values_by_path_enumeration(map: &RewardMap, gamma: f64) -> Vec<f64> {
    let n = map.height * map.width;
    assert!(
        (0..n).all(|s| map.terminal[s] || map.reward[s] == 0.0),
        "path oracle needs rewards on terminal cells only"
    );
    fn walk(map: &RewardMap, gamma: f64, s: usize, discount: f64, visited: &mut Vec<bool>, best: &mut f64) {
        for a in Action::ALL {
            let t = successor(map, s, a);
            if visited[t] {
                continue;
            }
            if map.terminal[t] {
                *best = best.max(discount * map.reward[t]);
                continue;
            }
            visited[t] = true;
            walk(map, gamma, t, discount * gamma, visited, best);
            visited[t] = false;
        }
    }
    (0..n)
        .map(|s| {
            if map.terminal[s] {
                return 0.0;
            }
            let mut best = 0.0;
            let mut visited = vec![false; n];
            visited[s] = true;
            walk(map, gamma, s, 1.0, &mut visited, &mut best);
            best
        })
        .collect()
}

/// Pearson chi-square statistic of `counts` against `probs`.
pub fn chi_square(counts: &[usize], probs: &[f64]) -> f64 {
    let n: usize = counts.iter().sum();
    counts
        .iter()
        .zip(probs)
        .map(|(&c, &p)| {
            let e = p * n as f64;
            (c as f64 - e).powi(2) / e
        })
        .sum()
}

/// Upper 1% points of the chi-square distribution, indexed by degrees of
/// freedom (1..=3).
pub const CHI2_CRIT_001: [f64; 4] = [f64::NAN, 6.635, 9.210, 11.345];
