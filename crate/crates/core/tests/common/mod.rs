#![allow(dead_code)]

use cvar_persuasion::{PersuasionInstance, Posterior, RiskSpec};
use proptest::prelude::*;
use rand::Rng;

pub fn fixture(name: &str) -> PersuasionInstance {
    let path = format!("{}/fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"));
    PersuasionInstance::from_json(&text).unwrap()
}

fn normalize(weights: Vec<f64>) -> Vec<f64> {
    let total: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / total).collect()
}

/// Prior with full support, built from integer weights so it is exact
/// enough to keep on-grid posteriors on the grid.
pub fn prior(m: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(1u32..=9, m)
        .prop_map(|w| normalize(w.into_iter().map(f64::from).collect()))
}

pub fn posterior(m: usize) -> impl Strategy<Value = Posterior> {
    prop::collection::vec(0u32..=20, m)
        .prop_filter("nonzero", |w| w.iter().any(|&x| x > 0))
        .prop_map(|w| Posterior::new(normalize(w.into_iter().map(f64::from).collect())).unwrap())
}

fn matrix(
    m: usize,
    n: usize,
    lo: i32,
    hi: i32,
    scale: f64,
) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(
        prop::collection::vec((lo..=hi).prop_map(move |x| x as f64 / scale), n),
        m,
    )
}

/// CVaR instance with payoffs on a 0.05 lattice in `[0, 1]` and `r` in
/// `{0.05, ..., 1}`.
pub fn cvar_instance(m: usize, n: usize) -> impl Strategy<Value = PersuasionInstance> {
    (
        prior(m),
        matrix(m, n, 0, 20, 20.0),
        matrix(m, n, 0, 20, 20.0),
        1u32..=20,
    )
        .prop_map(move |(prior, u, v, r)| PersuasionInstance {
            states: (0..m).map(|w| format!("s{w}")).collect(),
            actions: (0..n).map(|a| format!("a{a}")).collect(),
            prior,
            receiver_payoff: u,
            sender_payoff: v,
            risk: RiskSpec::Cvar {
                r: f64::from(r) / 20.0,
            },
            metadata: None,
        })
}

pub fn sized_cvar_instance(
    max_m: usize,
    max_n: usize,
) -> impl Strategy<Value = PersuasionInstance> {
    (2..=max_m, 2..=max_n).prop_flat_map(|(m, n)| cvar_instance(m, n))
}

/// Same family drawn from a seeded generator, for fixed-count loops.
pub fn random_cvar_instance(
    rng: &mut impl Rng,
    m: usize,
    n: usize,
    r_choices: &[f64],
) -> PersuasionInstance {
    let weights = (0..m).map(|_| rng.gen_range(1..=9) as f64).collect();
    let cell = |rng: &mut dyn rand::RngCore| rng.gen_range(0..=20) as f64 / 20.0;
    PersuasionInstance {
        states: (0..m).map(|w| format!("s{w}")).collect(),
        actions: (0..n).map(|a| format!("a{a}")).collect(),
        prior: normalize(weights),
        receiver_payoff: (0..m)
            .map(|_| (0..n).map(|_| cell(rng)).collect())
            .collect(),
        sender_payoff: (0..m)
            .map(|_| (0..n).map(|_| cell(rng)).collect())
            .collect(),
        risk: RiskSpec::Cvar {
            r: r_choices[rng.gen_range(0..r_choices.len())],
        },
        metadata: None,
    }
}

/// Random simple graph on `n` vertices with edge probability `p`.
pub fn random_graph(rng: &mut impl Rng, n: usize, p: f64) -> Vec<[usize; 2]> {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(p) {
                edges.push([i, j]);
            }
        }
    }
    edges
}

/// Independent K-clique search over all K-subsets by bitmask.
pub fn has_k_clique(n: usize, edges: &[[usize; 2]], k: usize) -> bool {
    let mut adj = vec![0u32; n];
    for &[i, j] in edges {
        adj[i] |= 1 << j;
        adj[j] |= 1 << i;
    }
    (0u32..1 << n)
        .filter(|s| s.count_ones() as usize == k)
        .any(|s| {
            (0..n)
                .filter(|&v| s >> v & 1 == 1)
                .all(|v| (s & !(1 << v)) & !adj[v] == 0)
        })
}

/// First `m` coordinates of `p`, shifted by `floor` and renormalized, so
/// the result has full support on `m` states.
pub fn interior(p: &[f64], m: usize, floor: f64) -> Posterior {
    let total: f64 = p[..m].iter().sum::<f64>() + floor * m as f64;
    Posterior::new(p[..m].iter().map(|x| (x + floor) / total).collect()).unwrap()
}
