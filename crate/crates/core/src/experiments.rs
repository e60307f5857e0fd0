//! Scenario builders and the parameter sweeps behind the CLI `exp-*`
//! commands.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::approx::{solve_discretized, DiscretizeParams};
use crate::error::Result;
use crate::exact::{evaluate_under_cvar, risk_neutral_solve, solve_exact};
use crate::model::{scheme_entropy, PersuasionInstance, RiskSpec};

const SCENARIO2: &str = include_str!("../fixtures/scenario2.json");
const PORTFOLIO5: &str = include_str!("../fixtures/portfolio5.json");

/// Two states `(bad, good)`; `safe` pays 0.4 everywhere, `risky` pays 0 or
/// 1; the sender wants `risky`.
pub fn scenario1(prior_good: f64, r: f64) -> PersuasionInstance {
    PersuasionInstance {
        states: vec!["bad".into(), "good".into()],
        actions: vec!["safe".into(), "risky".into()],
        prior: vec![1.0 - prior_good, prior_good],
        receiver_payoff: vec![vec![0.4, 0.0], vec![0.4, 1.0]],
        sender_payoff: vec![vec![0.0, 1.0], vec![0.0, 1.0]],
        risk: RiskSpec::Cvar { r },
        metadata: None,
    }
}

fn with_level(mut inst: PersuasionInstance, r: f64) -> PersuasionInstance {
    inst.risk = RiskSpec::Cvar { r };
    inst
}

/// Five states, three actions: a safe action, a high-return action with a
/// catastrophic state, and an intermediate one.
pub fn scenario2(r: f64) -> PersuasionInstance {
    with_level(
        PersuasionInstance::from_json(SCENARIO2).expect("bundled fixture parses"),
        r,
    )
}

/// Five market states with deposit, bond and stock.
pub fn portfolio5(r: f64) -> PersuasionInstance {
    with_level(
        PersuasionInstance::from_json(PORTFOLIO5).expect("bundled fixture parses"),
        r,
    )
}

/// `start, start + step, ...` up to `end` inclusive, rounded to 12 digits.
pub fn linear_grid(start: f64, end: f64, step: f64) -> Vec<f64> {
    let count = ((end - start) / step + 1e-9).floor() as usize;
    (0..=count)
        .map(|i| ((start + step * i as f64) * 1e12).round() / 1e12)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub r: f64,
    pub cvar_value: f64,
    /// Value of the expected-utility-optimal scheme under its own receiver.
    pub standard_value: f64,
    /// Same scheme, receiver replaced by the CVaR receiver.
    pub standard_value_under_cvar: f64,
}

/// CVaR-aware optimum against the expected-utility optimum re-evaluated
/// under a CVaR receiver, for each level in `r_grid`.
pub fn comparison_sweep(
    build: impl Fn(f64) -> PersuasionInstance,
    r_grid: &[f64],
) -> Result<Vec<ComparisonRow>> {
    r_grid
        .iter()
        .map(|&r| {
            let inst = build(r);
            let exact = solve_exact(&inst)?;
            let standard = risk_neutral_solve(&inst)?;
            let under = evaluate_under_cvar(&inst, &standard.scheme)?;
            Ok(ComparisonRow {
                r,
                cvar_value: exact.value,
                standard_value: standard.value,
                standard_value_under_cvar: under.value,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyRow {
    pub r: f64,
    pub sender_value: f64,
    pub scheme_entropy: f64,
    /// Recommended action names in the optimal scheme, `+`-joined.
    pub chosen_actions: String,
}

pub fn entropy_sweep(
    build: impl Fn(f64) -> PersuasionInstance,
    r_grid: &[f64],
) -> Result<Vec<EntropyRow>> {
    r_grid
        .iter()
        .map(|&r| {
            let inst = build(r);
            let exact = solve_exact(&inst)?;
            let mut actions: Vec<usize> = exact.scheme.signals.iter().map(|s| s.action).collect();
            actions.sort_unstable();
            actions.dedup();
            let names: Vec<&str> = actions.iter().map(|&a| inst.actions[a].as_str()).collect();
            Ok(EntropyRow {
                r,
                sender_value: exact.value,
                scheme_entropy: scheme_entropy(&exact.scheme),
                chosen_actions: names.join("+"),
            })
        })
        .collect()
}

/// Number of consecutive rows whose chosen action sets differ.
pub fn action_transitions(rows: &[EntropyRow]) -> usize {
    rows.windows(2)
        .filter(|w| w[0].chosen_actions != w[1].chosen_actions)
        .count()
}

/// Shape of the heavy-tail generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeavyTailConfig {
    pub states: usize,
    pub actions: usize,
    pub r: f64,
}

impl Default for HeavyTailConfig {
    fn default() -> Self {
        HeavyTailConfig {
            states: 4,
            actions: 3,
            r: 0.25,
        }
    }
}

/// Random instance whose first `max(1, m/4)` states are tail states with
/// double prior weight. Action `a` has mean `0.5 + 0.05 a` and dispersion
/// `0.1 e^{a/3}`; tail states draw a one-sided loss of up to three
/// dispersions. The sender prefers riskier actions.
pub fn heavy_tail_instance(cfg: HeavyTailConfig, seed: u64) -> PersuasionInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (m, n) = (cfg.states, cfg.actions);
    let tail = (m / 4).max(1);
    let weights: Vec<f64> = (0..m).map(|w| if w < tail { 2.0 } else { 1.0 }).collect();
    let total: f64 = weights.iter().sum();
    let mut receiver_payoff = vec![vec![0.0; n]; m];
    for a in 0..n {
        let mean = 0.5 + 0.05 * a as f64;
        let sigma = 0.1 * (a as f64 / 3.0).exp();
        for (w, row) in receiver_payoff.iter_mut().enumerate() {
            let z: f64 = rng.sample(StandardNormal);
            let x = if w < tail {
                mean - sigma * (1.0 + 2.0 * rng.gen::<f64>()) * (1.0 + z.abs())
            } else {
                mean + sigma * z
            };
            row[a] = (x * 1e4).round() / 1e4;
        }
    }
    let denom = (n.max(2) - 1) as f64;
    PersuasionInstance {
        states: (0..m).map(|w| format!("s{w}")).collect(),
        actions: (0..n).map(|a| format!("a{a}")).collect(),
        prior: weights.iter().map(|x| x / total).collect(),
        receiver_payoff,
        sender_payoff: vec![(0..n).map(|a| a as f64 / denom).collect(); m],
        risk: RiskSpec::Cvar { r: cfg.r },
        metadata: None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeoffRow {
    pub eps: f64,
    pub k: usize,
    pub exact_value: f64,
    pub approx_value: f64,
    /// `(exact - approx) / |exact|` when the approximation falls short,
    /// else 0.
    pub rel_error: f64,
    /// `(approx - exact) / |exact|` when the approximation exceeds the
    /// exact-IC optimum, else 0.
    pub excess: f64,
    pub max_regret: f64,
    pub grid_size: usize,
    pub alphabet_size: usize,
    pub wall_ms: f64,
}

/// Runs the discretized solver at each `(eps, k)` pair and compares against
/// the exact optimum.
pub fn tradeoff_sweep(
    inst: &PersuasionInstance,
    schedule: &[(f64, usize)],
) -> Result<Vec<TradeoffRow>> {
    let exact = solve_exact(inst)?.value;
    let scale = if exact.abs() > 1e-12 {
        exact.abs()
    } else {
        1.0
    };
    schedule
        .iter()
        .map(|&(eps, k)| {
            let start = Instant::now();
            let sol = solve_discretized(inst, &DiscretizeParams::new(eps).with_k(k))?;
            let wall_ms = start.elapsed().as_secs_f64() * 1e3;
            let gap = (exact - sol.value) / scale;
            Ok(TradeoffRow {
                eps,
                k,
                exact_value: exact,
                approx_value: sol.value,
                rel_error: gap.max(0.0),
                excess: (-gap).max(0.0),
                max_regret: sol.max_regret,
                grid_size: sol.grid_size,
                alphabet_size: sol.alphabet_size,
                wall_ms,
            })
        })
        .collect()
}

/// Halving `eps` while doubling `k`, so successive grids are nested.
pub fn default_schedule(eps_grid: &[f64], k0: usize) -> Vec<(f64, usize)> {
    let mut eps: Vec<f64> = eps_grid.to_vec();
    eps.sort_by(|a, b| b.total_cmp(a));
    eps.iter().enumerate().map(|(i, &e)| (e, k0 << i)).collect()
}
