//! One test per acceptance criterion. Each writes a single PASS/FAIL line
//! to stderr (bypassing the test harness capture) before asserting.

mod common;

use std::io::Write;
use std::time::{Duration, Instant};

use common::{fixture, has_k_clique, random_cvar_instance, random_graph};
use cvar_persuasion::approx::local_facets;
use cvar_persuasion::cvar::DEFAULT_CLIQUE_CAP;
use cvar_persuasion::exact::merge_by_action;
use cvar_persuasion::experiments::{
    action_transitions, comparison_sweep, default_schedule, entropy_sweep, heavy_tail_instance,
    linear_grid, portfolio5, scenario1, scenario2, tradeoff_sweep, HeavyTailConfig, TradeoffRow,
};
use cvar_persuasion::hardness::{clique_decision, gen_clique_instance};
use cvar_persuasion::oracle::grid_opt_filtered;
use cvar_persuasion::{
    concavify_2x2, cvar_facets, cvar_value, evaluate_under_cvar, ic_margin, ic_regret,
    risk_neutral_solve, solve_discretized, solve_discretized_local, solve_exact, DiscretizeParams,
    FacetSet, PersuasionInstance, Posterior, RiskSpec,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(id: u32, name: &str, pass: bool, detail: String, elapsed: Duration) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let line = format!(
        "acceptance {id:>2} {verdict} {name}: {detail} [{:.2} s]\n",
        elapsed.as_secs_f64()
    );
    let _ = std::io::stderr().lock().write_all(line.as_bytes());
    assert!(pass, "criterion {id} failed: {detail}");
}

#[test]
fn c01_facet_correctness() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut err, mut count_ok, mut norm_ok) = (0.0f64, true, true);
    for _ in 0..1000 {
        let m = rng.gen_range(1..=8);
        let u: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let r = rng.gen_range(0.05..=1.0);
        let w: Vec<f64> = (0..m).map(|_| rng.gen::<f64>()).collect();
        let total: f64 = w.iter().sum();
        let mu: Vec<f64> = w.iter().map(|x| x / total).collect();
        let facets = cvar_facets(&u, r).unwrap();
        let best = facets
            .iter()
            .map(|c| c.iter().zip(&mu).map(|(a, b)| a * b).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max);
        err = err.max((best - cvar_value(&mu, &u, r).unwrap()).abs());
        count_ok &= facets.len() <= m;
        let umax = u.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        norm_ok &= facets
            .iter()
            .flatten()
            .all(|c| c.abs() <= umax * (1.0 + 2.0 / r) + 1e-12);
    }
    let elapsed = start.elapsed();
    let pass = err <= 1e-9 && count_ok && norm_ok && elapsed < Duration::from_secs(5);
    let detail =
        format!("max |facet max - cvar| = {err:.1e}, counts ok {count_ok}, norms ok {norm_ok}");
    report(1, "facet correctness", pass, detail, elapsed);
}

#[test]
fn c02_exact_matches_concavification() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut err = 0.0f64;
    for _ in 0..500 {
        let p = rng.gen_range(0.05..0.95);
        let inst = PersuasionInstance {
            states: vec!["s0".into(), "s1".into()],
            actions: vec!["a0".into(), "a1".into()],
            prior: vec![1.0 - p, p],
            receiver_payoff: (0..2)
                .map(|_| (0..2).map(|_| rng.gen::<f64>()).collect())
                .collect(),
            sender_payoff: (0..2)
                .map(|_| (0..2).map(|_| rng.gen::<f64>()).collect())
                .collect(),
            risk: RiskSpec::Cvar {
                r: rng.gen_range(1..=9) as f64 / 10.0,
            },
            metadata: None,
        };
        err = err
            .max((solve_exact(&inst).unwrap().value - concavify_2x2(&inst).unwrap().value).abs());
    }
    let elapsed = start.elapsed();
    let pass = err <= 1e-6 && elapsed < Duration::from_secs(30);
    report(
        2,
        "exact LP vs concavification (500 2x2)",
        pass,
        format!("max gap {err:.1e}"),
        elapsed,
    );
}

#[test]
fn c03_scenario_closed_form() {
    let start = Instant::now();
    let half = solve_exact(&scenario1(0.3, 0.5)).unwrap().value;
    let one = solve_exact(&scenario1(0.3, 1.0)).unwrap().value;
    let pass = (half - 3.0 / 7.0).abs() <= 1e-9 && (one - 0.75).abs() <= 1e-9;
    report(
        3,
        "two-state closed form",
        pass,
        format!("r=0.5 -> {half:.12}, r=1 -> {one:.12}"),
        start.elapsed(),
    );
}

#[test]
fn c04_utility_collapse() {
    let start = Instant::now();
    let inst = scenario1(0.3, 0.2);
    let standard = risk_neutral_solve(&inst).unwrap();
    let under = evaluate_under_cvar(&inst, &standard.scheme).unwrap().value;
    let aware = solve_exact(&inst).unwrap().value;
    let pass = under == 0.0 && (aware - 0.3 / 0.88).abs() <= 1e-9;
    let detail = format!("standard scheme under CVaR = {under}, CVaR-aware = {aware:.12}");
    report(
        4,
        "utility collapse at r=0.2",
        pass,
        detail,
        start.elapsed(),
    );
}

#[test]
fn c05_discretization_soundness() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut worst_slack, mut worst_ratio, mut signals) = (f64::NEG_INFINITY, 0.0f64, 0);
    for i in 0..100 {
        let m = rng.gen_range(2..=4);
        let n = rng.gen_range(2..=3);
        let inst = random_cvar_instance(&mut rng, m, n, &[0.1, 0.25, 0.5, 0.75, 1.0]);
        let eps = if i % 2 == 0 { 0.1 } else { 0.4 };
        let k = if m == 4 {
            rng.gen_range(4..=16)
        } else {
            rng.gen_range(4..=30)
        };
        let params = DiscretizeParams::new(eps).with_k(k);
        let bound = 4.0 * params.eps_r() + 1e-7;
        let sol = solve_discretized(&inst, &params).unwrap();
        for s in &sol.scheme.signals {
            let regret = ic_regret(&inst, &s.posterior, s.action).unwrap();
            worst_slack = worst_slack.max(regret - bound);
            worst_ratio = worst_ratio.max(regret / (4.0 * params.eps_r()));
            signals += 1;
        }
    }
    let elapsed = start.elapsed();
    let pass = worst_slack <= 0.0 && elapsed < Duration::from_secs(120);
    let detail = format!("{signals} signals, max regret / (4 eps_R) = {worst_ratio:.6}");
    report(
        5,
        "discretization soundness (100 instances)",
        pass,
        detail,
        elapsed,
    );
}

fn on_grid(mu: &[f64], k: usize) -> bool {
    mu.iter()
        .all(|x| (x * k as f64 - (x * k as f64).round()).abs() <= 1e-9)
}

#[test]
fn c06_discretization_completeness() {
    let start = Instant::now();
    let mut worst = f64::INFINITY;
    let mut on = true;
    for (name, k) in [
        ("scenario1.json", 10),
        ("revelation_failure.json", 10),
        ("local3.json", 10),
        ("local3.json", 20),
    ] {
        let inst = fixture(name);
        let exact = solve_exact(&inst).unwrap();
        on &= exact
            .scheme
            .signals
            .iter()
            .all(|s| on_grid(&s.posterior, k));
        for eps in [0.05, 0.1, 0.4] {
            let approx = solve_discretized(&inst, &DiscretizeParams::new(eps).with_k(k)).unwrap();
            worst = worst.min(approx.value - exact.value);
        }
    }
    let pass = on && worst >= -1e-6;
    let detail = format!("optimal posteriors on grid {on}, min (approx - exact) = {worst:.2e}");
    report(
        6,
        "discretization completeness",
        pass,
        detail,
        start.elapsed(),
    );
}

#[test]
fn c07_strict_ic() {
    let start = Instant::now();
    let gamma = 0.1;
    let mut cases = Vec::new();
    for (p, r) in [(0.3, 0.5), (0.3, 0.2), (0.5, 0.8), (0.2, 1.0)] {
        cases.push(scenario1(p, r));
    }
    cases.push(fixture("revelation_failure.json"));
    let (mut min_margin, mut worst_gap) = (f64::INFINITY, f64::INFINITY);
    for inst in &cases {
        for k in [10, 20] {
            let params = DiscretizeParams::new(gamma).with_k(k).with_gamma(gamma);
            let sol = solve_discretized(inst, &params).unwrap();
            for s in &sol.scheme.signals {
                min_margin = min_margin.min(ic_margin(inst, &s.posterior, s.action).unwrap());
            }
            let bench = grid_opt_filtered(inst, k, Some(gamma))
                .unwrap()
                .lower_bound_value;
            worst_gap = worst_gap.min(sol.value - bench);
        }
    }
    let pass = min_margin > 0.0 && worst_gap >= -1e-6;
    let detail = format!(
        "min margin {min_margin:.4}, min (value - margin-{gamma} grid benchmark) = {worst_gap:.2e}"
    );
    report(7, "strict IC in margin mode", pass, detail, start.elapsed());
}

#[test]
fn c08_clique_boundary() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut agree, mut positives, mut witness_err) = (0, 0, 0.0f64);
    for _ in 0..30 {
        let n = rng.gen_range(4..=10);
        let density = rng.gen_range(0.1..0.5);
        let edges = random_graph(&mut rng, n, density);
        let k = rng.gen_range(2..=4);
        let inst = gen_clique_instance(n, &edges, k).unwrap();
        let eta = k as f64 / n as f64;
        let d = clique_decision(&inst, eta, DEFAULT_CLIQUE_CAP).unwrap();
        agree += usize::from(d.achievable == has_k_clique(n, &edges, k));
        if let Some(v) = d.witness_value {
            positives += 1;
            witness_err = witness_err.max((v - eta).abs());
        }
    }
    let elapsed = start.elapsed();
    let pass = agree == 30 && witness_err <= 1e-12 && elapsed < Duration::from_secs(60);
    let detail =
        format!("{agree}/30 agree, {positives} positive, max |witness - K/n| = {witness_err:.1e}");
    report(8, "clique boundary", pass, detail, elapsed);
}

#[test]
fn c09_local_refinement() {
    let start = Instant::now();
    let inst = fixture("local3.json");
    let probes: Vec<Posterior> = solve_exact(&inst)
        .unwrap()
        .scheme
        .signals
        .into_iter()
        .map(|s| s.posterior)
        .collect();
    let (eta, eps, k) = (0.1, 0.1, 10);
    let total = FacetSet::from_instance(&inst).unwrap().dedup().total();
    let n_loc = local_facets(&inst, &probes, eta).unwrap().n_loc;
    let local = solve_discretized_local(&inst, &probes, eta, eps, 0.1, Some(k)).unwrap();
    let global = solve_discretized(&inst, &DiscretizeParams::new(eps).with_k(k)).unwrap();
    let near = local.solution.scheme.signals.iter().all(|s| {
        probes
            .iter()
            .any(|p| p.l1_distance(&s.posterior) <= eta + 1e-9)
    });
    let regret = local
        .solution
        .scheme
        .signals
        .iter()
        .map(|s| ic_regret(&inst, &s.posterior, s.action).unwrap())
        .fold(0.0, f64::max);
    let gap = (local.solution.value - global.value).abs();
    let pass = gap <= 1e-6
        && n_loc < total
        && local.certified
        && !local.fell_back
        && near
        && regret <= eps;
    let detail = format!(
        "|local - global| = {gap:.1e}, N_loc = {n_loc} < L = {total}, certified {}, max regret {regret:.4}",
        local.certified
    );
    report(9, "local refinement", pass, detail, start.elapsed());
}

#[test]
fn c10_revelation_failure() {
    let start = Instant::now();
    let inst = fixture("revelation_failure.json");
    let sol = solve_exact(&inst).unwrap();
    let max_regret = |scheme: &cvar_persuasion::SignalingScheme| {
        scheme
            .signals
            .iter()
            .map(|s| ic_regret(&inst, &s.posterior, s.action).unwrap())
            .fold(0.0, f64::max)
    };
    let (facet, merged) = (
        max_regret(&sol.scheme),
        max_regret(&merge_by_action(&sol.scheme)),
    );
    let pass = facet <= 1e-7 && merged > 1e-3;
    let detail = format!("facet-labelled regret {facet:.1e}, merged-by-action regret {merged:.4}");
    report(
        10,
        "revelation-failure witness",
        pass,
        detail,
        start.elapsed(),
    );
}

fn nonincreasing(rows: &[TradeoffRow]) -> bool {
    rows.windows(2)
        .all(|w| w[1].rel_error <= w[0].rel_error + 1e-9)
}

#[test]
fn c11_sweeps() {
    let start = Instant::now();
    let grid = linear_grid(0.05, 1.0, 0.05);
    let mut notes = Vec::new();
    let mut pass = true;
    for (label, build) in [
        (
            "two-state",
            &(|r| scenario1(0.3, r)) as &dyn Fn(f64) -> PersuasionInstance,
        ),
        ("five-state", &scenario2),
    ] {
        let rows = comparison_sweep(build, &grid).unwrap();
        let collapse = rows
            .iter()
            .position(|row| row.standard_value_under_cvar > 0.0)
            .unwrap_or(rows.len());
        let zero_below = rows[..collapse]
            .iter()
            .all(|row| row.standard_value_under_cvar == 0.0);
        let last = rows.last().unwrap();
        let equal_at_one = (last.cvar_value - last.standard_value_under_cvar).abs() <= 1e-9;
        pass &= zero_below && collapse > 0 && equal_at_one;
        let r_c = rows.get(collapse).map_or(f64::NAN, |row| row.r);
        notes.push(format!(
            "{label} collapse below r={r_c}, equal at r=1 {equal_at_one}"
        ));
    }

    let rows = entropy_sweep(portfolio5, &grid).unwrap();
    let (first, last) = (rows.first().unwrap(), rows.last().unwrap());
    let steps = action_transitions(&rows);
    pass &= last.scheme_entropy >= first.scheme_entropy && steps >= 1;
    notes.push(format!(
        "entropy {:.3} -> {:.3}, {steps} action steps",
        first.scheme_entropy, last.scheme_entropy
    ));

    let schedule = default_schedule(&[0.4, 0.2, 0.1, 0.05], 4);
    let rows = tradeoff_sweep(
        &heavy_tail_instance(HeavyTailConfig::default(), 1),
        &schedule,
    )
    .unwrap();
    let errs: Vec<String> = rows.iter().map(|r| format!("{:.4}", r.rel_error)).collect();
    pass &= nonincreasing(&rows);
    let monotone_seeds = (1..=10)
        .filter(|&seed| {
            nonincreasing(
                &tradeoff_sweep(
                    &heavy_tail_instance(HeavyTailConfig::default(), seed),
                    &schedule,
                )
                .unwrap(),
            )
        })
        .count();
    notes.push(format!(
        "trade-off rel_error [{}] (seed 1; monotone on {monotone_seeds}/10 seeds)",
        errs.join(", ")
    ));
    report(
        11,
        "experiment sweeps",
        pass,
        notes.join("; "),
        start.elapsed(),
    );
}
