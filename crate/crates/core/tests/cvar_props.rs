mod common;

use common::{cvar_instance, interior, posterior, sized_cvar_instance};
use cvar_persuasion::cvar::{best_response_set, rho_all};
use cvar_persuasion::model::scheme_from_joint_mass;
use cvar_persuasion::{
    cvar_facets, cvar_value, ic_margin, ic_regret, thresholds_2x2, Posterior, Signal,
    SignalingScheme, ThresholdCase,
};
use proptest::prelude::*;

fn payoffs(m: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..=1.0, m)
}

fn level() -> impl Strategy<Value = f64> {
    0.05f64..=1.0
}

fn case() -> impl Strategy<Value = (Vec<f64>, f64, Posterior)> {
    (1usize..=8).prop_flat_map(|m| (payoffs(m), level(), posterior(m)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn facets_reproduce_cvar((u, r, mu) in case()) {
        let facets = cvar_facets(&u, r).unwrap();
        let best = facets.iter().map(|c| c.iter().zip(mu.iter()).map(|(a, b)| a * b).sum::<f64>()).fold(f64::NEG_INFINITY, f64::max);
        prop_assert!((best - cvar_value(&mu, &u, r).unwrap()).abs() <= 1e-9);
    }

    #[test]
    fn facet_count_and_norm((u, r, _mu) in case()) {
        let facets = cvar_facets(&u, r).unwrap();
        prop_assert!(facets.len() <= u.len());
        let umax = u.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        let cmax = facets.iter().flatten().fold(0.0f64, |a, x| a.max(x.abs()));
        prop_assert!(cmax <= umax * (1.0 + 2.0 / r) + 1e-12);
    }

    #[test]
    fn nondecreasing_in_level_and_below_mean((u, r, mu) in case(), bump in 0.0f64..=0.5) {
        let lo = cvar_value(&mu, &u, r).unwrap();
        let hi = cvar_value(&mu, &u, (r + bump).min(1.0)).unwrap();
        let mean: f64 = u.iter().zip(mu.iter()).map(|(a, b)| a * b).sum();
        prop_assert!(lo <= hi + 1e-12);
        prop_assert!(hi <= mean + 1e-12);
        prop_assert!((cvar_value(&mu, &u, 1.0).unwrap() - mean).abs() <= 1e-12);
    }

    #[test]
    fn convex_in_posterior((u, r, mu) in case(), t in 0.0f64..=1.0, seed in any::<u64>()) {
        let m = u.len();
        let nu = Posterior::vertex(m, (seed % m as u64) as usize);
        let mix: Vec<f64> = mu.iter().zip(nu.iter()).map(|(a, b)| t * a + (1.0 - t) * b).collect();
        let lhs = cvar_value(&mix, &u, r).unwrap();
        let rhs = t * cvar_value(&mu, &u, r).unwrap() + (1.0 - t) * cvar_value(&nu, &u, r).unwrap();
        prop_assert!(lhs <= rhs + 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn regret_nonnegative_and_consistent_with_margin(inst in sized_cvar_instance(5, 4), mu in posterior(5)) {
        let mu = interior(&mu, inst.m(), 0.01);
        let best = best_response_set(&inst, &mu).unwrap();
        for a in 0..inst.n() {
            let regret = ic_regret(&inst, &mu, a).unwrap();
            prop_assert!(regret >= 0.0);
            let margin = ic_margin(&inst, &mu, a).unwrap();
            if regret == 0.0 {
                prop_assert!(margin >= 0.0);
            }
            if margin > 0.0 {
                prop_assert_eq!(&best, &vec![a]);
            }
        }
    }

    /// If every risk value moves by at most eps, no margin drops by more
    /// than 2 eps.
    #[test]
    fn margin_stability(inst in sized_cvar_instance(4, 4), mu in posterior(4), nu in posterior(4), t in 0.0f64..=1.0) {
        let (mu, nu) = (interior(&mu, inst.m(), 1e-3), interior(&nu, inst.m(), 1e-3));
        let bar = Posterior::new(mu.iter().zip(nu.iter()).map(|(a, b)| (1.0 - t) * a + t * b).collect()).unwrap();
        let (x, y) = (rho_all(&inst, &mu).unwrap(), rho_all(&inst, &bar).unwrap());
        let eps = x.iter().zip(&y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        for a in 0..inst.n() {
            let before = ic_margin(&inst, &mu, a).unwrap();
            let after = ic_margin(&inst, &bar, a).unwrap();
            prop_assert!(after >= before - 2.0 * eps - 1e-9);
        }
    }

    #[test]
    fn joint_mass_round_trip(inst in sized_cvar_instance(4, 3), a in posterior(4), b in posterior(4), w in 0.05f64..=0.95) {
        let cut = |p: &Posterior| interior(p, inst.m(), 1e-2);
        let scheme = SignalingScheme::new(vec![
            Signal { probability: w, posterior: cut(&a), action: 0, facet: Some(0) },
            Signal { probability: 1.0 - w, posterior: cut(&b), action: 1, facet: Some(1) },
        ]);
        let joint = scheme.to_joint_mass();
        let back = scheme_from_joint_mass(&inst, &joint).unwrap().to_joint_mass();
        for (x, y) in joint.types.iter().zip(&back.types) {
            prop_assert_eq!((x.action, x.facet), (y.action, y.facet));
            for (p, q) in x.mass.iter().zip(&y.mass) {
                prop_assert!((p - q).abs() <= 1e-12);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    /// Each action's best-response region on a fine binary grid is one
    /// contiguous run.
    #[test]
    fn two_by_two_best_response_sets_are_intervals(inst in cvar_instance(2, 2)) {
        for a in 0..2 {
            let member: Vec<bool> = (0..=1000)
                .map(|i| best_response_set(&inst, &Posterior::binary(i as f64 / 1000.0)).unwrap().contains(&a))
                .collect();
            let runs = member.windows(2).filter(|w| !w[0] && w[1]).count() + usize::from(member[0]);
            prop_assert!(runs <= 1, "action {} has {} runs", a, runs);
        }
    }

    #[test]
    fn threshold_moves_towards_the_riskier_side(inst in cvar_instance(2, 2)) {
        if let Ok(t) = thresholds_2x2(&inst) {
            if t.case == ThresholdCase::HighBelief && t.premium_gap > 1e-9 {
                prop_assert!(t.mu_cvar > t.mu_eu);
            }
            prop_assert!((0.0..=1.0).contains(&t.mu_cvar));
        }
    }
}

#[test]
fn scenario_threshold_closed_form() {
    for r in [0.2, 0.5, 0.8, 1.0] {
        let t = thresholds_2x2(&cvar_persuasion::experiments::scenario1(0.3, r)).unwrap();
        assert!((t.mu_eu - 0.4).abs() < 1e-12);
        assert!(
            (t.mu_cvar - (1.0 - 0.6 * r)).abs() < 1e-12,
            "r = {r}: {}",
            t.mu_cvar
        );
    }
}
