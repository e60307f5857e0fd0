//! Brute-force reference computations: sender-favorable best responses, a
//! grid-restricted concavification and a from-scratch scheme audit.

use serde::{Deserialize, Serialize};

use crate::approx::enumerate_grid;
use crate::cvar::{self, best_of};
use crate::error::{Error, Result};
use crate::lp::{solve_lp, LpProblem};
use crate::model::{
    ic_margin, ic_regret, sender_value, PersuasionInstance, Posterior, Signal, SignalingScheme,
};

/// Receiver best response at `mu` with sender-favorable tie-breaking (ties
/// in risk value within [`cvar::TIE_TOL`]; remaining sender ties go to the
/// lowest index). Returns the action and its sender payoff at `mu`.
pub fn sender_preferred_response(inst: &PersuasionInstance, mu: &[f64]) -> Result<(usize, f64)> {
    let values = cvar::rho_all(inst, mu)?;
    let mut best: Option<(usize, f64)> = None;
    for a in best_of(&values) {
        let v = inst.sender_expectation(mu, a);
        if best.is_none_or(|(_, bv)| v > bv) {
            best = Some((a, v));
        }
    }
    best.ok_or_else(|| Error::InvalidInstance("instance has no actions".into()))
}

/// Largest state count accepted by [`grid_opt`].
pub const GRID_OPT_MAX_STATES: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridOpt {
    pub lower_bound_value: f64,
    pub scheme: SignalingScheme,
}

/// Best Bayes-plausible mixture of grid posteriors, each paired with an
/// exact best response. Every recommendation is IC, so the value is a lower
/// bound on the optimum.
pub fn grid_opt(inst: &PersuasionInstance, resolution: usize) -> Result<GridOpt> {
    grid_opt_filtered(inst, resolution, None)
}

/// [`grid_opt`] restricted to grid pairs whose IC margin is at least
/// `min_margin`.
pub fn grid_opt_filtered(
    inst: &PersuasionInstance,
    resolution: usize,
    min_margin: Option<f64>,
) -> Result<GridOpt> {
    let m = inst.m();
    if m > GRID_OPT_MAX_STATES {
        return Err(Error::Dimension(format!(
            "grid oracle supports at most {GRID_OPT_MAX_STATES} states, got {m}"
        )));
    }
    inst.check()?;
    let mut points: Vec<(Posterior, usize, f64)> = Vec::new();
    for mu in enumerate_grid(m, resolution)? {
        let values = cvar::rho_all(inst, &mu)?;
        let mut best: Option<(usize, f64)> = None;
        for a in best_of(&values) {
            if let Some(g) = min_margin {
                if inst.n() < 2 || crate::model::margin_from_values(&values, a) < g {
                    continue;
                }
            }
            let w = inst.sender_expectation(&mu, a);
            if best.is_none_or(|(_, bw)| w > bw) {
                best = Some((a, w));
            }
        }
        if let Some((a, w)) = best {
            points.push((mu, a, w));
        }
    }
    if points.is_empty() {
        return Err(Error::EmptyAlphabet);
    }
    let mut lp = LpProblem::new(points.len());
    lp.objective = points.iter().map(|p| p.2).collect();
    for w in 0..m {
        let terms = points
            .iter()
            .enumerate()
            .filter(|(_, p)| p.0[w] != 0.0)
            .map(|(i, p)| (i, p.0[w]))
            .collect();
        lp.add_eq(terms, inst.prior[w]);
    }
    let sol = solve_lp(&lp)?.into_optimal()?;
    let signals = points
        .into_iter()
        .zip(&sol.x)
        .filter(|(_, &x)| x > crate::model::MASS_CUTOFF)
        .map(|((mu, a, _), &x)| Signal {
            probability: x,
            posterior: mu,
            action: a,
            facet: None,
        })
        .collect();
    Ok(GridOpt {
        lower_bound_value: sol.objective,
        scheme: SignalingScheme::new(signals),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub bayes_residual: f64,
    pub probability_residual: f64,
    pub value: f64,
    pub regrets: Vec<f64>,
    /// Per-signal IC margins; empty for single-action instances.
    pub margins: Vec<f64>,
    pub max_regret: f64,
}

impl AuditReport {
    /// Bayes plausible within `1e-9` and every regret at most `tol`.
    pub fn passes(&self, tol: f64) -> bool {
        self.bayes_residual <= 1e-9 && self.probability_residual <= 1e-9 && self.max_regret <= tol
    }
}

/// Recomputes plausibility, value, regrets and margins of a scheme.
pub fn audit_scheme(inst: &PersuasionInstance, scheme: &SignalingScheme) -> Result<AuditReport> {
    if scheme.is_empty() {
        return Err(Error::EmptyScheme);
    }
    inst.check()?;
    let value = sender_value(inst, scheme)?;
    let regrets = scheme
        .signals
        .iter()
        .map(|s| ic_regret(inst, &s.posterior, s.action))
        .collect::<Result<Vec<_>>>()?;
    let margins = if inst.n() < 2 {
        Vec::new()
    } else {
        scheme
            .signals
            .iter()
            .map(|s| ic_margin(inst, &s.posterior, s.action))
            .collect::<Result<Vec<_>>>()?
    };
    Ok(AuditReport {
        bayes_residual: scheme.bayes_residual(&inst.prior),
        probability_residual: scheme.probability_residual(),
        value,
        max_regret: regrets.iter().copied().fold(0.0, f64::max),
        regrets,
        margins,
    })
}
