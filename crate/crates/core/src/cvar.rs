//! CVaR evaluation, the finite max-affine facet representation, the risk
//! dispatcher and the two-state geometric toolkit.
//!
//! For binary state spaces a belief is identified with the scalar
//! `mu = P(second listed state)`; the first state is the "low" state.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hardness;
use crate::model::{PersuasionInstance, Posterior, RiskSpec, Signal, SignalingScheme};
use crate::oracle;

/// Tie tolerance for best-response sets.
pub const TIE_TOL: f64 = 1e-9;
/// Default vertex cap for brute-force clique evaluation.
pub const DEFAULT_CLIQUE_CAP: usize = 20;

fn check_level(r: f64) -> Result<()> {
    if r > 0.0 && r <= 1.0 {
        Ok(())
    } else {
        Err(Error::RiskLevel(r))
    }
}

fn distinct_ascending(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// CVaR at level `r` of the payoff vector `u` under `mu`, computed as the
/// maximum of the variational objective over the distinct payoff values.
pub fn cvar_value(mu: &[f64], u: &[f64], r: f64) -> Result<f64> {
    check_level(r)?;
    if mu.len() != u.len() {
        return Err(Error::Dimension(format!(
            "posterior has {} entries, payoff vector has {}",
            mu.len(),
            u.len()
        )));
    }
    let best = distinct_ascending(u)
        .into_iter()
        .map(|b| {
            let shortfall: f64 = mu.iter().zip(u).map(|(p, x)| p * (b - x).max(0.0)).sum();
            b - shortfall / r
        })
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(best)
}

/// Affine pieces of `mu -> CVaR_r(u)`: one coefficient vector per distinct
/// payoff value, in ascending order of that value.
pub fn cvar_facets(u: &[f64], r: f64) -> Result<Vec<Vec<f64>>> {
    check_level(r)?;
    Ok(distinct_ascending(u)
        .into_iter()
        .map(|b| u.iter().map(|x| b - (b - x).max(0.0) / r).collect())
        .collect())
}

/// Where a facet set came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FacetProvenance {
    CvarDerived,
    UserListed,
    CliqueExpanded,
}

/// Per-action affine pieces `c_{a,l}` with `rho(mu, a) = max_l <c_{a,l}, mu>`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FacetSet {
    pub per_action: Vec<Vec<Vec<f64>>>,
    pub provenance: FacetProvenance,
}

impl FacetSet {
    /// Builds the facet set for any risk specification. Clique risks are
    /// expanded by brute force and are subject to the default vertex cap.
    pub fn from_instance(inst: &PersuasionInstance) -> Result<Self> {
        match &inst.risk {
            RiskSpec::Cvar { r } => {
                let per_action = (0..inst.n())
                    .map(|a| cvar_facets(&inst.receiver_column(a), *r))
                    .collect::<Result<_>>()?;
                Ok(FacetSet {
                    per_action,
                    provenance: FacetProvenance::CvarDerived,
                })
            }
            RiskSpec::ExplicitPolyhedral { facets } => Ok(FacetSet {
                per_action: facets.clone(),
                provenance: FacetProvenance::UserListed,
            }),
            RiskSpec::SuccinctClique { edges, k } => {
                let per_action = hardness::clique_facets(inst.m(), edges, *k, DEFAULT_CLIQUE_CAP)?;
                Ok(FacetSet {
                    per_action,
                    provenance: FacetProvenance::CliqueExpanded,
                })
            }
        }
    }

    /// Removes exact duplicate vectors within each action.
    pub fn dedup(mut self) -> Self {
        for list in &mut self.per_action {
            let mut kept: Vec<Vec<f64>> = Vec::with_capacity(list.len());
            for c in list.drain(..) {
                if !kept.contains(&c) {
                    kept.push(c);
                }
            }
            *list = kept;
        }
        self
    }

    pub fn n_actions(&self) -> usize {
        self.per_action.len()
    }

    /// Total number of pieces `L`.
    pub fn total(&self) -> usize {
        self.per_action.iter().map(Vec::len).sum()
    }

    /// Flattened `(action, facet)` labels in action-major order.
    pub fn types(&self) -> Vec<(usize, usize)> {
        self.per_action
            .iter()
            .enumerate()
            .flat_map(|(a, list)| (0..list.len()).map(move |l| (a, l)))
            .collect()
    }

    pub fn coeffs(&self, action: usize, facet: usize) -> &[f64] {
        &self.per_action[action][facet]
    }

    /// `max_l <c_{a,l}, mu>`; zero for an action without pieces.
    pub fn rho(&self, mu: &[f64], action: usize) -> f64 {
        let list = &self.per_action[action];
        if list.is_empty() {
            return 0.0;
        }
        list.iter()
            .map(|c| dot(c, mu))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest absolute coefficient over all pieces.
    pub fn sup_norm(&self) -> f64 {
        self.per_action
            .iter()
            .flatten()
            .flatten()
            .fold(0.0, |acc: f64, x| acc.max(x.abs()))
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Receiver risk value of `action` at posterior `mu`.
pub fn rho(inst: &PersuasionInstance, mu: &[f64], action: usize) -> Result<f64> {
    rho_with_cap(inst, mu, action, DEFAULT_CLIQUE_CAP)
}

/// [`rho`] with an explicit vertex cap for clique-indexed risks.
pub fn rho_with_cap(
    inst: &PersuasionInstance,
    mu: &[f64],
    action: usize,
    clique_cap: usize,
) -> Result<f64> {
    inst.check_posterior(mu)?;
    inst.check_action(action)?;
    match &inst.risk {
        RiskSpec::Cvar { r } => cvar_value(mu, &inst.receiver_column(action), *r),
        RiskSpec::ExplicitPolyhedral { facets } => Ok(facets[action]
            .iter()
            .map(|c| dot(c, mu))
            .fold(f64::NEG_INFINITY, f64::max)),
        RiskSpec::SuccinctClique { edges, k } => {
            if action == 1 {
                return Ok(1.0);
            }
            let cliques = hardness::k_cliques(inst.m(), edges, *k, clique_cap)?;
            Ok(cliques
                .iter()
                .map(|c| c.iter().map(|&v| mu[v]).sum::<f64>())
                .fold(0.0, f64::max))
        }
    }
}

/// Risk values of every action at `mu`.
pub fn rho_all(inst: &PersuasionInstance, mu: &[f64]) -> Result<Vec<f64>> {
    (0..inst.n()).map(|a| rho(inst, mu, a)).collect()
}

/// Actions whose risk value is within [`TIE_TOL`] of the best.
pub fn best_response_set(inst: &PersuasionInstance, mu: &[f64]) -> Result<Vec<usize>> {
    let values = rho_all(inst, mu)?;
    Ok(best_of(&values))
}

pub(crate) fn best_of(values: &[f64]) -> Vec<usize> {
    let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    values
        .iter()
        .enumerate()
        .filter(|&(_, &x)| x >= best - TIE_TOL)
        .map(|(a, _)| a)
        .collect()
}

/// Expected payoff minus CVaR of `action` at `mu`.
pub fn risk_premium(inst: &PersuasionInstance, mu: &[f64], action: usize) -> Result<f64> {
    let RiskSpec::Cvar { r } = inst.risk else {
        return Err(Error::UnsupportedRisk(
            "risk premium needs a CVaR receiver".into(),
        ));
    };
    inst.check_posterior(mu)?;
    inst.check_action(action)?;
    let u = inst.receiver_column(action);
    Ok(dot(&u, mu) - cvar_value(mu, &u, r)?)
}

/// Direction of the CVaR indifference shift in the 2x2 case.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ThresholdCase {
    /// The second action is chosen at high beliefs, `I(a_1) = [mu*, 1]`.
    HighBelief,
    /// The second action is chosen at low beliefs, `I(a_1) = [0, mu*]`.
    LowBelief,
    /// Equal risk premiums at the expected-utility threshold.
    Equal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub mu_eu: f64,
    pub mu_cvar: f64,
    pub case: ThresholdCase,
    /// `P_{a_1}(mu_eu) - P_{a_0}(mu_eu)`.
    pub premium_gap: f64,
}

/// Points of (0, 1) where two facet lines of the binary facet set cross.
fn facet_crossings(facets: &FacetSet) -> Vec<f64> {
    let lines: Vec<(f64, f64)> = facets
        .per_action
        .iter()
        .flatten()
        .map(|c| (c[0], c[1] - c[0]))
        .collect();
    let mut out = Vec::new();
    for (i, &(b1, s1)) in lines.iter().enumerate() {
        for &(b2, s2) in &lines[i + 1..] {
            if s1 != s2 {
                let x = (b2 - b1) / (s1 - s2);
                if x > 0.0 && x < 1.0 {
                    out.push(x);
                }
            }
        }
    }
    out
}

fn sorted_breakpoints(mut interior: Vec<f64>) -> Vec<f64> {
    interior.push(0.0);
    interior.push(1.0);
    interior.sort_by(f64::total_cmp);
    interior.dedup();
    interior
}

/// Expected-utility and CVaR indifference beliefs of a 2x2 CVaR instance.
pub fn thresholds_2x2(inst: &PersuasionInstance) -> Result<Thresholds> {
    if inst.m() != 2 || inst.n() != 2 {
        return Err(Error::Dimension(
            "threshold analysis needs 2 states and 2 actions".into(),
        ));
    }
    let RiskSpec::Cvar { .. } = inst.risk else {
        return Err(Error::UnsupportedRisk(
            "threshold analysis needs a CVaR receiver".into(),
        ));
    };
    let d0 = inst.u(0, 1) - inst.u(0, 0);
    let d1 = inst.u(1, 1) - inst.u(1, 0);
    if d0 * d1 >= 0.0 {
        return Err(Error::NoCrossing);
    }
    let mu_eu = d0 / (d0 - d1);

    let gap = |p: f64| -> Result<f64> {
        let mu = Posterior::binary(p);
        Ok(rho(inst, &mu, 1)? - rho(inst, &mu, 0)?)
    };
    let points = sorted_breakpoints(facet_crossings(&FacetSet::from_instance(inst)?));
    let values = points.iter().map(|&p| gap(p)).collect::<Result<Vec<_>>>()?;
    let mut mu_cvar = None;
    for i in 0..points.len() {
        if values[i] == 0.0 {
            mu_cvar = Some(points[i]);
            break;
        }
        if i + 1 < points.len() && values[i] * values[i + 1] < 0.0 {
            // The gap is affine between consecutive breakpoints.
            let (x0, x1, y0, y1) = (points[i], points[i + 1], values[i], values[i + 1]);
            mu_cvar = Some(x0 - y0 * (x1 - x0) / (y1 - y0));
            break;
        }
    }
    let mu_cvar = mu_cvar.ok_or(Error::NoCrossing)?;

    let at_eu = Posterior::binary(mu_eu);
    let premium_gap = risk_premium(inst, &at_eu, 1)? - risk_premium(inst, &at_eu, 0)?;
    let case = if premium_gap.abs() <= 1e-12 {
        ThresholdCase::Equal
    } else if values[values.len() - 1] >= values[0] {
        ThresholdCase::HighBelief
    } else {
        ThresholdCase::LowBelief
    };
    Ok(Thresholds {
        mu_eu,
        mu_cvar,
        case,
        premium_gap,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Concavification {
    pub value: f64,
    pub scheme: SignalingScheme,
}

/// Exact optimum of a two-state instance by concavifying the sender's
/// belief-indexed value.
///
/// Between consecutive facet crossings the receiver's best-response set is
/// constant, so the sender-favorable value is a maximum of affine functions
/// there and is dominated by its values at the crossings (best-response sets
/// are closed). The concave closure is therefore the upper hull of finitely
/// many points.
pub fn concavify_2x2(inst: &PersuasionInstance) -> Result<Concavification> {
    if inst.m() != 2 {
        return Err(Error::Dimension(
            "concavification needs a binary state space".into(),
        ));
    }
    if matches!(inst.risk, RiskSpec::SuccinctClique { .. }) {
        return Err(Error::UnsupportedRisk(
            "concavification needs CVaR or listed facets".into(),
        ));
    }
    let mu0 = inst.prior[1];
    let mut candidates = facet_crossings(&FacetSet::from_instance(inst)?);
    candidates.push(mu0);
    let points = sorted_breakpoints(candidates);
    let mut hull: Vec<(f64, f64, usize)> = Vec::with_capacity(points.len());
    for &x in &points {
        let (action, w) = oracle::sender_preferred_response(inst, &Posterior::binary(x))?;
        while hull.len() >= 2 {
            let (ox, oy, _) = hull[hull.len() - 2];
            let (ax, ay, _) = hull[hull.len() - 1];
            let cross = (ax - ox) * (w - oy) - (ay - oy) * (x - ox);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push((x, w, action));
    }

    let (pool_action, pool_value) =
        oracle::sender_preferred_response(inst, &Posterior::binary(mu0))?;
    let seg = hull
        .windows(2)
        .position(|w| w[0].0 <= mu0 && mu0 <= w[1].0)
        .unwrap_or(0);
    let (xl, yl, al) = hull[seg];
    let (xr, yr, ar) = hull[(seg + 1).min(hull.len() - 1)];
    let hull_value = if xr > xl {
        yl + (yr - yl) * (mu0 - xl) / (xr - xl)
    } else {
        yl
    };

    if hull_value <= pool_value + 1e-12 {
        return Ok(Concavification {
            value: pool_value,
            scheme: SignalingScheme::pooling(&inst.prior, pool_action),
        });
    }
    let weight_right = (mu0 - xl) / (xr - xl);
    let scheme = SignalingScheme::new(vec![
        Signal {
            probability: 1.0 - weight_right,
            posterior: Posterior::binary(xl),
            action: al,
            facet: None,
        },
        Signal {
            probability: weight_right,
            posterior: Posterior::binary(xr),
            action: ar,
            facet: None,
        },
    ]);
    Ok(Concavification {
        value: hull_value,
        scheme,
    })
}
