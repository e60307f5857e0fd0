//! Exact solvers: the active-facet LP for max-affine receivers and the
//! classical direct-recommendation LP for an expected-utility receiver.

use serde::{Deserialize, Serialize};

use crate::cvar::{self, FacetSet};
use crate::error::{Error, Result};
use crate::lp::{solve_lp, LpProblem};
use crate::model::{
    ic_regret, scheme_from_joint_mass, JointMass, JointType, PersuasionInstance, RiskSpec,
    SignalingScheme,
};
use crate::oracle::sender_preferred_response;

/// Post-hoc regret tolerance for schemes read off an LP optimum.
pub const IC_VERIFY_TOL: f64 = 1e-7;

/// The active-facet LP together with its variable layout: the joint mass of
/// type `t` in state `w` is variable `t * m + w`, and `types[t]` is the
/// `(action, facet)` label of type `t`.
#[derive(Debug, Clone)]
pub struct ActiveFacetLp {
    pub lp: LpProblem,
    pub facets: FacetSet,
    pub types: Vec<(usize, usize)>,
    pub m: usize,
}

impl ActiveFacetLp {
    pub fn var(&self, t: usize, state: usize) -> usize {
        t * self.m + state
    }
}

pub fn build_active_facet_lp(inst: &PersuasionInstance) -> Result<ActiveFacetLp> {
    inst.check()?;
    if matches!(inst.risk, RiskSpec::SuccinctClique { .. }) {
        return Err(Error::UnsupportedRisk(
            "clique-indexed risks must be expanded to explicit facets first".into(),
        ));
    }
    let facets = FacetSet::from_instance(inst)?.dedup();
    let types = facets.types();
    let m = inst.m();
    let mut lp = LpProblem::new(m * types.len());
    for (t, &(a, _)) in types.iter().enumerate() {
        for w in 0..m {
            lp.objective[t * m + w] = inst.v(w, a);
        }
    }
    for w in 0..m {
        lp.add_eq(
            (0..types.len()).map(|t| (t * m + w, 1.0)).collect(),
            inst.prior[w],
        );
    }
    for (t, &(a, l)) in types.iter().enumerate() {
        let own = facets.coeffs(a, l);
        for (s, &(b, k)) in types.iter().enumerate() {
            if s == t {
                continue;
            }
            let other = facets.coeffs(b, k);
            let terms = (0..m)
                .filter(|&w| own[w] != other[w])
                .map(|w| (t * m + w, own[w] - other[w]))
                .collect();
            lp.add_ge(terms, 0.0);
        }
    }
    Ok(ActiveFacetLp {
        lp,
        facets,
        types,
        m,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactSolution {
    pub value: f64,
    pub scheme: SignalingScheme,
    pub joint: JointMass,
}

/// Solves the active-facet LP, reads off one signal per refined type and
/// checks every signal against the full risk functional.
pub fn solve_exact(inst: &PersuasionInstance) -> Result<ExactSolution> {
    let built = build_active_facet_lp(inst)?;
    let sol = solve_lp(&built.lp)?.into_optimal()?;
    let joint = JointMass {
        types: built
            .types
            .iter()
            .enumerate()
            .map(|(t, &(action, facet))| JointType {
                action,
                facet,
                mass: (0..built.m).map(|w| sol.x[built.var(t, w)]).collect(),
            })
            .collect(),
    };
    let scheme = scheme_from_joint_mass(inst, &joint)?;
    verify_ic(inst, &scheme, IC_VERIFY_TOL)?;
    Ok(ExactSolution {
        value: sol.objective,
        scheme,
        joint,
    })
}

pub(crate) fn verify_ic(
    inst: &PersuasionInstance,
    scheme: &SignalingScheme,
    tol: f64,
) -> Result<()> {
    for s in &scheme.signals {
        let regret = ic_regret(inst, &s.posterior, s.action)?;
        if regret > tol {
            return Err(Error::Verification(format!(
                "signal with probability {:e} recommending action {} has regret {regret:e} > {tol:e}",
                s.probability, s.action
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskNeutralSolution {
    pub value: f64,
    pub scheme: SignalingScheme,
}

/// Optimal persuasion of a receiver who maximizes expected payoff; the risk
/// specification is ignored.
pub fn risk_neutral_solve(inst: &PersuasionInstance) -> Result<RiskNeutralSolution> {
    inst.check()?;
    let (m, n) = (inst.m(), inst.n());
    let mut lp = LpProblem::new(m * n);
    for a in 0..n {
        for w in 0..m {
            lp.objective[a * m + w] = inst.v(w, a);
        }
    }
    for w in 0..m {
        lp.add_eq((0..n).map(|a| (a * m + w, 1.0)).collect(), inst.prior[w]);
    }
    for a in 0..n {
        for b in (0..n).filter(|&b| b != a) {
            let terms = (0..m)
                .filter(|&w| inst.u(w, a) != inst.u(w, b))
                .map(|w| (a * m + w, inst.u(w, a) - inst.u(w, b)))
                .collect();
            lp.add_ge(terms, 0.0);
        }
    }
    let sol = solve_lp(&lp)?.into_optimal()?;
    let joint = JointMass {
        types: (0..n)
            .map(|a| JointType {
                action: a,
                facet: 0,
                mass: (0..m).map(|w| sol.x[a * m + w]).collect(),
            })
            .collect(),
    };
    let mut scheme = scheme_from_joint_mass(inst, &joint)?;
    for s in &mut scheme.signals {
        s.facet = None;
    }
    Ok(RiskNeutralSolution {
        value: sol.objective,
        scheme,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalEvaluation {
    pub probability: f64,
    pub recommended: usize,
    /// Sender-favorable best response of the instance's receiver.
    pub response: usize,
    /// Regret of the recommended action under the instance's receiver.
    pub regret: f64,
    pub sender_payoff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvarEvaluation {
    pub value: f64,
    pub max_regret: f64,
    pub per_signal: Vec<SignalEvaluation>,
}

/// Sender value of `scheme` when the receiver of `inst` picks its own best
/// response at every posterior instead of following the recommendation.
pub fn evaluate_under_cvar(
    inst: &PersuasionInstance,
    scheme: &SignalingScheme,
) -> Result<CvarEvaluation> {
    let mut per_signal = Vec::with_capacity(scheme.len());
    let mut value = 0.0;
    let mut max_regret: f64 = 0.0;
    for s in &scheme.signals {
        let (response, payoff) = sender_preferred_response(inst, &s.posterior)?;
        let regret = ic_regret(inst, &s.posterior, s.action)?;
        max_regret = max_regret.max(regret);
        value += s.probability * payoff;
        per_signal.push(SignalEvaluation {
            probability: s.probability,
            recommended: s.action,
            response,
            regret,
            sender_payoff: payoff,
        });
    }
    Ok(CvarEvaluation {
        value,
        max_regret,
        per_signal,
    })
}

/// Largest sender payoff available state by state.
pub fn full_information_bound(inst: &PersuasionInstance) -> f64 {
    (0..inst.m())
        .map(|w| {
            inst.prior[w]
                * (0..inst.n())
                    .map(|a| inst.v(w, a))
                    .fold(f64::NEG_INFINITY, f64::max)
        })
        .sum()
}

/// Merges the signals of `scheme` that share a key into one signal at the
/// probability-weighted mean posterior. The first signal of each group
/// supplies the action and facet tag.
pub fn merge_signals<K: PartialEq>(
    scheme: &SignalingScheme,
    key: impl Fn(&crate::model::Signal) -> K,
) -> SignalingScheme {
    let mut groups: Vec<(K, crate::model::Signal, Vec<f64>)> = Vec::new();
    for s in &scheme.signals {
        let k = key(s);
        let mass: Vec<f64> = s.posterior.iter().map(|p| s.probability * p).collect();
        match groups.iter_mut().find(|g| g.0 == k) {
            Some(g) => {
                g.1.probability += s.probability;
                for (acc, q) in g.2.iter_mut().zip(&mass) {
                    *acc += q;
                }
            }
            None => groups.push((k, s.clone(), mass)),
        }
    }
    let signals = groups
        .into_iter()
        .map(|(_, mut s, mass)| {
            s.posterior = crate::model::Posterior::from_vec_unchecked(
                mass.iter().map(|q| q / s.probability).collect(),
            );
            s
        })
        .collect();
    SignalingScheme::new(signals)
}

/// Merges all signals recommending the same action.
pub fn merge_by_action(scheme: &SignalingScheme) -> SignalingScheme {
    let mut merged = merge_signals(scheme, |s| s.action);
    for s in &mut merged.signals {
        s.facet = None;
    }
    merged
}

/// Relabels every signal by its sender-relevant active facet at its own
/// posterior and merges equal `(action, facet)` labels.
pub fn merge_by_active_facet(
    inst: &PersuasionInstance,
    scheme: &SignalingScheme,
) -> Result<SignalingScheme> {
    let facets = FacetSet::from_instance(inst)?.dedup();
    let mut relabeled = scheme.clone();
    for s in &mut relabeled.signals {
        let list = &facets.per_action[s.action];
        let best = (0..list.len())
            .max_by(|&x, &y| {
                cvar::dot(&list[x], &s.posterior).total_cmp(&cvar::dot(&list[y], &s.posterior))
            })
            .ok_or_else(|| Error::InvalidInstance("action without facets".into()))?;
        s.facet = Some(best);
    }
    Ok(merge_signals(&relabeled, |s| (s.action, s.facet)))
}
