//! Instance and scheme data model.
//!
//! A [`PersuasionInstance`] holds the state space, action set, common prior,
//! both payoff tables and the receiver's risk specification. Payoff matrices
//! are stored row-per-state, column-per-action, which is also the JSON layout.
//!
//! Every solver in the crate emits a [`SignalingScheme`]: a finite list of
//! signals, each carrying its unconditional probability, the posterior it
//! induces and the action recommended at that posterior.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::cvar;
use crate::error::{Error, Result};

/// Tolerance for probability sums (prior, posteriors, schemes).
pub const SUM_TOL: f64 = 1e-9;
/// Tolerance for the prior sum check in instance validation.
pub const PRIOR_SUM_TOL: f64 = 1e-12;
/// Signals and joint-mass types lighter than this are dropped.
pub const MASS_CUTOFF: f64 = 1e-12;

/// Receiver risk specification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum RiskSpec {
    /// Conditional value-at-risk of the receiver payoff at level `r`.
    #[serde(rename = "cvar")]
    Cvar { r: f64 },
    /// Per-action lists of affine coefficient vectors; the risk value is the
    /// maximum of the listed pieces.
    #[serde(rename = "polyhedral")]
    ExplicitPolyhedral { facets: Vec<Vec<Vec<f64>>> },
    /// Clique-indexed risk over a graph whose vertices are the states.
    /// Actions must be ordered `(a_T, a_0)`.
    #[serde(rename = "clique")]
    SuccinctClique { edges: Vec<[usize; 2]>, k: usize },
}

/// Optional annotations carried alongside an instance.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InstanceMetadata {
    /// Sender-value threshold of a generated decision instance.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersuasionInstance {
    pub states: Vec<String>,
    pub actions: Vec<String>,
    pub prior: Vec<f64>,
    /// `receiver_payoff[state][action]`
    pub receiver_payoff: Vec<Vec<f64>>,
    /// `sender_payoff[state][action]`
    pub sender_payoff: Vec<Vec<f64>>,
    pub risk: RiskSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<InstanceMetadata>,
}

impl PersuasionInstance {
    /// Number of states.
    pub fn m(&self) -> usize {
        self.states.len()
    }

    /// Number of actions.
    pub fn n(&self) -> usize {
        self.actions.len()
    }

    pub fn u(&self, state: usize, action: usize) -> f64 {
        self.receiver_payoff[state][action]
    }

    pub fn v(&self, state: usize, action: usize) -> f64 {
        self.sender_payoff[state][action]
    }

    /// Receiver payoff column of `action` as a state-indexed vector.
    pub fn receiver_column(&self, action: usize) -> Vec<f64> {
        self.receiver_payoff.iter().map(|row| row[action]).collect()
    }

    /// Sender payoff column of `action` as a state-indexed vector.
    pub fn sender_column(&self, action: usize) -> Vec<f64> {
        self.sender_payoff.iter().map(|row| row[action]).collect()
    }

    /// Expected sender payoff of `action` under `mu`.
    pub fn sender_expectation(&self, mu: &[f64], action: usize) -> f64 {
        mu.iter()
            .zip(&self.sender_payoff)
            .map(|(p, row)| p * row[action])
            .sum()
    }

    /// Expected receiver payoff of `action` under `mu`.
    pub fn receiver_expectation(&self, mu: &[f64], action: usize) -> f64 {
        mu.iter()
            .zip(&self.receiver_payoff)
            .map(|(p, row)| p * row[action])
            .sum()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Returns `Ok(())` when [`validate_instance`] reports nothing, otherwise
    /// an error listing every violation.
    pub fn check(&self) -> Result<()> {
        let violations = validate_instance(self);
        if violations.is_empty() {
            Ok(())
        } else {
            let msg: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
            Err(Error::InvalidInstance(msg.join("; ")))
        }
    }

    pub(crate) fn check_posterior(&self, mu: &[f64]) -> Result<()> {
        if mu.len() != self.m() {
            return Err(Error::Dimension(format!(
                "posterior has {} entries, instance has {} states",
                mu.len(),
                self.m()
            )));
        }
        Ok(())
    }

    pub(crate) fn check_action(&self, action: usize) -> Result<()> {
        if action >= self.n() {
            return Err(Error::Dimension(format!(
                "action index {action} out of range for {} actions",
                self.n()
            )));
        }
        Ok(())
    }
}

/// A single instance invariant violation.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NoStates,
    NoActions,
    PriorLength {
        expected: usize,
        found: usize,
    },
    PriorSum {
        sum: f64,
    },
    PriorNotInterior {
        state: usize,
        value: f64,
    },
    PayoffShape {
        which: &'static str,
        detail: String,
    },
    NonFinite {
        which: &'static str,
    },
    RiskLevel {
        r: f64,
    },
    FacetActions {
        expected: usize,
        found: usize,
    },
    EmptyFacetList {
        action: usize,
    },
    FacetLength {
        action: usize,
        facet: usize,
        found: usize,
    },
    CliqueActions {
        found: usize,
    },
    CliqueVertex {
        edge: [usize; 2],
    },
    CliqueSize {
        k: usize,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoStates => write!(f, "instance has no states"),
            Violation::NoActions => write!(f, "instance has no actions"),
            Violation::PriorLength { expected, found } => {
                write!(f, "prior has {found} entries, expected {expected}")
            }
            Violation::PriorSum { sum } => write!(f, "prior sums to {sum}, expected 1"),
            Violation::PriorNotInterior { state, value } => {
                write!(
                    f,
                    "prior entry {state} is {value}; the prior must be strictly positive"
                )
            }
            Violation::PayoffShape { which, detail } => write!(f, "{which} payoff: {detail}"),
            Violation::NonFinite { which } => write!(f, "{which} contains a non-finite value"),
            Violation::RiskLevel { r } => write!(f, "CVaR level {r} is outside (0, 1]"),
            Violation::FacetActions { expected, found } => {
                write!(
                    f,
                    "facet lists given for {found} actions, expected {expected}"
                )
            }
            Violation::EmptyFacetList { action } => write!(f, "action {action} has no facets"),
            Violation::FacetLength {
                action,
                facet,
                found,
            } => {
                write!(f, "facet {facet} of action {action} has length {found}")
            }
            Violation::CliqueActions { found } => {
                write!(
                    f,
                    "clique risk needs exactly 2 actions (a_T, a_0), found {found}"
                )
            }
            Violation::CliqueVertex { edge } => {
                write!(
                    f,
                    "edge [{}, {}] is not a pair of distinct states",
                    edge[0], edge[1]
                )
            }
            Violation::CliqueSize { k } => write!(f, "clique size {k} is outside 1..=|V|"),
        }
    }
}

/// Checks every instance invariant and returns all violations found.
pub fn validate_instance(inst: &PersuasionInstance) -> Vec<Violation> {
    let mut out = Vec::new();
    let m = inst.m();
    let n = inst.n();
    if m == 0 {
        out.push(Violation::NoStates);
    }
    if n == 0 {
        out.push(Violation::NoActions);
    }
    if inst.prior.len() != m {
        out.push(Violation::PriorLength {
            expected: m,
            found: inst.prior.len(),
        });
    }
    if inst.prior.iter().any(|p| !p.is_finite()) {
        out.push(Violation::NonFinite { which: "prior" });
    } else {
        let sum: f64 = inst.prior.iter().sum();
        if (sum - 1.0).abs() > PRIOR_SUM_TOL {
            out.push(Violation::PriorSum { sum });
        }
        for (state, &value) in inst.prior.iter().enumerate() {
            if value <= 0.0 {
                out.push(Violation::PriorNotInterior { state, value });
            }
        }
    }
    for (which, table) in [
        ("receiver", &inst.receiver_payoff),
        ("sender", &inst.sender_payoff),
    ] {
        if table.len() != m {
            out.push(Violation::PayoffShape {
                which,
                detail: format!("{} rows, expected {m}", table.len()),
            });
        }
        if let Some((row, len)) = table
            .iter()
            .enumerate()
            .map(|(i, r)| (i, r.len()))
            .find(|&(_, len)| len != n)
        {
            out.push(Violation::PayoffShape {
                which,
                detail: format!("row {row} has {len} columns, expected {n}"),
            });
        }
        if table.iter().flatten().any(|x| !x.is_finite()) {
            out.push(Violation::NonFinite { which });
        }
    }
    match &inst.risk {
        RiskSpec::Cvar { r } => {
            if !(*r > 0.0 && *r <= 1.0) {
                out.push(Violation::RiskLevel { r: *r });
            }
        }
        RiskSpec::ExplicitPolyhedral { facets } => {
            if facets.len() != n {
                out.push(Violation::FacetActions {
                    expected: n,
                    found: facets.len(),
                });
            }
            for (action, list) in facets.iter().enumerate() {
                if list.is_empty() {
                    out.push(Violation::EmptyFacetList { action });
                }
                for (facet, c) in list.iter().enumerate() {
                    if c.len() != m {
                        out.push(Violation::FacetLength {
                            action,
                            facet,
                            found: c.len(),
                        });
                    }
                }
            }
            if facets.iter().flatten().flatten().any(|x| !x.is_finite()) {
                out.push(Violation::NonFinite { which: "facets" });
            }
        }
        RiskSpec::SuccinctClique { edges, k } => {
            if n != 2 {
                out.push(Violation::CliqueActions { found: n });
            }
            for edge in edges {
                if edge[0] >= m || edge[1] >= m || edge[0] == edge[1] {
                    out.push(Violation::CliqueVertex { edge: *edge });
                }
            }
            if *k == 0 || *k > m {
                out.push(Violation::CliqueSize { k: *k });
            }
        }
    }
    out
}

/// A posterior belief over the states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Posterior(Vec<f64>);

impl Posterior {
    /// Builds a posterior, checking nonnegativity and that the entries sum to 1.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|x| !x.is_finite() || *x < -PRIOR_SUM_TOL) {
            return Err(Error::Dimension(
                "posterior has a negative or non-finite entry".into(),
            ));
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > PRIOR_SUM_TOL {
            return Err(Error::Dimension(format!("posterior sums to {sum}")));
        }
        Ok(Posterior(values))
    }

    /// Wraps raw values without validation.
    pub fn from_vec_unchecked(values: Vec<f64>) -> Self {
        Posterior(values)
    }

    /// Point mass on `state`.
    pub fn vertex(m: usize, state: usize) -> Self {
        let mut values = vec![0.0; m];
        values[state] = 1.0;
        Posterior(values)
    }

    /// Two-state posterior `(1 - p, p)` where `p` is the probability of the
    /// second listed state.
    pub fn binary(p: f64) -> Self {
        Posterior(vec![1.0 - p, p])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// Shannon entropy in nats.
    pub fn entropy(&self) -> f64 {
        -self
            .0
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|&p| p * p.ln())
            .sum::<f64>()
    }

    /// L1 distance to another posterior.
    pub fn l1_distance(&self, other: &[f64]) -> f64 {
        self.0.iter().zip(other).map(|(a, b)| (a - b).abs()).sum()
    }
}

impl std::ops::Deref for Posterior {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Signal {
    #[serde(rename = "p")]
    pub probability: f64,
    pub posterior: Posterior,
    pub action: usize,
    #[serde(default)]
    pub facet: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SignalingScheme {
    pub signals: Vec<Signal>,
}

impl SignalingScheme {
    pub fn new(signals: Vec<Signal>) -> Self {
        SignalingScheme { signals }
    }

    /// The no-information scheme: one signal at the prior.
    pub fn pooling(prior: &[f64], action: usize) -> Self {
        SignalingScheme {
            signals: vec![Signal {
                probability: 1.0,
                posterior: Posterior::from_vec_unchecked(prior.to_vec()),
                action,
                facet: None,
            }],
        }
    }

    pub fn len(&self) -> usize {
        self.signals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signals.is_empty()
    }

    /// |sum of probabilities - 1|.
    pub fn probability_residual(&self) -> f64 {
        (self.signals.iter().map(|s| s.probability).sum::<f64>() - 1.0).abs()
    }

    /// Largest per-coordinate gap between the mean posterior and `prior`.
    pub fn bayes_residual(&self, prior: &[f64]) -> f64 {
        let mut mean = vec![0.0; prior.len()];
        for s in &self.signals {
            for (acc, p) in mean.iter_mut().zip(s.posterior.iter()) {
                *acc += s.probability * p;
            }
        }
        mean.iter()
            .zip(prior)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// True when probabilities sum to one and the scheme is Bayes plausible
    /// for `prior`, both within [`SUM_TOL`].
    pub fn is_bayes_plausible(&self, prior: &[f64]) -> bool {
        self.probability_residual() <= SUM_TOL && self.bayes_residual(prior) <= SUM_TOL
    }

    /// Re-aggregates the scheme into joint masses `q = p_s * mu_s(w)`, one
    /// type per signal. Signals without a facet tag get facet 0.
    pub fn to_joint_mass(&self) -> JointMass {
        JointMass {
            types: self
                .signals
                .iter()
                .map(|s| JointType {
                    action: s.action,
                    facet: s.facet.unwrap_or(0),
                    mass: s.posterior.iter().map(|p| s.probability * p).collect(),
                })
                .collect(),
        }
    }
}

/// Joint mass of one refined recommendation type `(action, facet)` across
/// the states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointType {
    pub action: usize,
    pub facet: usize,
    pub mass: Vec<f64>,
}

impl JointType {
    pub fn total(&self) -> f64 {
        self.mass.iter().sum()
    }
}

/// Joint distribution over states and refined recommendations.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct JointMass {
    pub types: Vec<JointType>,
}

impl JointMass {
    /// Per-state marginal of the joint mass.
    pub fn state_marginal(&self, m: usize) -> Vec<f64> {
        let mut out = vec![0.0; m];
        for t in &self.types {
            for (acc, q) in out.iter_mut().zip(&t.mass) {
                *acc += q;
            }
        }
        out
    }
}

/// Turns joint masses into a scheme: one signal per type with positive mass.
pub fn scheme_from_joint_mass(inst: &PersuasionInstance, q: &JointMass) -> Result<SignalingScheme> {
    let m = inst.m();
    let mut total = 0.0;
    for t in &q.types {
        if t.mass.len() != m {
            return Err(Error::Dimension(format!(
                "joint type ({}, {}) has {} state entries, expected {m}",
                t.action,
                t.facet,
                t.mass.len()
            )));
        }
        inst.check_action(t.action)?;
        total += t.total();
    }
    if (total - 1.0).abs() > SUM_TOL {
        return Err(Error::MassMismatch { total });
    }
    let signals = q
        .types
        .iter()
        .filter_map(|t| {
            let lambda = t.total();
            (lambda > MASS_CUTOFF).then(|| Signal {
                probability: lambda,
                posterior: Posterior::from_vec_unchecked(
                    t.mass.iter().map(|x| x / lambda).collect(),
                ),
                action: t.action,
                facet: Some(t.facet),
            })
        })
        .collect();
    Ok(SignalingScheme { signals })
}

/// Sender value of a scheme evaluated at its own recommendations.
pub fn sender_value(inst: &PersuasionInstance, scheme: &SignalingScheme) -> Result<f64> {
    let mut value = 0.0;
    for s in &scheme.signals {
        inst.check_posterior(&s.posterior)?;
        inst.check_action(s.action)?;
        value += s.probability * inst.sender_expectation(&s.posterior, s.action);
    }
    Ok(value)
}

fn risk_values(inst: &PersuasionInstance, mu: &[f64]) -> Result<Vec<f64>> {
    (0..inst.n()).map(|a| cvar::rho(inst, mu, a)).collect()
}

/// `max_a' rho(mu, a') - rho(mu, a)`; zero exactly when `a` is a weak best
/// response.
pub fn ic_regret(inst: &PersuasionInstance, mu: &[f64], action: usize) -> Result<f64> {
    inst.check_posterior(mu)?;
    inst.check_action(action)?;
    let values = risk_values(inst, mu)?;
    let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(best - values[action])
}

/// `rho(mu, a) - max_{a' != a} rho(mu, a')`.
pub fn ic_margin(inst: &PersuasionInstance, mu: &[f64], action: usize) -> Result<f64> {
    if inst.n() < 2 {
        return Err(Error::MarginUndefined);
    }
    inst.check_posterior(mu)?;
    inst.check_action(action)?;
    let values = risk_values(inst, mu)?;
    Ok(margin_from_values(&values, action))
}

pub(crate) fn margin_from_values(values: &[f64], action: usize) -> f64 {
    let competitor = values
        .iter()
        .enumerate()
        .filter(|&(a, _)| a != action)
        .map(|(_, &x)| x)
        .fold(f64::NEG_INFINITY, f64::max);
    values[action] - competitor
}

/// Expected posterior entropy `sum_s P(s) H(mu_s)` in nats.
pub fn scheme_entropy(scheme: &SignalingScheme) -> f64 {
    scheme
        .signals
        .iter()
        .map(|s| s.probability * s.posterior.entropy())
        .sum()
}
