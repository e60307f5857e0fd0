//! Posterior discretization: statistic cells around k-uniform centers,
//! the approximate-center alphabet and the state-contingent LP.
//!
//! A signal `sigma` carries a grid center and an action. The LP chooses
//! `phi(w, sigma)`, the probability of sending `sigma` in state `w`, subject
//! to every statistic of the induced posterior staying within `eps_r` of its
//! value at the center. Because the statistics are the affine pieces of the
//! risk, each action's risk value at the posterior is then within `eps_r` of
//! its value at the center.

mod colgen;
mod grid;
mod local;

pub use grid::{choose_k, enumerate_grid, enumerate_grid_capped, grid_size, DEFAULT_GRID_CAP};
pub use local::{local_facets, local_k_bound, solve_discretized_local, LocalFamily, LocalSolution};

use serde::{Deserialize, Serialize};

use crate::cvar::{dot, FacetSet};
use crate::error::{Error, Result};
use crate::lp::{solve_lp, LpProblem, LpStatus};
use crate::model::{
    ic_margin, ic_regret, margin_from_values, PersuasionInstance, Posterior, Signal,
    SignalingScheme, MASS_CUTOFF,
};

/// Linear statistics `g_j` whose values define the cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatisticFamily {
    pub vectors: Vec<Vec<f64>>,
    /// Lipschitz constant of the risk in the statistics.
    pub lipschitz: f64,
}

impl StatisticFamily {
    /// The distinct affine pieces of all actions, with Lipschitz constant 1.
    pub fn from_facets(facets: &FacetSet) -> Self {
        Self::from_vectors(facets.per_action.iter().flatten().cloned())
    }

    pub(crate) fn from_vectors(vectors: impl IntoIterator<Item = Vec<f64>>) -> Self {
        let mut out: Vec<Vec<f64>> = Vec::new();
        for g in vectors {
            if !out.contains(&g) {
                out.push(g);
            }
        }
        StatisticFamily {
            vectors: out,
            lipschitz: 1.0,
        }
    }

    pub fn d(&self) -> usize {
        self.vectors.len()
    }

    /// `max_j ||g_j||_inf`.
    pub fn c_g(&self) -> f64 {
        self.vectors
            .iter()
            .flatten()
            .fold(0.0, |acc: f64, x| acc.max(x.abs()))
    }

    pub fn b_rho(&self) -> f64 {
        self.c_g() * self.lipschitz
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphabetEntry {
    pub center: Posterior,
    pub action: usize,
}

/// Admissible `(center, action)` signal labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridAlphabet {
    pub entries: Vec<AlphabetEntry>,
    pub eps_r: f64,
    pub gamma: Option<f64>,
}

impl GridAlphabet {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Keeps `(center, a)` when `a` is within `2 eps_r` of the best risk value
/// at the center and, if `gamma` is set, its IC margin there is at least
/// `gamma / 2`.
pub fn build_alphabet(
    facets: &FacetSet,
    grid: &[Posterior],
    eps_r: f64,
    gamma: Option<f64>,
) -> Result<GridAlphabet> {
    let n = facets.n_actions();
    if gamma.is_some() && n < 2 {
        return Err(Error::MarginUndefined);
    }
    let mut entries = Vec::new();
    for center in grid {
        let values: Vec<f64> = (0..n).map(|a| facets.rho(center, a)).collect();
        let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for a in 0..n {
            if values[a] < best - 2.0 * eps_r {
                continue;
            }
            if let Some(g) = gamma {
                if margin_from_values(&values, a) < g / 2.0 {
                    continue;
                }
            }
            entries.push(AlphabetEntry {
                center: center.clone(),
                action: a,
            });
        }
    }
    if entries.is_empty() {
        return Err(Error::EmptyAlphabet);
    }
    Ok(GridAlphabet {
        entries,
        eps_r,
        gamma,
    })
}

/// The state-contingent LP; `phi(w, sigma)` is variable `sigma * m + w`.
pub fn build_state_contingent_lp(
    inst: &PersuasionInstance,
    alphabet: &GridAlphabet,
    stats: &StatisticFamily,
    eps_r: f64,
) -> Result<LpProblem> {
    if alphabet.is_empty() {
        return Err(Error::EmptyAlphabet);
    }
    let m = inst.m();
    let vars = m as u128 * alphabet.len() as u128;
    if vars > DEFAULT_GRID_CAP {
        return Err(Error::SizeGuard {
            what: "state-contingent LP",
            size: vars,
            cap: DEFAULT_GRID_CAP,
        });
    }
    let slack = eps_r / stats.lipschitz;
    let mut lp = LpProblem::new(m * alphabet.len());
    for (s, e) in alphabet.entries.iter().enumerate() {
        for w in 0..m {
            lp.objective[s * m + w] = inst.prior[w] * inst.v(w, e.action);
        }
    }
    for w in 0..m {
        lp.add_eq((0..alphabet.len()).map(|s| (s * m + w, 1.0)).collect(), 1.0);
    }
    for (s, e) in alphabet.entries.iter().enumerate() {
        for g in &stats.vectors {
            let at_center = dot(g, &e.center);
            let lower = (0..m)
                .filter(|&w| inst.prior[w] != 0.0)
                .map(|w| (s * m + w, inst.prior[w] * (g[w] - at_center + slack)))
                .filter(|&(_, c)| c != 0.0)
                .collect();
            let upper = (0..m)
                .filter(|&w| inst.prior[w] != 0.0)
                .map(|w| (s * m + w, inst.prior[w] * (at_center - g[w] + slack)))
                .filter(|&(_, c)| c != 0.0)
                .collect();
            lp.add_ge(lower, 0.0);
            lp.add_ge(upper, 0.0);
        }
    }
    Ok(lp)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscretizeParams {
    pub eps: f64,
    pub k_override: Option<usize>,
    /// Margin threshold; enables strict-IC filtering.
    pub gamma: Option<f64>,
    /// Overrides `eps / 4` (or `gamma / 8` in margin mode).
    pub eps_r_override: Option<f64>,
    pub grid_cap: u128,
    pub solver: ContingentSolver,
}

/// How the state-contingent LP is solved. Both give the same optimum.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum ContingentSolver {
    /// The full LP in one simplex run.
    Direct,
    /// Column generation over cell posteriors with one master row per state.
    #[default]
    ColumnGeneration,
}

impl DiscretizeParams {
    pub fn new(eps: f64) -> Self {
        DiscretizeParams {
            eps,
            k_override: None,
            gamma: None,
            eps_r_override: None,
            grid_cap: DEFAULT_GRID_CAP,
            solver: ContingentSolver::default(),
        }
    }

    pub fn with_k(mut self, k: usize) -> Self {
        self.k_override = Some(k);
        self
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = Some(gamma);
        self
    }

    pub fn eps_r(&self) -> f64 {
        self.eps_r_override.unwrap_or(match self.gamma {
            Some(g) => g / 8.0,
            None => self.eps / 4.0,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscretizedSolution {
    pub value: f64,
    pub scheme: SignalingScheme,
    /// Grid center of each signal, aligned with `scheme.signals`.
    pub centers: Vec<Posterior>,
    pub max_regret: f64,
    /// Smallest IC margin over the signals; `None` for one action.
    pub min_margin: Option<f64>,
    pub k: usize,
    pub eps_r: f64,
    pub grid_size: usize,
    pub alphabet_size: usize,
}

/// Runs the full pipeline: grid, alphabet, LP, extraction and the regret
/// (and margin) checks against the full risk functional.
pub fn solve_discretized(
    inst: &PersuasionInstance,
    params: &DiscretizeParams,
) -> Result<DiscretizedSolution> {
    inst.check()?;
    if params.eps.is_nan() || params.eps <= 0.0 {
        return Err(Error::InvalidInstance(format!(
            "eps must be positive, got {}",
            params.eps
        )));
    }
    if let Some(g) = params.gamma {
        if g.is_nan() || g <= 0.0 {
            return Err(Error::InvalidInstance(format!(
                "gamma must be positive, got {g}"
            )));
        }
    }
    let facets = FacetSet::from_instance(inst)?.dedup();
    let stats = StatisticFamily::from_facets(&facets);
    let eps_r = params.eps_r();
    let k = params
        .k_override
        .unwrap_or_else(|| choose_k(stats.b_rho(), stats.d(), eps_r));
    let grid = enumerate_grid_capped(inst.m(), k, params.grid_cap)?;
    let alphabet = build_alphabet(&facets, &grid, eps_r, params.gamma)?;
    let sol = solve_alphabet(inst, &alphabet, &stats, eps_r, k, grid.len(), params.solver)?;
    check_soundness(&sol, params.gamma)?;
    Ok(sol)
}

pub(crate) fn check_soundness(sol: &DiscretizedSolution, gamma: Option<f64>) -> Result<()> {
    let bound = 4.0 * sol.eps_r + 1e-7;
    if sol.max_regret > bound {
        return Err(Error::Verification(format!(
            "discretized scheme has regret {:e} above {bound:e}",
            sol.max_regret
        )));
    }
    if let Some(g) = gamma {
        let floor = g / 2.0 - 2.0 * sol.eps_r - 1e-7;
        let got = sol.min_margin.unwrap_or(f64::NEG_INFINITY);
        if got < floor || got <= 0.0 {
            return Err(Error::Verification(format!(
                "margin-filtered scheme has IC margin {got:e}, expected at least {floor:e} and positive"
            )));
        }
    }
    Ok(())
}

pub(crate) fn solve_alphabet(
    inst: &PersuasionInstance,
    alphabet: &GridAlphabet,
    stats: &StatisticFamily,
    eps_r: f64,
    k: usize,
    grid_size: usize,
    solver: ContingentSolver,
) -> Result<DiscretizedSolution> {
    let m = inst.m();
    let infeasible = |status: String| {
        Error::Lp(format!(
            "state-contingent LP ended with status {status} (k = {k}, eps_r = {eps_r}, \
             {grid_size} grid points, {} signals, {} statistics)",
            alphabet.len(),
            stats.d()
        ))
    };
    let (value, masses) = match solver {
        ContingentSolver::Direct => {
            let lp = build_state_contingent_lp(inst, alphabet, stats, eps_r)?;
            let sol = solve_lp(&lp)?;
            if sol.status != LpStatus::Optimal {
                return Err(infeasible(format!("{:?}", sol.status)));
            }
            let masses: Vec<(usize, Vec<f64>)> = (0..alphabet.len())
                .map(|s| {
                    (
                        s,
                        (0..m).map(|w| inst.prior[w] * sol.x[s * m + w]).collect(),
                    )
                })
                .collect();
            (sol.objective, masses)
        }
        ContingentSolver::ColumnGeneration => match colgen::solve(inst, alphabet, stats, eps_r)? {
            Some(r) => (r.value, r.masses),
            None => return Err(infeasible("Infeasible".into())),
        },
    };
    let mut signals = Vec::new();
    let mut centers = Vec::new();
    for (s, mass) in masses {
        let lambda: f64 = mass.iter().sum();
        if lambda > MASS_CUTOFF {
            signals.push(Signal {
                probability: lambda,
                posterior: Posterior::from_vec_unchecked(mass.iter().map(|q| q / lambda).collect()),
                action: alphabet.entries[s].action,
                facet: None,
            });
            centers.push(alphabet.entries[s].center.clone());
        }
    }
    let scheme = SignalingScheme::new(signals);
    let mut max_regret: f64 = 0.0;
    let mut min_margin: Option<f64> = None;
    for s in &scheme.signals {
        max_regret = max_regret.max(ic_regret(inst, &s.posterior, s.action)?);
        if inst.n() >= 2 {
            let g = ic_margin(inst, &s.posterior, s.action)?;
            min_margin = Some(min_margin.map_or(g, |x: f64| x.min(g)));
        }
    }
    Ok(DiscretizedSolution {
        value,
        scheme,
        centers,
        max_regret,
        min_margin,
        k,
        eps_r,
        grid_size,
        alphabet_size: alphabet.len(),
    })
}
