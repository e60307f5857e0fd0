//! Local refinement: only the affine pieces that can be active near a set
//! of probe posteriors enter the cells, and only grid centers near a probe
//! are used.

use serde::{Deserialize, Serialize};

use super::{
    build_alphabet, check_soundness, enumerate_grid_capped, solve_alphabet, solve_discretized,
    ContingentSolver, DiscretizeParams, DiscretizedSolution, StatisticFamily, DEFAULT_GRID_CAP,
};
use crate::cvar::{dot, FacetSet, TIE_TOL};
use crate::error::{Error, Result};
use crate::model::{PersuasionInstance, Posterior};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalFamily {
    /// `(action, facet)` labels into the deduplicated facet set.
    pub family: Vec<(usize, usize)>,
    pub n_loc: usize,
    pub c_loc: f64,
    pub v_loc: f64,
}

/// Probe plus the points `probe + t (e_i - e_j)` with `t = min(eta/2,
/// probe_j)`, which stay on the simplex within L1 distance `eta`.
fn neighborhood(probe: &[f64], eta: f64) -> Vec<Vec<f64>> {
    let m = probe.len();
    let mut out = vec![probe.to_vec()];
    for i in 0..m {
        for j in 0..m {
            if i == j {
                continue;
            }
            let t = (eta / 2.0).min(probe[j]);
            if t > 0.0 {
                let mut nu = probe.to_vec();
                nu[i] += t;
                nu[j] -= t;
                out.push(nu);
            }
        }
    }
    out
}

fn variance(c: &[f64], mu: &[f64]) -> f64 {
    let mean = dot(c, mu);
    mu.iter()
        .zip(c)
        .map(|(p, x)| p * (x - mean) * (x - mean))
        .sum()
}

/// Pieces active (within [`TIE_TOL`]) at some probe or perturbed probe.
pub fn local_facets(
    inst: &PersuasionInstance,
    probes: &[Posterior],
    eta: f64,
) -> Result<LocalFamily> {
    if probes.is_empty() {
        return Err(Error::EmptyProbes);
    }
    for p in probes {
        inst.check_posterior(p)?;
    }
    let facets = FacetSet::from_instance(inst)?.dedup();
    local_family(&facets, probes, eta)
}

fn local_family(facets: &FacetSet, probes: &[Posterior], eta: f64) -> Result<LocalFamily> {
    let mut family: Vec<(usize, usize)> = Vec::new();
    for probe in probes {
        for nu in neighborhood(probe, eta) {
            for (a, list) in facets.per_action.iter().enumerate() {
                let values: Vec<f64> = list.iter().map(|c| dot(c, &nu)).collect();
                let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                for (l, &v) in values.iter().enumerate() {
                    if v >= best - TIE_TOL && !family.contains(&(a, l)) {
                        family.push((a, l));
                    }
                }
            }
        }
    }
    family.sort_unstable();
    let c_loc = family
        .iter()
        .flat_map(|&(a, l)| facets.coeffs(a, l).iter())
        .fold(0.0, |acc: f64, x| acc.max(x.abs()));
    let v_loc = probes
        .iter()
        .flat_map(|p| {
            family
                .iter()
                .map(move |&(a, l)| variance(facets.coeffs(a, l), p))
        })
        .fold(0.0, f64::max);
    Ok(LocalFamily {
        n_loc: family.len(),
        family,
        c_loc,
        v_loc,
    })
}

/// `ceil(((2 V + (2/3) C eps) / eps^2) ln(2 N / delta))`, at least 1.
pub fn local_k_bound(v_loc: f64, c_loc: f64, n_loc: usize, eps: f64, delta: f64) -> usize {
    let k =
        ((2.0 * v_loc + 2.0 / 3.0 * c_loc * eps) / (eps * eps)) * (2.0 * n_loc as f64 / delta).ln();
    if k.is_finite() {
        (k.ceil() as usize).max(1)
    } else {
        usize::MAX
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalSolution {
    pub solution: DiscretizedSolution,
    pub family: LocalFamily,
    /// Total number of deduplicated pieces.
    pub total_facets: usize,
    /// Every posterior is within `eta` of a probe and every regret is at
    /// most `eps`.
    pub certified: bool,
    /// The global pipeline produced `solution`.
    pub fell_back: bool,
    pub warning: Option<String>,
}

fn near_probes(mu: &[f64], probes: &[Posterior], eta: f64) -> bool {
    probes.iter().any(|p| p.l1_distance(mu) <= eta + 1e-9)
}

/// Discretized solve with the local family as statistics and the grid cut
/// down to centers within `eta` of a probe. Falls back to the global
/// pipeline at the same `k` when the result cannot be certified.
pub fn solve_discretized_local(
    inst: &PersuasionInstance,
    probes: &[Posterior],
    eta: f64,
    eps: f64,
    delta: f64,
    k_override: Option<usize>,
) -> Result<LocalSolution> {
    inst.check()?;
    if eps.is_nan() || eps <= 0.0 || delta.is_nan() || delta <= 0.0 || delta >= 1.0 {
        return Err(Error::InvalidInstance(format!(
            "need eps > 0 and delta in (0, 1), got eps = {eps}, delta = {delta}"
        )));
    }
    let family = local_facets(inst, probes, eta)?;
    let facets = FacetSet::from_instance(inst)?.dedup();
    let total_facets = facets.total();
    let eps_r = eps / 4.0;
    let k = k_override
        .unwrap_or_else(|| local_k_bound(family.v_loc, family.c_loc, family.n_loc, eps_r, delta));
    let stats = StatisticFamily::from_vectors(
        family
            .family
            .iter()
            .map(|&(a, l)| facets.coeffs(a, l).to_vec()),
    );

    let attempt = || -> Result<DiscretizedSolution> {
        let grid: Vec<Posterior> = enumerate_grid_capped(inst.m(), k, DEFAULT_GRID_CAP)?
            .into_iter()
            .filter(|mu| near_probes(mu, probes, eta))
            .collect();
        let alphabet = build_alphabet(&facets, &grid, eps_r, None)?;
        solve_alphabet(
            inst,
            &alphabet,
            &stats,
            eps_r,
            k,
            grid.len(),
            ContingentSolver::default(),
        )
    };
    let failure = match attempt() {
        Ok(sol) => {
            let outside = sol
                .scheme
                .signals
                .iter()
                .any(|s| !near_probes(&s.posterior, probes, eta));
            if !outside && sol.max_regret <= eps {
                return Ok(LocalSolution {
                    solution: sol,
                    family,
                    total_facets,
                    certified: true,
                    fell_back: false,
                    warning: None,
                });
            }
            if outside {
                "an induced posterior lies outside the probe neighborhood".to_string()
            } else {
                format!("regret {:e} exceeds eps = {eps:e}", sol.max_regret)
            }
        }
        Err(e @ (Error::EmptyAlphabet | Error::Lp(_))) => e.to_string(),
        Err(e) => return Err(e),
    };
    let params = DiscretizeParams {
        k_override: Some(k),
        ..DiscretizeParams::new(eps)
    };
    let sol = solve_discretized(inst, &params)?;
    check_soundness(&sol, None)?;
    Ok(LocalSolution {
        solution: sol,
        family,
        total_facets,
        certified: false,
        fell_back: true,
        warning: Some(format!(
            "local certificate failed ({failure}); used the global pipeline"
        )),
    })
}
