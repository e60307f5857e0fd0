//! Column generation for the state-contingent LP.
//!
//! The signals of the state-contingent LP are coupled only through the
//! per-state rows `sum_sigma phi(w, sigma) = 1`. For a fixed signal the
//! feasible `phi(., sigma)` form a cone whose rays are, after scaling by the
//! prior, the posteriors of the signal's cell
//! `{mu : |<g_j, mu - center>| <= eps_r / L}`. The LP is therefore equivalent
//! to choosing masses `theta_c` on cell posteriors `mu_c` subject to
//! `sum_c theta_c mu_c = prior`. The master problem has one row per state in
//! the prior's support; new posteriors are priced by a small LP over a single
//! cell.

use super::{GridAlphabet, StatisticFamily};
use crate::cvar::dot;
use crate::error::{Error, Result};
use crate::lp::{solve_lp, solve_lp_with, LpProblem, LpStatus, RowActivation, SolveOptions};
use crate::model::PersuasionInstance;

/// Reduced costs above this price a column in.
const PRICE_TOL: f64 = 1e-10;
const MAX_ROUNDS: usize = 1000;

pub(super) struct Restricted {
    pub value: f64,
    /// `(alphabet index, joint mass over all states)` per used signal.
    pub masses: Vec<(usize, Vec<f64>)>,
}

struct Column {
    entry: usize,
    mu: Vec<f64>,
}

struct Cells<'a> {
    inst: &'a PersuasionInstance,
    alphabet: &'a GridAlphabet,
    stats: &'a StatisticFamily,
    slack: f64,
    support: Vec<usize>,
    /// Cells found empty on the prior's support.
    dead: Vec<bool>,
}

impl Cells<'_> {
    fn center_usable(&self, entry: usize) -> bool {
        let c = &self.alphabet.entries[entry].center;
        (0..c.len()).all(|w| c[w] == 0.0 || self.inst.prior[w] > 0.0)
    }

    /// Maximizes `<weights, mu>` over the cell of `entry`; `None` when the
    /// cell has no posterior on the prior's support.
    fn price(&mut self, entry: usize, weights: &[f64]) -> Result<Option<(f64, Vec<f64>)>> {
        let center = &self.alphabet.entries[entry].center;
        let s = self.support.len();
        let mut lp = LpProblem::new(s);
        lp.objective = self.support.iter().map(|&w| weights[w]).collect();
        lp.add_eq((0..s).map(|i| (i, 1.0)).collect(), 1.0);
        for g in &self.stats.vectors {
            let at = dot(g, center);
            let terms: Vec<(usize, f64)> = self
                .support
                .iter()
                .enumerate()
                .filter(|&(_, &w)| g[w] != 0.0)
                .map(|(i, &w)| (i, g[w]))
                .collect();
            let neg = terms.iter().map(|&(i, c)| (i, -c)).collect();
            lp.add_ge(terms, at - self.slack);
            lp.add_ge(neg, -(at + self.slack));
        }
        let sol = solve_lp(&lp)?;
        match sol.status {
            LpStatus::Optimal => {
                let mut mu = vec![0.0; self.inst.m()];
                let mut total = 0.0;
                for (i, &w) in self.support.iter().enumerate() {
                    mu[w] = sol.x[i].max(0.0);
                    total += mu[w];
                }
                for x in &mut mu {
                    *x /= total;
                }
                Ok(Some((dot(weights, &mu), mu)))
            }
            LpStatus::Infeasible => {
                self.dead[entry] = true;
                Ok(None)
            }
            other => Err(Error::Lp(format!(
                "cell pricing problem ended with status {other:?}"
            ))),
        }
    }
}

fn master(
    inst: &PersuasionInstance,
    support: &[usize],
    columns: &[Column],
    actions: &[usize],
    phase_one: bool,
) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    let s = support.len();
    let extra = if phase_one { s } else { 0 };
    let mut lp = LpProblem::new(columns.len() + extra);
    if !phase_one {
        for (c, col) in columns.iter().enumerate() {
            lp.objective[c] = inst.sender_expectation(&col.mu, actions[col.entry]);
        }
    }
    for (i, &w) in support.iter().enumerate() {
        let mut terms: Vec<(usize, f64)> = columns
            .iter()
            .enumerate()
            .filter(|(_, col)| col.mu[w] != 0.0)
            .map(|(c, col)| (c, col.mu[w]))
            .collect();
        if phase_one {
            terms.push((columns.len() + i, 1.0));
            lp.objective[columns.len() + i] = -1.0;
        }
        lp.add_eq(terms, inst.prior[w]);
    }
    let opts = SolveOptions {
        activation: RowActivation::Eager,
        duals: true,
        ..Default::default()
    };
    let sol = solve_lp_with(&lp, opts)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::Lp(format!(
            "column-generation master ended with status {:?}",
            sol.status
        )));
    }
    let mut y = vec![0.0; inst.m()];
    for (i, &w) in support.iter().enumerate() {
        y[w] = sol.eq_duals[i];
    }
    Ok((sol.objective, sol.x, y))
}

/// Solves the state-contingent LP by column generation. Returns `None` when
/// it is infeasible.
pub(super) fn solve(
    inst: &PersuasionInstance,
    alphabet: &GridAlphabet,
    stats: &StatisticFamily,
    eps_r: f64,
) -> Result<Option<Restricted>> {
    let support: Vec<usize> = (0..inst.m()).filter(|&w| inst.prior[w] > 0.0).collect();
    let mut cells = Cells {
        inst,
        alphabet,
        stats,
        slack: eps_r / stats.lipschitz,
        support: support.clone(),
        dead: vec![false; alphabet.len()],
    };
    let actions: Vec<usize> = alphabet.entries.iter().map(|e| e.action).collect();
    let mut columns: Vec<Column> = (0..alphabet.len())
        .filter(|&e| cells.center_usable(e))
        .map(|e| Column {
            entry: e,
            mu: alphabet.entries[e].center.to_vec(),
        })
        .collect();
    let mut by_entry: Vec<Vec<usize>> = vec![Vec::new(); alphabet.len()];
    for (c, col) in columns.iter().enumerate() {
        by_entry[col.entry].push(c);
    }

    for phase_one in [true, false] {
        let mut rounds = 0;
        loop {
            rounds += 1;
            if rounds > MAX_ROUNDS {
                return Err(Error::Lp("column generation did not converge".into()));
            }
            let (objective, theta, y) = master(inst, &support, &columns, &actions, phase_one)?;
            let weights = |entry: usize| -> Vec<f64> {
                (0..inst.m())
                    .map(|w| if phase_one { 0.0 } else { inst.v(w, actions[entry]) } - y[w])
                    .collect()
            };
            let mut added = 0;
            for (e, seen) in by_entry.iter_mut().enumerate() {
                if cells.dead[e] {
                    continue;
                }
                if let Some((rc, mu)) = cells.price(e, &weights(e))? {
                    if rc > PRICE_TOL && !seen.iter().any(|&c| same(&columns[c].mu, &mu)) {
                        seen.push(columns.len());
                        columns.push(Column { entry: e, mu });
                        added += 1;
                    }
                }
            }
            if added == 0 {
                if phase_one {
                    if objective < -1e-9 {
                        return Ok(None);
                    }
                    break;
                }
                let mut masses: Vec<(usize, Vec<f64>)> = Vec::new();
                for (c, col) in columns.iter().enumerate() {
                    let t = theta[c];
                    if t <= 0.0 {
                        continue;
                    }
                    let contribution: Vec<f64> = col.mu.iter().map(|p| t * p).collect();
                    match masses.iter_mut().find(|(e, _)| *e == col.entry) {
                        Some((_, acc)) => {
                            for (a, q) in acc.iter_mut().zip(&contribution) {
                                *a += q;
                            }
                        }
                        None => masses.push((col.entry, contribution)),
                    }
                }
                masses.sort_by_key(|(e, _)| *e);
                return Ok(Some(Restricted {
                    value: objective,
                    masses,
                }));
            }
        }
    }
    unreachable!("phase two always returns")
}

fn same(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-12)
}
