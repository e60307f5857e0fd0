//! Dense linear-programming solver.
//!
//! Problems are stated as
//!
//! ```text
//! maximize    <c, x>
//! subject to  A x  = b
//!             G x >= h
//!             x   >= 0
//! ```
//!
//! Constraint rows are stored sparsely (the problems built in this crate have
//! a handful of nonzeros per row), the simplex itself runs on a dense
//! tableau. Inequality rows may be activated lazily: the solver starts from
//! the equality system, then repeatedly adds violated inequality rows and
//! restores feasibility with dual simplex pivots. The final point satisfies
//! every row, so the result is the optimum of the full program.

mod dump;
mod tableau;

pub use dump::{parse_dump, write_dump};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use tableau::{Outcome, Tableau};

/// Pivot elements smaller than this are never used.
pub const PIVOT_TOL: f64 = 1e-10;
/// Primal feasibility tolerance.
pub const FEAS_TOL: f64 = 1e-8;
/// Reduced-cost optimality tolerance.
pub const OPT_TOL: f64 = 1e-9;

/// One sparse row `sum_j coeff_j x_j (= or >=) rhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearRow {
    pub terms: Vec<(usize, f64)>,
    pub rhs: f64,
}

impl LinearRow {
    pub fn new(terms: Vec<(usize, f64)>, rhs: f64) -> Self {
        LinearRow { terms, rhs }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(j, c)| c * x[j]).sum()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LpProblem {
    pub num_vars: usize,
    /// Objective coefficients, maximized.
    pub objective: Vec<f64>,
    pub equalities: Vec<LinearRow>,
    /// Rows read as `terms . x >= rhs`.
    pub inequalities: Vec<LinearRow>,
}

impl LpProblem {
    pub fn new(num_vars: usize) -> Self {
        LpProblem {
            num_vars,
            objective: vec![0.0; num_vars],
            ..Default::default()
        }
    }

    pub fn add_eq(&mut self, terms: Vec<(usize, f64)>, rhs: f64) {
        self.equalities.push(LinearRow::new(terms, rhs));
    }

    pub fn add_ge(&mut self, terms: Vec<(usize, f64)>, rhs: f64) {
        self.inequalities.push(LinearRow::new(terms, rhs));
    }

    pub fn add_le(&mut self, terms: Vec<(usize, f64)>, rhs: f64) {
        let negated = terms.into_iter().map(|(j, c)| (j, -c)).collect();
        self.inequalities.push(LinearRow::new(negated, -rhs));
    }

    /// Dimension and finiteness checks.
    pub fn validate(&self) -> Result<()> {
        if self.objective.len() != self.num_vars {
            return Err(Error::Lp(format!(
                "objective has {} entries for {} variables",
                self.objective.len(),
                self.num_vars
            )));
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(Error::Lp("objective has a non-finite entry".into()));
        }
        for row in self.equalities.iter().chain(&self.inequalities) {
            if !row.rhs.is_finite() {
                return Err(Error::Lp("row has a non-finite right-hand side".into()));
            }
            for &(j, c) in &row.terms {
                if j >= self.num_vars {
                    return Err(Error::Lp(format!("row references variable {j}")));
                }
                if !c.is_finite() {
                    return Err(Error::Lp("row has a non-finite coefficient".into()));
                }
            }
        }
        Ok(())
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// `(max |A x - b|, max (h - G x)^+)`.
    pub fn residuals(&self, x: &[f64]) -> (f64, f64) {
        let eq = self
            .equalities
            .iter()
            .map(|r| (r.eval(x) - r.rhs).abs())
            .fold(0.0, f64::max);
        let ineq = self
            .inequalities
            .iter()
            .map(|r| (r.rhs - r.eval(x)).max(0.0))
            .fold(0.0, f64::max);
        (eq, ineq)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// Iteration cap hit.
    NumericalFailure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub status: LpStatus,
    pub objective: f64,
    pub x: Vec<f64>,
    pub max_eq_residual: f64,
    pub max_ineq_violation: f64,
    pub iterations: usize,
    /// Equality-row multipliers at the optimum, when requested through
    /// [`SolveOptions::duals`]; `c_j - y . A_j <= 0` for every column.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub eq_duals: Vec<f64>,
}

impl LpSolution {
    fn without_point(status: LpStatus, num_vars: usize, iterations: usize) -> Self {
        LpSolution {
            status,
            objective: f64::NAN,
            x: vec![0.0; num_vars],
            max_eq_residual: f64::NAN,
            max_ineq_violation: f64::NAN,
            iterations,
            eq_duals: Vec::new(),
        }
    }

    /// Errors unless the status is optimal.
    pub fn into_optimal(self) -> Result<Self> {
        match self.status {
            LpStatus::Optimal => Ok(self),
            other => Err(Error::Lp(format!("terminated with status {other:?}"))),
        }
    }
}

/// How inequality rows enter the tableau.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowActivation {
    /// All rows from the start.
    Eager,
    /// Violated rows only, added in rounds.
    Lazy,
    /// Lazy when the program has many more inequality rows than variables.
    Auto,
}

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    pub activation: RowActivation,
    /// Overrides the default pivot cap of `10 (rows + cols)^2`.
    pub max_iterations: Option<usize>,
    /// Report equality-row multipliers.
    pub duals: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            activation: RowActivation::Auto,
            max_iterations: None,
            duals: false,
        }
    }
}

struct Run {
    status: LpStatus,
    x: Option<Vec<f64>>,
    duals: Vec<f64>,
    iterations: usize,
}

impl Run {
    fn stopped(status: LpStatus, t: &Tableau) -> Self {
        Run {
            status,
            x: None,
            duals: Vec::new(),
            iterations: t.iterations,
        }
    }

    fn optimal(p: &LpProblem, t: &Tableau, opts: SolveOptions) -> Self {
        Run {
            status: LpStatus::Optimal,
            x: Some(t.primal(p.num_vars)),
            duals: if opts.duals { t.eq_duals() } else { Vec::new() },
            iterations: t.iterations,
        }
    }
}

/// Solves with default options.
pub fn solve_lp(p: &LpProblem) -> Result<LpSolution> {
    solve_lp_with(p, SolveOptions::default())
}

/// Rows satisfied by every `x >= 0`: nonnegative coefficients and `rhs <= 0`.
fn trivially_satisfied(row: &LinearRow) -> bool {
    row.rhs <= 0.0 && row.terms.iter().all(|&(_, c)| c >= 0.0)
}

pub fn solve_lp_with(p: &LpProblem, opts: SolveOptions) -> Result<LpSolution> {
    p.validate()?;
    let pending: Vec<&LinearRow> = p
        .inequalities
        .iter()
        .filter(|r| !trivially_satisfied(r))
        .collect();
    if pending
        .iter()
        .any(|r| r.terms.iter().all(|&(_, c)| c == 0.0))
    {
        // 0 >= rhs with rhs > 0
        return Ok(LpSolution::without_point(
            LpStatus::Infeasible,
            p.num_vars,
            0,
        ));
    }
    let lazy = match opts.activation {
        RowActivation::Eager => false,
        RowActivation::Lazy => true,
        RowActivation::Auto => pending.len() > 4 * (p.num_vars + p.equalities.len()).max(100),
    };
    let run = if lazy {
        match solve_lazy(p, &pending, opts) {
            Some(done) => done,
            // Relaxation unbounded: the lazy path cannot conclude.
            None => solve_eager(p, &pending, opts),
        }
    } else {
        solve_eager(p, &pending, opts)
    };
    Ok(finish(p, run))
}

fn finish(p: &LpProblem, run: Run) -> LpSolution {
    let Run {
        status,
        x,
        duals,
        iterations,
    } = run;
    match (status, x) {
        (LpStatus::Optimal, Some(mut x)) => {
            for v in &mut x {
                if *v < 0.0 && *v > -1e-10 {
                    *v = 0.0;
                }
            }
            let (eq, ineq) = p.residuals(&x);
            LpSolution {
                status,
                objective: p.objective_value(&x),
                x,
                max_eq_residual: eq,
                max_ineq_violation: ineq,
                iterations,
                eq_duals: duals,
            }
        }
        (status, _) => LpSolution::without_point(status, p.num_vars, iterations),
    }
}

fn iteration_cap(opts: SolveOptions, rows: usize, cols: usize) -> usize {
    opts.max_iterations.unwrap_or_else(|| {
        let size = rows + cols;
        10usize.saturating_mul(size).saturating_mul(size).max(1000)
    })
}

fn solve_eager(p: &LpProblem, rows: &[&LinearRow], opts: SolveOptions) -> Run {
    let cap = iteration_cap(
        opts,
        p.equalities.len() + rows.len(),
        p.num_vars + rows.len(),
    );
    let mut t = Tableau::new(p, rows);
    if opts.duals {
        t.keep_equality_artificials();
    }
    match t.two_phase(&p.objective, cap) {
        Outcome::Optimal => Run::optimal(p, &t, opts),
        Outcome::Infeasible => Run::stopped(LpStatus::Infeasible, &t),
        Outcome::Unbounded => Run::stopped(LpStatus::Unbounded, &t),
        Outcome::IterationCap => Run::stopped(LpStatus::NumericalFailure, &t),
    }
}

/// Row-generation loop. Returns `None` when the equality-only relaxation is
/// unbounded.
fn solve_lazy(p: &LpProblem, rows: &[&LinearRow], opts: SolveOptions) -> Option<Run> {
    let cap = iteration_cap(
        opts,
        p.equalities.len() + rows.len(),
        p.num_vars + rows.len(),
    );
    let mut t = Tableau::new(p, &[]);
    if opts.duals {
        t.keep_equality_artificials();
    }
    match t.two_phase(&p.objective, cap) {
        Outcome::Optimal => {}
        Outcome::Infeasible => return Some(Run::stopped(LpStatus::Infeasible, &t)),
        Outcome::Unbounded => return None,
        Outcome::IterationCap => return Some(Run::stopped(LpStatus::NumericalFailure, &t)),
    }
    let mut active = vec![false; rows.len()];
    loop {
        let x = t.primal(p.num_vars);
        let mut violated: Vec<(usize, f64)> = rows
            .iter()
            .enumerate()
            .filter(|&(i, _)| !active[i])
            .filter_map(|(i, r)| {
                let gap = r.rhs - r.eval(&x);
                (gap > 1e-10 * (1.0 + r.rhs.abs())).then_some((i, gap))
            })
            .collect();
        if violated.is_empty() {
            return Some(Run::optimal(p, &t, opts));
        }
        violated.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        let batch = violated.len().min((2 * (p.num_vars + t.rows())).max(64));
        let chosen: Vec<&LinearRow> = violated[..batch]
            .iter()
            .map(|&(i, _)| {
                active[i] = true;
                rows[i]
            })
            .collect();
        t.add_ge_rows(&chosen);
        match t.dual_simplex(cap) {
            Outcome::Optimal => {}
            Outcome::Infeasible => return Some(Run::stopped(LpStatus::Infeasible, &t)),
            Outcome::Unbounded => unreachable!("dual simplex cannot report unboundedness"),
            Outcome::IterationCap => return Some(Run::stopped(LpStatus::NumericalFailure, &t)),
        }
        // Dual pivots keep reduced costs nonpositive only up to rounding;
        // clean up with primal pivots if any drifted.
        match t.primal_simplex(cap) {
            Outcome::Optimal => {}
            Outcome::Unbounded => return None,
            Outcome::Infeasible => return Some(Run::stopped(LpStatus::Infeasible, &t)),
            Outcome::IterationCap => return Some(Run::stopped(LpStatus::NumericalFailure, &t)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eager() -> SolveOptions {
        SolveOptions {
            activation: RowActivation::Eager,
            ..Default::default()
        }
    }

    fn lazy() -> SolveOptions {
        SolveOptions {
            activation: RowActivation::Lazy,
            ..Default::default()
        }
    }

    #[test]
    fn simple_optimum() {
        let mut p = LpProblem::new(2);
        p.objective = vec![1.0, 1.0];
        p.add_le(vec![(0, 1.0), (1, 1.0)], 1.0);
        for opts in [eager(), lazy()] {
            let s = solve_lp_with(&p, opts).unwrap();
            assert_eq!(s.status, LpStatus::Optimal);
            assert!((s.objective - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn infeasible_bounds() {
        let mut p = LpProblem::new(1);
        p.objective = vec![1.0];
        p.add_ge(vec![(0, 1.0)], 2.0);
        p.add_le(vec![(0, 1.0)], 1.0);
        assert_eq!(
            solve_lp_with(&p, eager()).unwrap().status,
            LpStatus::Infeasible
        );
    }

    #[test]
    fn unbounded_ray() {
        let mut p = LpProblem::new(1);
        p.objective = vec![1.0];
        assert_eq!(solve_lp(&p).unwrap().status, LpStatus::Unbounded);
        p.add_ge(vec![(0, 1.0)], 0.0);
        assert_eq!(
            solve_lp_with(&p, lazy()).unwrap().status,
            LpStatus::Unbounded
        );
    }

    #[test]
    fn equality_with_negative_rhs_and_redundant_rows() {
        // x0 - x1 = -1, 2x0 - 2x1 = -2 (redundant), x0 + x1 <= 3, max x0.
        let mut p = LpProblem::new(2);
        p.objective = vec![1.0, 0.0];
        p.add_eq(vec![(0, 1.0), (1, -1.0)], -1.0);
        p.add_eq(vec![(0, 2.0), (1, -2.0)], -2.0);
        p.add_le(vec![(0, 1.0), (1, 1.0)], 3.0);
        let s = solve_lp_with(&p, eager()).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective - 1.0).abs() < 1e-12);
        assert!((s.x[1] - 2.0).abs() < 1e-12);
        assert!(s.max_eq_residual < 1e-12);
    }

    #[test]
    fn empty_infeasible_row() {
        let mut p = LpProblem::new(1);
        p.add_ge(vec![], 1.0);
        assert_eq!(solve_lp(&p).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn invalid_problem_rejected() {
        let mut p = LpProblem::new(1);
        p.add_ge(vec![(3, 1.0)], 0.0);
        assert!(solve_lp(&p).is_err());
        let mut p = LpProblem::new(1);
        p.objective[0] = f64::NAN;
        assert!(solve_lp(&p).is_err());
    }

    #[test]
    fn equality_duals() {
        // max 2 x0 + x1 s.t. x0 + x1 = 1, x0 - x1 = -0.5 (negated internally)
        let mut p = LpProblem::new(2);
        p.objective = vec![2.0, 1.0];
        p.add_eq(vec![(0, 1.0), (1, 1.0)], 1.0);
        p.add_eq(vec![(0, 1.0), (1, -1.0)], -0.5);
        for act in [RowActivation::Eager, RowActivation::Lazy] {
            let opts = SolveOptions {
                activation: act,
                duals: true,
                ..Default::default()
            };
            let s = solve_lp_with(&p, opts).unwrap();
            assert!((s.objective - 1.25).abs() < 1e-12);
            // y0 + y1 = 2, y0 - y1 = 1
            assert!((s.eq_duals[0] - 1.5).abs() < 1e-12, "{:?}", s.eq_duals);
            assert!((s.eq_duals[1] - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn deterministic_repeat() {
        let mut p = LpProblem::new(3);
        p.objective = vec![1.0, 2.0, -0.5];
        p.add_eq(vec![(0, 1.0), (1, 1.0), (2, 1.0)], 1.0);
        p.add_ge(vec![(0, 1.0), (1, -1.0)], 0.0);
        p.add_ge(vec![(1, 1.0), (2, -0.3)], 0.1);
        let a = solve_lp(&p).unwrap();
        let b = solve_lp(&p).unwrap();
        assert_eq!(a.status, b.status);
        assert_eq!(a.objective.to_bits(), b.objective.to_bits());
        assert_eq!(a.x, b.x);
    }
}
