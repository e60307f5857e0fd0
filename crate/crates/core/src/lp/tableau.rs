//! Dense simplex tableau with primal and dual pivoting.
//!
//! Column layout: structural variables first, then one surplus column per
//! inequality row, then phase-one artificials (removed once phase one ends).

use super::{LinearRow, LpProblem, FEAS_TOL, OPT_TOL, PIVOT_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(super) enum Outcome {
    Optimal,
    Infeasible,
    Unbounded,
    IterationCap,
}

pub(super) struct Tableau {
    a: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    basis: Vec<usize>,
    /// Reduced costs `c_j - c_B B^{-1} A_j` of the current phase objective.
    d: Vec<f64>,
    /// Phase objective value at the current basis.
    z: f64,
    ncols: usize,
    n_struct: usize,
    /// Columns allowed to enter the basis.
    enterable: Vec<bool>,
    bland: bool,
    stall: usize,
    pub(super) iterations: usize,
    /// Artificial column and sign of each equality row, for dual recovery.
    eq_art: Vec<Option<usize>>,
    eq_sign: Vec<f64>,
    keep_eq_art: bool,
}

impl Tableau {
    /// Equality rows of `p` plus the given inequality rows.
    pub(super) fn new(p: &LpProblem, ge_rows: &[&LinearRow]) -> Self {
        let n = p.num_vars;
        let n_rows = p.equalities.len() + ge_rows.len();
        let n_surplus = ge_rows.len();
        let mut n_art = p.equalities.len();
        let mut need_art = vec![true; p.equalities.len()];
        for row in ge_rows {
            let art = row.rhs > 0.0;
            need_art.push(art);
            n_art += usize::from(art);
        }
        let ncols = n + n_surplus + n_art;
        let mut a = vec![vec![0.0; ncols]; n_rows];
        let mut rhs = vec![0.0; n_rows];
        let mut basis = vec![0; n_rows];
        let mut next_art = n + n_surplus;
        let mut eq_art = Vec::with_capacity(p.equalities.len());
        let mut eq_sign = Vec::with_capacity(p.equalities.len());
        for (i, row) in p.equalities.iter().enumerate() {
            let sign = if row.rhs < 0.0 { -1.0 } else { 1.0 };
            eq_art.push(Some(next_art));
            eq_sign.push(sign);
            for &(j, c) in &row.terms {
                a[i][j] += sign * c;
            }
            rhs[i] = sign * row.rhs;
            a[i][next_art] = 1.0;
            basis[i] = next_art;
            next_art += 1;
        }
        let offset = p.equalities.len();
        for (s, row) in ge_rows.iter().enumerate() {
            let i = offset + s;
            let surplus = n + s;
            if need_art[i] {
                // g x - s + art = h
                for &(j, c) in &row.terms {
                    a[i][j] += c;
                }
                a[i][surplus] = -1.0;
                rhs[i] = row.rhs;
                a[i][next_art] = 1.0;
                basis[i] = next_art;
                next_art += 1;
            } else {
                // -g x + s = -h >= 0
                for &(j, c) in &row.terms {
                    a[i][j] -= c;
                }
                a[i][surplus] = 1.0;
                rhs[i] = -row.rhs;
                basis[i] = surplus;
            }
        }
        let mut enterable = vec![true; ncols];
        for e in enterable.iter_mut().skip(n + n_surplus) {
            *e = false;
        }
        Tableau {
            a,
            rhs,
            basis,
            d: vec![0.0; ncols],
            z: 0.0,
            ncols,
            n_struct: n,
            enterable,
            bland: false,
            stall: 0,
            iterations: 0,
            eq_art,
            eq_sign,
            keep_eq_art: false,
        }
    }

    /// Keeps the equality artificials (never re-entering) after phase one so
    /// that [`Tableau::eq_duals`] can read the multipliers off them.
    pub(super) fn keep_equality_artificials(&mut self) {
        self.keep_eq_art = true;
    }

    /// Multipliers `y` of the equality rows at the current basis, so that
    /// `c_j - y . A_j` is the reduced cost of column `j`.
    pub(super) fn eq_duals(&self) -> Vec<f64> {
        self.eq_art
            .iter()
            .zip(&self.eq_sign)
            .map(|(col, sign)| col.map_or(0.0, |c| -sign * self.d[c]))
            .collect()
    }

    pub(super) fn rows(&self) -> usize {
        self.a.len()
    }

    fn is_artificial(&self, j: usize) -> bool {
        j >= self.n_struct && !self.enterable[j]
    }

    pub(super) fn primal(&self, n: usize) -> Vec<f64> {
        let mut x = vec![0.0; n];
        for (i, &b) in self.basis.iter().enumerate() {
            if b < n {
                x[b] = self.rhs[i];
            }
        }
        x
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let inv = 1.0 / self.a[r][c];
        let nz: Vec<usize> = {
            let row = &mut self.a[r];
            let mut nz = Vec::new();
            for (j, v) in row.iter_mut().enumerate() {
                if *v != 0.0 {
                    *v *= inv;
                    nz.push(j);
                }
            }
            row[c] = 1.0;
            nz
        };
        self.rhs[r] *= inv;
        let pivot_row = std::mem::take(&mut self.a[r]);
        let pivot_rhs = self.rhs[r];
        for (i, row) in self.a.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f == 0.0 {
                continue;
            }
            for &j in &nz {
                row[j] -= f * pivot_row[j];
            }
            row[c] = 0.0;
            self.rhs[i] -= f * pivot_rhs;
            if self.rhs[i].abs() < 1e-14 {
                self.rhs[i] = 0.0;
            }
        }
        let f = self.d[c];
        if f != 0.0 {
            for &j in &nz {
                self.d[j] -= f * pivot_row[j];
            }
            self.d[c] = 0.0;
            self.z += f * pivot_rhs;
        }
        self.a[r] = pivot_row;
        self.basis[r] = c;
        self.iterations += 1;
    }

    fn set_objective(&mut self, cost: &[f64]) {
        self.d = cost.to_vec();
        self.z = 0.0;
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = cost[b];
            if cb != 0.0 {
                for (dj, aij) in self.d.iter_mut().zip(&self.a[i]) {
                    *dj -= cb * aij;
                }
                self.z += cb * self.rhs[i];
            }
        }
        for &b in &self.basis {
            self.d[b] = 0.0;
        }
    }

    fn note_progress(&mut self, before: f64) {
        if self.z > before + 1e-12 * (1.0 + before.abs()) {
            self.stall = 0;
        } else {
            self.stall += 1;
            if self.stall > 2 * (self.rows() + self.ncols) {
                self.bland = true;
            }
        }
    }

    pub(super) fn primal_simplex(&mut self, cap: usize) -> Outcome {
        loop {
            if self.iterations >= cap {
                return Outcome::IterationCap;
            }
            let entering = if self.bland {
                (0..self.ncols).find(|&j| self.enterable[j] && self.d[j] > OPT_TOL)
            } else {
                let mut best: Option<(usize, f64)> = None;
                for j in 0..self.ncols {
                    if self.enterable[j]
                        && self.d[j] > OPT_TOL
                        && best.is_none_or(|(_, v)| self.d[j] > v)
                    {
                        best = Some((j, self.d[j]));
                    }
                }
                best.map(|(j, _)| j)
            };
            let Some(c) = entering else {
                return Outcome::Optimal;
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows() {
                let aic = self.a[i][c];
                if aic > PIVOT_TOL {
                    let ratio = self.rhs[i].max(0.0) / aic;
                    let better = match leave {
                        None => true,
                        Some((l, best)) => {
                            if ratio < best - 1e-12 {
                                true
                            } else if ratio <= best + 1e-12 {
                                if self.bland {
                                    self.basis[i] < self.basis[l]
                                } else {
                                    aic > self.a[l][c]
                                }
                            } else {
                                false
                            }
                        }
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let Some((r, _)) = leave else {
                return Outcome::Unbounded;
            };
            let before = self.z;
            self.pivot(r, c);
            self.note_progress(before);
        }
    }

    /// Restores primal feasibility while keeping reduced costs dual feasible.
    pub(super) fn dual_simplex(&mut self, cap: usize) -> Outcome {
        let mut bland = false;
        let mut stall = 0;
        loop {
            if self.iterations >= cap {
                return Outcome::IterationCap;
            }
            let leaving = if bland {
                (0..self.rows())
                    .filter(|&i| self.rhs[i] < -FEAS_TOL)
                    .min_by_key(|&i| self.basis[i])
            } else {
                let mut best: Option<(usize, f64)> = None;
                for i in 0..self.rows() {
                    if self.rhs[i] < -FEAS_TOL && best.is_none_or(|(_, v)| self.rhs[i] < v) {
                        best = Some((i, self.rhs[i]));
                    }
                }
                best.map(|(i, _)| i)
            };
            let Some(r) = leaving else {
                return Outcome::Optimal;
            };
            let mut enter: Option<(usize, f64)> = None;
            for j in 0..self.ncols {
                let arj = self.a[r][j];
                if self.enterable[j] && arj < -PIVOT_TOL {
                    let ratio = self.d[j].min(0.0) / arj;
                    let better = match enter {
                        None => true,
                        Some((e, best)) => {
                            ratio < best - 1e-12
                                || (ratio <= best + 1e-12 && !bland && arj < self.a[r][e])
                        }
                    };
                    if better {
                        enter = Some((j, ratio));
                    }
                }
            }
            let Some((c, _)) = enter else {
                return Outcome::Infeasible;
            };
            let before = self.z;
            self.pivot(r, c);
            if self.z < before - 1e-12 * (1.0 + before.abs()) {
                stall = 0;
            } else {
                stall += 1;
                if stall > 2 * (self.rows() + self.ncols) {
                    bland = true;
                }
            }
        }
    }

    /// Phase one (when artificials exist) followed by phase two on `objective`.
    pub(super) fn two_phase(&mut self, objective: &[f64], cap: usize) -> Outcome {
        let has_art = self.basis.iter().any(|&b| self.is_artificial(b));
        if has_art {
            let cost: Vec<f64> = (0..self.ncols)
                .map(|j| if self.is_artificial(j) { -1.0 } else { 0.0 })
                .collect();
            self.set_objective(&cost);
            match self.primal_simplex(cap) {
                Outcome::Optimal => {}
                Outcome::Unbounded => unreachable!("phase one is bounded by zero"),
                other => return other,
            }
            let scale = 1.0 + self.rhs.iter().map(|v| v.abs()).fold(0.0, f64::max);
            if self.z < -FEAS_TOL * scale {
                return Outcome::Infeasible;
            }
            self.drive_out_artificials();
        }
        let mut cost = vec![0.0; self.ncols];
        cost[..self.n_struct].copy_from_slice(objective);
        self.set_objective(&cost);
        self.bland = false;
        self.stall = 0;
        self.primal_simplex(cap)
    }

    fn drive_out_artificials(&mut self) {
        let mut i = 0;
        while i < self.rows() {
            if self.is_artificial(self.basis[i]) {
                let pick = (0..self.ncols)
                    .filter(|&j| self.enterable[j] && self.a[i][j].abs() > 1e-9)
                    .max_by(|&x, &y| self.a[i][x].abs().total_cmp(&self.a[i][y].abs()));
                match pick {
                    Some(c) => self.pivot(i, c),
                    None => {
                        // Redundant row.
                        self.a.remove(i);
                        self.rhs.remove(i);
                        self.basis.remove(i);
                        continue;
                    }
                }
            }
            i += 1;
        }
        let kept_art: Vec<bool> = {
            let mut v = vec![false; self.ncols];
            if self.keep_eq_art {
                for c in self.eq_art.iter().flatten() {
                    v[*c] = true;
                }
            }
            v
        };
        let keep: Vec<bool> = (0..self.ncols)
            .map(|j| !self.is_artificial(j) || kept_art[j])
            .collect();
        let mut remap = vec![usize::MAX; self.ncols];
        let mut next = 0;
        for j in 0..self.ncols {
            if keep[j] {
                remap[j] = next;
                next += 1;
            }
        }
        for row in &mut self.a {
            let mut w = 0;
            for j in 0..row.len() {
                if keep[j] {
                    row[w] = row[j];
                    w += 1;
                }
            }
            row.truncate(w);
        }
        for b in &mut self.basis {
            *b = remap[*b];
        }
        for c in &mut self.eq_art {
            *c = c.and_then(|j| (remap[j] != usize::MAX).then_some(remap[j]));
        }
        let mut enterable = vec![true; next];
        for j in 0..kept_art.len() {
            if kept_art[j] {
                enterable[remap[j]] = false;
            }
        }
        self.ncols = next;
        self.enterable = enterable;
        self.d = vec![0.0; next];
    }

    /// Appends rows `g x >= h` with fresh basic surplus columns; the new rows
    /// may be primal infeasible.
    pub(super) fn add_ge_rows(&mut self, rows: &[&LinearRow]) {
        let k = rows.len();
        for row in &mut self.a {
            row.resize(self.ncols + k, 0.0);
        }
        self.d.resize(self.ncols + k, 0.0);
        self.enterable.resize(self.ncols + k, true);
        let mut basic_row = vec![usize::MAX; self.ncols];
        for (i, &b) in self.basis.iter().enumerate() {
            basic_row[b] = i;
        }
        let old_rows = self.rows();
        for (s, g) in rows.iter().enumerate() {
            let mut new_row = vec![0.0; self.ncols + k];
            let mut new_rhs = -g.rhs;
            for &(j, coeff) in &g.terms {
                let i = basic_row[j];
                if i == usize::MAX {
                    new_row[j] -= coeff;
                } else {
                    for (t, v) in new_row.iter_mut().zip(&self.a[i]) {
                        *t += coeff * v;
                    }
                    new_rhs += coeff * self.rhs[i];
                }
            }
            for &b in &self.basis[..old_rows] {
                new_row[b] = 0.0;
            }
            new_row[self.ncols + s] = 1.0;
            self.a.push(new_row);
            self.rhs.push(new_rhs);
            self.basis.push(self.ncols + s);
        }
        self.ncols += k;
    }
}
