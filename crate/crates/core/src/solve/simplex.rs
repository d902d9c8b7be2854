//! Dense two-phase primal simplex with bounded variables.
//!
//! Variables are shifted to a zero lower bound; nonbasic variables sit at
//! either bound and may flip without a pivot. Phase 1 minimizes the sum of
//! artificial variables, which are never stored as columns: once one leaves
//! the basis it cannot come back. Pricing is Dantzig's rule until a long run
//! of degenerate pivots, then Bland's rule.

use serde::Serialize;
use thiserror::Error;

use super::lp::{LinearProgram, Row, Sense};

const PIVOT_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-7;
const OPT_TOL: f64 = 1e-9;
const RESIDUAL_TOL: f64 = 1e-6;
const DEGENERATE_RUN: usize = 1000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LpError {
    #[error("variable {var} has an infinite or inverted lower bound")]
    BadBound { var: usize },
    #[error("row {row} references variable {var} out of range")]
    BadRow { row: usize, var: usize },
    #[error("numerical instability: residual {residual:e} at the claimed optimum")]
    NumericalInstability { residual: f64 },
    #[error("iteration limit of {limit} pivots reached")]
    IterationLimit { limit: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SimplexStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexSolution {
    pub status: SimplexStatus,
    /// Solution (meaningful when optimal).
    pub x: Vec<f64>,
    pub value: f64,
    pub pivots: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Basic {
    Col(usize),
    Artificial,
}

struct Tableau {
    m: usize,
    n: usize,
    t: Vec<f64>,
    basis: Vec<Basic>,
    xb: Vec<f64>,
    upper: Vec<f64>,
    at_upper: Vec<bool>,
    basic_row: Vec<Option<usize>>,
    pivots: usize,
    limit: usize,
}

enum Step {
    Optimal,
    Unbounded,
    Moved,
}

impl Tableau {
    fn row(&self, i: usize) -> &[f64] {
        &self.t[i * self.n..(i + 1) * self.n]
    }

    fn reduced_costs(&self, cost: &[f64], art_cost: f64) -> Vec<f64> {
        let mut d = cost.to_vec();
        for i in 0..self.m {
            let cb = match self.basis[i] {
                Basic::Col(j) => cost[j],
                Basic::Artificial => art_cost,
            };
            if cb != 0.0 {
                for (dj, tij) in d.iter_mut().zip(self.row(i)) {
                    *dj -= cb * tij;
                }
            }
        }
        for i in 0..self.m {
            if let Basic::Col(j) = self.basis[i] {
                d[j] = 0.0;
            }
        }
        d
    }

    fn pivot(&mut self, r: usize, q: usize, d: &mut [f64]) {
        let n = self.n;
        let p = self.t[r * n + q];
        let nz: Vec<usize> = (0..n).filter(|&j| self.t[r * n + j] != 0.0).collect();
        for &j in &nz {
            self.t[r * n + j] /= p;
        }
        self.t[r * n + q] = 1.0;
        let (before, rest) = self.t.split_at_mut(r * n);
        let (prow, after) = rest.split_at_mut(n);
        for row in before.chunks_mut(n).chain(after.chunks_mut(n)) {
            let f = row[q];
            if f != 0.0 {
                for &j in &nz {
                    row[j] -= f * prow[j];
                }
                row[q] = 0.0;
            }
        }
        let f = d[q];
        if f != 0.0 {
            for &j in &nz {
                d[j] -= f * prow[j];
            }
            d[q] = 0.0;
        }
        if let Basic::Col(old) = self.basis[r] {
            self.basic_row[old] = None;
        }
        self.basis[r] = Basic::Col(q);
        self.basic_row[q] = Some(r);
        self.pivots += 1;
    }

    /// One pricing and ratio-test step.
    fn step(&mut self, d: &mut [f64], bland: bool, tol: f64) -> Result<(Step, bool), LpError> {
        if self.pivots >= self.limit {
            return Err(LpError::IterationLimit { limit: self.limit });
        }
        let mut enter: Option<(usize, f64)> = None;
        for (j, &dj) in d.iter().enumerate().take(self.n) {
            if self.basic_row[j].is_some() || self.upper[j] == 0.0 {
                continue;
            }
            let score = if self.at_upper[j] { -dj } else { dj };
            if score > tol {
                match enter {
                    None => enter = Some((j, score)),
                    Some((_, best)) if !bland && score > best => enter = Some((j, score)),
                    _ => {}
                }
                if bland {
                    break;
                }
            }
        }
        let Some((q, _)) = enter else {
            return Ok((Step::Optimal, false));
        };
        let delta = if self.at_upper[q] { -1.0 } else { 1.0 };

        // ratio test: (limit, row, leaves at upper)
        let mut leave: Option<(f64, usize, bool)> = None;
        for i in 0..self.m {
            let alpha = delta * self.t[i * self.n + q];
            let (limit, to_upper) = if alpha > PIVOT_TOL {
                (self.xb[i].max(0.0) / alpha, false)
            } else if alpha < -PIVOT_TOL {
                let ub = match self.basis[i] {
                    Basic::Col(j) => self.upper[j],
                    Basic::Artificial => f64::INFINITY,
                };
                if ub.is_infinite() {
                    continue;
                }
                ((ub - self.xb[i]).max(0.0) / -alpha, true)
            } else {
                continue;
            };
            let better = match leave {
                None => true,
                Some((best, r, _)) => {
                    if limit < best - 1e-12 {
                        true
                    } else if limit <= best + 1e-12 {
                        if bland {
                            self.leave_rank(i) < self.leave_rank(r)
                        } else {
                            alpha.abs() > self.t[r * self.n + q].abs()
                        }
                    } else {
                        false
                    }
                }
            };
            if better {
                leave = Some((limit, i, to_upper));
            }
        }

        let uq = self.upper[q];
        let flip = match leave {
            None => true,
            Some((limit, _, _)) => uq < limit,
        };
        if flip {
            if uq.is_infinite() {
                return Ok((Step::Unbounded, false));
            }
            for i in 0..self.m {
                self.xb[i] -= delta * uq * self.t[i * self.n + q];
            }
            self.at_upper[q] = !self.at_upper[q];
            self.pivots += 1;
            return Ok((Step::Moved, uq < 1e-12));
        }
        let (t, r, to_upper) = leave.unwrap();
        for i in 0..self.m {
            self.xb[i] -= delta * t * self.t[i * self.n + q];
        }
        let entering_value = if delta > 0.0 { t } else { uq - t };
        if let Basic::Col(j) = self.basis[r] {
            self.at_upper[j] = to_upper;
        }
        self.pivot(r, q, d);
        self.xb[r] = entering_value;
        self.at_upper[q] = false;
        Ok((Step::Moved, t < 1e-12))
    }

    fn leave_rank(&self, i: usize) -> usize {
        match self.basis[i] {
            Basic::Artificial => 0,
            Basic::Col(j) => j + 1,
        }
    }

    fn run(&mut self, d: &mut [f64], tol: f64) -> Result<Step, LpError> {
        let mut degenerate = 0;
        let mut bland = false;
        loop {
            let (step, was_degenerate) = self.step(d, bland, tol)?;
            match step {
                Step::Moved => {
                    degenerate = if was_degenerate { degenerate + 1 } else { 0 };
                    if degenerate >= DEGENERATE_RUN {
                        bland = true;
                    }
                }
                done => return Ok(done),
            }
        }
    }

    fn remove_row(&mut self, r: usize) {
        self.t.drain(r * self.n..(r + 1) * self.n);
        self.basis.remove(r);
        self.xb.remove(r);
        self.m -= 1;
        for row in self.basic_row.iter_mut().flatten() {
            if *row > r {
                *row -= 1;
            }
        }
    }
}

/// A bounded-variable simplex state that keeps its final basis, so that rows
/// added later are re-optimized from the previous optimum.
pub struct Simplex {
    lp: LinearProgram,
    tab: Tableau,
}

fn check_row(lp: &LinearProgram, i: usize, row: &Row) -> Result<(), LpError> {
    match row.coeffs.iter().find(|c| c.0 >= lp.num_vars) {
        Some(&(v, _)) => Err(LpError::BadRow { row: i, var: v }),
        None => Ok(()),
    }
}

impl Simplex {
    /// Builds the initial tableau. Rows whose slack cannot start basic get an
    /// artificial variable.
    pub fn new(lp: LinearProgram) -> Result<Self, LpError> {
        let nv = lp.num_vars;
        for j in 0..nv {
            if !lp.lower[j].is_finite() || lp.upper[j] < lp.lower[j] {
                return Err(LpError::BadBound { var: j });
            }
        }
        for (i, row) in lp.rows.iter().enumerate() {
            check_row(&lp, i, row)?;
        }
        let m = lp.rows.len();
        let num_slacks = lp.rows.iter().filter(|r| r.sense != Sense::Eq).count();
        let n = nv + num_slacks;
        let mut t = vec![0.0; m * n];
        let mut b = vec![0.0; m];
        let mut upper: Vec<f64> = (0..nv).map(|j| lp.upper[j] - lp.lower[j]).collect();
        upper.resize(n, f64::INFINITY);
        let mut basis = vec![Basic::Artificial; m];
        let mut basic_row = vec![None; n];
        let mut slack = nv;
        for (i, row) in lp.rows.iter().enumerate() {
            let mut rhs = row.rhs;
            for &(v, c) in &row.coeffs {
                t[i * n + v] += c;
                rhs -= c * lp.lower[v];
            }
            let slack_col = match row.sense {
                Sense::Eq => None,
                Sense::Le => Some((slack, 1.0)),
                Sense::Ge => Some((slack, -1.0)),
            };
            if let Some((s, c)) = slack_col {
                t[i * n + s] = c;
                slack += 1;
            }
            if rhs < 0.0 {
                for x in &mut t[i * n..(i + 1) * n] {
                    *x = -*x;
                }
                rhs = -rhs;
            }
            b[i] = rhs;
            if let Some((s, _)) = slack_col {
                if t[i * n + s] == 1.0 {
                    basis[i] = Basic::Col(s);
                    basic_row[s] = Some(i);
                }
            }
        }
        let tab = Tableau {
            m,
            n,
            t,
            basis,
            xb: b,
            upper,
            at_upper: vec![false; n],
            basic_row,
            pivots: 0,
            limit: 0,
        };
        Ok(Self { lp, tab })
    }

    pub fn lp(&self) -> &LinearProgram {
        &self.lp
    }

    /// Current value of tableau column `j` (shifted to a zero lower bound).
    fn column_value(&self, j: usize) -> f64 {
        match self.tab.basic_row[j] {
            Some(r) => self.tab.xb[r],
            None if self.tab.at_upper[j] => self.tab.upper[j],
            None => 0.0,
        }
    }

    /// Appends a row, written in terms of the current nonbasic columns. If the
    /// current point violates it, the row starts with an artificial variable.
    pub fn add_row(&mut self, row: Row) -> Result<(), LpError> {
        check_row(&self.lp, self.lp.rows.len(), &row)?;
        let old_n = self.tab.n;
        let sigma = match row.sense {
            Sense::Eq => None,
            Sense::Le => Some(1.0),
            Sense::Ge => Some(-1.0),
        };
        let n = old_n + sigma.is_some() as usize;
        if n > old_n {
            let tab = &mut self.tab;
            let mut t = Vec::with_capacity((tab.m + 1) * n);
            for i in 0..tab.m {
                t.extend_from_slice(tab.row(i));
                t.push(0.0);
            }
            tab.t = t;
            tab.n = n;
            tab.upper.push(f64::INFINITY);
            tab.at_upper.push(false);
            tab.basic_row.push(None);
        }
        let mut a = vec![0.0; n];
        let mut rhs = row.rhs;
        for &(v, c) in &row.coeffs {
            a[v] += c;
            rhs -= c * self.lp.lower[v];
        }
        if let Some(s) = sigma {
            a[old_n] = s;
        }
        let residual = rhs - (0..n).map(|j| a[j] * self.column_value(j)).sum::<f64>();
        let tab = &mut self.tab;
        for i in 0..tab.m {
            if let Basic::Col(j) = tab.basis[i] {
                let f = a[j];
                if f != 0.0 {
                    for (ak, tk) in a.iter_mut().zip(&tab.t[i * n..(i + 1) * n]) {
                        *ak -= f * tk;
                    }
                    a[j] = 0.0;
                }
            }
        }
        let slack_value = sigma.map(|s| residual / s);
        match (sigma, slack_value) {
            (Some(s), Some(v)) if v >= -FEAS_TOL => {
                a.iter_mut().for_each(|x| *x /= s);
                tab.basis.push(Basic::Col(old_n));
                tab.basic_row[old_n] = Some(tab.m);
                tab.xb.push(v.max(0.0));
            }
            _ => {
                if residual < 0.0 {
                    a.iter_mut().for_each(|x| *x = -*x);
                }
                tab.basis.push(Basic::Artificial);
                tab.xb.push(residual.abs());
            }
        }
        tab.t.extend_from_slice(&a);
        tab.m += 1;
        self.lp.rows.push(row);
        Ok(())
    }

    /// Optimizes from the current basis: phase 1 while artificial variables
    /// are basic, then phase 2.
    pub fn solve(&mut self) -> Result<SimplexSolution, LpError> {
        let nv = self.lp.num_vars;
        let tab = &mut self.tab;
        let n = tab.n;
        tab.pivots = 0;
        tab.limit = 50 * (tab.m + n) + 10_000;

        if tab.basis.contains(&Basic::Artificial) {
            let zero = vec![0.0; n];
            let mut d = tab.reduced_costs(&zero, -1.0);
            tab.run(&mut d, OPT_TOL)?;
            let infeasibility: f64 = (0..tab.m)
                .filter(|&i| tab.basis[i] == Basic::Artificial)
                .map(|i| tab.xb[i])
                .sum();
            if infeasibility > FEAS_TOL {
                return Ok(SimplexSolution {
                    status: SimplexStatus::Infeasible,
                    x: vec![],
                    value: f64::NAN,
                    pivots: tab.pivots,
                });
            }
            // drive remaining artificials out of the basis or drop their rows
            let mut i = 0;
            while i < tab.m {
                if tab.basis[i] != Basic::Artificial {
                    i += 1;
                    continue;
                }
                let row = tab.row(i);
                let q = (0..n)
                    .filter(|&j| tab.basic_row[j].is_none() && row[j].abs() > PIVOT_TOL)
                    .fold(None, |best: Option<usize>, j| match best {
                        Some(b) if row[b].abs() >= row[j].abs() => Some(b),
                        _ => Some(j),
                    });
                match q {
                    Some(q) => {
                        let value = if tab.at_upper[q] { tab.upper[q] } else { 0.0 };
                        let mut dummy = vec![0.0; n];
                        tab.pivot(i, q, &mut dummy);
                        tab.xb[i] = value;
                        tab.at_upper[q] = false;
                        i += 1;
                    }
                    None => tab.remove_row(i),
                }
            }
        }

        let mut cost = vec![0.0; n];
        cost[..nv].copy_from_slice(&self.lp.objective);
        let scale = self.lp.objective.iter().fold(1.0f64, |a, c| a.max(c.abs()));
        let mut d = tab.reduced_costs(&cost, 0.0);
        if let Step::Unbounded = tab.run(&mut d, OPT_TOL * scale)? {
            return Ok(SimplexSolution {
                status: SimplexStatus::Unbounded,
                x: vec![],
                value: f64::INFINITY,
                pivots: tab.pivots,
            });
        }

        let lp = &self.lp;
        let mut x: Vec<f64> = (0..nv)
            .map(|j| lp.lower[j] + self.column_value(j))
            .collect();
        let residual = lp.max_violation(&x);
        if residual > RESIDUAL_TOL {
            return Err(LpError::NumericalInstability { residual });
        }
        for (j, v) in x.iter_mut().enumerate() {
            *v = v.clamp(lp.lower[j], lp.upper[j]);
        }
        Ok(SimplexSolution {
            status: SimplexStatus::Optimal,
            value: lp.value(&x),
            x,
            pivots: self.tab.pivots,
        })
    }
}

/// Solves `lp` (a maximization) from scratch.
pub fn simplex_solve(lp: &LinearProgram) -> Result<SimplexSolution, LpError> {
    Simplex::new(lp.clone())?.solve()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn simple_max() {
        let mut lp = LinearProgram::new(vec![1.0, 1.0]);
        lp.rows
            .push(Row::new(vec![(0, 1.0), (1, 1.0)], Sense::Le, 1.0));
        let s = simplex_solve(&lp).unwrap();
        assert_eq!(s.status, SimplexStatus::Optimal);
        assert!((s.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible() {
        let mut lp = LinearProgram::new(vec![1.0]);
        lp.rows.push(Row::new(vec![(0, 1.0)], Sense::Ge, 0.6));
        lp.rows.push(Row::new(vec![(0, 1.0)], Sense::Le, 0.4));
        assert_eq!(
            simplex_solve(&lp).unwrap().status,
            SimplexStatus::Infeasible
        );
    }

    #[test]
    fn unbounded() {
        let mut lp = LinearProgram::new(vec![1.0, 0.0]);
        lp.upper = vec![f64::INFINITY, 1.0];
        lp.rows
            .push(Row::new(vec![(0, 1.0), (1, -1.0)], Sense::Ge, 0.0));
        assert_eq!(simplex_solve(&lp).unwrap().status, SimplexStatus::Unbounded);
    }

    #[test]
    fn shifted_bounds_and_equalities() {
        // max x - y, x + y = 3, 1 <= x <= 2, 0.5 <= y <= 4
        let mut lp = LinearProgram::new(vec![1.0, -1.0]);
        lp.lower = vec![1.0, 0.5];
        lp.upper = vec![2.0, 4.0];
        lp.rows
            .push(Row::new(vec![(0, 1.0), (1, 1.0)], Sense::Eq, 3.0));
        let s = simplex_solve(&lp).unwrap();
        assert!((s.value - 1.0).abs() < 1e-12);
        assert!((s.x[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn redundant_equalities_are_dropped() {
        let mut lp = LinearProgram::new(vec![1.0, 2.0]);
        lp.rows
            .push(Row::new(vec![(0, 1.0), (1, 1.0)], Sense::Eq, 1.0));
        lp.rows
            .push(Row::new(vec![(0, 2.0), (1, 2.0)], Sense::Eq, 2.0));
        let s = simplex_solve(&lp).unwrap();
        assert!((s.value - 2.0).abs() < 1e-12);
    }

    /// Best feasible grid point of a tiny program in the unit box.
    fn brute_force(lp: &LinearProgram) -> Option<f64> {
        let n = lp.num_vars;
        let steps = 12;
        let mut best: Option<f64> = None;
        for idx in 0..(steps + 1usize).pow(n as u32) {
            let mut k = idx;
            let x: Vec<f64> = (0..n)
                .map(|_| {
                    let s = k % (steps + 1);
                    k /= steps + 1;
                    s as f64 / steps as f64
                })
                .collect();
            if lp.max_violation(&x) < 1e-12 {
                let v = lp.value(&x);
                best = Some(best.map_or(v, |b: f64| b.max(v)));
            }
        }
        best
    }

    #[test]
    fn matches_grid_search_on_random_programs() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let n = 3;
            let mut lp = LinearProgram::new((0..n).map(|_| rng.gen_range(-3..=3) as f64).collect());
            for _ in 0..rng.gen_range(1..4) {
                let coeffs: Vec<(usize, f64)> = (0..n)
                    .map(|j| (j, rng.gen_range(-1..=1) as f64 * 4.0))
                    .collect();
                let sense = [Sense::Le, Sense::Ge, Sense::Eq][rng.gen_range(0..3)];
                lp.rows
                    .push(Row::new(coeffs, sense, rng.gen_range(-2..=2) as f64));
            }
            let s = simplex_solve(&lp).unwrap();
            // the solver's point is feasible and at least as good as every grid point
            let grid = brute_force(&lp);
            match s.status {
                SimplexStatus::Optimal => {
                    assert!(lp.max_violation(&s.x) < 1e-9, "{lp:?}");
                    if let Some(v) = grid {
                        assert!(s.value >= v - 1e-9, "{lp:?}: {} vs {v}", s.value);
                    }
                }
                status => {
                    assert_eq!(status, SimplexStatus::Infeasible);
                    assert!(grid.is_none(), "{lp:?}");
                }
            }
        }
    }

    #[test]
    fn deterministic() {
        let mut lp = LinearProgram::new(vec![1.0, 2.0, -1.0]);
        lp.rows
            .push(Row::new(vec![(0, 1.0), (1, 1.0), (2, 1.0)], Sense::Eq, 1.5));
        lp.rows
            .push(Row::new(vec![(0, 1.0), (2, -1.0)], Sense::Ge, 0.0));
        assert_eq!(simplex_solve(&lp).unwrap(), simplex_solve(&lp).unwrap());
    }

    #[test]
    fn added_rows_match_cold_solves() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let n = 5;
            let lp = LinearProgram::new((0..n).map(|_| rng.gen_range(-3.0..3.0)).collect());
            let mut warm = Simplex::new(lp.clone()).unwrap();
            warm.solve().unwrap();
            let mut cold = lp;
            for _ in 0..rng.gen_range(1..6) {
                let mut coeffs = Vec::new();
                for j in 0..n {
                    if rng.gen_bool(0.6) {
                        coeffs.push((j, rng.gen_range(-2.0..2.0)));
                    }
                }
                let sense = [Sense::Le, Sense::Ge, Sense::Eq][rng.gen_range(0..3)];
                let row = Row::new(coeffs, sense, rng.gen_range(-1.0..1.5));
                cold.rows.push(row.clone());
                warm.add_row(row).unwrap();
                let w = warm.solve().unwrap();
                let c = simplex_solve(&cold).unwrap();
                assert_eq!(w.status, c.status, "{cold:?}");
                if c.status != SimplexStatus::Optimal {
                    break;
                }
                assert!((w.value - c.value).abs() < 1e-9, "{cold:?}");
                assert!(cold.max_violation(&w.x) < 1e-9);
            }
        }
    }
}
