use std::collections::HashSet;

use serde::Serialize;

use crate::lift::LiftedModel;
use crate::model::{assignment_bit, Model, OvercompleteIndex};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

/// A sparse constraint `sum coeffs (sense) rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub coeffs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Row {
    pub fn new(coeffs: Vec<(usize, f64)>, sense: Sense, rhs: f64) -> Self {
        Self { coeffs, sense, rhs }
    }

    /// Merges repeated variables, drops zeros and sorts by variable. Equality
    /// rows are scaled so that the first coefficient is positive.
    pub fn normalized(mut self) -> Row {
        self.coeffs.sort_by_key(|c| c.0);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(self.coeffs.len());
        for (v, c) in self.coeffs {
            match merged.last_mut() {
                Some(last) if last.0 == v => last.1 += c,
                _ => merged.push((v, c)),
            }
        }
        merged.retain(|c| c.1 != 0.0);
        self.coeffs = merged;
        if self.sense == Sense::Eq && self.coeffs.first().is_some_and(|c| c.1 < 0.0) {
            for c in &mut self.coeffs {
                c.1 = -c.1;
            }
            self.rhs = -self.rhs;
        }
        self
    }

    pub fn activity(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(v, c)| c * x[v]).sum()
    }

    /// Amount by which `x` violates the row.
    pub fn violation(&self, x: &[f64]) -> f64 {
        let a = self.activity(x);
        match self.sense {
            Sense::Le => (a - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - a).max(0.0),
            Sense::Eq => (a - self.rhs).abs(),
        }
    }

    pub(crate) fn key(&self) -> (Vec<(usize, u64)>, Sense, u64) {
        (
            self.coeffs.iter().map(|&(v, c)| (v, c.to_bits())).collect(),
            self.sense,
            self.rhs.to_bits(),
        )
    }
}

/// `maximize objective . x` subject to `rows` and `lower <= x <= upper`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub num_vars: usize,
    pub objective: Vec<f64>,
    pub rows: Vec<Row>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl LinearProgram {
    /// A program over `[0, 1]` variables with no rows.
    pub fn new(objective: Vec<f64>) -> Self {
        let n = objective.len();
        Self {
            num_vars: n,
            objective,
            rows: Vec::new(),
            lower: vec![0.0; n],
            upper: vec![1.0; n],
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let rows = self.rows.iter().map(|r| r.violation(x));
        let bounds = x
            .iter()
            .enumerate()
            .map(|(j, &v)| (self.lower[j] - v).max(v - self.upper[j]).max(0.0));
        rows.chain(bounds).fold(0.0, f64::max)
    }
}

/// Local polytope rows in ground coordinates mapped through `rho`.
///
/// Rows: node normalization, four node-edge consistency rows per edge and,
/// for factors of arity >= 3, four factor-edge consistency rows per scope
/// pair. Factor normalization and factor-node consistency follow from these
/// and are left out. Only the listed variables, edges and factor features
/// contribute rows; duplicates after substitution are removed.
fn local_rows(
    model: &Model,
    index: &OvercompleteIndex,
    rho: &dyn Fn(usize) -> usize,
    vars: &[usize],
    edges: &[usize],
    factor_features: &[usize],
) -> Vec<Row> {
    let mut rows = Vec::new();
    let mut seen = HashSet::new();
    let mut push = |row: Row| {
        let row = row.normalized();
        if !row.coeffs.is_empty() && seen.insert(row.key()) {
            rows.push(row);
        }
    };
    for &v in vars {
        push(Row::new(
            vec![(rho(index.node(v, 0)), 1.0), (rho(index.node(v, 1)), 1.0)],
            Sense::Eq,
            1.0,
        ));
    }
    for &e in edges {
        let (u, v) = index.edges()[e];
        for t in 0..2 {
            push(Row::new(
                vec![
                    (rho(index.edge(e, t, 0)), 1.0),
                    (rho(index.edge(e, t, 1)), 1.0),
                    (rho(index.node(u, t)), -1.0),
                ],
                Sense::Eq,
                0.0,
            ));
            push(Row::new(
                vec![
                    (rho(index.edge(e, 0, t)), 1.0),
                    (rho(index.edge(e, 1, t)), 1.0),
                    (rho(index.node(v, t)), -1.0),
                ],
                Sense::Eq,
                0.0,
            ));
        }
    }
    for &j in factor_features {
        let slot = index.factor_slot(j).expect("factor feature has a block");
        let scope = &model.feature(j).scope;
        let k = scope.len();
        for p in 0..k {
            for q in p + 1..k {
                let e = index.edge_id(scope[p], scope[q]).unwrap();
                for tp in 0..2 {
                    for tq in 0..2 {
                        let mut coeffs: Vec<(usize, f64)> = (0..1usize << k)
                            .filter(|&a| {
                                assignment_bit(a, k, p) == tp && assignment_bit(a, k, q) == tq
                            })
                            .map(|a| (rho(index.factor(slot, a)), 1.0))
                            .collect();
                        coeffs.push((rho(index.edge(e, tp, tq)), -1.0));
                        push(Row::new(coeffs, Sense::Eq, 0.0));
                    }
                }
            }
        }
    }
    rows
}

/// The local polytope LP over ground overcomplete coordinates.
pub fn build_ground_lp(model: &Model) -> LinearProgram {
    let index = OvercompleteIndex::new(model);
    let theta = model.to_overcomplete().to_vector(&index);
    let vars: Vec<usize> = (0..model.num_vars()).collect();
    let edges: Vec<usize> = (0..index.edges().len()).collect();
    let factors = index.factor_features().to_vec();
    let mut lp = LinearProgram::new(theta);
    lp.rows = local_rows(model, &index, &|x| x, &vars, &edges, &factors);
    lp
}

/// The local polytope LP over lifted coordinates: the ground rows of orbit
/// representatives with every coordinate replaced by its cell.
pub fn build_lifted_lp(model: &Model, lifted: &LiftedModel) -> LinearProgram {
    let index = &lifted.index;
    let reps = |p: &crate::symmetry::OrbitPartition| -> Vec<usize> {
        p.cells.iter().map(|c| c[0]).collect()
    };
    let factors: Vec<usize> = reps(&lifted.feature_orbits)
        .into_iter()
        .filter(|&j| index.factor_slot(j).is_some())
        .collect();
    let rho = |x: usize| lifted.cells.rho[x];
    let mut lp = LinearProgram::new(lifted.theta_bar.clone());
    lp.rows = local_rows(
        model,
        index,
        &rho,
        &reps(&lifted.node_orbits),
        &reps(&lifted.edge_orbits),
        &factors,
    );
    lp
}

/// Local polytope LP in the ground space, or in the lifted space when a
/// lifted model is given.
pub fn build_local_lp(model: &Model, lifted: Option<&LiftedModel>) -> LinearProgram {
    match lifted {
        Some(l) => build_lifted_lp(model, l),
        None => build_ground_lp(model),
    }
}

/// The uniform pseudomarginal in ground coordinates.
pub fn uniform_point(model: &Model, index: &OvercompleteIndex) -> Vec<f64> {
    let mut tau = vec![0.0; index.len()];
    for v in 0..model.num_vars() {
        tau[index.node(v, 0)] = 0.5;
        tau[index.node(v, 1)] = 0.5;
    }
    let fbase = 2 * model.num_vars();
    for x in tau
        .iter_mut()
        .take(fbase + 4 * index.edges().len())
        .skip(fbase)
    {
        *x = 0.25;
    }
    for (slot, &j) in index.factor_features().iter().enumerate() {
        let w = 1.0 / model.feature(j).table.len() as f64;
        for x in index.factor_range(slot) {
            tau[x] = w;
        }
    }
    tau
}
