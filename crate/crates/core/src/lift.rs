//! Lifted models: orbit cells of overcomplete coordinates, the lifted
//! parameters, and the maps between ground and lifted vectors.
//!
//! Lifted coordinates hold the common value of a cell (the mean of a
//! symmetric ground vector over the cell), and `theta_bar` sums the ground
//! parameters of the cell, so `<theta_bar, tau_bar> = <theta°, D tau_bar>`
//! where `D` broadcasts cell values to members.

use serde::Serialize;
use thiserror::Error;

use crate::model::{Model, OvercompleteIndex};
use crate::symmetry::{
    orbits_of, Domain, GeneratorSet, OrbitPartition, SymmetryError, SymmetrySource,
};

const THETA_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LiftError {
    #[error("cell not theta-constant: coordinates {a} and {b} have {va} and {vb}")]
    NotThetaConstant {
        a: usize,
        b: usize,
        va: f64,
        vb: f64,
    },
    #[error("vector has length {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Symmetry(#[from] SymmetryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CellKind {
    Node {
        orbit: usize,
        value: usize,
    },
    /// `value` 0 for the `00` cell, 1 for the `11` cell.
    Edge {
        orbit: usize,
        value: usize,
    },
    Arc {
        orbit: usize,
    },
    Factor {
        orbit: usize,
    },
}

/// Lifted coordinates and the map `rho` from ground coordinates to them.
#[derive(Debug, Clone)]
pub struct CellIndex {
    pub rho: Vec<usize>,
    pub kinds: Vec<CellKind>,
    pub members: Vec<Vec<usize>>,
}

impl CellIndex {
    pub fn len(&self) -> usize {
        self.kinds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kinds.is_empty()
    }

    pub fn ground_len(&self) -> usize {
        self.rho.len()
    }

    pub fn size(&self, cell: usize) -> usize {
        self.members[cell].len()
    }

    pub fn representative(&self, cell: usize) -> usize {
        self.members[cell][0]
    }
}

/// An edge of a lifted graph, with the lifted coordinates that make up its
/// cut and no-cut weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LiftedEdge {
    pub a: usize,
    pub b: usize,
    /// Cells of the two arcs `(u, v)` and `(v, u)`; equal when self-paired.
    pub cut: [usize; 2],
    /// Cells of the `00` and `11` values.
    pub nocut: [usize; 2],
}

/// The lifted graph under the subgroup fixing one variable.
#[derive(Debug, Clone)]
pub struct StabilizedGraph {
    pub root_var: usize,
    /// Node of the root in this graph; its cell is `{root_var}`.
    pub root: usize,
    pub node_orbits: OrbitPartition,
    pub edges: Vec<LiftedEdge>,
}

#[derive(Debug, Clone)]
pub struct LiftedModel {
    pub index: OvercompleteIndex,
    pub node_orbits: OrbitPartition,
    pub edge_orbits: OrbitPartition,
    pub arc_orbits: OrbitPartition,
    pub factor_orbits: OrbitPartition,
    pub feature_orbits: OrbitPartition,
    /// Per edge orbit, whether `(u, v)` and `(v, u)` share an arc orbit.
    pub self_paired: Vec<bool>,
    pub cells: CellIndex,
    pub theta_bar: Vec<f64>,
    /// Ground overcomplete parameters.
    pub theta_ground: Vec<f64>,
    /// One edge per edge orbit, between node orbits.
    pub lifted_graph: Vec<LiftedEdge>,
}

impl LiftedModel {
    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    /// `lifted_graph`-style edges for the orbits of `edges` under some group,
    /// with endpoints numbered by `nodes`.
    fn edges_for(&self, nodes: &OrbitPartition, edges: &OrbitPartition) -> Vec<LiftedEdge> {
        edges
            .cells
            .iter()
            .map(|cell| {
                let e = cell[0];
                let (u, v) = self.index.edges()[e];
                let rho = &self.cells.rho;
                LiftedEdge {
                    a: nodes.cell_of[u],
                    b: nodes.cell_of[v],
                    cut: [rho[self.index.edge(e, 0, 1)], rho[self.index.edge(e, 1, 0)]],
                    nocut: [rho[self.index.edge(e, 0, 0)], rho[self.index.edge(e, 1, 1)]],
                }
            })
            .collect()
    }

    /// Stabilized lifted graphs, one per node orbit, rooted at its
    /// representative.
    pub fn stabilized_graphs(
        &self,
        model: &Model,
        source: &dyn SymmetrySource,
    ) -> Result<Vec<StabilizedGraph>, LiftError> {
        self.node_orbits
            .cells
            .iter()
            .map(|cell| {
                let i = cell[0];
                let gens = source.stabilizer(i)?;
                let node_orbits = orbits_of(&gens, Domain::Vars, model)?;
                let edge_orbits = orbits_of(&gens, Domain::Edges, model)?;
                let edges = self.edges_for(&node_orbits, &edge_orbits);
                Ok(StabilizedGraph {
                    root_var: i,
                    root: node_orbits.cell_of[i],
                    node_orbits,
                    edges,
                })
            })
            .collect()
    }
}

/// Builds the lifted model of `model` under the group generated by `gens`.
pub fn build_lifted_model(model: &Model, gens: &GeneratorSet) -> Result<LiftedModel, LiftError> {
    let index = OvercompleteIndex::new(model);
    let node_orbits = orbits_of(gens, Domain::Vars, model)?;
    let edge_orbits = orbits_of(gens, Domain::Edges, model)?;
    let arc_orbits = orbits_of(gens, Domain::Arcs, model)?;
    let factor_orbits = orbits_of(gens, Domain::FactorAssignments, model)?;
    let feature_orbits = orbits_of(gens, Domain::Features, model)?;

    let mut kinds = Vec::new();
    let mut members: Vec<Vec<usize>> = Vec::new();
    for (o, cell) in node_orbits.cells.iter().enumerate() {
        for t in 0..2 {
            kinds.push(CellKind::Node { orbit: o, value: t });
            members.push(cell.iter().map(|&v| index.node(v, t)).collect());
        }
    }
    for (o, cell) in edge_orbits.cells.iter().enumerate() {
        for t in 0..2 {
            kinds.push(CellKind::Edge { orbit: o, value: t });
            members.push(cell.iter().map(|&e| index.edge(e, t, t)).collect());
        }
    }
    for (o, cell) in arc_orbits.cells.iter().enumerate() {
        kinds.push(CellKind::Arc { orbit: o });
        members.push(
            cell.iter()
                .map(|&x| index.edge(x / 2, x % 2, 1 - x % 2))
                .collect(),
        );
    }
    let fbase = 2 * index.num_vars() + 4 * index.edges().len();
    for (o, cell) in factor_orbits.cells.iter().enumerate() {
        kinds.push(CellKind::Factor { orbit: o });
        members.push(cell.iter().map(|&x| fbase + x).collect());
    }
    for m in &mut members {
        m.sort_unstable();
    }
    let mut rho = vec![usize::MAX; index.len()];
    for (c, m) in members.iter().enumerate() {
        for &x in m {
            rho[x] = c;
        }
    }
    debug_assert!(rho.iter().all(|&c| c != usize::MAX));

    let theta_ground = model.to_overcomplete().to_vector(&index);
    let mut theta_bar = Vec::with_capacity(members.len());
    for m in &members {
        let first = theta_ground[m[0]];
        for &x in &m[1..] {
            let v = theta_ground[x];
            if (v - first).abs() > THETA_TOL * first.abs().max(1.0) {
                return Err(LiftError::NotThetaConstant {
                    a: m[0],
                    b: x,
                    va: first,
                    vb: v,
                });
            }
        }
        theta_bar.push(m.iter().map(|&x| theta_ground[x]).sum());
    }

    let self_paired = edge_orbits
        .cells
        .iter()
        .map(|cell| arc_orbits.cell_of[2 * cell[0]] == arc_orbits.cell_of[2 * cell[0] + 1])
        .collect();

    let mut lifted = LiftedModel {
        index,
        node_orbits,
        edge_orbits,
        arc_orbits,
        factor_orbits,
        feature_orbits,
        self_paired,
        cells: CellIndex {
            rho,
            kinds,
            members,
        },
        theta_bar,
        theta_ground,
        lifted_graph: Vec::new(),
    };
    lifted.lifted_graph = lifted.edges_for(&lifted.node_orbits, &lifted.edge_orbits);
    Ok(lifted)
}

/// Within-cell means of a ground vector.
pub fn lift_vector(tau: &[f64], cells: &CellIndex) -> Result<Vec<f64>, LiftError> {
    if tau.len() != cells.ground_len() {
        return Err(LiftError::DimensionMismatch {
            expected: cells.ground_len(),
            got: tau.len(),
        });
    }
    Ok(cells
        .members
        .iter()
        .map(|m| m.iter().map(|&x| tau[x]).sum::<f64>() / m.len() as f64)
        .collect())
}

/// Broadcasts each cell value to the cell's members.
pub fn unlift_vector(tau_bar: &[f64], cells: &CellIndex) -> Result<Vec<f64>, LiftError> {
    if tau_bar.len() != cells.len() {
        return Err(LiftError::DimensionMismatch {
            expected: cells.len(),
            got: tau_bar.len(),
        });
    }
    Ok(cells.rho.iter().map(|&c| tau_bar[c]).collect())
}
