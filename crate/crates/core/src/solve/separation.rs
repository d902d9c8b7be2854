//! Cycle inequalities `sum_{e in F} nocut(e) + sum_{e in C \ F} cut(e) >= 1`
//! for closed walks `C` and odd `F`, separated by shortest paths in a
//! mirror graph.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::Serialize;

use crate::lift::{LiftedEdge, LiftedModel, StabilizedGraph};
use crate::model::{Model, OvercompleteIndex};

use super::lp::{Row, Sense};

/// An edge of a separation graph with its weights at the current point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedEdge {
    pub a: usize,
    pub b: usize,
    pub cut: f64,
    pub nocut: f64,
}

/// A closed walk from the source back to itself.
#[derive(Debug, Clone, PartialEq)]
pub struct MirrorWalk {
    /// `(edge index, crosses between copies)`; crossing edges form `F`.
    pub steps: Vec<(usize, bool)>,
    pub weight: f64,
}

impl MirrorWalk {
    pub fn num_crossings(&self) -> usize {
        self.steps.iter().filter(|s| s.1).count()
    }
}

#[derive(PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .0
            .total_cmp(&self.0)
            .then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Shortest walk from copy 1 of `source` to copy 2 in the mirror graph.
///
/// Every edge `{a, b}` gives `a1-b1` and `a2-b2` at its cut weight and
/// `a1-b2`, `a2-b1` at its no-cut weight; a self-loop gives only `a1-a2`.
/// Negative weights are clamped to zero. `None` if copy 2 is unreachable.
pub fn mirror_shortest_path(
    num_nodes: usize,
    edges: &[WeightedEdge],
    source: usize,
) -> Option<MirrorWalk> {
    let mut adj: Vec<Vec<(usize, usize, bool, f64)>> = vec![Vec::new(); 2 * num_nodes];
    for (k, e) in edges.iter().enumerate() {
        let cut = e.cut.max(0.0);
        let nocut = e.nocut.max(0.0);
        for side in 0..2 {
            let (a, b) = (2 * e.a + side, 2 * e.b + side);
            let (a_x, b_x) = (2 * e.a + (1 - side), 2 * e.b + (1 - side));
            if e.a != e.b {
                adj[a].push((b, k, false, cut));
                adj[b].push((a, k, false, cut));
                adj[a].push((b_x, k, true, nocut));
                adj[b].push((a_x, k, true, nocut));
            } else {
                adj[a].push((a_x, k, true, nocut));
            }
        }
    }
    let start = 2 * source;
    let goal = 2 * source + 1;
    let mut dist = vec![f64::INFINITY; 2 * num_nodes];
    let mut prev: Vec<Option<(usize, usize, bool)>> = vec![None; 2 * num_nodes];
    let mut heap = BinaryHeap::new();
    dist[start] = 0.0;
    heap.push(Entry(0.0, start));
    while let Some(Entry(d, u)) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        if u == goal {
            break;
        }
        for &(v, k, crossed, w) in &adj[u] {
            let nd = d + w;
            if nd < dist[v] {
                dist[v] = nd;
                prev[v] = Some((u, k, crossed));
                heap.push(Entry(nd, v));
            }
        }
    }
    if dist[goal].is_infinite() {
        return None;
    }
    let mut steps = Vec::new();
    let mut at = goal;
    while let Some((p, k, crossed)) = prev[at] {
        steps.push((k, crossed));
        at = p;
    }
    steps.reverse();
    Some(MirrorWalk {
        steps,
        weight: dist[goal],
    })
}

/// A violated cycle inequality in the coordinates of some LP.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CycleConstraint {
    /// Source variable of the walk.
    pub root: usize,
    /// `(edge index in the separation graph, in F)`.
    pub steps: Vec<(usize, bool)>,
    /// Left-hand side at the separation point.
    pub lhs: f64,
    #[serde(skip)]
    pub row: Row,
}

impl CycleConstraint {
    pub fn violation(&self) -> f64 {
        1.0 - self.lhs
    }
}

/// A separation graph: edges carry the LP coordinates of their weights.
pub(crate) struct SepGraph<'a> {
    pub num_nodes: usize,
    pub edges: &'a [LiftedEdge],
    /// `(node, variable)` pairs to start walks from.
    pub roots: Vec<(usize, usize)>,
}

fn walk_row(edges: &[LiftedEdge], steps: &[(usize, bool)]) -> Row {
    let mut coeffs = Vec::with_capacity(2 * steps.len());
    for &(k, in_f) in steps {
        let cells = if in_f { edges[k].nocut } else { edges[k].cut };
        coeffs.push((cells[0], 1.0));
        coeffs.push((cells[1], 1.0));
    }
    Row::new(coeffs, Sense::Ge, 1.0).normalized()
}

/// Most violated cycle inequality over all graphs and roots, if any is
/// violated by more than `tol`. Ties go to the earlier root.
pub(crate) fn separate(graphs: &[SepGraph], tau: &[f64], tol: f64) -> Option<CycleConstraint> {
    let mut best: Option<CycleConstraint> = None;
    for g in graphs {
        let weighted: Vec<WeightedEdge> = g
            .edges
            .iter()
            .map(|e| WeightedEdge {
                a: e.a,
                b: e.b,
                cut: tau[e.cut[0]] + tau[e.cut[1]],
                nocut: tau[e.nocut[0]] + tau[e.nocut[1]],
            })
            .collect();
        for &(node, var) in &g.roots {
            let Some(walk) = mirror_shortest_path(g.num_nodes, &weighted, node) else {
                continue;
            };
            let row = walk_row(g.edges, &walk.steps);
            let lhs = row.activity(tau);
            if lhs < 1.0 - tol && best.as_ref().is_none_or(|b| lhs < b.lhs) {
                best = Some(CycleConstraint {
                    root: var,
                    steps: walk.steps,
                    lhs,
                    row,
                });
            }
        }
    }
    best
}

/// Skeleton edges with their ground overcomplete coordinates.
pub(crate) fn ground_edges(index: &OvercompleteIndex) -> Vec<LiftedEdge> {
    index
        .edges()
        .iter()
        .enumerate()
        .map(|(e, &(u, v))| LiftedEdge {
            a: u,
            b: v,
            cut: [index.edge(e, 0, 1), index.edge(e, 1, 0)],
            nocut: [index.edge(e, 0, 0), index.edge(e, 1, 1)],
        })
        .collect()
}

/// Most violated cycle inequality at a ground point `tau`.
pub fn separate_cycles_ground(model: &Model, tau: &[f64], tol: f64) -> Option<CycleConstraint> {
    let index = OvercompleteIndex::new(model);
    let edges = ground_edges(&index);
    let graph = SepGraph {
        num_nodes: model.num_vars(),
        edges: &edges,
        roots: (0..model.num_vars()).map(|v| (v, v)).collect(),
    };
    separate(&[graph], tau, tol)
}

/// Most violated lifted cycle inequality at a lifted point `tau_bar`,
/// searching each stabilized lifted graph from its root.
pub fn separate_cycles_lifted(
    lifted: &LiftedModel,
    stabilized: &[StabilizedGraph],
    tau_bar: &[f64],
    tol: f64,
) -> Option<CycleConstraint> {
    debug_assert_eq!(tau_bar.len(), lifted.num_cells());
    let graphs: Vec<SepGraph> = stabilized
        .iter()
        .map(|s| SepGraph {
            num_nodes: s.node_orbits.num_cells(),
            edges: &s.edges,
            roots: vec![(s.root, s.root_var)],
        })
        .collect();
    separate(&graphs, tau_bar, tol)
}
