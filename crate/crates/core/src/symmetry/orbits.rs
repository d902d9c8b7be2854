use serde::Serialize;

use crate::model::{assignment_bit, Model, OvercompleteIndex};

use super::{GeneratorSet, PermutationPair, SymmetryError};

/// Union-find with union by size and path halving.
#[derive(Debug, Clone)]
pub struct DisjointSets {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl DisjointSets {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns true if the two sets were distinct.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return false;
        }
        if self.size[a] < self.size[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        self.size[a] += self.size[b];
        true
    }

    pub fn set_size(&mut self, x: usize) -> usize {
        let r = self.find(x);
        self.size[r]
    }

    /// Cells ordered by their minimum element, members ascending.
    pub fn cells(&mut self) -> Vec<Vec<usize>> {
        let n = self.len();
        let mut slot = vec![usize::MAX; n];
        let mut cells: Vec<Vec<usize>> = Vec::new();
        for x in 0..n {
            let r = self.find(x);
            if slot[r] == usize::MAX {
                slot[r] = cells.len();
                cells.push(Vec::new());
            }
            cells[slot[r]].push(x);
        }
        cells
    }
}

/// What set an orbit partition lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    Vars,
    Features,
    /// Skeleton edges in sorted order.
    Edges,
    /// Element `2e` is the arc `(u, v)` of edge `e = (u, v)`, `2e + 1` is `(v, u)`.
    Arcs,
    /// Factor-block coordinates of the overcomplete layout, numbered from zero.
    FactorAssignments,
}

impl Domain {
    pub fn name(self) -> &'static str {
        match self {
            Domain::Vars => "vars",
            Domain::Features => "features",
            Domain::Edges => "edges",
            Domain::Arcs => "arcs",
            Domain::FactorAssignments => "factor_assignments",
        }
    }
}

impl std::str::FromStr for Domain {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "vars" => Domain::Vars,
            "features" => Domain::Features,
            "edges" => Domain::Edges,
            "arcs" => Domain::Arcs,
            "factor_assignments" | "factor-assignments" => Domain::FactorAssignments,
            _ => return Err(format!("unknown domain `{s}`")),
        })
    }
}

/// A partition of a domain into orbits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrbitPartition {
    pub domain: Domain,
    pub cell_of: Vec<usize>,
    pub cells: Vec<Vec<usize>>,
}

impl OrbitPartition {
    pub fn from_cells(domain: Domain, num_elements: usize, mut cells: Vec<Vec<usize>>) -> Self {
        for c in &mut cells {
            c.sort_unstable();
        }
        cells.sort_unstable_by_key(|c| c[0]);
        let mut cell_of = vec![usize::MAX; num_elements];
        for (i, c) in cells.iter().enumerate() {
            for &x in c {
                cell_of[x] = i;
            }
        }
        debug_assert!(cell_of.iter().all(|&c| c != usize::MAX));
        Self {
            domain,
            cell_of,
            cells,
        }
    }

    pub fn discrete(domain: Domain, num_elements: usize) -> Self {
        Self::from_cells(
            domain,
            num_elements,
            (0..num_elements).map(|x| vec![x]).collect(),
        )
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn num_elements(&self) -> usize {
        self.cell_of.len()
    }

    pub fn representative(&self, cell: usize) -> usize {
        self.cells[cell][0]
    }

    /// Whether every cell of `self` lies inside a cell of `other`.
    pub fn is_finer_than(&self, other: &OrbitPartition) -> bool {
        self.num_elements() == other.num_elements()
            && self
                .cells
                .iter()
                .all(|c| c.iter().all(|&x| other.cell_of[x] == other.cell_of[c[0]]))
    }
}

/// Image of every overcomplete coordinate under `(pi, gamma)`.
///
/// Node `v:t` goes to `pi(v):t`, pair values follow their variables, and the
/// block of feature `j` goes to the block of `gamma(j)` with each scope
/// variable's value carried to its image.
pub fn permute_coordinates(
    model: &Model,
    index: &OvercompleteIndex,
    p: &PermutationPair,
) -> Result<Vec<usize>, SymmetryError> {
    check_sizes(model, p)?;
    let mut img = vec![0; index.len()];
    let n = model.num_vars();
    for v in 0..n {
        for t in 0..2 {
            img[index.node(v, t)] = index.node(p.pi[v], t);
        }
    }
    for (e, &(u, v)) in index.edges().iter().enumerate() {
        let (pu, pv) = (p.pi[u], p.pi[v]);
        let e2 = index
            .edge_id(pu, pv)
            .ok_or(SymmetryError::NotAnAutomorphism {
                reason: format!("edge ({u},{v}) maps to a non-edge"),
            })?;
        for tu in 0..2 {
            for tv in 0..2 {
                img[index.edge(e, tu, tv)] = if pu < pv {
                    index.edge(e2, tu, tv)
                } else {
                    index.edge(e2, tv, tu)
                };
            }
        }
    }
    for (slot, &j) in index.factor_features().iter().enumerate() {
        let j2 = p.gamma[j];
        let slot2 = index
            .factor_slot(j2)
            .ok_or(SymmetryError::NotAnAutomorphism {
                reason: format!("feature {j} maps to feature {j2} of different arity"),
            })?;
        let scope = &model.feature(j).scope;
        let scope2 = &model.feature(j2).scope;
        let k = scope.len();
        if scope2.len() != k {
            return Err(SymmetryError::NotAnAutomorphism {
                reason: format!("feature {j} maps to feature {j2} of different arity"),
            });
        }
        let target: Vec<usize> = scope
            .iter()
            .map(|&s| {
                scope2.iter().position(|&s2| s2 == p.pi[s]).ok_or(
                    SymmetryError::NotAnAutomorphism {
                        reason: format!("scope of feature {j} does not map onto feature {j2}"),
                    },
                )
            })
            .collect::<Result<_, _>>()?;
        for a in 0..1usize << k {
            let a2 = (0..k).fold(0usize, |acc, pos| {
                acc | (assignment_bit(a, k, pos) << (k - 1 - target[pos]))
            });
            img[index.factor(slot, a)] = index.factor(slot2, a2);
        }
    }
    Ok(img)
}

fn check_sizes(model: &Model, p: &PermutationPair) -> Result<(), SymmetryError> {
    if p.pi.len() != model.num_vars() || p.gamma.len() != model.num_features() {
        return Err(SymmetryError::DomainMismatch {
            vars: (p.pi.len(), model.num_vars()),
            features: (p.gamma.len(), model.num_features()),
        });
    }
    Ok(())
}

/// Orbit partition of `domain` under the group generated by `gens`.
pub fn orbits_of(
    gens: &GeneratorSet,
    domain: Domain,
    model: &Model,
) -> Result<OrbitPartition, SymmetryError> {
    for g in &gens.generators {
        check_sizes(model, g)?;
    }
    match domain {
        Domain::Vars => Ok(close(model.num_vars(), domain, gens, |g, v| g.pi[v])),
        Domain::Features => Ok(close(model.num_features(), domain, gens, |g, j| g.gamma[j])),
        _ => {
            let index = OvercompleteIndex::new(model);
            let images = gens
                .generators
                .iter()
                .map(|g| permute_coordinates(model, &index, g))
                .collect::<Result<Vec<_>, _>>()?;
            let base = 2 * index.num_vars();
            let num_edges = index.edges().len();
            let fbase = base + 4 * num_edges;
            let (count, coord): (usize, Box<dyn Fn(usize) -> usize>) = match domain {
                Domain::Edges => (num_edges, Box::new(|e| index.edge(e, 0, 0))),
                Domain::Arcs => (
                    2 * num_edges,
                    Box::new(|x| index.edge(x / 2, x % 2, 1 - x % 2)),
                ),
                _ => (index.len() - fbase, Box::new(move |x| fbase + x)),
            };
            let mut inverse = std::collections::HashMap::new();
            for x in 0..count {
                inverse.insert(coord(x), x);
            }
            let mut ds = DisjointSets::new(count);
            for img in &images {
                for x in 0..count {
                    ds.union(x, inverse[&img[coord(x)]]);
                }
            }
            Ok(OrbitPartition::from_cells(domain, count, ds.cells()))
        }
    }
}

fn close(
    n: usize,
    domain: Domain,
    gens: &GeneratorSet,
    act: impl Fn(&PermutationPair, usize) -> usize,
) -> OrbitPartition {
    let mut ds = DisjointSets::new(n);
    for g in &gens.generators {
        for x in 0..n {
            ds.union(x, act(g, x));
        }
    }
    OrbitPartition::from_cells(domain, n, ds.cells())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disjoint_sets_basics() {
        let mut ds = DisjointSets::new(5);
        assert!(ds.union(0, 3));
        assert!(!ds.union(3, 0));
        ds.union(4, 1);
        assert_eq!(ds.cells(), vec![vec![0, 3], vec![1, 4], vec![2]]);
        assert_eq!(ds.set_size(3), 2);
    }

    #[test]
    fn partition_refinement_relation() {
        let fine = OrbitPartition::from_cells(Domain::Vars, 4, vec![vec![0], vec![1, 2], vec![3]]);
        let coarse = OrbitPartition::from_cells(Domain::Vars, 4, vec![vec![0, 3], vec![2, 1]]);
        assert!(fine.is_finer_than(&coarse));
        assert!(!coarse.is_finer_than(&fine));
        assert_eq!(coarse.representative(1), 1);
    }
}
