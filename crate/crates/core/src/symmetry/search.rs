//! Individualization-refinement search for the automorphism group of a
//! colored factor graph.
//!
//! The first path of the search tree always individualizes the smallest
//! vertex of the target cell and ends in a discrete coloring, the first leaf.
//! Going back up, every level tries each other vertex of its target cell that
//! is not yet known to share an orbit with the first-path vertex, looking for
//! a leaf that maps onto the first leaf by an automorphism. The orbit sizes
//! seen at each level multiply to the group order.

use super::graph::{refine, ColoredFactorGraph};
use super::orbits::DisjointSets;
use super::{verify_generator, GeneratorSet, PermutationPair, SymmetryError};

const VERIFY_SAMPLES: usize = 100;
const VERIFY_SEED: u64 = 0x5eed;

#[derive(Clone, PartialEq)]
struct Invariant {
    hash: u64,
    cell_sizes: Vec<usize>,
}

struct Node {
    colors: Vec<usize>,
    invariant: Invariant,
}

impl Node {
    fn new(g: &ColoredFactorGraph, colors: &[usize]) -> Self {
        let (colors, hash) = refine(g, colors);
        let mut cell_sizes = vec![0; colors.iter().max().map_or(0, |&c| c + 1)];
        for &c in &colors {
            cell_sizes[c] += 1;
        }
        Node {
            colors,
            invariant: Invariant { hash, cell_sizes },
        }
    }

    fn is_discrete(&self) -> bool {
        self.invariant.cell_sizes.iter().all(|&s| s == 1)
    }

    /// First largest non-singleton cell.
    fn target_cell(&self) -> Option<usize> {
        let sizes = &self.invariant.cell_sizes;
        let max = *sizes.iter().max()?;
        (max > 1).then(|| sizes.iter().position(|&s| s == max).unwrap())
    }

    fn members(&self, cell: usize) -> Vec<usize> {
        (0..self.colors.len())
            .filter(|&v| self.colors[v] == cell)
            .collect()
    }

    fn child(&self, g: &ColoredFactorGraph, v: usize) -> Node {
        let mut colors = self.colors.clone();
        colors[v] = self.invariant.cell_sizes.len();
        Node::new(g, &colors)
    }
}

struct Search<'a> {
    g: &'a ColoredFactorGraph,
    /// Invariant of the first-path node at each depth.
    path_invariants: Vec<Invariant>,
    leaf: Vec<usize>,
    generators: Vec<Vec<usize>>,
}

impl Search<'_> {
    /// Depth-first search below `node` (at `depth`) for a leaf equivalent to
    /// the first leaf.
    fn find_leaf_automorphism(&self, node: &Node, depth: usize) -> Option<Vec<usize>> {
        if self.path_invariants.get(depth) != Some(&node.invariant) {
            return None;
        }
        if node.is_discrete() {
            return self.leaf_automorphism(&node.colors);
        }
        let cell = node.target_cell()?;
        for w in node.members(cell) {
            let child = node.child(self.g, w);
            if let Some(sigma) = self.find_leaf_automorphism(&child, depth + 1) {
                return Some(sigma);
            }
        }
        None
    }

    /// The vertex map sending the first leaf onto `colors`, if it is an
    /// automorphism.
    fn leaf_automorphism(&self, colors: &[usize]) -> Option<Vec<usize>> {
        let n = colors.len();
        let mut by_color = vec![0; n];
        for (v, &c) in colors.iter().enumerate() {
            by_color[c] = v;
        }
        let sigma: Vec<usize> = self.leaf.iter().map(|&c| by_color[c]).collect();
        is_automorphism(self.g, &sigma).then_some(sigma)
    }
}

fn is_automorphism(g: &ColoredFactorGraph, sigma: &[usize]) -> bool {
    let colors = g.colors();
    (0..sigma.len()).all(|a| {
        if colors[a] != colors[sigma[a]] {
            return false;
        }
        let mut mapped: Vec<(usize, usize)> = g
            .neighbors(a)
            .iter()
            .map(|&(b, ec)| (sigma[b], ec))
            .collect();
        mapped.sort_unstable();
        mapped == g.neighbors(sigma[a])
    })
}

/// Generators of the color- and edge-color-preserving automorphism group.
pub fn search_automorphisms(g: &ColoredFactorGraph) -> GeneratorSet {
    search_with_colors(g, g.colors())
}

fn search_with_colors(g: &ColoredFactorGraph, initial: &[usize]) -> GeneratorSet {
    let root = Node::new(g, initial);
    let mut path = vec![root];
    let mut chosen = Vec::new();
    while let Some(cell) = path.last().unwrap().target_cell() {
        let top = path.last().unwrap();
        let v = top.members(cell)[0];
        let next = top.child(g, v);
        chosen.push((cell, v));
        path.push(next);
    }
    let mut search = Search {
        g,
        path_invariants: path.iter().map(|p| p.invariant.clone()).collect(),
        leaf: path.last().unwrap().colors.clone(),
        generators: Vec::new(),
    };

    let num_nodes = g.num_nodes();
    let mut order: Option<u128> = Some(1);
    for level in (0..chosen.len()).rev() {
        let (cell, v) = chosen[level];
        let node = &path[level];
        // orbits of the pointwise stabilizer of the vertices chosen above
        let mut orbits = DisjointSets::new(num_nodes);
        for s in &search.generators {
            for (a, &b) in s.iter().enumerate() {
                orbits.union(a, b);
            }
        }
        for w in node.members(cell) {
            if orbits.find(w) == orbits.find(v) {
                continue;
            }
            let child = node.child(g, w);
            if let Some(sigma) = search.find_leaf_automorphism(&child, level + 1) {
                for (a, &b) in sigma.iter().enumerate() {
                    orbits.union(a, b);
                }
                search.generators.push(sigma);
            }
        }
        let size = orbits.set_size(v) as u128;
        order = order.and_then(|o| o.checked_mul(size));
    }

    let n = g.num_vars();
    let generators: Vec<PermutationPair> = search
        .generators
        .iter()
        .map(|s| PermutationPair {
            pi: s[..n].to_vec(),
            gamma: s[n..].iter().map(|&f| f - n).collect(),
        })
        .filter(|p| !p.is_identity())
        .collect();
    for p in &generators {
        debug_assert!(
            verify_generator(g.model(), p, VERIFY_SAMPLES, VERIFY_SEED).passed(),
            "search produced an invalid generator"
        );
    }
    let generators = generators
        .into_iter()
        .filter(|p| verify_generator(g.model(), p, VERIFY_SAMPLES, VERIFY_SEED).passed())
        .collect();
    GeneratorSet {
        generators,
        group_order: order,
    }
}

/// Generators of the subgroup fixing `fixed_var`.
pub fn stabilizer_generators(
    g: &ColoredFactorGraph,
    fixed_var: usize,
) -> Result<GeneratorSet, SymmetryError> {
    if fixed_var >= g.num_vars() {
        return Err(SymmetryError::VarOutOfRange {
            var: fixed_var,
            num_vars: g.num_vars(),
        });
    }
    let recolored = g.with_individualized(fixed_var);
    Ok(search_with_colors(&recolored, recolored.colors()))
}
