use std::collections::hash_map::DefaultHasher;
use std::collections::BTreeMap;
use std::hash::{Hash, Hasher};

use crate::model::Model;

use super::canonical::{canonicalize_feature, CanonicalFeature};

/// Bipartite graph of variable nodes `0..n` and factor nodes `n..n+m`.
///
/// Variable nodes share color 0. Factor nodes are colored by their canonical
/// table together with their tie class. The edge between a factor and the
/// variable at scope position `p` carries the position class of `p` in the
/// canonical argument order, so arguments that can be interchanged without
/// changing the table share a color.
#[derive(Debug, Clone)]
pub struct ColoredFactorGraph {
    num_vars: usize,
    num_factors: usize,
    colors: Vec<usize>,
    /// Sorted `(neighbor, edge color)` lists.
    adjacency: Vec<Vec<(usize, usize)>>,
    canonical: Vec<CanonicalFeature>,
    model: Model,
}

impl ColoredFactorGraph {
    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_factors(&self) -> usize {
        self.num_factors
    }

    pub fn num_nodes(&self) -> usize {
        self.num_vars + self.num_factors
    }

    pub fn factor_node(&self, feature: usize) -> usize {
        self.num_vars + feature
    }

    /// Initial node colors.
    pub fn colors(&self) -> &[usize] {
        &self.colors
    }

    pub fn num_colors(&self) -> usize {
        self.colors.iter().max().map_or(0, |&c| c + 1)
    }

    pub fn neighbors(&self, node: usize) -> &[(usize, usize)] {
        &self.adjacency[node]
    }

    pub fn num_edges(&self) -> usize {
        self.adjacency[self.num_vars..].iter().map(Vec::len).sum()
    }

    pub fn canonical(&self, feature: usize) -> &CanonicalFeature {
        &self.canonical[feature]
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    /// Same graph with node `node` given a color of its own.
    pub(crate) fn with_individualized(&self, node: usize) -> Self {
        let mut g = self.clone();
        g.colors[node] = g.num_colors();
        g
    }
}

pub fn build_colored_factor_graph(model: &Model) -> ColoredFactorGraph {
    let n = model.num_vars();
    let m = model.num_features();
    let canonical: Vec<CanonicalFeature> =
        model.features().iter().map(canonicalize_feature).collect();
    let mut keys = BTreeMap::new();
    for (j, c) in canonical.iter().enumerate() {
        keys.insert((c.table.len(), c.table_key(), model.tie_class_of(j)), 0);
    }
    for (id, slot) in keys.values_mut().enumerate() {
        *slot = id + 1;
    }
    let mut colors = vec![0; n + m];
    let mut adjacency = vec![Vec::new(); n + m];
    for (j, c) in canonical.iter().enumerate() {
        colors[n + j] = keys[&(c.table.len(), c.table_key(), model.tie_class_of(j))];
        for (pos, &v) in model.feature(j).scope.iter().enumerate() {
            let ec = c.class_of_scope_position(pos);
            adjacency[n + j].push((v, ec));
            adjacency[v].push((n + j, ec));
        }
    }
    for a in &mut adjacency {
        a.sort_unstable();
    }
    ColoredFactorGraph {
        num_vars: n,
        num_factors: m,
        colors,
        adjacency,
        canonical,
        model: model.clone(),
    }
}

/// Stable refinement of `g`'s initial coloring.
pub fn refine_colors(g: &ColoredFactorGraph) -> Vec<usize> {
    refine(g, g.colors()).0
}

/// Refines `colors` to the coarsest equitable coloring below it.
///
/// New colors are ranks of `(old color, sorted neighbor signature)`, so the
/// result depends only on the isomorphism type of the colored graph. The
/// returned hash summarizes every round and serves as a search invariant.
pub(crate) fn refine(g: &ColoredFactorGraph, colors: &[usize]) -> (Vec<usize>, u64) {
    let mut colors = colors.to_vec();
    let mut count = count_distinct(&colors);
    let mut hasher = DefaultHasher::new();
    loop {
        let sigs: Vec<(usize, Vec<(usize, usize)>)> = (0..colors.len())
            .map(|v| {
                let mut s: Vec<(usize, usize)> = g.adjacency[v]
                    .iter()
                    .map(|&(u, ec)| (colors[u], ec))
                    .collect();
                s.sort_unstable();
                (colors[v], s)
            })
            .collect();
        let mut distinct: Vec<&(usize, Vec<(usize, usize)>)> = sigs.iter().collect();
        distinct.sort_unstable();
        distinct.dedup();
        distinct.hash(&mut hasher);
        let next: Vec<usize> = sigs
            .iter()
            .map(|s| distinct.binary_search(&s).unwrap())
            .collect();
        let next_count = distinct.len();
        colors = next;
        if next_count == count {
            break;
        }
        count = next_count;
    }
    (colors, hasher.finish())
}

fn count_distinct(colors: &[usize]) -> usize {
    let mut c = colors.to_vec();
    c.sort_unstable();
    c.dedup();
    c.len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn var_classes(g: &ColoredFactorGraph, colors: &[usize]) -> Vec<Vec<usize>> {
        let mut by: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (v, &c) in colors.iter().enumerate().take(g.num_vars()) {
            by.entry(c).or_default().push(v);
        }
        let mut cells: Vec<Vec<usize>> = by.into_values().collect();
        cells.sort();
        cells
    }

    #[test]
    fn ex1_factor_colors() {
        let g = build_colored_factor_graph(&fixtures::ex1());
        assert_eq!(g.num_nodes(), 9);
        let c = g.colors();
        assert!(c[..4].iter().all(|&x| x == 0));
        let f = |j: usize| c[g.factor_node(j)];
        assert_eq!(f(0), f(1));
        assert_eq!(f(0), f(3));
        assert_eq!(f(0), f(4));
        assert_ne!(f(0), f(2));
        // the product factor is symmetric, the others are not
        let ec: Vec<usize> = g.neighbors(g.factor_node(2)).iter().map(|e| e.1).collect();
        assert_eq!(ec, vec![0, 0]);
        let ec: Vec<usize> = g.neighbors(g.factor_node(0)).iter().map(|e| e.1).collect();
        assert_ne!(ec[0], ec[1]);
        // the first argument of a(1 - b) is the variable at value 1
        assert_eq!(g.canonical(3).order, vec![1, 0]);
    }

    #[test]
    fn separate_tie_class_keeps_coloring() {
        let m = fixtures::ex1();
        let tied = Model::new(
            4,
            m.features().to_vec(),
            vec![0, 0, 1, 0, 0],
            vec![1.0, 1.0],
        )
        .unwrap();
        let a = refine_colors(&build_colored_factor_graph(&m));
        let b = refine_colors(&build_colored_factor_graph(&tied));
        assert_eq!(a, b);
    }

    #[test]
    fn single_unary() {
        let g = build_colored_factor_graph(&fixtures::unary(0.7));
        assert_eq!((g.num_vars(), g.num_factors(), g.num_edges()), (1, 1, 1));
    }

    #[test]
    fn ex1_refinement_splits_vars() {
        let g = build_colored_factor_graph(&fixtures::ex1());
        let c = refine_colors(&g);
        assert_eq!(var_classes(&g, &c), vec![vec![0, 3], vec![1, 2]]);
    }

    #[test]
    fn frucht_refinement_is_one_class() {
        let g = build_colored_factor_graph(&fixtures::frucht());
        let c = refine_colors(&g);
        assert_eq!(var_classes(&g, &c).len(), 1);
    }

    #[test]
    fn discrete_coloring_is_stable() {
        let g = build_colored_factor_graph(&fixtures::ex1());
        let colors: Vec<usize> = (0..g.num_nodes()).collect();
        let (c, _) = refine(&g, &colors);
        assert_eq!(c, colors);
    }
}
