//! Brute-force ground truth for small models.

use std::collections::HashMap;

use serde::Serialize;
use thiserror::Error;

use crate::model::{Model, OvercompleteIndex};
use crate::symmetry::{permute_table, DisjointSets, GeneratorSet, PermutationPair};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("model has {n} variables, enumeration limit is {limit}")]
    TooLarge { n: usize, limit: usize },
}

/// Scores within this relative distance of the maximum count as maximal.
const TIE_TOL: f64 = 1e-9;

fn check_limit(n: usize, limit: usize) -> Result<(), OracleError> {
    if n > limit || n >= 64 {
        return Err(OracleError::TooLarge { n, limit });
    }
    Ok(())
}

/// Configuration with `x_i` = bit `i` of `bits`.
pub fn config_of(bits: u64, n: usize) -> Vec<bool> {
    (0..n).map(|i| bits >> i & 1 == 1).collect()
}

pub fn bits_of(x: &[bool]) -> u64 {
    x.iter()
        .enumerate()
        .fold(0, |acc, (i, &b)| acc | (b as u64) << i)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExactResult {
    pub map_value: f64,
    /// All maximizing configurations, in increasing bit order.
    pub argmax: Vec<Vec<bool>>,
    /// Expected overcomplete indicator vector.
    pub mean_params: Vec<f64>,
    pub log_partition: f64,
}

/// Exact MAP, log-partition and mean parameters by enumerating all `2^n`
/// configurations.
pub fn exact_enumerate(model: &Model, limit: usize) -> Result<ExactResult, OracleError> {
    let n = model.num_vars();
    check_limit(n, limit)?;
    let index = OvercompleteIndex::new(model);
    let scores: Vec<f64> = (0..1u64 << n)
        .map(|b| model.score(&config_of(b, n)).expect("length matches"))
        .collect();
    let map_value = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tie = TIE_TOL * map_value.abs().max(1.0);
    let argmax = (0..1u64 << n)
        .filter(|&b| scores[b as usize] >= map_value - tie)
        .map(|b| config_of(b, n))
        .collect();
    let z: f64 = scores.iter().map(|s| (s - map_value).exp()).sum();
    let log_partition = map_value + z.ln();
    let mut mean_params = vec![0.0; index.len()];
    for (b, s) in scores.iter().enumerate() {
        let p = (s - log_partition).exp();
        let x = config_of(b as u64, n);
        for (k, v) in index.indicator(model, &x).into_iter().enumerate() {
            if v != 0.0 {
                mean_params[k] += p * v;
            }
        }
    }
    Ok(ExactResult {
        map_value,
        argmax,
        mean_params,
        log_partition,
    })
}

/// An orbit of configurations under a group.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigurationOrbit {
    /// Members as bit masks, increasing.
    pub members: Vec<u64>,
    /// Objective at the feature centroid, i.e. the mean score of the members.
    pub value: f64,
}

impl ConfigurationOrbit {
    /// Mean overcomplete indicator vector of the members.
    pub fn centroid(&self, model: &Model, index: &OvercompleteIndex) -> Vec<f64> {
        let mut c = vec![0.0; index.len()];
        for &b in &self.members {
            let x = config_of(b, model.num_vars());
            for (k, v) in index.indicator(model, &x).into_iter().enumerate() {
                c[k] += v;
            }
        }
        let size = self.members.len() as f64;
        c.iter_mut().for_each(|v| *v /= size);
        c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigurationOrbits {
    /// Orbits ordered by smallest member.
    pub orbits: Vec<ConfigurationOrbit>,
    /// Largest centroid objective over the orbits.
    pub centroid_max: f64,
    pub map_value: f64,
}

/// Orbits of `{0,1}^n` under the group generated by `gens`, with centroid
/// objectives.
pub fn configuration_orbits(
    model: &Model,
    gens: &GeneratorSet,
    limit: usize,
) -> Result<ConfigurationOrbits, OracleError> {
    let n = model.num_vars();
    check_limit(n, limit)?;
    let total = 1usize << n;
    let mut ds = DisjointSets::new(total);
    for g in &gens.generators {
        for b in 0..total {
            let image = bits_of(&g.act_on_config(&config_of(b as u64, n)));
            ds.union(b, image as usize);
        }
    }
    let scores: Vec<f64> = (0..total as u64)
        .map(|b| model.score(&config_of(b, n)).expect("length matches"))
        .collect();
    let map_value = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let orbits: Vec<ConfigurationOrbit> = ds
        .cells()
        .into_iter()
        .map(|cell| {
            let value = cell.iter().map(|&b| scores[b]).sum::<f64>() / cell.len() as f64;
            ConfigurationOrbit {
                members: cell.into_iter().map(|b| b as u64).collect(),
                value,
            }
        })
        .collect();
    let centroid_max = orbits
        .iter()
        .map(|o| o.value)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(ConfigurationOrbits {
        orbits,
        centroid_max,
        map_value,
    })
}

/// Feature as a function: sorted scope, table in that order, tie class.
/// Sorted scope, table bits in sorted-scope order, tie class.
type FunctionKey = (Vec<usize>, Vec<u64>, usize);

fn function_key(scope: &[usize], table: &[f64], tie: usize) -> FunctionKey {
    let mut order: Vec<usize> = (0..scope.len()).collect();
    order.sort_by_key(|&p| scope[p]);
    let sorted: Vec<usize> = order.iter().map(|&p| scope[p]).collect();
    let t = permute_table(table, &order);
    (sorted, t.iter().map(|v| v.to_bits()).collect(), tie)
}

fn next_permutation(p: &mut [usize]) -> bool {
    let Some(i) = (1..p.len()).rev().find(|&i| p[i - 1] < p[i]) else {
        return false;
    };
    let j = (i..p.len()).rev().find(|&j| p[j] > p[i - 1]).unwrap();
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// Every automorphism of `model` respecting its tie classes, found by trying
/// all `n!` variable permutations. One feature permutation is reported per
/// variable permutation; identical features make others equivalent.
pub fn exhaustive_automorphisms(
    model: &Model,
    limit: usize,
) -> Result<Vec<PermutationPair>, OracleError> {
    let n = model.num_vars();
    check_limit(n, limit)?;
    let m = model.num_features();
    let mut by_key: HashMap<_, Vec<usize>> = HashMap::new();
    for k in 0..m {
        let f = model.feature(k);
        by_key
            .entry(function_key(&f.scope, &f.table, model.tie_class_of(k)))
            .or_default()
            .push(k);
    }
    let configs: Vec<Vec<bool>> = (0..1u64 << n).map(|b| config_of(b, n)).collect();
    let mut out = Vec::new();
    let mut pi: Vec<usize> = (0..n).collect();
    loop {
        if let Some(gamma) = match_features(model, &pi, &by_key) {
            let p = PermutationPair {
                pi: pi.clone(),
                gamma,
            };
            let holds = configs.iter().all(|x| {
                let xp = p.act_on_config(x);
                (0..m).all(|j| {
                    model.feature(j).eval(&xp).to_bits()
                        == model.feature(p.gamma[j]).eval(x).to_bits()
                })
            });
            if holds {
                out.push(p);
            }
        }
        if !next_permutation(&mut pi) {
            break;
        }
    }
    Ok(out)
}

/// `gamma` with `f_j(x^pi) = f_gamma(j)(x)`: `f_j(x^pi)` reads `x` at
/// `pi(scope_j)`.
fn match_features(
    model: &Model,
    pi: &[usize],
    by_key: &HashMap<FunctionKey, Vec<usize>>,
) -> Option<Vec<usize>> {
    let mut used: HashMap<&FunctionKey, usize> = HashMap::new();
    (0..model.num_features())
        .map(|j| {
            let f = model.feature(j);
            let scope: Vec<usize> = f.scope.iter().map(|&s| pi[s]).collect();
            let key = function_key(&scope, &f.table, model.tie_class_of(j));
            let (k, list) = by_key.get_key_value(&key)?;
            let next = used.entry(k).or_insert(0);
            let image = *list.get(*next)?;
            *next += 1;
            Some(image)
        })
        .collect()
}

/// A cycle inequality evaluated at some point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnumeratedCycle {
    /// Nodes in walk order; the cycle closes back to the first.
    pub nodes: Vec<usize>,
    /// Skeleton edge ids, `edges[k]` joining `nodes[k]` and `nodes[k + 1]`.
    pub edges: Vec<usize>,
    /// Membership in `F` per edge; odd.
    pub in_f: Vec<bool>,
    pub lhs: f64,
}

/// All cycle inequalities over simple skeleton cycles of length at most
/// `max_len`, at the ground point `tau`.
pub fn enumerate_cycle_constraints(
    model: &Model,
    tau: &[f64],
    max_len: usize,
) -> Vec<EnumeratedCycle> {
    let index = OvercompleteIndex::new(model);
    let n = model.num_vars();
    let mut adj = vec![Vec::new(); n];
    for (e, &(u, v)) in index.edges().iter().enumerate() {
        adj[u].push((v, e));
        adj[v].push((u, e));
    }
    let mut cycles = Vec::new();
    for s in 0..n {
        let mut path = vec![s];
        let mut edges = Vec::new();
        extend_cycles(&adj, s, max_len, &mut path, &mut edges, &mut cycles);
    }
    let cut = |e: usize| tau[index.edge(e, 0, 1)] + tau[index.edge(e, 1, 0)];
    let nocut = |e: usize| tau[index.edge(e, 0, 0)] + tau[index.edge(e, 1, 1)];
    let mut out = Vec::new();
    for (nodes, edges) in cycles {
        let len = edges.len();
        for mask in 0..1u32 << len {
            if mask.count_ones() % 2 == 0 {
                continue;
            }
            let in_f: Vec<bool> = (0..len).map(|k| mask >> k & 1 == 1).collect();
            let lhs = edges
                .iter()
                .zip(&in_f)
                .map(|(&e, &f)| if f { nocut(e) } else { cut(e) })
                .sum();
            out.push(EnumeratedCycle {
                nodes: nodes.clone(),
                edges: edges.clone(),
                in_f,
                lhs,
            });
        }
    }
    out
}

/// Simple cycles whose smallest node is `s`, each reported in one direction.
fn extend_cycles(
    adj: &[Vec<(usize, usize)>],
    s: usize,
    max_len: usize,
    path: &mut Vec<usize>,
    edges: &mut Vec<usize>,
    out: &mut Vec<(Vec<usize>, Vec<usize>)>,
) {
    let last = *path.last().unwrap();
    for &(w, e) in &adj[last] {
        if w == s && path.len() >= 3 && path[1] < last {
            let mut es = edges.clone();
            es.push(e);
            out.push((path.clone(), es));
        } else if w > s && !path.contains(&w) && path.len() < max_len {
            path.push(w);
            edges.push(e);
            extend_cycles(adj, s, max_len, path, edges, out);
            path.pop();
            edges.pop();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::model::Feature;
    use crate::symmetry::{build_colored_factor_graph, search_automorphisms};

    fn frustrated() -> Model {
        let features = [(0, 1), (0, 2), (1, 2)]
            .iter()
            .map(|&(a, b)| Feature::new(vec![a, b], vec![1.0, 0.0, 0.0, 1.0]))
            .collect();
        Model::new(3, features, vec![0; 3], vec![-1.0]).unwrap()
    }

    #[test]
    fn ex1_exact() {
        let r = exact_enumerate(&fixtures::ex1(), 20).unwrap();
        assert_eq!(r.map_value, 4.0);
        assert_eq!(r.argmax, vec![vec![true, false, false, true]]);
        assert!(r
            .mean_params
            .iter()
            .all(|&p| (0.0..=1.0 + 1e-12).contains(&p)));
    }

    #[test]
    fn frustrated_exact() {
        let r = exact_enumerate(&frustrated(), 20).unwrap();
        assert_eq!(r.map_value, -1.0);
        assert_eq!(r.argmax.len(), 6);
    }

    #[test]
    fn unary_logistic() {
        let m = fixtures::unary(0.7);
        let r = exact_enumerate(&m, 20).unwrap();
        let index = OvercompleteIndex::new(&m);
        let expect = 0.7f64.exp() / (1.0 + 0.7f64.exp());
        assert!((r.mean_params[index.node(0, 1)] - expect).abs() < 1e-12);
        assert!((r.log_partition - (1.0 + 0.7f64.exp()).ln()).abs() < 1e-12);
    }

    #[test]
    fn limit_enforced() {
        let m = fixtures::frucht();
        assert_eq!(
            exhaustive_automorphisms(&m, 6),
            Err(OracleError::TooLarge { n: 12, limit: 6 })
        );
        assert!(exact_enumerate(&m, 10).is_err());
    }

    #[test]
    fn exhaustive_groups() {
        assert_eq!(
            exhaustive_automorphisms(&fixtures::ex1(), 6).unwrap().len(),
            4
        );
        assert_eq!(
            exhaustive_automorphisms(&fixtures::triangle(), 6)
                .unwrap()
                .len(),
            6
        );
        assert_eq!(
            exhaustive_automorphisms(&fixtures::three_way(), 6)
                .unwrap()
                .len(),
            4
        );
    }

    #[test]
    fn configuration_orbit_counts() {
        let m = fixtures::complete_symmetric(3);
        let gens = search_automorphisms(&build_colored_factor_graph(&m));
        let co = configuration_orbits(&m, &gens, 16).unwrap();
        assert_eq!(co.orbits.len(), 4);
        assert!((co.centroid_max - co.map_value).abs() < 1e-9);

        let m = fixtures::ex1();
        let gens = search_automorphisms(&build_colored_factor_graph(&m));
        let co = configuration_orbits(&m, &gens, 16).unwrap();
        let map = bits_of(&[true, false, false, true]);
        assert!(co.orbits.iter().any(|o| o.members == vec![map]));

        let co = configuration_orbits(&m, &GeneratorSet::trivial(), 16).unwrap();
        assert_eq!(co.orbits.len(), 16);
    }

    #[test]
    fn centroid_value_is_objective() {
        let m = fixtures::ex1();
        let index = OvercompleteIndex::new(&m);
        let gens = search_automorphisms(&build_colored_factor_graph(&m));
        let theta = m.to_overcomplete().to_vector(&index);
        for o in configuration_orbits(&m, &gens, 16).unwrap().orbits {
            let c = o.centroid(&m, &index);
            assert!((crate::model::dot(&theta, &c) - o.value).abs() < 1e-9);
        }
    }

    #[test]
    fn cycles_of_frustrated_triangle() {
        let m = frustrated();
        let index = OvercompleteIndex::new(&m);
        let mut tau = vec![0.0; index.len()];
        for v in 0..3 {
            tau[index.node(v, 0)] = 0.5;
            tau[index.node(v, 1)] = 0.5;
        }
        for e in 0..3 {
            tau[index.edge(e, 0, 1)] = 0.5;
            tau[index.edge(e, 1, 0)] = 0.5;
        }
        let cs = enumerate_cycle_constraints(&m, &tau, 6);
        // one triangle, four odd subsets
        assert_eq!(cs.len(), 4);
        let min = cs.iter().min_by(|a, b| a.lhs.total_cmp(&b.lhs)).unwrap();
        assert_eq!(min.lhs, 0.0);
        assert_eq!(min.in_f, vec![true; 3]);
        for b in 0..8 {
            let t = index.indicator(&m, &config_of(b, 3));
            assert!(enumerate_cycle_constraints(&m, &t, 6)
                .iter()
                .all(|c| c.lhs >= 1.0));
        }
    }

    #[test]
    fn acyclic_has_no_cycles() {
        let m = fixtures::unary(1.0);
        let tau = vec![0.5; OvercompleteIndex::new(&m).len()];
        assert!(enumerate_cycle_constraints(&m, &tau, 6).is_empty());
    }

    #[test]
    fn k4_cycle_count() {
        let m = fixtures::complete_symmetric(4);
        let tau = vec![0.25; OvercompleteIndex::new(&m).len()];
        let cs = enumerate_cycle_constraints(&m, &tau, 6);
        // 4 triangles with 4 odd subsets, 3 squares with 8
        assert_eq!(cs.len(), 4 * 4 + 3 * 8);
    }
}
