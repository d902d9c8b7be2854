//! Small models used by the examples, tests and the acceptance suite.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{Feature, Model};

pub const EX1_FGM: &str = include_str!("../fixtures/ex1.fgm");
pub const TRIANGLE_FGM: &str = include_str!("../fixtures/triangle.fgm");
pub const UNARY_FGM: &str = include_str!("../fixtures/unary.fgm");
pub const FRUCHT_FGM: &str = include_str!("../fixtures/frucht.fgm");
pub const LOVERS_SMOKERS_MLN: &str = include_str!("../fixtures/lovers_smokers.mln");
pub const FRIENDS_SMOKERS_MLN: &str = include_str!("../fixtures/friends_smokers.mln");
pub const FRIENDS_SMOKERS_EVIDENCE: &str = include_str!("../fixtures/friends_smokers.evidence");
pub const Q2_MLN: &str = include_str!("../fixtures/q2.mln");

const EQUAL: [f64; 4] = [1.0, 0.0, 0.0, 1.0];
const PRODUCT: [f64; 4] = [0.0, 0.0, 0.0, 1.0];
const FIRST_NOT_SECOND: [f64; 4] = [0.0, 0.0, 1.0, 0.0];
const SECOND_NOT_FIRST: [f64; 4] = [0.0, 1.0, 0.0, 0.0];

fn pairwise(edges: &[(usize, usize)], table: [f64; 4]) -> Vec<Feature> {
    edges
        .iter()
        .map(|&(u, v)| Feature::new(vec![u, v], table.to_vec()))
        .collect()
}

/// The four-variable, five-feature model with all parameters tied to 1.
pub fn ex1() -> Model {
    let features = vec![
        Feature::new(vec![0, 1], FIRST_NOT_SECOND.to_vec()),
        Feature::new(vec![0, 2], FIRST_NOT_SECOND.to_vec()),
        Feature::new(vec![1, 2], PRODUCT.to_vec()),
        Feature::new(vec![1, 3], SECOND_NOT_FIRST.to_vec()),
        Feature::new(vec![2, 3], SECOND_NOT_FIRST.to_vec()),
    ];
    Model::new(4, features, vec![0; 5], vec![1.0]).unwrap()
}

/// Three variables with `I{x_u = x_v}` on every pair, weight -1.
pub fn triangle() -> Model {
    let features = pairwise(&[(0, 1), (0, 2), (1, 2)], EQUAL);
    Model::new(3, features, vec![0; 3], vec![-1.0]).unwrap()
}

pub fn unary(weight: f64) -> Model {
    Model::new(
        1,
        vec![Feature::new(vec![0], vec![0.0, 1.0])],
        vec![0],
        vec![weight],
    )
    .unwrap()
}

pub fn frucht_edges() -> Vec<(usize, usize)> {
    const LCF: [i64; 12] = [-5, -2, -4, 2, 5, -2, 2, 5, -2, -5, 4, 2];
    let mut edges: Vec<(usize, usize)> = (0..12)
        .flat_map(|i| {
            let j = (i as i64 + LCF[i]).rem_euclid(12) as usize;
            let k = (i + 1) % 12;
            [(i.min(k), i.max(k)), (i.min(j), i.max(j))]
        })
        .collect();
    edges.sort_unstable();
    edges.dedup();
    edges
}

/// Frucht graph with one tied symmetric product feature per edge.
pub fn frucht() -> Model {
    let features = pairwise(&frucht_edges(), PRODUCT);
    Model::new(12, features, vec![0; 18], vec![0.5]).unwrap()
}

/// Fully connected model with identical symmetric pairwise and unary features.
pub fn complete_symmetric(n: usize) -> Model {
    let mut features = Vec::new();
    let mut ties = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            features.push(Feature::new(vec![u, v], EQUAL.to_vec()));
            ties.push(0);
        }
    }
    for v in 0..n {
        features.push(Feature::new(vec![v], vec![0.0, 1.0]));
        ties.push(1);
    }
    Model::new(n, features, ties, vec![0.75, -0.5]).unwrap()
}

/// Two 3-ary AND factors sharing a pair, plus tied unary features.
pub fn three_way() -> Model {
    let and3 = vec![0., 0., 0., 0., 0., 0., 0., 1.];
    let features = vec![
        Feature::new(vec![0, 1, 2], and3.clone()),
        Feature::new(vec![1, 2, 3], and3),
        Feature::new(vec![0], vec![0.0, 1.0]),
        Feature::new(vec![3], vec![0.0, 1.0]),
    ];
    Model::new(4, features, vec![0, 0, 1, 1], vec![-1.5, 1.0]).unwrap()
}

/// A seeded random pairwise model on a graph family with symmetry.
///
/// Families: cycle, complete, star, complete bipartite, prism, path, wheel
/// and an Erdos-Renyi graph. All edge features share one table and tie class;
/// unary features, when present, share another. `n <= 8`.
pub fn random_symmetric_pairwise(seed: u64) -> Model {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n, edges) = loop {
        let (n, edges) = random_graph(&mut rng);
        if !edges.is_empty() {
            break (n, edges);
        }
    };
    let table = *[EQUAL, EQUAL, PRODUCT, FIRST_NOT_SECOND]
        .choose(&mut rng)
        .unwrap();
    let weights = [-2.0, -1.5, -1.0, -0.5, 0.5, 1.0, 1.5, 2.0];
    let mut theta = vec![*weights.choose(&mut rng).unwrap()];
    let mut features = pairwise(&edges, table);
    let mut ties = vec![0; features.len()];
    if rng.gen_bool(0.7) {
        theta.push(*weights.choose(&mut rng).unwrap());
        for v in 0..n {
            features.push(Feature::new(vec![v], vec![0.0, 1.0]));
            ties.push(1);
        }
    }
    Model::new(n, features, ties, theta).unwrap()
}

fn random_graph(rng: &mut ChaCha8Rng) -> (usize, Vec<(usize, usize)>) {
    let mut edges = Vec::new();
    let mut add = |u: usize, v: usize| {
        if u != v {
            edges.push((u.min(v), u.max(v)));
        }
    };
    let n = match rng.gen_range(0..8) {
        0 => {
            let n = rng.gen_range(3..=8);
            (0..n).for_each(|i| add(i, (i + 1) % n));
            n
        }
        1 => {
            let n = rng.gen_range(3..=6);
            (0..n).for_each(|u| (u + 1..n).for_each(|v| add(u, v)));
            n
        }
        2 => {
            let n = rng.gen_range(4..=8);
            (1..n).for_each(|v| add(0, v));
            n
        }
        3 => {
            let a = rng.gen_range(2..=4);
            let b = rng.gen_range(2..=8 - a);
            (0..a).for_each(|u| (a..a + b).for_each(|v| add(u, v)));
            a + b
        }
        4 => {
            let k = rng.gen_range(3..=4);
            for i in 0..k {
                add(i, (i + 1) % k);
                add(k + i, k + (i + 1) % k);
                add(i, k + i);
            }
            2 * k
        }
        5 => {
            let n = rng.gen_range(3..=8);
            (0..n - 1).for_each(|i| add(i, i + 1));
            n
        }
        6 => {
            let n = rng.gen_range(5..=8);
            let k = n - 1;
            for i in 0..k {
                add(i, (i + 1) % k);
                add(i, k);
            }
            n
        }
        _ => {
            let n = rng.gen_range(4..=8);
            for u in 0..n {
                for v in u + 1..n {
                    if rng.gen_bool(0.5) {
                        add(u, v);
                    }
                }
            }
            n
        }
    };
    edges.sort_unstable();
    edges.dedup();
    (n, edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_model;

    #[test]
    fn files_match_builders() {
        assert_eq!(parse_model(EX1_FGM).unwrap(), ex1());
        assert_eq!(parse_model(TRIANGLE_FGM).unwrap(), triangle());
        assert_eq!(parse_model(UNARY_FGM).unwrap(), unary(0.7));
        assert_eq!(parse_model(FRUCHT_FGM).unwrap(), frucht());
    }

    #[test]
    fn frucht_is_cubic() {
        let edges = frucht_edges();
        assert_eq!(edges.len(), 18);
        let mut deg = [0; 12];
        for (u, v) in edges {
            deg[u] += 1;
            deg[v] += 1;
        }
        assert!(deg.iter().all(|&d| d == 3));
    }

    #[test]
    fn random_models_are_deterministic_and_small() {
        for seed in 0..40 {
            let a = random_symmetric_pairwise(seed);
            assert_eq!(a, random_symmetric_pairwise(seed));
            assert!(a.num_vars() <= 8);
        }
    }
}
