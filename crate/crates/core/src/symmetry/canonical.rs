use crate::model::{assignment_bit, Feature};

use super::orbits::DisjointSets;

/// A feature table brought to canonical argument order.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalFeature {
    /// Lexicographically smallest table over all argument orders.
    pub table: Vec<f64>,
    /// `order[p]` is the original scope position placed at canonical position `p`.
    pub order: Vec<usize>,
    /// Edge color per canonical position: the smallest canonical position
    /// among the arguments that can be freely interchanged with it.
    pub position_class: Vec<usize>,
    pub fully_symmetric: bool,
}

impl CanonicalFeature {
    /// Edge color for the argument at original scope position `pos`.
    pub fn class_of_scope_position(&self, pos: usize) -> usize {
        let p = self.order.iter().position(|&o| o == pos).unwrap();
        self.position_class[p]
    }

    pub(crate) fn table_key(&self) -> Vec<u64> {
        self.table.iter().map(|v| v.to_bits()).collect()
    }
}

/// Table of `f` with its arguments reordered so that canonical position `p`
/// reads original position `order[p]`.
pub fn permute_table(table: &[f64], order: &[usize]) -> Vec<f64> {
    let k = order.len();
    (0..table.len())
        .map(|b| {
            let a = order.iter().enumerate().fold(0usize, |acc, (p, &o)| {
                acc | (assignment_bit(b, k, p) << (k - 1 - o))
            });
            table[a]
        })
        .collect()
}

fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
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

/// Canonical form of a feature under argument reordering.
pub fn canonicalize_feature(f: &Feature) -> CanonicalFeature {
    canonicalize_table(&f.table, f.arity())
}

pub(crate) fn canonicalize_table(table: &[f64], k: usize) -> CanonicalFeature {
    let mut order: Vec<usize> = (0..k).collect();
    let mut best_order = order.clone();
    let mut best = table.to_vec();
    while next_permutation(&mut order) {
        let t = permute_table(table, &order);
        if lex_cmp(&t, &best).is_lt() {
            best = t;
            best_order = order.clone();
        }
    }
    let mut ds = DisjointSets::new(k);
    for p in 0..k {
        for q in p + 1..k {
            let mut swap: Vec<usize> = (0..k).collect();
            swap.swap(p, q);
            let t = permute_table(&best, &swap);
            if t.iter().zip(&best).all(|(a, b)| a.to_bits() == b.to_bits()) {
                ds.union(p, q);
            }
        }
    }
    let position_class: Vec<usize> = (0..k)
        .map(|p| (0..k).find(|&q| ds.find(q) == ds.find(p)).unwrap())
        .collect();
    let fully_symmetric = position_class.iter().all(|&c| c == 0);
    CanonicalFeature {
        table: best,
        order: best_order,
        position_class,
        fully_symmetric,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn asymmetric_pair_is_reordered() {
        // f(a, b) = b (1 - a)
        let c = canonicalize_feature(&Feature::new(vec![0, 1], vec![0., 1., 0., 0.]));
        assert_eq!(c.table, vec![0., 0., 1., 0.]);
        assert_eq!(c.order, vec![1, 0]);
        assert!(!c.fully_symmetric);
        assert_eq!(c.position_class, vec![0, 1]);
    }

    #[test]
    fn symmetric_pair_unchanged() {
        let c = canonicalize_feature(&Feature::new(vec![0, 1], vec![0., 0., 0., 1.]));
        assert_eq!(c.table, vec![0., 0., 0., 1.]);
        assert_eq!(c.order, vec![0, 1]);
        assert!(c.fully_symmetric);
    }

    #[test]
    fn unary_is_symmetric() {
        let c = canonicalize_feature(&Feature::new(vec![3], vec![0., 1.]));
        assert_eq!(c.order, vec![0]);
        assert!(c.fully_symmetric);
    }

    #[test]
    fn partial_symmetry_groups_interchangeable_arguments() {
        // g(l, s, t) = !l | (s <=> t): symmetric in s and t only.
        let table: Vec<f64> = (0..8)
            .map(|a| {
                let (l, s, t) = (a >> 2 & 1, a >> 1 & 1, a & 1);
                (l == 0 || s == t) as u8 as f64
            })
            .collect();
        let c = canonicalize_table(&table, 3);
        assert!(!c.fully_symmetric);
        let l_class = c.class_of_scope_position(0);
        let s_class = c.class_of_scope_position(1);
        assert_eq!(s_class, c.class_of_scope_position(2));
        assert_ne!(l_class, s_class);
    }

    #[test]
    fn canonical_form_is_order_invariant() {
        let table: Vec<f64> = (0..8).map(|a| (a * 7 % 5) as f64).collect();
        let c = canonicalize_table(&table, 3);
        let mut order = vec![0, 1, 2];
        loop {
            let t = permute_table(&table, &order);
            assert_eq!(canonicalize_table(&t, 3).table, c.table);
            if !next_permutation(&mut order) {
                break;
            }
        }
    }
}
