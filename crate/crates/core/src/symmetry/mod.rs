//! Symmetry detection for tied exponential families.
//!
//! An automorphism is a pair `(pi, gamma)` of a variable permutation and a
//! feature permutation with `f_j(x^pi) = f_{gamma(j)}(x)` for every feature
//! `j` and configuration `x`, where `x^pi[i] = x[pi(i)]`, and `gamma` keeps
//! every feature inside its tie class. Generators are found as automorphisms
//! of a colored factor graph ([`graph`]) by an individualization-refinement
//! search ([`search`]); [`orbits`] turns them into orbit partitions.

pub mod canonical;
pub mod graph;
pub mod orbits;
pub mod search;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::model::Model;

pub use canonical::{canonicalize_feature, permute_table, CanonicalFeature};
pub use graph::{build_colored_factor_graph, refine_colors, ColoredFactorGraph};
pub use orbits::{orbits_of, permute_coordinates, DisjointSets, Domain, OrbitPartition};
pub use search::{search_automorphisms, stabilizer_generators};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SymmetryError {
    #[error("permutation sizes ({}, {}) do not match model sizes ({}, {})", vars.0, features.0, vars.1, features.1)]
    DomainMismatch {
        vars: (usize, usize),
        features: (usize, usize),
    },
    #[error("not an automorphism: {reason}")]
    NotAnAutomorphism { reason: String },
    #[error("variable {var} out of range (n = {num_vars})")]
    VarOutOfRange { var: usize, num_vars: usize },
}

/// A variable permutation `pi` with its feature permutation `gamma`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct PermutationPair {
    pub pi: Vec<usize>,
    pub gamma: Vec<usize>,
}

impl PermutationPair {
    pub fn identity(num_vars: usize, num_features: usize) -> Self {
        Self {
            pi: (0..num_vars).collect(),
            gamma: (0..num_features).collect(),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.pi.iter().enumerate().all(|(i, &p)| i == p)
            && self.gamma.iter().enumerate().all(|(i, &g)| i == g)
    }

    /// `x^pi`, with `x^pi[i] = x[pi(i)]`.
    pub fn act_on_config(&self, x: &[bool]) -> Vec<bool> {
        self.pi.iter().map(|&p| x[p]).collect()
    }

    /// The pair applying `other` after `self` on indices: `i -> other(self(i))`.
    pub fn then(&self, other: &PermutationPair) -> PermutationPair {
        PermutationPair {
            pi: self.pi.iter().map(|&p| other.pi[p]).collect(),
            gamma: self.gamma.iter().map(|&g| other.gamma[g]).collect(),
        }
    }

    pub fn inverse(&self) -> PermutationPair {
        let inv = |p: &[usize]| {
            let mut out = vec![0; p.len()];
            for (i, &j) in p.iter().enumerate() {
                out[j] = i;
            }
            out
        };
        PermutationPair {
            pi: inv(&self.pi),
            gamma: inv(&self.gamma),
        }
    }
}

/// Generators of a group of automorphisms.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct GeneratorSet {
    pub generators: Vec<PermutationPair>,
    /// Exact order of the generated group when known.
    pub group_order: Option<u128>,
}

impl GeneratorSet {
    pub fn trivial() -> Self {
        Self {
            generators: Vec::new(),
            group_order: Some(1),
        }
    }
}

/// Outcome of [`verify_generator`].
#[derive(Debug, Clone, PartialEq)]
pub enum Verification {
    Pass,
    /// `gamma` sends `feature` to a feature of another tie class.
    TieViolation {
        feature: usize,
        image: usize,
    },
    /// `f_feature(x^pi) != f_{gamma(feature)}(x)`.
    Mismatch {
        x: Vec<bool>,
        feature: usize,
        lhs: f64,
        rhs: f64,
    },
    SizeMismatch,
}

impl Verification {
    pub fn passed(&self) -> bool {
        matches!(self, Verification::Pass)
    }
}

/// Checks the automorphism condition on `num_samples` seeded random
/// configurations plus the all-zeros and all-ones configurations.
pub fn verify_generator(
    model: &Model,
    p: &PermutationPair,
    num_samples: usize,
    seed: u64,
) -> Verification {
    let n = model.num_vars();
    let m = model.num_features();
    if p.pi.len() != n || p.gamma.len() != m || !is_permutation(&p.pi) || !is_permutation(&p.gamma)
    {
        return Verification::SizeMismatch;
    }
    for j in 0..m {
        if model.tie_class_of(j) != model.tie_class_of(p.gamma[j]) {
            return Verification::TieViolation {
                feature: j,
                image: p.gamma[j],
            };
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = [vec![false; n], vec![true; n]]
        .into_iter()
        .chain((0..num_samples).map(|_| (0..n).map(|_| rng.gen::<bool>()).collect()));
    for x in samples {
        let xp = p.act_on_config(&x);
        for j in 0..m {
            let lhs = model.feature(j).eval(&xp);
            let rhs = model.feature(p.gamma[j]).eval(&x);
            if lhs.to_bits() != rhs.to_bits() {
                return Verification::Mismatch {
                    x,
                    feature: j,
                    lhs,
                    rhs,
                };
            }
        }
    }
    Verification::Pass
}

fn is_permutation(p: &[usize]) -> bool {
    let mut seen = vec![false; p.len()];
    p.iter()
        .all(|&i| i < p.len() && !std::mem::replace(&mut seen[i], true))
}

/// A source of lifting-group generators and of stabilizer subgroups.
pub trait SymmetrySource {
    fn generators(&self) -> &GeneratorSet;
    /// Generators of the subgroup fixing variable `var`.
    fn stabilizer(&self, var: usize) -> Result<GeneratorSet, SymmetryError>;
}

/// The trivial group: no lifting.
#[derive(Debug, Clone, Default)]
pub struct TrivialSymmetry {
    gens: GeneratorSet,
}

impl TrivialSymmetry {
    pub fn new() -> Self {
        Self {
            gens: GeneratorSet::trivial(),
        }
    }
}

impl SymmetrySource for TrivialSymmetry {
    fn generators(&self) -> &GeneratorSet {
        &self.gens
    }

    fn stabilizer(&self, _var: usize) -> Result<GeneratorSet, SymmetryError> {
        Ok(GeneratorSet::trivial())
    }
}

/// Automorphisms found by graph search, with stabilizers computed on demand.
#[derive(Debug, Clone)]
pub struct SearchSymmetry {
    graph: ColoredFactorGraph,
    gens: GeneratorSet,
}

impl SearchSymmetry {
    pub fn new(model: &Model) -> Self {
        let graph = build_colored_factor_graph(model);
        let gens = search_automorphisms(&graph);
        Self { graph, gens }
    }

    pub fn graph(&self) -> &ColoredFactorGraph {
        &self.graph
    }
}

impl SymmetrySource for SearchSymmetry {
    fn generators(&self) -> &GeneratorSet {
        &self.gens
    }

    fn stabilizer(&self, var: usize) -> Result<GeneratorSet, SymmetryError> {
        stabilizer_generators(&self.graph, var)
    }
}
