use std::collections::{BTreeMap, HashMap};

use crate::model::Model;
use crate::symmetry::{
    Domain, GeneratorSet, OrbitPartition, PermutationPair, SymmetryError, SymmetrySource,
};

use super::{FeatureOrigin, GroundAtom, GroundingMap};

/// One argument of an atom signature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ArgTag {
    /// A constant that every renaming fixes.
    Distinguished(usize),
    /// The `k`-th distinct renamable constant, numbered by first occurrence.
    Anonymous(usize),
}

/// The renaming-invariant shape of a ground atom.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AtomSignature {
    pub pred: usize,
    pub args: Vec<ArgTag>,
}

impl AtomSignature {
    pub fn num_anonymous(&self) -> usize {
        tuple_anonymous(&self.args)
    }
}

fn tuple_anonymous(tags: &[ArgTag]) -> usize {
    tags.iter()
        .filter_map(|t| match t {
            ArgTag::Anonymous(k) => Some(k + 1),
            ArgTag::Distinguished(_) => None,
        })
        .max()
        .unwrap_or(0)
}

fn tuple_signature(args: &[usize], num_distinguished: usize) -> Vec<ArgTag> {
    let mut seen: Vec<usize> = Vec::new();
    args.iter()
        .map(|&c| {
            if c < num_distinguished {
                ArgTag::Distinguished(c)
            } else {
                let k = seen.iter().position(|&s| s == c).unwrap_or_else(|| {
                    seen.push(c);
                    seen.len() - 1
                });
                ArgTag::Anonymous(k)
            }
        })
        .collect()
}

pub fn atom_signature(atom: &GroundAtom, gmap: &GroundingMap) -> AtomSignature {
    AtomSignature {
        pred: atom.pred,
        args: tuple_signature(&atom.args, gmap.num_distinguished),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum FeatureKey {
    Formula(usize, Vec<ArgTag>),
    Soft(usize),
}

fn partition<K: Ord>(domain: Domain, keys: impl Iterator<Item = K>) -> OrbitPartition {
    let mut cells: BTreeMap<K, Vec<usize>> = BTreeMap::new();
    let mut n = 0;
    for (i, k) in keys.enumerate() {
        cells.entry(k).or_default().push(i);
        n += 1;
    }
    OrbitPartition::from_cells(domain, n, cells.into_values().collect())
}

/// Orbits of the renaming group on variables and on features, read off
/// from signatures without any search.
pub fn renaming_orbits(gmap: &GroundingMap) -> (OrbitPartition, OrbitPartition) {
    let vars = partition(
        Domain::Vars,
        gmap.atoms.iter().map(|a| atom_signature(a, gmap)),
    );
    let features = partition(
        Domain::Features,
        gmap.origins.iter().map(|o| match o {
            FeatureOrigin::Formula { formula, subst } => {
                FeatureKey::Formula(*formula, tuple_signature(subst, gmap.num_distinguished))
            }
            FeatureOrigin::Soft { var } => FeatureKey::Soft(*var),
        }),
    );
    (vars, features)
}

/// Number of ground atoms with signature `sig`: a falling factorial
/// `(d - c)(d - c - 1)...` with one factor per anonymous class.
pub fn orbit_sizes_analytic(
    sig: &AtomSignature,
    domain_size: usize,
    num_distinguished: usize,
) -> u128 {
    let free = domain_size.saturating_sub(num_distinguished) as u128;
    let k = sig.num_anonymous() as u128;
    if k > free {
        return 0;
    }
    (0..k).map(|i| free - i).product()
}

/// The group of permutations of the renamable constants, acting on a
/// grounded model.
#[derive(Debug, Clone)]
pub struct RenamingGroup {
    num_constants: usize,
    num_distinguished: usize,
    atoms: Vec<GroundAtom>,
    atom_index: HashMap<GroundAtom, usize>,
    origins: Vec<FeatureOrigin>,
    feature_of_grounding: HashMap<(usize, Vec<usize>), usize>,
    soft_feature_of_var: HashMap<usize, usize>,
    gens: GeneratorSet,
}

impl RenamingGroup {
    pub fn new(model: &Model, gmap: &GroundingMap) -> Self {
        assert_eq!(model.num_vars(), gmap.atoms.len());
        assert_eq!(model.num_features(), gmap.origins.len());
        let soft_feature_of_var = gmap
            .origins
            .iter()
            .enumerate()
            .filter_map(|(j, o)| match o {
                FeatureOrigin::Soft { var } => Some((*var, j)),
                FeatureOrigin::Formula { .. } => None,
            })
            .collect();
        let mut g = Self {
            num_constants: gmap.domain.len(),
            num_distinguished: gmap.num_distinguished,
            atoms: gmap.atoms.clone(),
            atom_index: gmap.atom_index.clone(),
            origins: gmap.origins.clone(),
            feature_of_grounding: gmap.feature_of_grounding.clone(),
            soft_feature_of_var,
            gens: GeneratorSet::trivial(),
        };
        let movable: Vec<usize> = (g.num_distinguished..g.num_constants).collect();
        g.gens = g.generators_moving(&movable);
        g
    }

    /// The pair `(pi_r, gamma_r)` of a constant permutation `r`.
    pub fn pair_of(&self, r: &[usize]) -> PermutationPair {
        let pi: Vec<usize> = self
            .atoms
            .iter()
            .map(|a| {
                let image = GroundAtom {
                    pred: a.pred,
                    args: a.args.iter().map(|&c| r[c]).collect(),
                };
                self.atom_index[&image]
            })
            .collect();
        let gamma = self
            .origins
            .iter()
            .map(|o| match o {
                FeatureOrigin::Formula { formula, subst } => {
                    let image: Vec<usize> = subst.iter().map(|&c| r[c]).collect();
                    self.feature_of_grounding[&(*formula, image)]
                }
                FeatureOrigin::Soft { var } => self.soft_feature_of_var[&pi[*var]],
            })
            .collect();
        PermutationPair { pi, gamma }
    }

    /// A transposition and a full cycle generate the symmetric group on `movable`.
    fn generators_moving(&self, movable: &[usize]) -> GeneratorSet {
        let identity: Vec<usize> = (0..self.num_constants).collect();
        let mut perms = Vec::new();
        if movable.len() >= 2 {
            let mut t = identity.clone();
            t.swap(movable[0], movable[1]);
            perms.push(t);
        }
        if movable.len() >= 3 {
            let mut c = identity;
            for (i, &m) in movable.iter().enumerate() {
                c[m] = movable[(i + 1) % movable.len()];
            }
            perms.push(c);
        }
        let order = (1..=movable.len() as u128).try_fold(1u128, |acc, k| acc.checked_mul(k));
        GeneratorSet {
            generators: perms.iter().map(|r| self.pair_of(r)).collect(),
            group_order: order,
        }
    }
}

impl SymmetrySource for RenamingGroup {
    fn generators(&self) -> &GeneratorSet {
        &self.gens
    }

    fn stabilizer(&self, var: usize) -> Result<GeneratorSet, SymmetryError> {
        let atom = self.atoms.get(var).ok_or(SymmetryError::VarOutOfRange {
            var,
            num_vars: self.atoms.len(),
        })?;
        let movable: Vec<usize> = (self.num_distinguished..self.num_constants)
            .filter(|c| !atom.args.contains(c))
            .collect();
        Ok(self.generators_moving(&movable))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::mln::{ground_mln, parse_evidence, parse_mln, Evidence};
    use crate::symmetry::{orbits_of, verify_generator};

    fn q2(d: usize) -> (Model, GroundingMap) {
        let m = parse_mln(fixtures::Q2_MLN).unwrap();
        ground_mln(&m, d, &Evidence::default()).unwrap()
    }

    #[test]
    fn q2_has_five_atom_orbits() {
        let (_, gmap) = q2(5);
        let (vars, _) = renaming_orbits(&gmap);
        assert_eq!(vars.num_cells(), 5);
        let mut sizes: Vec<usize> = vars.cells.iter().map(Vec::len).collect();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![1, 4, 4, 4, 12]);
        for cell in &vars.cells {
            let sig = atom_signature(&gmap.atoms[cell[0]], &gmap);
            assert_eq!(orbit_sizes_analytic(&sig, 5, 1), cell.len() as u128);
        }
    }

    #[test]
    fn analytic_sizes() {
        let sig = |args: Vec<ArgTag>| AtomSignature { pred: 0, args };
        use ArgTag::*;
        assert_eq!(
            orbit_sizes_analytic(&sig(vec![Anonymous(0), Anonymous(1)]), 5, 1),
            12
        );
        assert_eq!(
            orbit_sizes_analytic(&sig(vec![Distinguished(0), Anonymous(0)]), 5, 1),
            4
        );
        assert_eq!(
            orbit_sizes_analytic(&sig(vec![Distinguished(0), Distinguished(0)]), 5, 1),
            1
        );
        assert_eq!(
            orbit_sizes_analytic(&sig(vec![Anonymous(0), Anonymous(1)]), 2, 1),
            0
        );
    }

    #[test]
    fn unary_predicate_without_constants_is_one_orbit() {
        let m = parse_mln("1.0 Smokes(x)").unwrap();
        let (_, gmap) = ground_mln(&m, 6, &Evidence::default()).unwrap();
        let (vars, features) = renaming_orbits(&gmap);
        assert_eq!(vars.cells, vec![(0..6).collect::<Vec<_>>()]);
        assert_eq!(features.num_cells(), 1);
    }

    #[test]
    fn generators_are_automorphisms_and_match_signatures() {
        let m = parse_mln(fixtures::FRIENDS_SMOKERS_MLN).unwrap();
        let ev = parse_evidence(fixtures::FRIENDS_SMOKERS_EVIDENCE, &m).unwrap();
        let (model, gmap) = ground_mln(&m, 6, &ev).unwrap();
        let group = RenamingGroup::new(&model, &gmap);
        assert_eq!(group.generators().group_order, Some(6));
        for g in &group.generators().generators {
            assert!(verify_generator(&model, g, 100, 3).passed());
        }
        let (vars, features) = renaming_orbits(&gmap);
        assert_eq!(
            orbits_of(group.generators(), Domain::Vars, &model).unwrap(),
            vars
        );
        assert_eq!(
            orbits_of(group.generators(), Domain::Features, &model).unwrap(),
            features
        );
    }

    #[test]
    fn stabilizer_fixes_the_atom_constants() {
        let (model, gmap) = q2(5);
        let group = RenamingGroup::new(&model, &gmap);
        // Q(C1, C2) with A at index 0
        let var = gmap.atom_index[&GroundAtom {
            pred: 0,
            args: vec![1, 2],
        }];
        let s = group.stabilizer(var).unwrap();
        assert_eq!(s.group_order, Some(2));
        let orbits = orbits_of(&s, Domain::Vars, &model).unwrap();
        assert_eq!(orbits.cells[orbits.cell_of[var]], vec![var]);
    }

    fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
        if items.is_empty() {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for i in 0..items.len() {
            let mut rest = items.to_vec();
            let x = rest.remove(i);
            for mut p in permutations(&rest) {
                p.insert(0, x);
                out.push(p);
            }
        }
        out
    }

    #[test]
    fn signatures_agree_with_explicit_renamings() {
        let (_, gmap) = q2(4);
        let movable: Vec<usize> = (1..4).collect();
        let renamings: Vec<Vec<usize>> = permutations(&movable)
            .into_iter()
            .map(|p| std::iter::once(0).chain(p).collect())
            .collect();
        for a in &gmap.atoms {
            for b in &gmap.atoms {
                let reachable = renamings
                    .iter()
                    .any(|r| a.args.iter().map(|&c| r[c]).collect::<Vec<_>>() == b.args);
                let same = atom_signature(a, &gmap) == atom_signature(b, &gmap);
                assert_eq!(reachable, same, "{a:?} {b:?}");
            }
        }
    }

    #[test]
    fn orbit_count_does_not_depend_on_domain_size() {
        let counts: Vec<usize> = [5, 10, 20]
            .iter()
            .map(|&d| renaming_orbits(&q2(d).1).0.num_cells())
            .collect();
        assert_eq!(counts, vec![5, 5, 5]);
    }
}
