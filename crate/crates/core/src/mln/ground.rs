use std::collections::HashMap;

use crate::model::{Feature, Model};

use super::{build_domain, Evidence, Mln, MlnError, Term};

/// A ground atom over domain constant indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroundAtom {
    pub pred: usize,
    pub args: Vec<usize>,
}

/// Where a ground feature came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FeatureOrigin {
    /// A grounding of formula `formula` under `subst` (one constant per
    /// logical variable).
    Formula { formula: usize, subst: Vec<usize> },
    /// A soft-evidence feature on a variable.
    Soft { var: usize },
}

/// Correspondence between a grounded model and its MLN.
#[derive(Debug, Clone)]
pub struct GroundingMap {
    pub domain: Vec<String>,
    /// Constants `0..num_distinguished` of `domain` are the named ones.
    pub num_distinguished: usize,
    /// Variable index to ground atom.
    pub atoms: Vec<GroundAtom>,
    pub atom_index: HashMap<GroundAtom, usize>,
    pub observed: HashMap<GroundAtom, bool>,
    pub soft: Vec<(GroundAtom, f64)>,
    /// Feature index to origin.
    pub origins: Vec<FeatureOrigin>,
    pub feature_of_grounding: HashMap<(usize, Vec<usize>), usize>,
    /// Tie class of each formula, `None` when no grounding survived.
    pub formula_tie_class: Vec<Option<usize>>,
}

impl GroundingMap {
    pub fn is_distinguished(&self, constant: usize) -> bool {
        constant < self.num_distinguished
    }

    pub fn atom_name(&self, atom: &GroundAtom, mln: &Mln) -> String {
        let args: Vec<&str> = atom.args.iter().map(|&c| self.domain[c].as_str()).collect();
        format!("{}({})", mln.predicates[atom.pred].name, args.join(","))
    }
}

fn tuples(d: usize, k: usize) -> impl Iterator<Item = Vec<usize>> {
    let total = d.checked_pow(k as u32).unwrap_or(0);
    (0..total).map(move |mut idx| {
        let mut t = vec![0; k];
        for slot in t.iter_mut().rev() {
            *slot = idx % d;
            idx /= d;
        }
        t
    })
}

/// Grounds `mln` over a domain of `domain_size` constants, conditioning on
/// hard evidence.
///
/// One variable per ground atom without hard evidence, ordered by predicate
/// and then argument tuple. Each grounding yields an indicator feature over
/// the unknown atoms it actually depends on, tied to the other groundings of
/// its formula; groundings with a constant indicator are dropped. Soft
/// evidence adds a unary feature per atom, tied by weight value.
pub fn ground_mln(
    mln: &Mln,
    domain_size: usize,
    evidence: &Evidence,
) -> Result<(Model, GroundingMap), MlnError> {
    let (domain, num_distinguished) = build_domain(mln, evidence, domain_size)?;
    let const_index: HashMap<&str, usize> = domain
        .iter()
        .enumerate()
        .map(|(i, c)| (c.as_str(), i))
        .collect();
    let resolve = |a: &super::NamedAtom| GroundAtom {
        pred: a.pred,
        args: a.args.iter().map(|c| const_index[c.as_str()]).collect(),
    };
    let observed: HashMap<GroundAtom, bool> = evidence
        .hard
        .iter()
        .map(|(a, v)| (resolve(a), *v))
        .collect();

    let d = domain.len();
    let mut atoms = Vec::new();
    let mut atom_index = HashMap::new();
    for (p, pred) in mln.predicates.iter().enumerate() {
        for args in tuples(d, pred.arity) {
            let atom = GroundAtom { pred: p, args };
            if !observed.contains_key(&atom) {
                atom_index.insert(atom.clone(), atoms.len());
                atoms.push(atom);
            }
        }
    }

    let mut features = Vec::new();
    let mut origins = Vec::new();
    let mut formula_of_feature = Vec::new();
    let mut feature_of_grounding = HashMap::new();
    for (fi, wf) in mln.formulas.iter().enumerate() {
        let mut lits = Vec::new();
        wf.formula.atoms(&mut lits);
        for subst in tuples(d, wf.vars.len()) {
            let value = |t: &Term| match t {
                Term::Var(i) => subst[*i],
                Term::Const(c) => const_index[c.as_str()],
            };
            let ground = |args: &[Term]| args.iter().map(value).collect::<Vec<_>>();
            let mut scope: Vec<usize> = lits
                .iter()
                .filter_map(|(p, args)| {
                    atom_index
                        .get(&GroundAtom {
                            pred: *p,
                            args: ground(args),
                        })
                        .copied()
                })
                .collect();
            scope.sort_unstable();
            scope.dedup();
            let k = scope.len();
            let table: Vec<f64> = (0..1usize << k)
                .map(|a| {
                    let mut atom_value = |p: usize, args: &[Term]| {
                        let atom = GroundAtom {
                            pred: p,
                            args: ground(args),
                        };
                        match atom_index.get(&atom) {
                            Some(v) => {
                                let pos = scope.binary_search(v).unwrap();
                                (a >> (k - 1 - pos)) & 1 == 1
                            }
                            None => observed[&atom],
                        }
                    };
                    let eq = |s: &Term, t: &Term| value(s) == value(t);
                    wf.formula.eval(&mut atom_value, &eq) as u8 as f64
                })
                .collect();
            let Some(feature) = reduce(Feature::new(scope, table)) else {
                continue;
            };
            feature_of_grounding.insert((fi, subst.clone()), features.len());
            features.push(feature);
            origins.push(FeatureOrigin::Formula { formula: fi, subst });
            formula_of_feature.push(fi);
        }
    }

    let mut formula_tie_class = vec![None; mln.formulas.len()];
    let mut theta = Vec::new();
    let mut tie_class_of = Vec::with_capacity(features.len());
    for &fi in &formula_of_feature {
        let class = *formula_tie_class[fi].get_or_insert_with(|| {
            theta.push(mln.formulas[fi].weight);
            theta.len() - 1
        });
        tie_class_of.push(class);
    }

    let mut soft = Vec::new();
    let mut soft_class: HashMap<u64, usize> = HashMap::new();
    for (a, w) in &evidence.soft {
        let atom = resolve(a);
        let var = atom_index[&atom];
        let class = *soft_class.entry(w.to_bits()).or_insert_with(|| {
            theta.push(*w);
            theta.len() - 1
        });
        features.push(Feature::new(vec![var], vec![0.0, 1.0]));
        tie_class_of.push(class);
        origins.push(FeatureOrigin::Soft { var });
        soft.push((atom, *w));
    }

    let model = Model::new(atoms.len(), features, tie_class_of, theta)?;
    Ok((
        model,
        GroundingMap {
            domain,
            num_distinguished,
            atoms,
            atom_index,
            observed,
            soft,
            origins,
            feature_of_grounding,
            formula_tie_class,
        },
    ))
}

/// Drops the arguments a feature does not depend on; `None` if it is constant.
fn reduce(mut f: Feature) -> Option<Feature> {
    let mut pos = 0;
    while pos < f.arity() {
        if f.depends_on(pos) {
            pos += 1;
            continue;
        }
        let k = f.arity();
        let bit = 1usize << (k - 1 - pos);
        f.table = (0..f.table.len())
            .filter(|a| a & bit == 0)
            .map(|a| f.table[a])
            .collect();
        f.scope.remove(pos);
    }
    (f.arity() > 0).then_some(f)
}
