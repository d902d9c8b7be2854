//! Markov logic networks: parsing, grounding with evidence, and orbits of
//! the constant-renaming group.

mod ground;
mod parse;
mod renaming;

use std::collections::BTreeSet;

use thiserror::Error;

use crate::model::ModelError;

pub use ground::{ground_mln, FeatureOrigin, GroundAtom, GroundingMap};
pub use parse::{parse_evidence, parse_mln};
pub use renaming::{
    atom_signature, orbit_sizes_analytic, renaming_orbits, ArgTag, AtomSignature, RenamingGroup,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MlnError {
    #[error("line {line}, column {col}: {msg}")]
    Syntax {
        line: usize,
        col: usize,
        msg: String,
    },
    #[error("line {line}: predicate {name} has arity {expected}, used with {got} arguments")]
    Arity {
        line: usize,
        name: String,
        expected: usize,
        got: usize,
    },
    #[error("line {line}: unknown predicate {name}")]
    UnknownPredicate { line: usize, name: String },
    #[error("line {line}: conflicting evidence for {atom}")]
    ConflictingEvidence { line: usize, atom: String },
    #[error("domain size {got} is smaller than the {needed} named constants")]
    DomainTooSmall { needed: usize, got: usize },
    #[error("grounded model is invalid: {0}")]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Predicate {
    pub name: String,
    pub arity: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    /// Index into the formula's logical variables.
    Var(usize),
    Const(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Formula {
    Atom { pred: usize, args: Vec<Term> },
    Equal(Term, Term),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
}

impl Formula {
    /// Truth value given an atom valuation and a constant valuation of terms.
    pub(crate) fn eval(
        &self,
        atom: &mut impl FnMut(usize, &[Term]) -> bool,
        term_eq: &impl Fn(&Term, &Term) -> bool,
    ) -> bool {
        match self {
            Formula::Atom { pred, args } => atom(*pred, args),
            Formula::Equal(a, b) => term_eq(a, b),
            Formula::Not(f) => !f.eval(atom, term_eq),
            Formula::And(a, b) => a.eval(atom, term_eq) && b.eval(atom, term_eq),
            Formula::Or(a, b) => a.eval(atom, term_eq) || b.eval(atom, term_eq),
            Formula::Implies(a, b) => !a.eval(atom, term_eq) || b.eval(atom, term_eq),
            Formula::Iff(a, b) => a.eval(atom, term_eq) == b.eval(atom, term_eq),
        }
    }

    pub(crate) fn atoms<'a>(&'a self, out: &mut Vec<(usize, &'a [Term])>) {
        match self {
            Formula::Atom { pred, args } => out.push((*pred, args)),
            Formula::Equal(..) => {}
            Formula::Not(f) => f.atoms(out),
            Formula::And(a, b)
            | Formula::Or(a, b)
            | Formula::Implies(a, b)
            | Formula::Iff(a, b) => {
                a.atoms(out);
                b.atoms(out);
            }
        }
    }

    fn constants(&self, out: &mut BTreeSet<String>) {
        let mut add = |t: &Term| {
            if let Term::Const(c) = t {
                out.insert(c.clone());
            }
        };
        match self {
            Formula::Atom { args, .. } => args.iter().for_each(add),
            Formula::Equal(a, b) => {
                add(a);
                add(b);
            }
            Formula::Not(f) => f.constants(out),
            Formula::And(a, b)
            | Formula::Or(a, b)
            | Formula::Implies(a, b)
            | Formula::Iff(a, b) => {
                a.constants(out);
                b.constants(out);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedFormula {
    pub weight: f64,
    pub formula: Formula,
    /// Logical variable names, in order of first appearance.
    pub vars: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mln {
    pub predicates: Vec<Predicate>,
    pub formulas: Vec<WeightedFormula>,
}

impl Mln {
    pub fn predicate_index(&self, name: &str) -> Option<usize> {
        self.predicates.iter().position(|p| p.name == name)
    }

    /// Constants named in formulas.
    pub fn constants(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for f in &self.formulas {
            f.formula.constants(&mut out);
        }
        out
    }
}

/// An evidence atom with constant names.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NamedAtom {
    pub pred: usize,
    pub args: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Evidence {
    pub hard: Vec<(NamedAtom, bool)>,
    pub soft: Vec<(NamedAtom, f64)>,
}

impl Evidence {
    pub fn constants(&self) -> BTreeSet<String> {
        self.hard
            .iter()
            .map(|(a, _)| a)
            .chain(self.soft.iter().map(|(a, _)| a))
            .flat_map(|a| a.args.iter().cloned())
            .collect()
    }
}

/// Named constants sorted, then generated `C1, C2, ...` up to `domain_size`
/// in total, skipping names already taken.
pub fn build_domain(
    mln: &Mln,
    evidence: &Evidence,
    domain_size: usize,
) -> Result<(Vec<String>, usize), MlnError> {
    let mut named = mln.constants();
    named.extend(evidence.constants());
    if named.len() > domain_size {
        return Err(MlnError::DomainTooSmall {
            needed: named.len(),
            got: domain_size,
        });
    }
    let num_named = named.len();
    let mut domain: Vec<String> = named.iter().cloned().collect();
    let mut k = 1;
    while domain.len() < domain_size {
        let name = format!("C{k}");
        k += 1;
        if !named.contains(&name) {
            domain.push(name);
        }
    }
    Ok((domain, num_named))
}
