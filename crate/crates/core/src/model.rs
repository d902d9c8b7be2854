//! Binary factored exponential families with tied parameters.
//!
//! A [`Model`] is a list of table features over binary variables. Each
//! feature belongs to a tie class, and all features of one class share the
//! natural parameter of that class. The log-density of a configuration, up to
//! the log-partition constant, is [`Model::score`].

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use thiserror::Error;

/// Errors raised while validating or parsing a model.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("model has no features")]
    NoFeatures,
    #[error("feature {feature}: table length mismatch (expected {expected}, got {got})")]
    TableLengthMismatch {
        feature: usize,
        expected: usize,
        got: usize,
    },
    #[error("feature {feature}: empty scope")]
    EmptyScope { feature: usize },
    #[error("feature {feature}: scope is not strictly increasing")]
    ScopeNotIncreasing { feature: usize },
    #[error("feature {feature}: variable {var} out of range (n = {num_vars})")]
    VarOutOfRange {
        feature: usize,
        var: usize,
        num_vars: usize,
    },
    #[error("feature {feature}: unknown tie class {class}")]
    UnknownTieClass { feature: usize, class: usize },
    #[error("tie class {class} has no features")]
    EmptyTieClass { class: usize },
    #[error("feature {feature}: does not depend on argument {position}")]
    IrrelevantArgument { feature: usize, position: usize },
    #[error("non-finite value: {what}")]
    NonFinite { what: String },
    #[error("feature {feature}: arity {arity} exceeds the supported maximum of {max}")]
    ArityTooLarge {
        feature: usize,
        arity: usize,
        max: usize,
    },
    #[error("configuration has length {got}, model has {expected} variables")]
    ConfigLength { expected: usize, got: usize },
}

/// Largest supported feature arity. Tables have `2^arity` entries.
pub const MAX_ARITY: usize = 16;

/// A table feature `f(x_{s_1}, ..., x_{s_K})`.
///
/// `table` is indexed by the scope assignment read as a binary number with the
/// first scope variable as the most significant bit.
#[derive(Debug, Clone, PartialEq)]
pub struct Feature {
    pub scope: Vec<usize>,
    pub table: Vec<f64>,
}

impl Feature {
    pub fn new(scope: Vec<usize>, table: Vec<f64>) -> Self {
        Self { scope, table }
    }

    pub fn arity(&self) -> usize {
        self.scope.len()
    }

    /// Table index of the scope restriction of `x`.
    pub fn index_of(&self, x: &[bool]) -> usize {
        self.scope
            .iter()
            .fold(0usize, |acc, &v| (acc << 1) | x[v] as usize)
    }

    pub fn eval(&self, x: &[bool]) -> f64 {
        self.table[self.index_of(x)]
    }

    /// Whether the table changes with the argument at `position`.
    pub fn depends_on(&self, position: usize) -> bool {
        let k = self.arity();
        let bit = 1usize << (k - 1 - position);
        (0..self.table.len())
            .filter(|a| a & bit == 0)
            .any(|a| self.table[a].to_bits() != self.table[a | bit].to_bits())
    }
}

/// Value of bit `position` (0 = most significant) in a `k`-bit assignment.
#[inline]
pub fn assignment_bit(a: usize, k: usize, position: usize) -> usize {
    (a >> (k - 1 - position)) & 1
}

/// A validated binary factored exponential family with a tie partition.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    num_vars: usize,
    features: Vec<Feature>,
    tie_class_of: Vec<usize>,
    theta: Vec<f64>,
}

impl Model {
    pub fn new(
        num_vars: usize,
        features: Vec<Feature>,
        tie_class_of: Vec<usize>,
        theta: Vec<f64>,
    ) -> Result<Self, ModelError> {
        if features.is_empty() {
            return Err(ModelError::NoFeatures);
        }
        assert_eq!(features.len(), tie_class_of.len());
        for (k, w) in theta.iter().enumerate() {
            if !w.is_finite() {
                return Err(ModelError::NonFinite {
                    what: format!("theta {k}"),
                });
            }
        }
        let mut used = vec![false; theta.len()];
        for (i, f) in features.iter().enumerate() {
            if f.scope.is_empty() {
                return Err(ModelError::EmptyScope { feature: i });
            }
            if f.arity() > MAX_ARITY {
                return Err(ModelError::ArityTooLarge {
                    feature: i,
                    arity: f.arity(),
                    max: MAX_ARITY,
                });
            }
            if let Some(&v) = f.scope.iter().find(|&&v| v >= num_vars) {
                return Err(ModelError::VarOutOfRange {
                    feature: i,
                    var: v,
                    num_vars,
                });
            }
            if f.scope.windows(2).any(|w| w[0] >= w[1]) {
                return Err(ModelError::ScopeNotIncreasing { feature: i });
            }
            let expected = 1usize << f.arity();
            if f.table.len() != expected {
                return Err(ModelError::TableLengthMismatch {
                    feature: i,
                    expected,
                    got: f.table.len(),
                });
            }
            if f.table.iter().any(|v| !v.is_finite()) {
                return Err(ModelError::NonFinite {
                    what: format!("table of feature {i}"),
                });
            }
            if let Some(p) = (0..f.arity()).find(|&p| !f.depends_on(p)) {
                return Err(ModelError::IrrelevantArgument {
                    feature: i,
                    position: p,
                });
            }
            let c = tie_class_of[i];
            if c >= theta.len() {
                return Err(ModelError::UnknownTieClass {
                    feature: i,
                    class: c,
                });
            }
            used[c] = true;
        }
        if let Some(c) = used.iter().position(|u| !u) {
            return Err(ModelError::EmptyTieClass { class: c });
        }
        Ok(Self {
            num_vars,
            features,
            tie_class_of,
            theta,
        })
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_features(&self) -> usize {
        self.features.len()
    }

    pub fn features(&self) -> &[Feature] {
        &self.features
    }

    pub fn feature(&self, i: usize) -> &Feature {
        &self.features[i]
    }

    pub fn tie_class_of(&self, i: usize) -> usize {
        self.tie_class_of[i]
    }

    pub fn tie_classes(&self) -> &[usize] {
        &self.tie_class_of
    }

    pub fn num_tie_classes(&self) -> usize {
        self.theta.len()
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    /// Natural parameter of feature `i`.
    pub fn weight(&self, i: usize) -> f64 {
        self.theta[self.tie_class_of[i]]
    }

    /// `<Phi(x), theta>`, the log-density up to the log-partition constant.
    pub fn score(&self, x: &[bool]) -> Result<f64, ModelError> {
        self.check_config(x)?;
        Ok(self.score_unchecked(x))
    }

    pub(crate) fn score_unchecked(&self, x: &[bool]) -> f64 {
        self.features
            .iter()
            .enumerate()
            .map(|(i, f)| self.weight(i) * f.eval(x))
            .sum()
    }

    /// The feature vector `Phi(x)`.
    pub fn feature_values(&self, x: &[bool]) -> Result<Vec<f64>, ModelError> {
        self.check_config(x)?;
        Ok(self.features.iter().map(|f| f.eval(x)).collect())
    }

    fn check_config(&self, x: &[bool]) -> Result<(), ModelError> {
        if x.len() != self.num_vars {
            return Err(ModelError::ConfigLength {
                expected: self.num_vars,
                got: x.len(),
            });
        }
        Ok(())
    }

    pub fn skeleton(&self) -> Skeleton {
        let mut edges = BTreeSet::new();
        let mut hyperedges = BTreeSet::new();
        for f in &self.features {
            for (a, &u) in f.scope.iter().enumerate() {
                for &v in &f.scope[a + 1..] {
                    edges.insert((u, v));
                }
            }
            if f.arity() >= 3 {
                hyperedges.insert(f.scope.clone());
            }
        }
        Skeleton {
            edges: edges.into_iter().collect(),
            hyperedges: hyperedges.into_iter().collect(),
        }
    }

    /// Parameters of the equivalent overcomplete family.
    pub fn to_overcomplete(&self) -> OvercompleteParams {
        let index = OvercompleteIndex::new(self);
        let mut node_theta = vec![[0.0; 2]; self.num_vars];
        let mut pair_theta: BTreeMap<(usize, usize), [f64; 4]> =
            index.edges.iter().map(|&e| (e, [0.0; 4])).collect();
        let mut factor_theta = BTreeMap::new();
        for (i, f) in self.features.iter().enumerate() {
            let w = self.weight(i);
            match f.arity() {
                1 => {
                    for (s, &v) in node_theta[f.scope[0]].iter_mut().zip(&f.table) {
                        *s += w * v;
                    }
                }
                2 => {
                    let slot = pair_theta.get_mut(&(f.scope[0], f.scope[1])).unwrap();
                    for (s, &v) in slot.iter_mut().zip(&f.table) {
                        *s += w * v;
                    }
                }
                _ => {
                    factor_theta.insert(i, f.table.iter().map(|v| w * v).collect());
                }
            }
        }
        OvercompleteParams {
            node_theta,
            pair_theta,
            factor_theta,
        }
    }

    /// Writes the canonical FGM text for this model.
    pub fn to_fgm(&self) -> String {
        let mut out = String::new();
        out.push_str("fgm 1\n");
        let _ = writeln!(out, "vars {}", self.num_vars);
        let _ = writeln!(out, "tieclasses {}", self.theta.len());
        for (k, w) in self.theta.iter().enumerate() {
            let _ = writeln!(out, "theta {k} {w}");
        }
        for (i, f) in self.features.iter().enumerate() {
            let _ = write!(out, "factor {} {}", self.tie_class_of[i], f.arity());
            for v in &f.scope {
                let _ = write!(out, " {v}");
            }
            for v in &f.table {
                let _ = write!(out, " {v}");
            }
            out.push('\n');
        }
        out
    }
}

/// Parses FGM text into a validated model.
pub fn parse_model(text: &str) -> Result<Model, ModelError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let syntax = |line: usize, msg: &str| ModelError::Syntax {
        line,
        msg: msg.to_string(),
    };
    let mut header = |key: &str| -> Result<(usize, Vec<&str>), ModelError> {
        let (ln, l) = lines
            .next()
            .ok_or_else(|| syntax(0, &format!("unexpected end of input, expected `{key}`")))?;
        let toks: Vec<&str> = l.split_whitespace().collect();
        if toks[0] != key {
            return Err(syntax(
                ln,
                &format!("expected `{key}`, found `{}`", toks[0]),
            ));
        }
        Ok((ln, toks))
    };

    let (ln, toks) = header("fgm")?;
    if toks.len() != 2 || toks[1] != "1" {
        return Err(syntax(ln, "unsupported format version"));
    }
    let (ln, toks) = header("vars")?;
    let num_vars = one_int(ln, &toks)?;
    let (ln, toks) = header("tieclasses")?;
    let num_classes = one_int(ln, &toks)?;
    let mut theta = vec![None; num_classes];
    for _ in 0..num_classes {
        let (ln, toks) = header("theta")?;
        if toks.len() != 3 {
            return Err(syntax(ln, "expected `theta <k> <real>`"));
        }
        let k = parse_int(ln, toks[1])?;
        if k >= num_classes {
            return Err(syntax(ln, &format!("tie class {k} out of range")));
        }
        if theta[k].is_some() {
            return Err(syntax(ln, &format!("duplicate theta for tie class {k}")));
        }
        theta[k] = Some(parse_real(ln, toks[2])?);
    }
    let theta: Vec<f64> = theta.into_iter().map(|t| t.unwrap()).collect();

    let mut features = Vec::new();
    let mut ties = Vec::new();
    for (ln, l) in lines {
        let toks: Vec<&str> = l.split_whitespace().collect();
        if toks[0] != "factor" {
            return Err(syntax(
                ln,
                &format!("expected `factor`, found `{}`", toks[0]),
            ));
        }
        if toks.len() < 3 {
            return Err(syntax(ln, "expected `factor <tieclass> <arity> ...`"));
        }
        let class = parse_int(ln, toks[1])?;
        let arity = parse_int(ln, toks[2])?;
        if arity == 0 || arity > MAX_ARITY {
            return Err(syntax(ln, &format!("unsupported arity {arity}")));
        }
        let rest = &toks[3..];
        if rest.len() < arity {
            return Err(syntax(ln, "missing scope variables"));
        }
        let scope = rest[..arity]
            .iter()
            .map(|t| parse_int(ln, t))
            .collect::<Result<Vec<_>, _>>()?;
        let table = rest[arity..]
            .iter()
            .map(|t| parse_real(ln, t))
            .collect::<Result<Vec<_>, _>>()?;
        features.push(Feature::new(scope, table));
        ties.push(class);
    }
    Model::new(num_vars, features, ties, theta)
}

fn one_int(line: usize, toks: &[&str]) -> Result<usize, ModelError> {
    if toks.len() != 2 {
        return Err(ModelError::Syntax {
            line,
            msg: format!("expected `{} <integer>`", toks[0]),
        });
    }
    parse_int(line, toks[1])
}

fn parse_int(line: usize, tok: &str) -> Result<usize, ModelError> {
    tok.parse().map_err(|_| ModelError::Syntax {
        line,
        msg: format!("invalid integer `{tok}`"),
    })
}

fn parse_real(line: usize, tok: &str) -> Result<f64, ModelError> {
    let v: f64 = tok.parse().map_err(|_| ModelError::Syntax {
        line,
        msg: format!("invalid real `{tok}`"),
    })?;
    if !v.is_finite() {
        return Err(ModelError::Syntax {
            line,
            msg: format!("non-finite real `{tok}`"),
        });
    }
    Ok(v)
}

/// Graph structure of a model: pairwise edges and hyperedges of arity >= 3.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Skeleton {
    /// Sorted `(u, v)` pairs with `u < v`.
    pub edges: Vec<(usize, usize)>,
    pub hyperedges: Vec<Vec<usize>>,
}

/// Parameters of the overcomplete representation.
///
/// `pair_theta[(u, v)]` is indexed by `2 * x_u + x_v` and has an entry for
/// every skeleton edge, including pairs that only co-occur in larger factors.
#[derive(Debug, Clone, PartialEq)]
pub struct OvercompleteParams {
    pub node_theta: Vec<[f64; 2]>,
    pub pair_theta: BTreeMap<(usize, usize), [f64; 4]>,
    /// Per feature of arity >= 3, `theta_i * f_i(a)` for every assignment `a`.
    pub factor_theta: BTreeMap<usize, Vec<f64>>,
}

impl OvercompleteParams {
    /// Flattens into the coordinate layout of `index`.
    pub fn to_vector(&self, index: &OvercompleteIndex) -> Vec<f64> {
        let mut out = vec![0.0; index.len()];
        for (v, th) in self.node_theta.iter().enumerate() {
            out[index.node(v, 0)] = th[0];
            out[index.node(v, 1)] = th[1];
        }
        for (&(u, v), th) in &self.pair_theta {
            let e = index.edge_id(u, v).expect("pair is a skeleton edge");
            for (s, &w) in th.iter().enumerate() {
                out[index.edge(e, s >> 1, s & 1)] = w;
            }
        }
        for (&i, th) in &self.factor_theta {
            let slot = index.factor_slot(i).expect("feature has a factor block");
            for (a, &w) in th.iter().enumerate() {
                out[index.factor(slot, a)] = w;
            }
        }
        out
    }
}

/// Coordinate layout of overcomplete vectors.
///
/// Nodes come first (`2v + t`), then four coordinates per skeleton edge
/// (`00, 01, 10, 11` with the lower variable first), then one block of
/// `2^K` coordinates per feature of arity `K >= 3`.
#[derive(Debug, Clone)]
pub struct OvercompleteIndex {
    num_vars: usize,
    edges: Vec<(usize, usize)>,
    edge_ids: HashMap<(usize, usize), usize>,
    factors: Vec<usize>,
    factor_slot_of: Vec<Option<usize>>,
    factor_offsets: Vec<usize>,
    len: usize,
}

impl OvercompleteIndex {
    pub fn new(model: &Model) -> Self {
        let edges = model.skeleton().edges;
        let edge_ids = edges.iter().enumerate().map(|(i, &e)| (e, i)).collect();
        let mut factors = Vec::new();
        let mut factor_slot_of = vec![None; model.num_features()];
        let mut factor_offsets = Vec::new();
        let mut len = 2 * model.num_vars() + 4 * edges.len();
        for (i, f) in model.features().iter().enumerate() {
            if f.arity() >= 3 {
                factor_slot_of[i] = Some(factors.len());
                factors.push(i);
                factor_offsets.push(len);
                len += f.table.len();
            }
        }
        Self {
            num_vars: model.num_vars(),
            edges,
            edge_ids,
            factors,
            factor_slot_of,
            factor_offsets,
            len,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_id(&self, u: usize, v: usize) -> Option<usize> {
        let key = if u < v { (u, v) } else { (v, u) };
        self.edge_ids.get(&key).copied()
    }

    /// Features with a factor block, in block order.
    pub fn factor_features(&self) -> &[usize] {
        &self.factors
    }

    pub fn factor_slot(&self, feature: usize) -> Option<usize> {
        self.factor_slot_of.get(feature).copied().flatten()
    }

    pub fn node(&self, v: usize, t: usize) -> usize {
        2 * v + t
    }

    /// Coordinate of edge `e = (u, v)` at `x_u = tu, x_v = tv`.
    pub fn edge(&self, e: usize, tu: usize, tv: usize) -> usize {
        2 * self.num_vars + 4 * e + 2 * tu + tv
    }

    /// Coordinate of the arc `(a, b)`, i.e. the pair value `{a:0, b:1}`.
    pub fn arc(&self, a: usize, b: usize) -> Option<usize> {
        let e = self.edge_id(a, b)?;
        Some(if a < b {
            self.edge(e, 0, 1)
        } else {
            self.edge(e, 1, 0)
        })
    }

    pub fn factor(&self, slot: usize, a: usize) -> usize {
        self.factor_offsets[slot] + a
    }

    pub fn factor_range(&self, slot: usize) -> std::ops::Range<usize> {
        let start = self.factor_offsets[slot];
        let end = self
            .factor_offsets
            .get(slot + 1)
            .copied()
            .unwrap_or(self.len);
        start..end
    }

    /// The overcomplete feature vector `Phi°(x)`.
    pub fn indicator(&self, model: &Model, x: &[bool]) -> Vec<f64> {
        let mut out = vec![0.0; self.len];
        for (v, &b) in x.iter().enumerate() {
            out[self.node(v, b as usize)] = 1.0;
        }
        for (e, &(u, v)) in self.edges.iter().enumerate() {
            out[self.edge(e, x[u] as usize, x[v] as usize)] = 1.0;
        }
        for (slot, &i) in self.factors.iter().enumerate() {
            out[self.factor(slot, model.feature(i).index_of(x))] = 1.0;
        }
        out
    }
}

#[cfg(test)]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
