use std::collections::HashMap;

use super::{Evidence, Formula, Mln, MlnError, NamedAtom, Predicate, Term, WeightedFormula};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    LParen,
    RParen,
    Comma,
    Not,
    And,
    Or,
    Implies,
    Iff,
    Eq,
    Neq,
}

fn lex(text: &str, line: usize, col0: usize) -> Result<Vec<(Tok, usize)>, MlnError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let err = |col: usize, msg: String| MlnError::Syntax { line, col, msg };
    while i < chars.len() {
        let c = chars[i];
        let col = col0 + i;
        let rest: String = chars[i..chars.len().min(i + 3)].iter().collect();
        let (tok, len) = if c.is_whitespace() {
            i += 1;
            continue;
        } else if rest.starts_with("<=>") {
            (Tok::Iff, 3)
        } else if rest.starts_with("=>") {
            (Tok::Implies, 2)
        } else if rest.starts_with("!=") {
            (Tok::Neq, 2)
        } else {
            match c {
                '(' => (Tok::LParen, 1),
                ')' => (Tok::RParen, 1),
                ',' => (Tok::Comma, 1),
                '!' | '¬' => (Tok::Not, 1),
                '^' | '∧' => (Tok::And, 1),
                '∨' => (Tok::Or, 1),
                '⇒' => (Tok::Implies, 1),
                '⇔' => (Tok::Iff, 1),
                '=' => (Tok::Eq, 1),
                '≠' => (Tok::Neq, 1),
                c if c.is_alphanumeric() || c == '_' => {
                    let len = chars[i..]
                        .iter()
                        .take_while(|c| c.is_alphanumeric() || **c == '_')
                        .count();
                    (Tok::Ident(chars[i..i + len].iter().collect()), len)
                }
                _ => return Err(err(col, format!("unexpected character `{c}`"))),
            }
        };
        out.push((tok, col));
        i += len;
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    line: usize,
    end_col: usize,
    predicates: &'a mut Vec<Predicate>,
    vars: Vec<String>,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn col(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end_col, |t| t.1)
    }

    fn err(&self, msg: impl Into<String>) -> MlnError {
        MlnError::Syntax {
            line: self.line,
            col: self.col(),
            msg: msg.into(),
        }
    }

    fn expect(&mut self, t: Tok) -> Result<(), MlnError> {
        if self.peek() == Some(&t) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(format!("expected {t:?}")))
        }
    }

    /// `v` is the disjunction operator wherever an operator is expected.
    fn at_or(&self) -> bool {
        match self.peek() {
            Some(Tok::Or) => true,
            Some(Tok::Ident(s)) => s == "v",
            _ => false,
        }
    }

    fn iff(&mut self) -> Result<Formula, MlnError> {
        let mut lhs = self.implies()?;
        while self.peek() == Some(&Tok::Iff) {
            self.pos += 1;
            lhs = Formula::Iff(Box::new(lhs), Box::new(self.implies()?));
        }
        Ok(lhs)
    }

    fn implies(&mut self) -> Result<Formula, MlnError> {
        let lhs = self.or()?;
        if self.peek() == Some(&Tok::Implies) {
            self.pos += 1;
            let rhs = self.implies()?;
            return Ok(Formula::Implies(Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> Result<Formula, MlnError> {
        let mut lhs = self.and()?;
        while self.at_or() {
            self.pos += 1;
            lhs = Formula::Or(Box::new(lhs), Box::new(self.and()?));
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Formula, MlnError> {
        let mut lhs = self.unary()?;
        while self.peek() == Some(&Tok::And) {
            self.pos += 1;
            lhs = Formula::And(Box::new(lhs), Box::new(self.unary()?));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Formula, MlnError> {
        match self.peek() {
            Some(Tok::Not) => {
                self.pos += 1;
                Ok(Formula::Not(Box::new(self.unary()?)))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let f = self.iff()?;
                self.expect(Tok::RParen)?;
                Ok(f)
            }
            Some(Tok::Ident(_))
                if self.toks.get(self.pos + 1).map(|t| &t.0) == Some(&Tok::LParen) =>
            {
                self.atom()
            }
            Some(Tok::Ident(_)) => {
                let a = self.term()?;
                let negate = match self.peek() {
                    Some(Tok::Eq) => false,
                    Some(Tok::Neq) => true,
                    _ => return Err(self.err("expected `=` or `!=` after a term")),
                };
                self.pos += 1;
                let b = self.term()?;
                let eq = Formula::Equal(a, b);
                Ok(if negate {
                    Formula::Not(Box::new(eq))
                } else {
                    eq
                })
            }
            _ => Err(self.err("expected a literal")),
        }
    }

    fn term(&mut self) -> Result<Term, MlnError> {
        let Some(Tok::Ident(name)) = self.peek().cloned() else {
            return Err(self.err("expected a term"));
        };
        self.pos += 1;
        if name
            .chars()
            .next()
            .is_some_and(|c| c.is_uppercase() || c.is_ascii_digit())
        {
            return Ok(Term::Const(name));
        }
        let idx = match self.vars.iter().position(|v| *v == name) {
            Some(i) => i,
            None => {
                self.vars.push(name);
                self.vars.len() - 1
            }
        };
        Ok(Term::Var(idx))
    }

    fn atom(&mut self) -> Result<Formula, MlnError> {
        let Some(Tok::Ident(name)) = self.peek().cloned() else {
            return Err(self.err("expected a predicate"));
        };
        self.pos += 1;
        self.expect(Tok::LParen)?;
        let mut args = vec![self.term()?];
        while self.peek() == Some(&Tok::Comma) {
            self.pos += 1;
            args.push(self.term()?);
        }
        self.expect(Tok::RParen)?;
        let pred = declare(self.predicates, &name, args.len(), self.line)?;
        Ok(Formula::Atom { pred, args })
    }
}

fn declare(
    predicates: &mut Vec<Predicate>,
    name: &str,
    arity: usize,
    line: usize,
) -> Result<usize, MlnError> {
    match predicates.iter().position(|p| p.name == name) {
        Some(i) if predicates[i].arity == arity => Ok(i),
        Some(i) => Err(MlnError::Arity {
            line,
            name: name.to_string(),
            expected: predicates[i].arity,
            got: arity,
        }),
        None => {
            predicates.push(Predicate {
                name: name.to_string(),
                arity,
            });
            Ok(predicates.len() - 1)
        }
    }
}

fn content(line: &str) -> &str {
    line.split('#').next().unwrap_or("")
}

/// Parses an MLN: optional `predicate Name/arity` headers, then
/// `<weight> <formula>` lines.
pub fn parse_mln(text: &str) -> Result<Mln, MlnError> {
    let mut predicates = Vec::new();
    let mut formulas = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = content(raw);
        let trimmed = body.trim_start();
        if trimmed.trim().is_empty() {
            continue;
        }
        let col0 = body.len() - trimmed.len() + 1;
        let (head, rest) = trimmed
            .split_once(char::is_whitespace)
            .unwrap_or((trimmed, ""));
        if head == "predicate" {
            let decl = rest.trim();
            let (name, arity) = decl
                .split_once('/')
                .and_then(|(n, a)| Some((n.trim(), a.trim().parse::<usize>().ok()?)))
                .filter(|(n, a)| !n.is_empty() && *a > 0)
                .ok_or_else(|| MlnError::Syntax {
                    line,
                    col: col0,
                    msg: format!("bad predicate declaration `{decl}`"),
                })?;
            declare(&mut predicates, name, arity, line)?;
            continue;
        }
        let weight: f64 = head
            .parse()
            .ok()
            .filter(|w: &f64| w.is_finite())
            .ok_or_else(|| MlnError::Syntax {
                line,
                col: col0,
                msg: format!("expected a weight, found `{head}`"),
            })?;
        let offset = col0 + head.len();
        let toks = lex(rest, line, offset + 1)?;
        let mut p = Parser {
            toks,
            pos: 0,
            line,
            end_col: offset + rest.chars().count() + 1,
            predicates: &mut predicates,
            vars: Vec::new(),
        };
        let formula = p.iff()?;
        if p.pos != p.toks.len() {
            return Err(p.err("unexpected trailing input"));
        }
        let vars = std::mem::take(&mut p.vars);
        formulas.push(WeightedFormula {
            weight,
            formula,
            vars,
        });
    }
    Ok(Mln {
        predicates,
        formulas,
    })
}

/// Parses evidence lines `Atom`, `!Atom` or `soft Atom <weight>`.
pub fn parse_evidence(text: &str, mln: &Mln) -> Result<Evidence, MlnError> {
    let mut ev = Evidence::default();
    let mut seen: HashMap<NamedAtom, bool> = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = content(raw).trim();
        if body.is_empty() {
            continue;
        }
        let syntax = |msg: String| MlnError::Syntax { line, col: 1, msg };
        if let Some(rest) = body.strip_prefix("soft ") {
            let rest = rest.trim();
            let (atom, w) = rest
                .rsplit_once(char::is_whitespace)
                .ok_or_else(|| syntax("soft evidence needs an atom and a weight".into()))?;
            let w: f64 = w
                .parse()
                .ok()
                .filter(|w: &f64| w.is_finite())
                .ok_or_else(|| syntax(format!("bad weight `{w}`")))?;
            ev.soft.push((ground_atom(atom.trim(), mln, line)?, w));
        } else {
            let (value, atom) = match body.strip_prefix('!') {
                Some(a) => (false, a.trim()),
                None => (true, body),
            };
            let atom = ground_atom(atom, mln, line)?;
            if let Some(&old) = seen.get(&atom) {
                if old != value {
                    return Err(MlnError::ConflictingEvidence {
                        line,
                        atom: describe(&atom, mln),
                    });
                }
                continue;
            }
            seen.insert(atom.clone(), value);
            ev.hard.push((atom, value));
        }
    }
    for (atom, _) in &ev.soft {
        if seen.contains_key(atom) {
            return Err(MlnError::ConflictingEvidence {
                line: 0,
                atom: describe(atom, mln),
            });
        }
    }
    Ok(ev)
}

pub(crate) fn describe(atom: &NamedAtom, mln: &Mln) -> String {
    format!(
        "{}({})",
        mln.predicates[atom.pred].name,
        atom.args.join(",")
    )
}

fn ground_atom(text: &str, mln: &Mln, line: usize) -> Result<NamedAtom, MlnError> {
    let syntax = |msg: String| MlnError::Syntax { line, col: 1, msg };
    let (name, args) = text
        .strip_suffix(')')
        .and_then(|t| t.split_once('('))
        .ok_or_else(|| syntax(format!("bad ground atom `{text}`")))?;
    let name = name.trim();
    let pred = mln
        .predicate_index(name)
        .ok_or_else(|| MlnError::UnknownPredicate {
            line,
            name: name.to_string(),
        })?;
    let args: Vec<String> = args.split(',').map(|a| a.trim().to_string()).collect();
    if args
        .iter()
        .any(|a| a.is_empty() || !a.chars().all(|c| c.is_alphanumeric() || c == '_'))
    {
        return Err(syntax(format!("bad constant in `{text}`")));
    }
    let expected = mln.predicates[pred].arity;
    if args.len() != expected {
        return Err(MlnError::Arity {
            line,
            name: name.to_string(),
            expected,
            got: args.len(),
        });
    }
    Ok(NamedAtom { pred, args })
}
