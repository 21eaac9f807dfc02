//! Core data model for dependence relations: affine expressions over
//! iterators, symbolic constants and uninterpreted-function terms, plus
//! constraint normalization and canonical printing.

use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;

/// Role of a symbolic constant, used only by the complexity estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ConstRole {
    /// Matrix dimension (`n`).
    Size,
    /// Number of stored nonzeros (`nnz`).
    NonzeroCount,
    Other,
}

/// A symbolic problem constant such as `n` or `nnz`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymbolicConst {
    pub name: String,
    pub lower_hint: Option<i64>,
    pub role: ConstRole,
}

impl SymbolicConst {
    pub fn new(name: &str) -> Self {
        let role = match name {
            "n" => ConstRole::Size,
            "nnz" => ConstRole::NonzeroCount,
            _ => ConstRole::Other,
        };
        SymbolicConst { name: name.to_string(), lower_hint: Some(0), role }
    }
}

/// An uninterpreted function symbol standing for an index array.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UfSymbol {
    pub name: String,
    pub arity: usize,
}

/// An occurrence of an index-array function applied to affine arguments.
/// Arguments may themselves contain UF terms, e.g. `lcolptr(pruneset(ip))`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct UfTerm {
    pub symbol: String,
    pub args: Vec<AffineExpr>,
}

impl UfTerm {
    pub fn depth(&self) -> usize {
        1 + self.args.iter().map(|a| a.uf_depth()).max().unwrap_or(0)
    }
}

/// An atom of an affine expression: an iterator variable, a symbolic
/// constant, or an (opaque, integer-valued) UF term.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Atom {
    Var(String),
    Sym(String),
    Uf(UfTerm),
}

impl Atom {
    pub fn as_var(&self) -> Option<&str> {
        match self {
            Atom::Var(v) => Some(v),
            _ => None,
        }
    }
}

/// Integer affine expression: `constant + sum(coeff * atom)`.
/// Normalized form: atoms sorted, unique, no zero coefficients.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AffineExpr {
    pub constant: i64,
    pub terms: Vec<(i64, Atom)>,
}

impl AffineExpr {
    pub fn constant(c: i64) -> Self {
        AffineExpr { constant: c, terms: vec![] }
    }

    pub fn var(name: &str) -> Self {
        AffineExpr { constant: 0, terms: vec![(1, Atom::Var(name.to_string()))] }
    }

    pub fn atom(a: Atom) -> Self {
        AffineExpr { constant: 0, terms: vec![(1, a)] }
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn uf_depth(&self) -> usize {
        self.terms
            .iter()
            .map(|(_, a)| match a {
                Atom::Uf(t) => t.depth(),
                _ => 0,
            })
            .max()
            .unwrap_or(0)
    }

    /// Restores the sorted/merged invariant after arbitrary term edits.
    pub fn normalize(&mut self) {
        self.terms.sort_by(|a, b| a.1.cmp(&b.1));
        let mut out: Vec<(i64, Atom)> = Vec::with_capacity(self.terms.len());
        for (c, a) in self.terms.drain(..) {
            match out.last_mut() {
                Some((lc, la)) if *la == a => *lc += c,
                _ => out.push((c, a)),
            }
        }
        out.retain(|(c, _)| *c != 0);
        self.terms = out;
    }

    pub fn add(&self, other: &AffineExpr) -> AffineExpr {
        let mut e = self.clone();
        e.constant += other.constant;
        e.terms.extend(other.terms.iter().cloned());
        e.normalize();
        e
    }

    pub fn scale(&self, k: i64) -> AffineExpr {
        if k == 0 {
            return AffineExpr::default();
        }
        let mut e = self.clone();
        e.constant *= k;
        for t in &mut e.terms {
            t.0 *= k;
        }
        e
    }

    pub fn sub(&self, other: &AffineExpr) -> AffineExpr {
        self.add(&other.scale(-1))
    }

    pub fn add_const(&self, c: i64) -> AffineExpr {
        let mut e = self.clone();
        e.constant += c;
        e
    }

    /// All UF terms occurring in the expression, including nested ones.
    pub fn collect_uf_terms(&self, out: &mut BTreeSet<UfTerm>) {
        for (_, a) in &self.terms {
            if let Atom::Uf(t) = a {
                out.insert(t.clone());
                for arg in &t.args {
                    arg.collect_uf_terms(out);
                }
            }
        }
    }

    /// Variables occurring anywhere, including inside UF arguments.
    pub fn collect_vars(&self, out: &mut BTreeSet<String>) {
        for (_, a) in &self.terms {
            match a {
                Atom::Var(v) => {
                    out.insert(v.clone());
                }
                Atom::Sym(_) => {}
                Atom::Uf(t) => {
                    for arg in &t.args {
                        arg.collect_vars(out);
                    }
                }
            }
        }
    }

    /// Substitutes variables by expressions (recursing into UF arguments).
    pub fn subst(&self, map: &dyn Fn(&str) -> Option<AffineExpr>) -> AffineExpr {
        let mut result = AffineExpr::constant(self.constant);
        for (c, a) in &self.terms {
            let piece = match a {
                Atom::Var(v) => match map(v) {
                    Some(e) => e.scale(*c),
                    None => AffineExpr { constant: 0, terms: vec![(*c, a.clone())] },
                },
                Atom::Sym(_) => AffineExpr { constant: 0, terms: vec![(*c, a.clone())] },
                Atom::Uf(t) => {
                    let nt = UfTerm {
                        symbol: t.symbol.clone(),
                        args: t.args.iter().map(|arg| arg.subst(map)).collect(),
                    };
                    AffineExpr { constant: 0, terms: vec![(*c, Atom::Uf(nt))] }
                }
            };
            result = result.add(&piece);
        }
        result
    }

    pub fn coeff_of_var(&self, v: &str) -> i64 {
        self.terms
            .iter()
            .find(|(_, a)| matches!(a, Atom::Var(x) if x == v))
            .map(|(c, _)| *c)
            .unwrap_or(0)
    }

    /// True if `v` occurs inside some UF argument (as opposed to linearly).
    pub fn var_under_uf(&self, v: &str) -> bool {
        self.terms.iter().any(|(_, a)| match a {
            Atom::Uf(t) => t.args.iter().any(|arg| {
                let mut vs = BTreeSet::new();
                arg.collect_vars(&mut vs);
                vs.contains(v)
            }),
            _ => false,
        })
    }
}

impl fmt::Display for AffineExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (c, a) in &self.terms {
            if *c >= 0 && !first {
                write!(f, " + ")?;
            } else if *c < 0 {
                write!(f, "{}", if first { "-" } else { " - " })?;
            }
            let mag = c.unsigned_abs();
            if mag != 1 {
                write!(f, "{}*", mag)?;
            }
            write!(f, "{}", a)?;
            first = false;
        }
        if self.constant != 0 || first {
            if !first {
                write!(f, "{}", if self.constant >= 0 { " + " } else { " - " })?;
                write!(f, "{}", self.constant.abs())?;
            } else {
                write!(f, "{}", self.constant)?;
            }
        }
        Ok(())
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Var(v) => write!(f, "{}", v),
            Atom::Sym(s) => write!(f, "{}", s),
            Atom::Uf(t) => write!(f, "{}", t),
        }
    }
}

impl fmt::Display for UfTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.symbol)?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}", a)?;
        }
        write!(f, ")")
    }
}

/// Constraint comparison kind. All internal constraints are `expr = 0`
/// or `expr >= 0`; strict and chained forms are expanded at parse time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CmpKind {
    Eq,
    Geq,
}

/// Exact constraints always hold for in-bounds data; `may` marks
/// data-dependent guards that only sometimes hold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Tag {
    Exact,
    May,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Constraint {
    pub kind: CmpKind,
    pub expr: AffineExpr,
    pub tag: Tag,
}

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

impl Constraint {
    pub fn eq(expr: AffineExpr) -> Self {
        normalize(Constraint { kind: CmpKind::Eq, expr, tag: Tag::Exact })
    }

    pub fn geq(expr: AffineExpr) -> Self {
        normalize(Constraint { kind: CmpKind::Geq, expr, tag: Tag::Exact })
    }

    pub fn with_tag(mut self, tag: Tag) -> Self {
        self.tag = tag;
        self
    }

    pub fn collect_uf_terms(&self, out: &mut BTreeSet<UfTerm>) {
        self.expr.collect_uf_terms(out);
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<String>) {
        self.expr.collect_vars(out);
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let body = match self.kind {
            CmpKind::Eq => format!("{} = 0", self.expr),
            CmpKind::Geq => format!("{} >= 0", self.expr),
        };
        match self.tag {
            Tag::Exact => write!(f, "{}", body),
            Tag::May => write!(f, "may({})", body),
        }
    }
}

/// Normalizes a constraint: merged sorted terms, gcd-reduced coefficients
/// (with integer tightening of the constant for inequalities) and a
/// deterministic sign convention for equalities. Idempotent.
pub fn normalize(mut c: Constraint) -> Constraint {
    c.expr.normalize();
    let g = c
        .expr
        .terms
        .iter()
        .fold(0i64, |acc, (k, _)| gcd(acc, *k));
    if g > 1 {
        match c.kind {
            CmpKind::Eq => {
                if c.expr.constant % g == 0 {
                    c.expr.constant /= g;
                    for t in &mut c.expr.terms {
                        t.0 /= g;
                    }
                }
                // 2i = 3 has no integer solution; left intact for the
                // solver's gcd test rather than losing the conflict here.
            }
            CmpKind::Geq => {
                c.expr.constant = c.expr.constant.div_euclid(g);
                for t in &mut c.expr.terms {
                    t.0 /= g;
                }
            }
        }
    }
    if c.kind == CmpKind::Eq {
        if let Some((k, _)) = c.expr.terms.first() {
            if *k < 0 {
                c.expr = c.expr.scale(-1);
            }
        } else if c.expr.constant < 0 {
            c.expr.constant = -c.expr.constant;
        }
    }
    c
}

/// One clause of a dependence relation: a set of constraints.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Conjunction {
    pub constraints: Vec<Constraint>,
}

impl Conjunction {
    pub fn new(mut constraints: Vec<Constraint>) -> Self {
        constraints = constraints.into_iter().map(normalize).collect();
        constraints.sort();
        constraints.dedup();
        Conjunction { constraints }
    }

    pub fn normalized(&self) -> Conjunction {
        Conjunction::new(self.constraints.clone())
    }

    pub fn collect_uf_terms(&self) -> BTreeSet<UfTerm> {
        let mut out = BTreeSet::new();
        for c in &self.constraints {
            c.collect_uf_terms(&mut out);
        }
        out
    }

    pub fn collect_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for c in &self.constraints {
            c.collect_vars(&mut out);
        }
        out
    }

    /// Syntactic subset test on normalized constraint sets.
    pub fn subset_of(&self, other: &Conjunction) -> bool {
        let set: BTreeSet<_> = other.constraints.iter().collect();
        self.constraints.iter().all(|c| set.contains(c))
    }
}

/// Provenance metadata for a relation.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RelationSource {
    pub kernel: String,
    pub note: String,
}

/// A dependence relation: input/output iteration tuples, existential
/// iterators and a disjunction of constraint conjunctions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Relation {
    pub name: String,
    pub in_tuple: Vec<String>,
    pub out_tuple: Vec<String>,
    pub existentials: Vec<String>,
    pub clauses: Vec<Conjunction>,
    pub source: RelationSource,
}

impl Relation {
    /// Every declared iterator, tuple order first, then existentials.
    pub fn iterators(&self) -> Vec<String> {
        let mut v = self.in_tuple.clone();
        v.extend(self.out_tuple.iter().cloned());
        v.extend(self.existentials.iter().cloned());
        v
    }

    pub fn normalized(&self) -> Relation {
        let mut r = self.clone();
        r.clauses = r.clauses.iter().map(|c| c.normalized()).collect();
        r
    }

    /// Canonical printed form used as the deduplication key. Mirror-image
    /// direction variants of the same access pair (tuples of equal arity
    /// with source/sink roles exchanged) collapse to one key, and
    /// existential names are canonicalized by order of first use.
    pub fn dedup_key(&self) -> String {
        let plain = self.canonical_text(false);
        if self.in_tuple.len() == self.out_tuple.len() && !self.in_tuple.is_empty() {
            let swapped = self.canonical_text(true);
            plain.min(swapped)
        } else {
            plain
        }
    }

    fn canonical_text(&self, swap: bool) -> String {
        let mut map = std::collections::BTreeMap::new();
        if swap {
            for (a, b) in self.in_tuple.iter().zip(self.out_tuple.iter()) {
                map.insert(a.clone(), AffineExpr::var(b));
                map.insert(b.clone(), AffineExpr::var(a));
            }
        }
        let subst = |v: &str| map.get(v).cloned();
        let mut clause_texts: Vec<String> = self
            .clauses
            .iter()
            .map(|cl| {
                let cons = Conjunction::new(
                    cl.constraints
                        .iter()
                        .map(|c| {
                            Constraint {
                                kind: c.kind,
                                expr: c.expr.subst(&subst),
                                tag: c.tag,
                            }
                        })
                        .collect(),
                );
                // Existential renaming by first occurrence keeps the key
                // independent of author-chosen existential names.
                let exset: BTreeSet<&String> = self.existentials.iter().collect();
                let mut order: Vec<String> = Vec::new();
                for c in &cons.constraints {
                    let mut vs = BTreeSet::new();
                    c.collect_vars(&mut vs);
                    for v in vs {
                        if exset.contains(&v) && !order.contains(&v) {
                            order.push(v);
                        }
                    }
                }
                let ren: std::collections::BTreeMap<String, AffineExpr> = order
                    .iter()
                    .enumerate()
                    .map(|(i, v)| (v.clone(), AffineExpr::var(&format!("_e{}", i))))
                    .collect();
                let cons = Conjunction::new(
                    cons.constraints
                        .iter()
                        .map(|c| Constraint {
                            kind: c.kind,
                            expr: c.expr.subst(&|v| ren.get(v).cloned()),
                            tag: c.tag,
                        })
                        .collect(),
                );
                cons.constraints
                    .iter()
                    .map(|c| c.to_string())
                    .collect::<Vec<_>>()
                    .join(" && ")
            })
            .collect();
        clause_texts.sort();
        format!(
            "[{}] -> [{}] : {}",
            self.in_tuple.join(","),
            self.out_tuple.join(","),
            clause_texts.join(" || ")
        )
    }

    /// All UF term occurrences in the relation, nested terms included.
    pub fn free_uf_terms(&self) -> BTreeSet<UfTerm> {
        let mut out = BTreeSet::new();
        for cl in &self.clauses {
            for c in &cl.constraints {
                c.collect_uf_terms(&mut out);
            }
        }
        out
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{ [{}] -> [{}] : ", self.in_tuple.join(","), self.out_tuple.join(","))?;
        if !self.existentials.is_empty() {
            write!(f, "exists({}) : ", self.existentials.join(","))?;
        }
        let texts: Vec<String> = self
            .clauses
            .iter()
            .map(|cl| {
                cl.constraints
                    .iter()
                    .map(|c| c.to_string())
                    .collect::<Vec<_>>()
                    .join(" && ")
            })
            .collect();
        write!(f, "{} }}", texts.join(" || "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(name: &str) -> AffineExpr {
        AffineExpr::var(name)
    }

    #[test]
    fn normalize_divides_by_gcd() {
        // 2i - 2ip + 4 >= 0  ->  i - ip + 2 >= 0
        let e = v("i").scale(2).sub(&v("ip").scale(2)).add_const(4);
        let c = Constraint::geq(e);
        assert_eq!(c.expr, v("i").sub(&v("ip")).add_const(2));
    }

    #[test]
    fn normalize_tightens_integer_bound() {
        // 3i - 3j >= 1  i.e. 3i - 3j - 1 >= 0  ->  i - j - 1 >= 0
        let e = v("i").scale(3).sub(&v("j").scale(3)).add_const(-1);
        let c = Constraint::geq(e);
        assert_eq!(c.expr, v("i").sub(&v("j")).add_const(-1));
    }

    #[test]
    fn normalize_idempotent_on_equalities() {
        // i = ip stored with positive leading sign; renormalizing is identity.
        let c = Constraint::eq(v("ip").sub(&v("i")));
        let c2 = normalize(c.clone());
        assert_eq!(c, c2);
        assert_eq!(c.expr.terms[0].0, 1);
    }

    #[test]
    fn expr_display_roundtrips_shape() {
        let e = v("i").scale(2).sub(&v("j")).add_const(-3);
        assert_eq!(e.to_string(), "2*i - j - 3");
    }
}
