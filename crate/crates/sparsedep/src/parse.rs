//! Textual input format for dependence analysis problems.
//!
//! A problem file declares symbolic constants, uninterpreted function
//! symbols (index arrays), universally quantified assertions about them,
//! and a list of dependence relations:
//!
//! ```text
//! symbolic n, nnz;
//! uf rowptr : 1;
//! assert strict_monotone(rowptr);
//! assert forall x1, x2 : x1 < rowptr(x2) -> col(x1) < x2 category triangular;
//! relation "fs_csr_flow" kernel="fs_csr" {
//!   [i,k] -> [ip,kp] : i = col(kp) && i < ip && 0 <= i < n && 0 <= ip < n
//!                      && rowptr(ip) <= kp < rowptr(ip+1)
//! }
//! ```
//!
//! `a < b` desugars to `a + 1 <= b`, chained comparisons expand pairwise,
//! `||` separates clauses (top level only) and `may(...)` tags a
//! constraint as a data-dependent guard.

use crate::assertions::{builtin, Assertion, PropertyCategory};
use crate::relation::{
    normalize, AffineExpr, Atom, CmpKind, Conjunction, Constraint, Relation, RelationSource,
    SymbolicConst, Tag, UfSymbol, UfTerm,
};
use std::fmt;

/// A parsed problem: declarations, assertions and relations.
#[derive(Debug, Clone, Default)]
pub struct Problem {
    pub symconsts: Vec<SymbolicConst>,
    pub ufs: Vec<UfSymbol>,
    pub assertions: Vec<Assertion>,
    pub relations: Vec<Relation>,
}

impl Problem {
    pub fn uf_arity(&self, name: &str) -> Option<usize> {
        self.ufs.iter().find(|u| u.name == name).map(|u| u.arity)
    }

    pub fn is_symconst(&self, name: &str) -> bool {
        self.symconsts.iter().any(|s| s.name == name)
    }

    /// Merges declarations and relations from another problem file.
    /// Duplicate symbol declarations must agree.
    pub fn merge(&mut self, other: Problem) -> Result<(), ParseError> {
        for s in other.symconsts {
            if !self.is_symconst(&s.name) {
                self.symconsts.push(s);
            }
        }
        for u in other.ufs {
            match self.uf_arity(&u.name) {
                None => self.ufs.push(u),
                Some(a) if a == u.arity => {}
                Some(_) => {
                    return Err(ParseError::plain(format!(
                        "uf `{}` redeclared with different arity",
                        u.name
                    )))
                }
            }
        }
        for a in other.assertions {
            if !self
                .assertions
                .iter()
                .any(|x| x.name == a.name && x.scope == a.scope)
            {
                self.assertions.push(a);
            }
        }
        self.relations.extend(other.relations);
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub message: String,
    pub line: usize,
    pub col: usize,
}

impl ParseError {
    fn plain(message: String) -> Self {
        ParseError { message, line: 0, col: 0 }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line > 0 {
            write!(f, "{}:{}: {}", self.line, self.col, self.message)
        } else {
            write!(f, "{}", self.message)
        }
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Str(String),
    Int(i64),
    Punct(&'static str),
}

struct Lexer {
    toks: Vec<(Tok, usize, usize)>,
    pos: usize,
}

fn lex(src: &str) -> Result<Lexer, ParseError> {
    let mut toks = Vec::new();
    let mut line = 1usize;
    let mut col = 1usize;
    let mut it = src.chars().peekable();
    while let Some(&ch) = it.peek() {
        let (l, c) = (line, col);
        let bump = |ch: char, line: &mut usize, col: &mut usize| {
            if ch == '\n' {
                *line += 1;
                *col = 1;
            } else {
                *col += 1;
            }
        };
        match ch {
            '#' => {
                while let Some(&c2) = it.peek() {
                    it.next();
                    bump(c2, &mut line, &mut col);
                    if c2 == '\n' {
                        break;
                    }
                }
            }
            c2 if c2.is_whitespace() => {
                it.next();
                bump(c2, &mut line, &mut col);
            }
            '"' => {
                it.next();
                bump('"', &mut line, &mut col);
                let mut s = String::new();
                loop {
                    match it.next() {
                        Some('"') => {
                            bump('"', &mut line, &mut col);
                            break;
                        }
                        Some(c2) => {
                            bump(c2, &mut line, &mut col);
                            s.push(c2);
                        }
                        None => {
                            return Err(ParseError {
                                message: "unterminated string".into(),
                                line: l,
                                col: c,
                            })
                        }
                    }
                }
                toks.push((Tok::Str(s), l, c));
            }
            c2 if c2.is_ascii_digit() => {
                let mut s = String::new();
                while let Some(&d) = it.peek() {
                    if d.is_ascii_digit() {
                        s.push(d);
                        it.next();
                        bump(d, &mut line, &mut col);
                    } else {
                        break;
                    }
                }
                let v: i64 = s.parse().map_err(|_| ParseError {
                    message: format!("integer literal `{}` out of range", s),
                    line: l,
                    col: c,
                })?;
                toks.push((Tok::Int(v), l, c));
            }
            c2 if c2.is_ascii_alphabetic() || c2 == '_' => {
                let mut s = String::new();
                while let Some(&d) = it.peek() {
                    if d.is_ascii_alphanumeric() || d == '_' {
                        s.push(d);
                        it.next();
                        bump(d, &mut line, &mut col);
                    } else {
                        break;
                    }
                }
                toks.push((Tok::Ident(s), l, c));
            }
            _ => {
                it.next();
                bump(ch, &mut line, &mut col);
                let mut two = |second: char| -> bool {
                    matches!(it.peek(), Some(&d) if d == second)
                };
                let p: &'static str = match ch {
                    ';' => ";",
                    ',' => ",",
                    ':' => ":",
                    '{' => "{",
                    '}' => "}",
                    '[' => "[",
                    ']' => "]",
                    '(' => "(",
                    ')' => ")",
                    '+' => "+",
                    '*' => "*",
                    '=' => "=",
                    '&' => {
                        if two('&') {
                            it.next();
                            bump('&', &mut line, &mut col);
                            "&&"
                        } else {
                            return Err(ParseError { message: "expected `&&`".into(), line: l, col: c });
                        }
                    }
                    '|' => {
                        if two('|') {
                            it.next();
                            bump('|', &mut line, &mut col);
                            "||"
                        } else {
                            return Err(ParseError { message: "expected `||`".into(), line: l, col: c });
                        }
                    }
                    '-' => {
                        if two('>') {
                            it.next();
                            bump('>', &mut line, &mut col);
                            "->"
                        } else {
                            "-"
                        }
                    }
                    '<' => {
                        if two('=') {
                            it.next();
                            bump('=', &mut line, &mut col);
                            "<="
                        } else {
                            "<"
                        }
                    }
                    '>' => {
                        if two('=') {
                            it.next();
                            bump('=', &mut line, &mut col);
                            ">="
                        } else {
                            ">"
                        }
                    }
                    _ => {
                        return Err(ParseError {
                            message: format!("unexpected character `{}`", ch),
                            line: l,
                            col: c,
                        })
                    }
                };
                toks.push((Tok::Punct(p), l, c));
            }
        }
    }
    Ok(Lexer { toks, pos: 0 })
}

impl Lexer {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _, _)| t)
    }

    fn loc(&self) -> (usize, usize) {
        self.toks
            .get(self.pos.min(self.toks.len().saturating_sub(1)))
            .map(|(_, l, c)| (*l, *c))
            .unwrap_or((0, 0))
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(t, _, _)| t.clone());
        self.pos += 1;
        t
    }

    fn err(&self, msg: impl Into<String>) -> ParseError {
        let (line, col) = self.loc();
        ParseError { message: msg.into(), line, col }
    }

    fn expect_punct(&mut self, p: &str) -> Result<(), ParseError> {
        match self.next() {
            Some(Tok::Punct(q)) if q == p => Ok(()),
            other => {
                self.pos = self.pos.saturating_sub(1);
                Err(self.err(format!("expected `{}`, found {:?}", p, other)))
            }
        }
    }

    fn expect_ident(&mut self) -> Result<String, ParseError> {
        match self.next() {
            Some(Tok::Ident(s)) => Ok(s),
            other => {
                self.pos = self.pos.saturating_sub(1);
                Err(self.err(format!("expected identifier, found {:?}", other)))
            }
        }
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Punct(q)) if *q == p) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_ident(&mut self, kw: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Ident(s)) if s == kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }
}

struct Ctx<'a> {
    problem: &'a Problem,
    vars: Vec<String>,
}

impl Ctx<'_> {
    fn classify(&self, name: &str) -> Option<Atom> {
        if self.vars.iter().any(|v| v == name) {
            Some(Atom::Var(name.to_string()))
        } else if self.problem.is_symconst(name) {
            Some(Atom::Sym(name.to_string()))
        } else {
            None
        }
    }
}

fn parse_expr(lx: &mut Lexer, ctx: &Ctx) -> Result<AffineExpr, ParseError> {
    let mut acc = parse_term(lx, ctx)?;
    loop {
        if lx.eat_punct("+") {
            let t = parse_term(lx, ctx)?;
            acc = acc.add(&t);
        } else if lx.eat_punct("-") {
            let t = parse_term(lx, ctx)?;
            acc = acc.sub(&t);
        } else {
            break;
        }
    }
    Ok(acc)
}

fn parse_term(lx: &mut Lexer, ctx: &Ctx) -> Result<AffineExpr, ParseError> {
    let neg = lx.eat_punct("-");
    let mut e = match lx.peek().cloned() {
        Some(Tok::Int(v)) => {
            lx.next();
            if lx.eat_punct("*") {
                let f = parse_factor(lx, ctx)?;
                f.scale(v)
            } else {
                AffineExpr::constant(v)
            }
        }
        _ => parse_factor(lx, ctx)?,
    };
    if matches!(lx.peek(), Some(Tok::Punct("*"))) {
        return Err(lx.err("nonlinear term: product of two non-constant expressions"));
    }
    if neg {
        e = e.scale(-1);
    }
    Ok(e)
}

fn parse_factor(lx: &mut Lexer, ctx: &Ctx) -> Result<AffineExpr, ParseError> {
    match lx.next() {
        Some(Tok::Int(v)) => Ok(AffineExpr::constant(v)),
        Some(Tok::Punct("(")) => {
            let e = parse_expr(lx, ctx)?;
            lx.expect_punct(")")?;
            Ok(e)
        }
        Some(Tok::Ident(name)) => {
            if lx.eat_punct("(") {
                let arity = ctx
                    .problem
                    .uf_arity(&name)
                    .ok_or_else(|| lx.err(format!("undeclared function symbol `{}`", name)))?;
                let mut args = vec![parse_expr(lx, ctx)?];
                while lx.eat_punct(",") {
                    args.push(parse_expr(lx, ctx)?);
                }
                lx.expect_punct(")")?;
                if args.len() != arity {
                    return Err(lx.err(format!(
                        "arity mismatch: `{}` declared with arity {}, applied to {} arguments",
                        name,
                        arity,
                        args.len()
                    )));
                }
                Ok(AffineExpr::atom(Atom::Uf(UfTerm { symbol: name, args })))
            } else {
                match ctx.classify(&name) {
                    Some(a) => Ok(AffineExpr::atom(a)),
                    None => Err(lx.err(format!("undeclared symbol `{}`", name))),
                }
            }
        }
        other => {
            lx.pos = lx.pos.saturating_sub(1);
            Err(lx.err(format!("expected expression, found {:?}", other)))
        }
    }
}

fn cmp_punct(t: Option<&Tok>) -> Option<&'static str> {
    match t {
        Some(Tok::Punct(p @ ("=" | "<=" | "<" | ">=" | ">"))) => Some(p),
        _ => None,
    }
}

/// Parses a possibly chained comparison `a <= b < c`, expanding into
/// pairwise constraints.
fn parse_comparison(lx: &mut Lexer, ctx: &Ctx, tag: Tag) -> Result<Vec<Constraint>, ParseError> {
    let mut exprs = vec![parse_expr(lx, ctx)?];
    let mut ops = Vec::new();
    while let Some(op) = cmp_punct(lx.peek()) {
        lx.next();
        ops.push(op);
        exprs.push(parse_expr(lx, ctx)?);
    }
    if ops.is_empty() {
        return Err(lx.err("expected comparison operator"));
    }
    let mut out = Vec::new();
    for (idx, op) in ops.iter().enumerate() {
        let (a, b) = (&exprs[idx], &exprs[idx + 1]);
        let c = match *op {
            "=" => Constraint { kind: CmpKind::Eq, expr: a.sub(b), tag },
            "<=" => Constraint { kind: CmpKind::Geq, expr: b.sub(a), tag },
            "<" => Constraint { kind: CmpKind::Geq, expr: b.sub(a).add_const(-1), tag },
            ">=" => Constraint { kind: CmpKind::Geq, expr: a.sub(b), tag },
            ">" => Constraint { kind: CmpKind::Geq, expr: a.sub(b).add_const(-1), tag },
            _ => unreachable!(),
        };
        out.push(normalize(c));
    }
    Ok(out)
}

fn parse_constraint_atom(lx: &mut Lexer, ctx: &Ctx) -> Result<Vec<Constraint>, ParseError> {
    if lx.eat_ident("may") {
        lx.expect_punct("(")?;
        let cs = parse_comparison(lx, ctx, Tag::May)?;
        lx.expect_punct(")")?;
        Ok(cs)
    } else {
        parse_comparison(lx, ctx, Tag::Exact)
    }
}

fn parse_conjunction(lx: &mut Lexer, ctx: &Ctx) -> Result<Conjunction, ParseError> {
    let mut cs = parse_constraint_atom(lx, ctx)?;
    while lx.eat_punct("&&") {
        cs.extend(parse_constraint_atom(lx, ctx)?);
    }
    Ok(Conjunction::new(cs))
}

fn parse_tuple(lx: &mut Lexer) -> Result<Vec<String>, ParseError> {
    lx.expect_punct("[")?;
    let mut v = Vec::new();
    if !matches!(lx.peek(), Some(Tok::Punct("]"))) {
        v.push(lx.expect_ident()?);
        while lx.eat_punct(",") {
            v.push(lx.expect_ident()?);
        }
    }
    lx.expect_punct("]")?;
    Ok(v)
}

fn parse_relation(lx: &mut Lexer, problem: &Problem) -> Result<Relation, ParseError> {
    let name = match lx.next() {
        Some(Tok::Str(s)) => s,
        _ => return Err(lx.err("expected relation name string")),
    };
    let mut source = RelationSource::default();
    while let Some(Tok::Ident(attr)) = lx.peek().cloned() {
        if attr == "kernel" || attr == "note" {
            lx.next();
            lx.expect_punct("=")?;
            let val = match lx.next() {
                Some(Tok::Str(s)) => s,
                _ => return Err(lx.err("expected string attribute value")),
            };
            if attr == "kernel" {
                source.kernel = val;
            } else {
                source.note = val;
            }
        } else {
            break;
        }
    }
    lx.expect_punct("{")?;
    let in_tuple = parse_tuple(lx)?;
    lx.expect_punct("->")?;
    let out_tuple = parse_tuple(lx)?;
    lx.expect_punct(":")?;
    let mut existentials = Vec::new();
    if lx.eat_ident("exists") {
        lx.expect_punct("(")?;
        existentials.push(lx.expect_ident()?);
        while lx.eat_punct(",") {
            existentials.push(lx.expect_ident()?);
        }
        lx.expect_punct(")")?;
        lx.expect_punct(":")?;
    }
    for t in in_tuple.iter().chain(out_tuple.iter()).chain(existentials.iter()) {
        if problem.uf_arity(t).is_some() || problem.is_symconst(t) {
            return Err(lx.err(format!("iterator `{}` shadows a declared symbol", t)));
        }
    }
    let mut all_vars = in_tuple.clone();
    all_vars.extend(out_tuple.iter().cloned());
    all_vars.extend(existentials.iter().cloned());
    {
        let mut seen = std::collections::BTreeSet::new();
        for v in &all_vars {
            if !seen.insert(v) {
                return Err(lx.err(format!("iterator `{}` declared twice", v)));
            }
        }
    }
    if matches!(lx.peek(), Some(Tok::Punct("}"))) {
        return Err(lx.err("empty constraint list"));
    }
    let ctx = Ctx { problem, vars: all_vars };
    let mut clauses = vec![parse_conjunction(lx, &ctx)?];
    while lx.eat_punct("||") {
        clauses.push(parse_conjunction(lx, &ctx)?);
    }
    lx.expect_punct("}")?;
    Ok(Relation { name, in_tuple, out_tuple, existentials, clauses, source })
}

fn parse_assert(lx: &mut Lexer, problem: &Problem, ordinal: usize) -> Result<Vec<Assertion>, ParseError> {
    let mut name = None;
    let mut category = None;
    loop {
        if lx.eat_ident("name") {
            name = Some(lx.expect_ident()?);
        } else if lx.eat_ident("category") {
            category = Some(parse_category(lx)?);
        } else {
            break;
        }
    }
    if lx.eat_ident("forall") {
        let mut vars = vec![lx.expect_ident()?];
        while lx.eat_punct(",") {
            vars.push(lx.expect_ident()?);
        }
        lx.expect_punct(":")?;
        let ctx = Ctx { problem, vars: vars.clone() };
        let first = {
            let mut cs = parse_comparison(lx, &ctx, Tag::Exact)?;
            while lx.eat_punct("&&") {
                cs.extend(parse_comparison(lx, &ctx, Tag::Exact)?);
            }
            cs
        };
        let (antecedent, consequent) = if lx.eat_punct("->") {
            let mut cs = parse_comparison(lx, &ctx, Tag::Exact)?;
            while lx.eat_punct("&&") {
                cs.extend(parse_comparison(lx, &ctx, Tag::Exact)?);
            }
            (first, cs)
        } else {
            (Vec::new(), first)
        };
        // trailing options are also accepted after the body
        loop {
            if lx.eat_ident("category") {
                category = Some(parse_category(lx)?);
            } else if lx.eat_ident("name") {
                name = Some(lx.expect_ident()?);
            } else {
                break;
            }
        }
        let name = name.unwrap_or_else(|| format!("assert_{}", ordinal));
        Ok(vec![Assertion::general(
            &name,
            category.unwrap_or(PropertyCategory::General),
            vars,
            antecedent,
            consequent,
        )])
    } else {
        let which = lx.expect_ident()?;
        lx.expect_punct("(")?;
        let mut syms = vec![lx.expect_ident()?];
        while lx.eat_punct(",") {
            syms.push(lx.expect_ident()?);
        }
        lx.expect_punct(")")?;
        loop {
            if lx.eat_ident("category") {
                category = Some(parse_category(lx)?);
            } else if lx.eat_ident("name") {
                name = Some(lx.expect_ident()?);
            } else {
                break;
            }
        }
        for s in &syms {
            match problem.uf_arity(s) {
                Some(1) => {}
                Some(a) => {
                    return Err(lx.err(format!(
                        "builtin assertions require arity-1 symbols; `{}` has arity {}",
                        s, a
                    )))
                }
                None => return Err(lx.err(format!("undeclared function symbol `{}`", s))),
            }
        }
        builtin(&which, &syms, name.as_deref(), category).map_err(|e| lx.err(e))
    }
}

fn parse_category(lx: &mut Lexer) -> Result<PropertyCategory, ParseError> {
    let id = lx.expect_ident()?;
    PropertyCategory::from_name(&id).ok_or_else(|| lx.err(format!("unknown property category `{}`", id)))
}

/// Parses a full problem file.
pub fn parse_problem(src: &str) -> Result<Problem, ParseError> {
    let mut lx = lex(src)?;
    let mut problem = Problem::default();
    let mut assert_ordinal = 0usize;
    while let Some(tok) = lx.peek().cloned() {
        match tok {
            Tok::Ident(kw) if kw == "symbolic" => {
                lx.next();
                loop {
                    let name = lx.expect_ident()?;
                    if !problem.is_symconst(&name) {
                        problem.symconsts.push(SymbolicConst::new(&name));
                    }
                    if !lx.eat_punct(",") {
                        break;
                    }
                }
                lx.expect_punct(";")?;
            }
            Tok::Ident(kw) if kw == "uf" => {
                lx.next();
                let name = lx.expect_ident()?;
                lx.expect_punct(":")?;
                let arity = match lx.next() {
                    Some(Tok::Int(v)) if v >= 1 => v as usize,
                    _ => return Err(lx.err("expected positive arity")),
                };
                if let Some(a) = problem.uf_arity(&name) {
                    if a != arity {
                        return Err(lx.err(format!("uf `{}` redeclared with different arity", name)));
                    }
                } else {
                    problem.ufs.push(UfSymbol { name, arity });
                }
                lx.expect_punct(";")?;
            }
            Tok::Ident(kw) if kw == "assert" => {
                lx.next();
                assert_ordinal += 1;
                let asrts = parse_assert(&mut lx, &problem, assert_ordinal)?;
                problem.assertions.extend(asrts);
                lx.expect_punct(";")?;
            }
            Tok::Ident(kw) if kw == "relation" => {
                lx.next();
                let r = parse_relation(&mut lx, &problem)?;
                problem.relations.push(r.normalized());
            }
            _ => return Err(lx.err(format!("expected declaration, found {:?}", tok))),
        }
    }
    Ok(problem)
}

/// Parses a single relation body against an existing problem's declarations.
pub fn parse_relation_text(problem: &Problem, name: &str, text: &str) -> Result<Relation, ParseError> {
    let src = format!("relation \"{}\" {}", name, text);
    let mut lx = lex(&src)?;
    lx.next();
    let r = parse_relation(&mut lx, problem)?;
    Ok(r.normalized())
}

/// Reads and parses problem files, merging them into one problem.
pub fn load_problems(paths: &[std::path::PathBuf]) -> Result<Problem, String> {
    let mut all = Problem::default();
    for p in paths {
        let src = std::fs::read_to_string(p).map_err(|e| format!("{}: {}", p.display(), e))?;
        let mut prob = parse_problem(&src).map_err(|e| format!("{}:{}", p.display(), e))?;
        let stem = p.file_stem().map(|s| s.to_string_lossy().to_string()).unwrap_or_default();
        for r in &mut prob.relations {
            if r.source.kernel.is_empty() {
                r.source.kernel = stem.clone();
            }
        }
        // assertions describe the index arrays of the kernels defined in
        // the same file
        let kernels: std::collections::BTreeSet<String> =
            prob.relations.iter().map(|r| r.source.kernel.clone()).collect();
        for a in &mut prob.assertions {
            a.scope = kernels.clone();
        }
        all.merge(prob).map_err(|e| format!("{}: {}", p.display(), e))?;
    }
    Ok(all)
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "symbolic n, nnz;\nuf rowptr : 1;\nuf col : 1;\n";

    #[test]
    fn parses_forward_solve_flow_dep() {
        let src = format!(
            "{}relation \"d3\" kernel=\"fs_csr\" {{ [i,k] -> [ip,kp] : i = col(kp) && i < ip && 0 <= i < n && 0 <= ip < n && rowptr(ip) <= kp < rowptr(ip+1) }}",
            HEADER
        );
        let p = parse_problem(&src).unwrap();
        assert_eq!(p.relations.len(), 1);
        let r = &p.relations[0];
        assert_eq!(r.clauses.len(), 1);
        // chained comparisons expand: 8 constraints total
        assert_eq!(r.clauses[0].constraints.len(), 8);
    }

    #[test]
    fn empty_constraint_list_is_an_error() {
        let src = format!("{}relation \"bad\" {{ [i] -> [ip] : }}", HEADER);
        let e = parse_problem(&src).unwrap_err();
        assert!(e.message.contains("empty constraint list"), "{}", e);
    }

    #[test]
    fn nonlinear_terms_are_rejected() {
        let src = format!("{}relation \"bad\" {{ [i] -> [j] : i*j = 4 }}", HEADER);
        let e = parse_problem(&src).unwrap_err();
        assert!(e.message.contains("nonlinear"), "{}", e);
    }

    #[test]
    fn undeclared_symbol_is_an_error() {
        let src = format!("{}relation \"bad\" {{ [i] -> [j] : i = m }}", HEADER);
        let e = parse_problem(&src).unwrap_err();
        assert!(e.message.contains("undeclared"), "{}", e);
    }

    #[test]
    fn print_parse_roundtrip_is_identity() {
        let src = format!(
            "{}uf pruneset : 1;\nrelation \"r\" {{ [colNo] -> [colNop] : exists(j, ipr, lpr) : j = lpr && colNo < colNop && 0 <= colNo < n && rowptr(pruneset(ipr)) <= lpr < rowptr(pruneset(ipr)+1) }}",
            HEADER
        );
        let p = parse_problem(&src).unwrap();
        let r = &p.relations[0];
        let printed = r.to_string();
        let r2 = parse_relation_text(&p, &r.name, &printed).unwrap();
        assert_eq!(r.clauses, r2.clauses);
        assert_eq!(r.in_tuple, r2.in_tuple);
    }

    #[test]
    fn may_guard_sets_tag() {
        let src = format!(
            "{}relation \"g\" {{ [i] -> [ip] : i < ip && may(col(i) = col(ip)) && 0 <= i < n }}",
            HEADER
        );
        let p = parse_problem(&src).unwrap();
        let r = &p.relations[0];
        assert!(r.clauses[0]
            .constraints
            .iter()
            .any(|c| c.tag == crate::relation::Tag::May));
    }

    #[test]
    fn mirror_direction_output_deps_share_dedup_key() {
        let src = format!(
            "{}relation \"a\" {{ [i,k] -> [ip,kp] : i = ip && i < ip && 0 <= i < n && 0 <= ip < n && rowptr(i) <= k < rowptr(i+1) && rowptr(ip) <= kp < rowptr(ip+1) }}\nrelation \"b\" {{ [i,k] -> [ip,kp] : i = ip && ip < i && 0 <= i < n && 0 <= ip < n && rowptr(i) <= k < rowptr(i+1) && rowptr(ip) <= kp < rowptr(ip+1) }}",
            HEADER
        );
        let p = parse_problem(&src).unwrap();
        assert_eq!(p.relations[0].dedup_key(), p.relations[1].dedup_key());
    }

    #[test]
    fn flow_and_anti_reads_keep_distinct_keys() {
        let src = format!(
            "{}relation \"a\" {{ [i,k] -> [ip,kp] : i = col(kp) && i < ip && 0 <= i < n && 0 <= ip < n && rowptr(ip) <= kp < rowptr(ip+1) }}\nrelation \"b\" {{ [i,k] -> [ip,kp] : i = col(kp) && ip < i && 0 <= i < n && 0 <= ip < n && rowptr(ip) <= kp < rowptr(ip+1) }}",
            HEADER
        );
        let p = parse_problem(&src).unwrap();
        assert_ne!(p.relations[0].dedup_key(), p.relations[1].dedup_key());
    }
}
