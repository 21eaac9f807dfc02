//! Ackermann-style reduction of uninterpreted function terms.
//!
//! Every distinct UF term is replaced (innermost first) by a fresh
//! variable. Functional consistency is restored by adding, for each pair
//! of applications of the same symbol, either a direct result equality
//! (when argument equality is entailed) or a pending disjunctive
//! obligation handled under the phase-2 instantiation budget.

use crate::presburger::{LinearSystem, Row};
use crate::relation::{AffineExpr, Atom, CmpKind, Conjunction, Constraint, SymbolicConst, UfTerm};
use num_bigint::BigInt;
use std::collections::{BTreeMap, BTreeSet};

/// Binding of one UF term occurrence to its fresh variable. `flat_args`
/// are the argument expressions with inner UF terms already replaced by
/// their own fresh variables, so they are plain linear rows.
#[derive(Debug, Clone)]
pub struct UfBinding {
    pub term: UfTerm,
    pub var: String,
    pub flat_args: Vec<AffineExpr>,
}

/// A functional-consistency obligation that could not be discharged
/// directly: `args equal => results equal`, disjunctive when negated.
#[derive(Debug, Clone)]
pub struct ConsistencyObligation {
    pub symbol: String,
    pub left: String,
    pub right: String,
    /// pairwise `arg_l - arg_r` difference expressions
    pub arg_diffs: Vec<AffineExpr>,
}

/// The ground-term set E: every argument expression of every UF call,
/// including arguments of nested inner calls.
pub fn ground_terms(terms: &BTreeSet<UfTerm>) -> Vec<AffineExpr> {
    let mut out: BTreeSet<AffineExpr> = BTreeSet::new();
    for t in terms {
        for a in &t.args {
            let mut e = a.clone();
            e.normalize();
            out.insert(e);
        }
    }
    out.into_iter().collect()
}

/// A clause encoded over plain variables, with the binding table needed
/// to translate results back to UF terms.
#[derive(Debug, Clone)]
pub struct Encoding {
    pub system: LinearSystem,
    pub bindings: Vec<UfBinding>,
    term_to_var: BTreeMap<UfTerm, String>,
    var_to_term: BTreeMap<String, UfTerm>,
    pub pending: Vec<ConsistencyObligation>,
    merged: BTreeSet<(String, String)>,
    next_fresh: usize,
}

impl Encoding {
    /// Encodes one normalized clause. Iterators and symbolic constants
    /// become variables; every UF occurrence gets a fresh variable.
    pub fn new(clause: &Conjunction, symconsts: &[SymbolicConst]) -> Encoding {
        let mut vars: Vec<String> = clause.collect_vars().into_iter().collect();
        for s in symconsts {
            if !vars.contains(&s.name) {
                vars.push(s.name.clone());
            }
        }
        let mut enc = Encoding {
            system: LinearSystem::new(vars),
            bindings: Vec::new(),
            term_to_var: BTreeMap::new(),
            var_to_term: BTreeMap::new(),
            pending: Vec::new(),
            merged: BTreeSet::new(),
            next_fresh: 0,
        };
        for s in symconsts {
            if let Some(lo) = s.lower_hint {
                let idx = enc.system.ensure_var(&s.name);
                let mut row = Row::zero(enc.system.vars.len());
                row.coeffs[idx] = BigInt::from(1);
                row.constant = BigInt::from(-lo);
                enc.system.push_geq(row);
            }
        }
        for c in &clause.constraints {
            enc.add_constraint(c);
        }
        enc
    }

    pub fn term_var(&self, t: &UfTerm) -> Option<&String> {
        self.term_to_var.get(t)
    }

    pub fn var_term(&self, v: &str) -> Option<&UfTerm> {
        self.var_to_term.get(v)
    }

    /// Binds a UF term (and, innermost first, all nested terms),
    /// returning its fresh variable name.
    pub fn bind_term(&mut self, t: &UfTerm) -> String {
        let mut norm = t.clone();
        for a in &mut norm.args {
            a.normalize();
        }
        if let Some(v) = self.term_to_var.get(&norm) {
            return v.clone();
        }
        let flat_args: Vec<AffineExpr> = norm.args.iter().map(|a| self.flatten_expr(a)).collect();
        let var = format!("$u{}", self.next_fresh);
        self.next_fresh += 1;
        self.system.ensure_var(&var);
        self.term_to_var.insert(norm.clone(), var.clone());
        self.var_to_term.insert(var.clone(), norm.clone());
        self.bindings.push(UfBinding { term: norm, var: var.clone(), flat_args });
        var
    }

    /// Rewrites an expression, replacing UF atoms by their fresh
    /// variables (binding new terms as needed).
    pub fn flatten_expr(&mut self, e: &AffineExpr) -> AffineExpr {
        let mut out = AffineExpr::constant(e.constant);
        for (c, a) in &e.terms {
            let atom = match a {
                Atom::Uf(t) => Atom::Var(self.bind_term(&t.clone())),
                other => other.clone(),
            };
            out = out.add(&AffineExpr { constant: 0, terms: vec![(*c, atom)] });
        }
        out
    }

    /// Read-only flattening: returns None if the expression mentions a
    /// UF term that has no binding yet.
    pub fn try_flatten(&self, e: &AffineExpr) -> Option<AffineExpr> {
        let mut out = AffineExpr::constant(e.constant);
        for (c, a) in &e.terms {
            let atom = match a {
                Atom::Uf(t) => {
                    let mut norm = t.clone();
                    for arg in &mut norm.args {
                        arg.normalize();
                    }
                    Atom::Var(self.term_to_var.get(&norm)?.clone())
                }
                other => other.clone(),
            };
            out = out.add(&AffineExpr { constant: 0, terms: vec![(*c, atom)] });
        }
        Some(out)
    }

    /// Converts a flat (UF-free) expression to a row over the system's
    /// variables, extending the variable list as needed.
    pub fn row_of_flat(&mut self, e: &AffineExpr) -> Row {
        for (_, a) in &e.terms {
            match a {
                Atom::Var(v) | Atom::Sym(v) => {
                    self.system.ensure_var(v);
                }
                Atom::Uf(_) => unreachable!("flat expression contains UF atom"),
            }
        }
        let mut row = Row::zero(self.system.vars.len());
        row.constant = BigInt::from(e.constant);
        for (c, a) in &e.terms {
            let name = match a {
                Atom::Var(v) | Atom::Sym(v) => v,
                Atom::Uf(_) => unreachable!(),
            };
            let idx = self.system.var_index(name).unwrap();
            row.coeffs[idx] += BigInt::from(*c);
        }
        row
    }

    fn row_of_flat_readonly(&self, e: &AffineExpr) -> Option<Row> {
        let mut row = Row::zero(self.system.vars.len());
        row.constant = BigInt::from(e.constant);
        for (c, a) in &e.terms {
            let name = match a {
                Atom::Var(v) | Atom::Sym(v) => v,
                Atom::Uf(_) => return None,
            };
            let idx = self.system.var_index(name)?;
            row.coeffs[idx] += BigInt::from(*c);
        }
        Some(row)
    }

    pub fn add_constraint(&mut self, c: &Constraint) {
        let flat = self.flatten_expr(&c.expr);
        let row = self.row_of_flat(&flat);
        match c.kind {
            CmpKind::Eq => self.system.push_eq(row),
            CmpKind::Geq => self.system.push_geq(row),
        }
    }

    /// Tests entailment of a constraint whose UF terms must already be
    /// bound; `None` means "not testable without new bindings".
    pub fn entails(&self, c: &Constraint) -> Option<bool> {
        let flat = self.try_flatten(&c.expr)?;
        let row = self.row_of_flat_readonly(&flat)?;
        Some(match c.kind {
            CmpKind::Eq => self.system.entails_eq(&row),
            CmpKind::Geq => self.system.entails_geq(&row),
        })
    }

    /// One functional-consistency sweep. Entailed argument equalities
    /// yield direct result equalities; undecided pairs become pending
    /// obligations. Returns true if any new equality row was added.
    pub fn consistency_pass(&mut self) -> bool {
        let mut added = false;
        let n = self.bindings.len();
        for i in 0..n {
            for j in i + 1..n {
                let (bi, bj) = (self.bindings[i].clone(), self.bindings[j].clone());
                if bi.term.symbol != bj.term.symbol || bi.flat_args.len() != bj.flat_args.len() {
                    continue;
                }
                let key = (bi.var.clone(), bj.var.clone());
                if self.merged.contains(&key) {
                    continue;
                }
                let mut all_eq = true;
                let mut any_diseq = false;
                let mut diffs = Vec::new();
                for (a, b) in bi.flat_args.iter().zip(bj.flat_args.iter()) {
                    let diff = a.sub(b);
                    let Some(row) = self.row_of_flat_readonly(&diff) else {
                        all_eq = false;
                        diffs.push(diff);
                        continue;
                    };
                    if self.system.entails_eq(&row) {
                        diffs.push(diff);
                        continue;
                    }
                    all_eq = false;
                    diffs.push(diff.clone());
                    let mut ge1 = row.clone();
                    ge1.constant -= 1;
                    let mut le1 = row.neg();
                    le1.constant -= 1;
                    if self.system.entails_geq(&ge1) || self.system.entails_geq(&le1) {
                        any_diseq = true;
                        break;
                    }
                }
                if all_eq {
                    let eq = AffineExpr::var(&bi.var).sub(&AffineExpr::var(&bj.var));
                    let row = self.row_of_flat(&eq);
                    if !self.system.entails_eq(&row) {
                        self.system.push_eq(row);
                        added = true;
                    }
                    self.merged.insert(key);
                } else if !any_diseq
                    && !self
                        .pending
                        .iter()
                        .any(|o| o.left == bi.var && o.right == bj.var)
                {
                    self.pending.push(ConsistencyObligation {
                        symbol: bi.term.symbol.clone(),
                        left: bi.var.clone(),
                        right: bj.var.clone(),
                        arg_diffs: diffs,
                    });
                }
            }
        }
        added
    }

    /// Renders a row as text, translating fresh variables back to their
    /// UF terms.
    pub fn render_row(&self, row: &Row) -> String {
        let names: Vec<String> = self
            .system
            .vars
            .iter()
            .map(|v| match self.var_to_term.get(v) {
                Some(t) => t.to_string(),
                None => v.clone(),
            })
            .collect();
        row.display(&names)
    }

    /// Interprets an equality row as `iterator = expr`, restoring UF
    /// terms, preferring a plain-variable left-hand side.
    pub fn solve_equality(&self, row: &Row) -> Option<(String, AffineExpr)> {
        use num_traits::Signed;
        let mut candidates: Vec<usize> = Vec::new();
        for (i, c) in row.coeffs.iter().enumerate() {
            if c.abs() == BigInt::from(1) && !self.system.vars[i].starts_with('$') {
                candidates.push(i);
            }
        }
        let idx = *candidates.first()?;
        let neg = row.coeffs[idx] > BigInt::from(0);
        let mut rhs = AffineExpr::constant(0);
        use num_traits::ToPrimitive;
        for (j, c) in row.coeffs.iter().enumerate() {
            if j == idx || c == &BigInt::from(0) {
                continue;
            }
            let k = c.to_i64()?;
            let v = &self.system.vars[j];
            let atom = match self.var_to_term.get(v) {
                Some(t) => Atom::Uf(t.clone()),
                None => Atom::Var(v.clone()),
            };
            rhs = rhs.add(&AffineExpr { constant: 0, terms: vec![(k, atom)] });
        }
        rhs.constant += row.constant.to_i64()?;
        let rhs = if neg { rhs.scale(-1) } else { rhs };
        Some((self.system.vars[idx].clone(), rhs))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_problem;

    fn clause_of(src: &str) -> (Conjunction, Vec<SymbolicConst>) {
        let p = parse_problem(src).unwrap();
        (p.relations[0].clauses[0].clone(), p.symconsts.clone())
    }

    #[test]
    fn equal_args_force_equal_results() {
        let (cl, syms) = clause_of(
            "symbolic n;\nuf rowptr : 1;\nrelation \"r\" { [i] -> [ip] : i = ip && rowptr(i) <= rowptr(ip) - 1 && 0 <= i < n }",
        );
        let mut enc = Encoding::new(&cl, &syms);
        enc.consistency_pass();
        // rowptr(i) = rowptr(ip) forced, so rowptr(i) <= rowptr(ip) - 1 conflicts
        assert!(enc.system.check().is_unsat());
    }

    #[test]
    fn unrelated_args_become_pending_obligations() {
        let (cl, syms) = clause_of(
            "symbolic n;\nuf rowptr : 1;\nrelation \"r\" { [i,k] -> [ip] : rowptr(i) <= k && k < rowptr(ip) && 0 <= i < n && 0 <= ip < n }",
        );
        let mut enc = Encoding::new(&cl, &syms);
        enc.consistency_pass();
        assert_eq!(enc.bindings.len(), 2);
        assert_eq!(enc.pending.len(), 1);
    }

    #[test]
    fn nested_terms_bind_innermost_first() {
        let (cl, syms) = clause_of(
            "symbolic n;\nuf lcolptr : 1;\nuf pruneset : 1;\nrelation \"r\" { [i] -> [ip] : lcolptr(pruneset(ip)) <= i && 0 <= i < n }",
        );
        let enc = Encoding::new(&cl, &syms);
        assert_eq!(enc.bindings.len(), 2);
        assert_eq!(enc.bindings[0].term.symbol, "pruneset");
        assert_eq!(enc.bindings[1].term.symbol, "lcolptr");
        // the outer binding's flat argument refers to the inner fresh var
        let outer = &enc.bindings[1];
        assert!(outer.flat_args[0]
            .terms
            .iter()
            .any(|(_, a)| matches!(a, Atom::Var(v) if v.starts_with('$'))));
    }

    #[test]
    fn ground_term_set_collects_nested_arguments() {
        let (cl, _) = clause_of(
            "symbolic n;\nuf lcolptr : 1;\nuf pruneset : 1;\nrelation \"r\" { [i] -> [ip] : lcolptr(pruneset(ip)) <= i && i < lcolptr(pruneset(ip)+1) && 0 <= i < n }",
        );
        let terms = cl.collect_uf_terms();
        let e = ground_terms(&terms);
        // { pruneset(ip), pruneset(ip)+1, ip }
        assert_eq!(e.len(), 3);
    }

    #[test]
    fn dedup_of_syntactically_equal_terms() {
        let (cl, syms) = clause_of(
            "symbolic n;\nuf rowptr : 1;\nrelation \"r\" { [i] -> [ip] : rowptr(i) <= rowptr(i+1) && rowptr(i) >= 0 && 0 <= i < n }",
        );
        let enc = Encoding::new(&cl, &syms);
        // rowptr(i) appears twice but binds once
        assert_eq!(enc.bindings.len(), 2);
    }
}
