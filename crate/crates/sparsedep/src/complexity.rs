//! Symbolic inspector cost model.
//!
//! Each retained clause of a relation is lowered to a loop nest: every
//! iterator is either a loop (dimension or index-array range), derived
//! from an equality, or projected out into residual checks. The
//! estimate multiplies loop factors, counting a dimension loop paired
//! with its child index-array range as a single `nnz` traversal.

use crate::relation::{AffineExpr, Atom, CmpKind, Conjunction, Constraint, Relation, Tag, UfTerm};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// Cost factors: matrix dimension, nonzero count and average row
/// population `nnz/n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Factor {
    N,
    Nnz,
    Avg,
}

/// Comparison regime: complexity polynomials are ordered by their value
/// at `n = N0`, `nnz = d * N0`. Kernel constant factors `k`/`K` scale by
/// `SMALL_K`/`BIG_K`. `N0 = BIG_K * d^3` makes an `n^2` inspector sit
/// exactly at an `nnz * (nnz/n)^2` kernel's cost.
pub const DENSITY: u128 = 8;
pub const BIG_K: u128 = 32;
pub const SMALL_K: u128 = 1;
pub const REGIME_N: u128 = BIG_K * DENSITY * DENSITY * DENSITY;

/// Canonical sum of products with integer coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ComplexityExpr {
    /// sorted by ascending regime value; powers keyed by factor
    pub terms: Vec<(i64, BTreeMap<Factor, u32>)>,
}

fn product_value(powers: &BTreeMap<Factor, u32>) -> u128 {
    let mut v: u128 = 1;
    for (f, p) in powers {
        let base = match f {
            Factor::N => REGIME_N,
            Factor::Nnz => DENSITY * REGIME_N,
            Factor::Avg => DENSITY,
        };
        for _ in 0..*p {
            v = v.saturating_mul(base);
        }
    }
    v
}

/// Absorbs `n * (nnz/n)` pairs into `nnz`, the form the tables use.
fn canonical_powers(mut p: BTreeMap<Factor, u32>) -> BTreeMap<Factor, u32> {
    let n = p.get(&Factor::N).copied().unwrap_or(0);
    let avg = p.get(&Factor::Avg).copied().unwrap_or(0);
    let absorb = n.min(avg);
    if absorb > 0 {
        *p.entry(Factor::Nnz).or_default() += absorb;
        set_or_remove(&mut p, Factor::N, n - absorb);
        set_or_remove(&mut p, Factor::Avg, avg - absorb);
    }
    p.retain(|_, v| *v > 0);
    p
}

fn set_or_remove(p: &mut BTreeMap<Factor, u32>, f: Factor, v: u32) {
    if v == 0 {
        p.remove(&f);
    } else {
        p.insert(f, v);
    }
}

impl ComplexityExpr {
    pub fn zero() -> Self {
        ComplexityExpr::default()
    }

    pub fn product(factors: &[Factor]) -> Self {
        let mut p: BTreeMap<Factor, u32> = BTreeMap::new();
        for f in factors {
            *p.entry(*f).or_default() += 1;
        }
        ComplexityExpr { terms: vec![(1, canonical_powers(p))] }.normalized()
    }

    pub fn normalized(&self) -> Self {
        let mut acc: BTreeMap<BTreeMap<Factor, u32>, i64> = BTreeMap::new();
        for (c, p) in &self.terms {
            *acc.entry(canonical_powers(p.clone())).or_default() += c;
        }
        let mut terms: Vec<(i64, BTreeMap<Factor, u32>)> = acc
            .into_iter()
            .filter(|(_, c)| *c != 0)
            .map(|(p, c)| (c, p))
            .collect();
        terms.sort_by_key(|(_, p)| (product_value(p), p.clone()));
        ComplexityExpr { terms }
    }

    pub fn add(&self, other: &ComplexityExpr) -> ComplexityExpr {
        let mut t = self.terms.clone();
        t.extend(other.terms.iter().cloned());
        ComplexityExpr { terms: t }.normalized()
    }

    /// Value at the comparison regime.
    pub fn value(&self) -> u128 {
        self.terms
            .iter()
            .map(|(c, p)| (*c as u128).saturating_mul(product_value(p)))
            .sum()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Multiset of (coefficient, factor product) terms — the comparison
    /// the acceptance criteria use.
    pub fn term_multiset(&self) -> Vec<(i64, String)> {
        self.terms.iter().map(|(c, p)| (*c, render_powers(p))).collect()
    }
}

fn render_powers(p: &BTreeMap<Factor, u32>) -> String {
    if p.is_empty() {
        return "1".to_string();
    }
    // render order: n, nnz, nnz/n
    let solo = p.len() == 1;
    let mut parts = Vec::new();
    for f in [Factor::N, Factor::Nnz, Factor::Avg] {
        if let Some(&pow) = p.get(&f) {
            let base = match f {
                Factor::N => "n",
                Factor::Nnz => "nnz",
                Factor::Avg => "nnz/n",
            };
            let s = match (f, pow) {
                (Factor::Avg, 1) if solo => "nnz/n".to_string(),
                (Factor::Avg, 1) => "(nnz/n)".to_string(),
                (Factor::Avg, k) => format!("(nnz/n)^{}", k),
                (_, 1) => base.to_string(),
                (_, k) => format!("{}^{}", base, k),
            };
            parts.push(s);
        }
    }
    parts.join(" x ")
}

impl fmt::Display for ComplexityExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(c, p)| {
                if *c == 1 {
                    format!("({})", render_powers(p))
                } else {
                    format!("{}({})", c, render_powers(p))
                }
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// Kernel cost with its symbolic constant factor (`k` small, `K` big).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KernelComplexity {
    pub big_constant: bool,
    pub factors: ComplexityExpr,
}

impl KernelComplexity {
    pub fn value(&self) -> u128 {
        let scale = if self.big_constant { BIG_K } else { SMALL_K };
        self.factors.value().saturating_mul(scale)
    }

    /// Parses strings like `k(nnz)` or `K(nnz x (nnz/n)^2)`.
    pub fn parse(s: &str) -> Option<KernelComplexity> {
        let s = s.trim();
        let (big, rest) = if let Some(r) = s.strip_prefix('K') {
            (true, r)
        } else if let Some(r) = s.strip_prefix('k') {
            (false, r)
        } else {
            return None;
        };
        let inner = rest.trim().strip_prefix('(')?.strip_suffix(')')?;
        let mut powers: BTreeMap<Factor, u32> = BTreeMap::new();
        if inner.trim() != "1" {
            for part in inner.split(" x ") {
                let part = part.trim();
                let (base, pow) = match part.find('^') {
                    Some(i) => (&part[..i], part[i + 1..].parse::<u32>().ok()?),
                    None => (part, 1),
                };
                let base = base.trim_matches(|c| c == '(' || c == ')');
                let f = match base {
                    "n" => Factor::N,
                    "nnz" => Factor::Nnz,
                    "nnz/n" => Factor::Avg,
                    _ => return None,
                };
                *powers.entry(f).or_default() += pow;
            }
        }
        Some(KernelComplexity {
            big_constant: big,
            factors: ComplexityExpr { terms: vec![(1, powers)] }.normalized(),
        })
    }
}

impl fmt::Display for KernelComplexity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let scale = if self.big_constant { "K" } else { "k" };
        let inner = self
            .factors
            .terms
            .first()
            .map(|(_, p)| render_powers(p))
            .unwrap_or_else(|| "1".to_string());
        write!(f, "{}({})", scale, inner)
    }
}

/// True when `c` costs no more than the kernel at the regime point.
pub fn le_kernel(c: &ComplexityExpr, kernel: &KernelComplexity) -> bool {
    c.value() <= kernel.value()
}

/// Classification of one iterator in the generated loop nest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum LoopKind {
    /// plain loop over a dimension-like range (factor `n`)
    Dimension,
    /// index-array range paired with the named parent dimension loop;
    /// the pair jointly traverses the nonzeros (factor `nnz`)
    UfRangePaired { parent: String },
    /// index-array range with no paired parent (factor `nnz/n`)
    UfRangeUnpaired,
    /// computed from an equality; no loop
    Derived { expr: AffineExpr },
    /// eliminated exactly; bounds became residual checks
    Projected,
}

/// One step of the executable schedule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScheduledIter {
    pub var: String,
    pub kind: LoopKind,
    /// inclusive lower bound candidates (max is the bound)
    pub lowers: Vec<AffineExpr>,
    /// inclusive upper bound candidates (min is the bound)
    pub uppers: Vec<AffineExpr>,
}

/// Loop model for one clause.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClauseModel {
    pub schedule: Vec<ScheduledIter>,
    /// residual checks from projection, evaluated alongside the
    /// original constraints
    pub residuals: Vec<Constraint>,
    pub complexity: ComplexityExpr,
}

/// Loop model for a whole relation (retained clauses only).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoopNestModel {
    pub clauses: Vec<ClauseModel>,
    pub complexity: ComplexityExpr,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelError {
    pub message: String,
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.message)
    }
}

/// A discovered equality usable to derive an iterator: `var = rhs`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct DerivedEquality {
    pub var: String,
    pub rhs: AffineExpr,
}

impl fmt::Display for DerivedEquality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {}", self.var, self.rhs)
    }
}

/// Builds the loop model for the retained clauses of `r`, using the
/// clause's explicit equalities plus `extra_equalities` for derivation.
pub fn model_loops(
    r: &Relation,
    retained: &[usize],
    extra_equalities: &[Vec<DerivedEquality>],
    sizes: &dyn Fn(&str) -> bool,
) -> Result<LoopNestModel, ModelError> {
    let mut clauses = Vec::new();
    let mut total = ComplexityExpr::zero();
    for (slot, &ci) in retained.iter().enumerate() {
        let extras = extra_equalities.get(slot).cloned().unwrap_or_default();
        let m = model_clause(r, &r.clauses[ci], &extras, sizes)?;
        total = total.add(&m.complexity);
        clauses.push(m);
    }
    Ok(LoopNestModel { clauses, complexity: total })
}

struct SearchState {
    unprojectable: BTreeSet<String>,
    view: Vec<Constraint>,
    schedule: Vec<ScheduledIter>,
    residuals: Vec<Constraint>,
    remaining: Vec<String>,
    available: BTreeSet<String>,
    factors: Vec<Factor>,
    /// dimension loops not yet consumed by a pairing
    open_dims: BTreeSet<String>,
}

/// Picks the cheapest legal schedule by branching over the next loop
/// iterator after saturating derivations and exact projections.
fn model_clause(
    r: &Relation,
    clause: &Conjunction,
    extras: &[DerivedEquality],
    sizes: &dyn Fn(&str) -> bool,
) -> Result<ClauseModel, ModelError> {
    let clause_vars = clause.collect_vars();
    let edge: BTreeSet<String> = [r.in_tuple.first(), r.out_tuple.first()]
        .into_iter()
        .flatten()
        .cloned()
        .collect();
    let mut remaining: Vec<String> = Vec::new();
    for v in r.iterators() {
        if clause_vars.contains(&v) || edge.contains(&v) {
            remaining.push(v);
        }
    }
    for e in &edge {
        if !clause_vars.contains(e) {
            return Err(ModelError {
                message: format!("outer iterator `{}` is unconstrained", e),
            });
        }
    }
    let mut view = clause.constraints.clone();
    for d in extras {
        view.push(Constraint::eq(AffineExpr::var(&d.var).sub(&d.rhs)));
    }
    // iterators taking part in a cross-tuple access constraint stay
    // enumerable (looped or derived); only auxiliary window iterators
    // project into residual checks
    let in_set: BTreeSet<&String> = r.in_tuple.iter().collect();
    let out_set: BTreeSet<&String> = r.out_tuple.iter().collect();
    let mut unprojectable: BTreeSet<String> = BTreeSet::new();
    for c in &view {
        if c.kind != CmpKind::Eq {
            continue;
        }
        let mut vs = BTreeSet::new();
        c.collect_vars(&mut vs);
        let crosses = vs.iter().any(|v| in_set.contains(v)) && vs.iter().any(|v| out_set.contains(v));
        if crosses {
            unprojectable.extend(vs);
        }
    }
    let init = SearchState {
        unprojectable,
        view,
        schedule: Vec::new(),
        residuals: Vec::new(),
        remaining,
        available: BTreeSet::new(),
        factors: Vec::new(),
        open_dims: BTreeSet::new(),
    };
    let mut best: Option<ClauseModel> = None;
    search(init, &edge, sizes, &mut best)?;
    best.ok_or_else(|| ModelError { message: "no feasible schedule".into() })
}

fn search(
    mut st: SearchState,
    edge: &BTreeSet<String>,
    sizes: &dyn Fn(&str) -> bool,
    best: &mut Option<ClauseModel>,
) -> Result<(), ModelError> {
    saturate(&mut st, edge);
    if st.remaining.is_empty() {
        let cx = ComplexityExpr::product(&st.factors);
        let better = match best {
            Some(b) => cx.value() < b.complexity.value(),
            None => true,
        };
        if better {
            *best = Some(ClauseModel {
                schedule: st.schedule,
                residuals: st.residuals,
                complexity: cx,
            });
        }
        return Ok(());
    }
    // prune: a partial product already worse than the best is hopeless
    if let Some(b) = best {
        if ComplexityExpr::product(&st.factors).value() >= b.complexity.value() {
            return Ok(());
        }
    }
    for cand in st.remaining.clone() {
        let mut next = SearchState {
            unprojectable: st.unprojectable.clone(),
            view: st.view.clone(),
            schedule: st.schedule.clone(),
            residuals: st.residuals.clone(),
            remaining: st.remaining.iter().filter(|v| **v != cand).cloned().collect(),
            available: st.available.clone(),
            factors: st.factors.clone(),
            open_dims: st.open_dims.clone(),
        };
        let (lowers, uppers) = bounds_of(&next.view, &cand, &next.available);
        if lowers.is_empty() || uppers.is_empty() {
            continue;
        }
        let kind = classify_range(&lowers, &uppers, &next.open_dims, sizes);
        match &kind {
            LoopKind::Dimension => {
                next.open_dims.insert(cand.clone());
                next.factors.push(Factor::N);
            }
            LoopKind::UfRangePaired { parent } => {
                next.open_dims.remove(parent);
                next.factors.pop(); // parent's N is replaced by the pair
                next.factors.push(Factor::Nnz);
            }
            LoopKind::UfRangeUnpaired => next.factors.push(Factor::Avg),
            _ => unreachable!(),
        }
        // pairing replaced the *last pushed* N only if it was the parent's;
        // rebuild factors defensively from the schedule instead
        next.available.insert(cand.clone());
        next.schedule.push(ScheduledIter { var: cand.clone(), kind, lowers, uppers });
        next.factors = factors_of(&next.schedule);
        search(next, edge, sizes, best)?;
    }
    Ok(())
}

fn factors_of(schedule: &[ScheduledIter]) -> Vec<Factor> {
    let mut consumed: BTreeSet<&String> = BTreeSet::new();
    for s in schedule {
        if let LoopKind::UfRangePaired { parent } = &s.kind {
            consumed.insert(parent);
        }
    }
    let mut f = Vec::new();
    for s in schedule {
        match &s.kind {
            LoopKind::Dimension => {
                if !consumed.contains(&s.var) {
                    f.push(Factor::N);
                }
            }
            LoopKind::UfRangePaired { .. } => f.push(Factor::Nnz),
            LoopKind::UfRangeUnpaired => f.push(Factor::Avg),
            _ => {}
        }
    }
    f
}

/// Repeatedly applies derivations and exact projections.
fn saturate(st: &mut SearchState, edge: &BTreeSet<String>) {
    loop {
        let mut progress = false;
        // derivations: v = expr with expr fully available
        for v in st.remaining.clone() {
            if let Some(expr) = derivable(&st.view, &v, &st.available) {
                st.schedule.push(ScheduledIter {
                    var: v.clone(),
                    kind: LoopKind::Derived { expr },
                    lowers: vec![],
                    uppers: vec![],
                });
                st.available.insert(v.clone());
                st.remaining.retain(|x| *x != v);
                progress = true;
            }
        }
        // projections: non-edge iterator whose every occurrence is a
        // unit-coefficient linear bound
        for v in st.remaining.clone() {
            if edge.contains(&v) || st.unprojectable.contains(&v) {
                continue;
            }
            if let Some((residuals, new_view)) = project(&st.view, &v) {
                st.residuals.extend(residuals.clone());
                let mut nv = new_view;
                nv.extend(residuals);
                st.view = nv;
                st.schedule.push(ScheduledIter {
                    var: v.clone(),
                    kind: LoopKind::Projected,
                    lowers: vec![],
                    uppers: vec![],
                });
                st.remaining.retain(|x| *x != v);
                progress = true;
            }
        }
        if !progress {
            break;
        }
    }
}

/// Looks for an equality pinning `v` to an expression over available
/// quantities (symbolic constants always available; UF arguments must
/// be available recursively).
fn derivable(view: &[Constraint], v: &str, available: &BTreeSet<String>) -> Option<AffineExpr> {
    for c in view {
        if c.kind != CmpKind::Eq || c.tag != Tag::Exact {
            continue;
        }
        let coeff = c.expr.coeff_of_var(v);
        if coeff.abs() != 1 || c.expr.var_under_uf(v) {
            continue;
        }
        // v = -(rest)/coeff
        let mut rest = c.expr.clone();
        rest.terms.retain(|(_, a)| !matches!(a, Atom::Var(x) if x == v));
        let expr = rest.scale(-coeff);
        let mut vars = BTreeSet::new();
        expr.collect_vars(&mut vars);
        if vars.iter().all(|x| available.contains(x)) {
            return Some(expr);
        }
    }
    None
}

/// Exact Fourier-Motzkin projection of `v` out of the view. Requires
/// every occurrence of `v` to be linear with coefficient +-1 and not
/// inside any UF argument.
fn project(view: &[Constraint], v: &str) -> Option<(Vec<Constraint>, Vec<Constraint>)> {
    let mut lowers: Vec<(AffineExpr, Tag)> = Vec::new(); // v >= e
    let mut uppers: Vec<(AffineExpr, Tag)> = Vec::new(); // v <= e
    let mut rest: Vec<Constraint> = Vec::new();
    for c in view {
        let mentions_linear = c.expr.coeff_of_var(v) != 0;
        let mentions_uf = c.expr.var_under_uf(v);
        if mentions_uf {
            return None;
        }
        if mentions_linear && c.tag == Tag::May {
            return None; // guards are checks, not bounds to combine
        }
        if !mentions_linear {
            rest.push(c.clone());
            continue;
        }
        let coeff = c.expr.coeff_of_var(v);
        if coeff.abs() != 1 {
            return None;
        }
        let mut others = c.expr.clone();
        others.terms.retain(|(_, a)| !matches!(a, Atom::Var(x) if x == v));
        match c.kind {
            CmpKind::Geq => {
                if coeff == 1 {
                    lowers.push((others.scale(-1), c.tag)); // v >= -others
                } else {
                    uppers.push((others, c.tag)); // v <= others
                }
            }
            CmpKind::Eq => {
                let e = others.scale(-coeff);
                lowers.push((e.clone(), c.tag));
                uppers.push((e, c.tag));
            }
        }
    }
    let mut residuals = Vec::new();
    for (lo, t1) in &lowers {
        for (up, t2) in &uppers {
            let tag = if *t1 == Tag::May || *t2 == Tag::May { Tag::May } else { Tag::Exact };
            let c = Constraint::geq(up.sub(lo)).with_tag(tag);
            if !c.expr.is_constant() || c.expr.constant < 0 {
                residuals.push(c);
            }
        }
    }
    Some((residuals, rest))
}

/// Bound candidates for `v`: inclusive lower/upper expressions taken
/// from unit-coefficient constraints whose remaining variables are
/// already available (so the loop bound is evaluable at run time).
fn bounds_of(
    view: &[Constraint],
    v: &str,
    available: &BTreeSet<String>,
) -> (Vec<AffineExpr>, Vec<AffineExpr>) {
    let mut lowers = Vec::new();
    let mut uppers = Vec::new();
    for c in view {
        if c.tag == Tag::May {
            continue; // data-dependent guards never bound a loop
        }
        let coeff = c.expr.coeff_of_var(v);
        if coeff == 0 || c.expr.var_under_uf(v) {
            continue;
        }
        if coeff.abs() != 1 {
            continue;
        }
        let mut others = c.expr.clone();
        others.terms.retain(|(_, a)| !matches!(a, Atom::Var(x) if x == v));
        let mut vars = BTreeSet::new();
        others.collect_vars(&mut vars);
        if !vars.iter().all(|x| available.contains(x)) {
            continue;
        }
        match c.kind {
            CmpKind::Geq => {
                if coeff == 1 {
                    lowers.push(others.scale(-1));
                } else {
                    uppers.push(others);
                }
            }
            CmpKind::Eq => {
                let e = others.scale(-coeff);
                lowers.push(e.clone());
                uppers.push(e);
            }
        }
    }
    (lowers, uppers)
}

/// Dimension vs index-array range, with same-symbol `f(p)`/`f(p+1)`
/// windows under an open dimension loop pairing into an `nnz` traversal.
fn classify_range(
    lowers: &[AffineExpr],
    uppers: &[AffineExpr],
    open_dims: &BTreeSet<String>,
    sizes: &dyn Fn(&str) -> bool,
) -> LoopKind {
    let uf_of = |e: &AffineExpr| -> Option<UfTerm> {
        let mut found = None;
        for (_, a) in &e.terms {
            if let Atom::Uf(t) = a {
                if found.is_some() {
                    return None;
                }
                found = Some(t.clone());
            }
        }
        found
    };
    for lo in lowers {
        for up in uppers {
            let (Some(fl), Some(fu)) = (uf_of(lo), uf_of(up)) else { continue };
            if fl.symbol != fu.symbol || fl.args.len() != 1 || fu.args.len() != 1 {
                continue;
            }
            // upper arg = lower arg + 1
            if fu.args[0] != fl.args[0].add_const(1) {
                continue;
            }
            // parent: the argument is exactly an open dimension iterator
            if fl.args[0].terms.len() == 1
                && fl.args[0].constant == 0
                && fl.args[0].terms[0].0 == 1
            {
                if let Atom::Var(p) = &fl.args[0].terms[0].1 {
                    if open_dims.contains(p) {
                        return LoopKind::UfRangePaired { parent: p.clone() };
                    }
                }
            }
            return LoopKind::UfRangeUnpaired;
        }
    }
    if lowers.iter().chain(uppers.iter()).any(|e| e.uf_depth() > 0) {
        return LoopKind::UfRangeUnpaired;
    }
    // dimension if some bound reaches a size constant; plain iterator
    // windows also count as dimension-class ranges
    let _ = sizes;
    LoopKind::Dimension
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_problem;

    fn model_only(src: &str, extras: &[DerivedEquality]) -> LoopNestModel {
        let p = parse_problem(src).unwrap();
        let r = &p.relations[0];
        model_loops(r, &[0], &[extras.to_vec()], &|s| s == "n").unwrap()
    }

    const LC_HEADER: &str = "symbolic n, nnz;\nuf lcolptr : 1;\nuf pruneptr : 1;\nuf pruneset : 1;\n";

    /// The left-Cholesky worked example: the baseline inspector loops
    /// over (colNop, ipr) jointly (nnz) and colNo (n); j and lpr are
    /// projected out.
    #[test]
    fn left_cholesky_baseline_is_n_times_nnz() {
        let src = format!(
            "{}relation \"m1\" {{ [colNo] -> [colNop] : exists(j, ipr, lpr) : j = lpr && colNo < colNop && 0 <= colNo < n && 0 <= colNop < n && lcolptr(pruneset(ipr)) <= lpr < lcolptr(pruneset(ipr)+1) && pruneptr(colNop) <= ipr < pruneptr(colNop+1) && lcolptr(colNo) < j < lcolptr(colNo+1) }}",
            LC_HEADER
        );
        let m = model_only(&src, &[]);
        assert_eq!(m.complexity.to_string(), "(n x nnz)");
        // two loops only: colNop paired with ipr, plus colNo
        let loops: Vec<&ScheduledIter> = m.clauses[0]
            .schedule
            .iter()
            .filter(|s| !matches!(s.kind, LoopKind::Derived { .. } | LoopKind::Projected))
            .collect();
        assert_eq!(loops.len(), 3); // colNop (dim), ipr (paired), colNo (dim)
    }

    /// With the discovered equality colNo = pruneset(ipr), the colNo
    /// loop disappears and the inspector is nnz.
    #[test]
    fn left_cholesky_simplified_is_nnz() {
        let src = format!(
            "{}relation \"m1\" {{ [colNo] -> [colNop] : exists(j, ipr, lpr) : j = lpr && colNo < colNop && 0 <= colNo < n && 0 <= colNop < n && lcolptr(pruneset(ipr)) <= lpr < lcolptr(pruneset(ipr)+1) && pruneptr(colNop) <= ipr < pruneptr(colNop+1) && lcolptr(colNo) < j < lcolptr(colNo+1) }}",
            LC_HEADER
        );
        let eq = DerivedEquality {
            var: "colNo".into(),
            rhs: AffineExpr::atom(Atom::Uf(UfTerm {
                symbol: "pruneset".into(),
                args: vec![AffineExpr::var("ipr")],
            })),
        };
        let m = model_only(&src, &[eq]);
        assert_eq!(m.complexity.to_string(), "(nnz)");
    }

    #[test]
    fn single_dimension_iterator_is_n() {
        let src = "symbolic n;\nrelation \"r\" { [i] -> [ip] : i = ip && i < ip && 0 <= i < n && 0 <= ip < n }";
        let m = model_only(src, &[]);
        assert_eq!(m.complexity.to_string(), "(n)");
    }

    #[test]
    fn forward_solve_flow_dep_is_nnz() {
        let src = "symbolic n, nnz;\nuf rowptr : 1;\nuf col : 1;\nrelation \"d3\" { [i,k] -> [ip,kp] : i = col(kp) && i < ip && 0 <= i < n && 0 <= ip < n && rowptr(ip) <= kp < rowptr(ip+1) }";
        let m = model_only(src, &[]);
        assert_eq!(m.complexity.to_string(), "(nnz)");
    }

    #[test]
    fn output_dep_with_projected_windows_is_n() {
        let src = "symbolic n, nnz;\nuf rowptr : 1;\nrelation \"d1\" { [i,k] -> [ip,kp] : i = ip && i < ip && 0 <= i < n && 0 <= ip < n && rowptr(i) <= k < rowptr(i+1) && rowptr(ip) <= kp < rowptr(ip+1) }";
        let m = model_only(src, &[]);
        assert_eq!(m.complexity.to_string(), "(n)");
    }

    #[test]
    fn canonicalization_absorbs_n_avg_into_nnz() {
        let c = ComplexityExpr::product(&[Factor::N, Factor::Nnz, Factor::Avg, Factor::Avg]);
        assert_eq!(c.to_string(), "(nnz^2 x (nnz/n))");
    }

    #[test]
    fn kernel_comparison_regime() {
        let kernel = KernelComplexity::parse("K(nnz x (nnz/n)^2)").unwrap();
        let n2 = ComplexityExpr::product(&[Factor::N, Factor::N]);
        assert!(le_kernel(&n2, &kernel), "n^2 sits exactly at the kernel cost");
        let nnz2 = ComplexityExpr::product(&[Factor::Nnz, Factor::Nnz]);
        assert!(!le_kernel(&nnz2, &kernel));
        let small = ComplexityExpr::product(&[Factor::Nnz, Factor::Avg]);
        assert!(le_kernel(&small, &kernel));
        let kernel_small = KernelComplexity::parse("k(nnz)").unwrap();
        let nnz = ComplexityExpr::product(&[Factor::Nnz]);
        assert!(le_kernel(&nnz, &kernel_small));
        let navg4 = ComplexityExpr::product(&[Factor::Nnz, Factor::Avg, Factor::Avg, Factor::Avg, Factor::Avg]);
        assert!(!le_kernel(&navg4, &kernel), "nnz*(nnz/n)^4 exceeds K(nnz*(nnz/n)^2)");
    }
}
