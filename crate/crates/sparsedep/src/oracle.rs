//! Brute-force ground truth: sampled concrete index arrays satisfying
//! the declared assertions, exhaustive relation enumeration, and
//! falsification of verdicts, equalities and superset claims.

use crate::assertions::Assertion;
use crate::complexity::DerivedEquality;
use crate::parse::Problem;
use crate::pipeline::RelationAnalysis;
use crate::relation::{AffineExpr, Atom, CmpKind, Conjunction, Constraint, Relation};
use crate::superset::SupersetClaim;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

/// Deterministic splitmix64 stream.
#[derive(Debug, Clone)]
pub struct Rng(u64);

impl Rng {
    pub fn new(seed: u64) -> Rng {
        Rng(seed.wrapping_add(0x9e3779b97f4a7c15))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    pub fn below(&mut self, n: u64) -> u64 {
        if n == 0 {
            0
        } else {
            self.next_u64() % n
        }
    }

    pub fn chance(&mut self, num: u64, den: u64) -> bool {
        self.below(den) < num
    }
}

/// Concrete index arrays plus symbolic-constant values.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConcreteInstance {
    pub n: i64,
    pub nnz: i64,
    pub arrays: BTreeMap<String, Vec<i64>>,
    pub preset: String,
    pub seed: u64,
}

impl ConcreteInstance {
    pub fn uf(&self, name: &str, arg: i64) -> Option<i64> {
        let a = self.arrays.get(name)?;
        if arg < 0 || arg as usize >= a.len() {
            None
        } else {
            Some(a[arg as usize])
        }
    }

    pub fn sym(&self, name: &str) -> Option<i64> {
        match name {
            "n" => Some(self.n),
            "nnz" => Some(self.nnz),
            _ => None,
        }
    }
}

/// Instance generator families. Construction is correct by
/// construction per preset and then independently re-validated against
/// the declared assertions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GeneratorPreset {
    CsrLowerTriangular,
    CsrGeneral,
    CscLowerTriangular,
    CsrWithDiagptr,
    CholeskyPruneSets,
}

impl GeneratorPreset {
    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "csr_lower_triangular" => Some(Self::CsrLowerTriangular),
            "csr_general" => Some(Self::CsrGeneral),
            "csc_lower_triangular" => Some(Self::CscLowerTriangular),
            "csr_with_diagptr" => Some(Self::CsrWithDiagptr),
            "cholesky_prune_sets" => Some(Self::CholeskyPruneSets),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::CsrLowerTriangular => "csr_lower_triangular",
            Self::CsrGeneral => "csr_general",
            Self::CscLowerTriangular => "csc_lower_triangular",
            Self::CsrWithDiagptr => "csr_with_diagptr",
            Self::CholeskyPruneSets => "cholesky_prune_sets",
        }
    }
}

/// Samples `count` instances; deterministic per seed. `n` is capped at
/// desk scale.
pub fn sample(
    preset: GeneratorPreset,
    n_range: (i64, i64),
    density_pct: u64,
    seed: u64,
    count: usize,
) -> Result<Vec<ConcreteInstance>, String> {
    if n_range.0 < 1 || n_range.1 > 64 || n_range.0 > n_range.1 {
        return Err(format!("n range {:?} outside [1, 64]", n_range));
    }
    let mut out = Vec::new();
    for k in 0..count {
        let mut rng = Rng::new(seed ^ ((k as u64) << 32) ^ 0x5eed);
        let n = n_range.0 + rng.below((n_range.1 - n_range.0 + 1) as u64) as i64;
        let inst = generate_one(preset, n, density_pct, &mut rng, seed)?;
        out.push(inst);
    }
    Ok(out)
}

fn generate_one(
    preset: GeneratorPreset,
    n: i64,
    density_pct: u64,
    rng: &mut Rng,
    seed: u64,
) -> Result<ConcreteInstance, String> {
    if n < 1 {
        return Err("n must be positive".into());
    }
    let mut arrays = BTreeMap::new();
    let nnz;
    match preset {
        GeneratorPreset::CsrLowerTriangular => {
            // row i: strictly increasing columns ending at the diagonal
            let mut rowptr = vec![0i64];
            let mut col = Vec::new();
            for i in 0..n {
                for j in 0..i {
                    if rng.chance(density_pct, 100) {
                        col.push(j);
                    }
                }
                col.push(i); // diagonal last
                rowptr.push(col.len() as i64);
            }
            nnz = col.len() as i64;
            arrays.insert("rowptr".into(), rowptr);
            arrays.insert("col".into(), col);
        }
        GeneratorPreset::CsrGeneral | GeneratorPreset::CsrWithDiagptr => {
            let mut rowptr = vec![0i64];
            let mut col = Vec::new();
            let mut diagptr = Vec::new();
            for i in 0..n {
                for j in 0..n {
                    let on_diag = j == i;
                    if on_diag {
                        diagptr.push(col.len() as i64);
                        col.push(j);
                    } else if rng.chance(density_pct, 100) {
                        col.push(j);
                    }
                }
                rowptr.push(col.len() as i64);
            }
            nnz = col.len() as i64;
            arrays.insert("rowptr".into(), rowptr);
            arrays.insert("col".into(), col);
            if preset == GeneratorPreset::CsrWithDiagptr {
                arrays.insert("diagptr".into(), diagptr);
            }
        }
        GeneratorPreset::CscLowerTriangular => {
            // column j: diagonal row first, then increasing sub-diagonal rows
            let (colptr, rowidx) = gen_lower_csc(n, density_pct, rng);
            nnz = rowidx.len() as i64;
            arrays.insert("colptr".into(), colptr);
            arrays.insert("rowidx".into(), rowidx);
        }
        GeneratorPreset::CholeskyPruneSets => {
            let (lcolptr, lrow) = gen_lower_csc(n, density_pct, rng);
            nnz = lrow.len() as i64;
            // prune set of column c: prior columns whose pattern shares a row
            let rows_of = |c: i64| -> BTreeSet<i64> {
                let lo = lcolptr[c as usize] as usize;
                let hi = lcolptr[c as usize + 1] as usize;
                lrow[lo..hi].iter().copied().collect()
            };
            let mut pruneptr = vec![0i64];
            let mut pruneset = Vec::new();
            for c in 0..n {
                let mine = rows_of(c);
                for cp in 0..c {
                    let theirs = rows_of(cp);
                    if theirs.intersection(&mine).next().is_some() {
                        pruneset.push(cp);
                    }
                }
                pruneptr.push(pruneset.len() as i64);
            }
            arrays.insert("lcolptr".into(), lcolptr);
            arrays.insert("lrow".into(), lrow);
            arrays.insert("pruneptr".into(), pruneptr);
            arrays.insert("pruneset".into(), pruneset);
        }
    }
    Ok(ConcreteInstance { n, nnz, arrays, preset: preset.name().into(), seed })
}

fn gen_lower_csc(n: i64, density_pct: u64, rng: &mut Rng) -> (Vec<i64>, Vec<i64>) {
    let mut colptr = vec![0i64];
    let mut rowidx = Vec::new();
    for j in 0..n {
        rowidx.push(j); // diagonal first
        for r in j + 1..n {
            if rng.chance(density_pct, 100) {
                rowidx.push(r);
            }
        }
        colptr.push(rowidx.len() as i64);
    }
    (colptr, rowidx)
}

/// Evaluates an affine expression under an environment; `None` marks an
/// out-of-domain index-array application.
pub fn eval_expr(
    e: &AffineExpr,
    env: &BTreeMap<String, i64>,
    inst: &ConcreteInstance,
) -> Option<i64> {
    let mut acc = e.constant;
    for (c, a) in &e.terms {
        let v = match a {
            Atom::Var(x) => *env.get(x)?,
            Atom::Sym(s) => inst.sym(s)?,
            Atom::Uf(t) => {
                let arg = eval_expr(&t.args[0], env, inst)?;
                if t.args.len() != 1 {
                    // arity >= 2 arrays are not generated by any preset
                    return None;
                }
                inst.uf(&t.symbol, arg)?
            }
        };
        acc += c * v;
    }
    Some(acc)
}

pub fn eval_constraint(
    c: &Constraint,
    env: &BTreeMap<String, i64>,
    inst: &ConcreteInstance,
) -> Option<bool> {
    let v = eval_expr(&c.expr, env, inst)?;
    Some(match c.kind {
        CmpKind::Eq => v == 0,
        CmpKind::Geq => v >= 0,
    })
}

/// Validates one assertion over the full valid domain of its variables.
/// Points where any application is out of domain are skipped.
pub fn validate_assertion(a: &Assertion, inst: &ConcreteInstance) -> Result<(), String> {
    let domains: Vec<(i64, i64)> = a.vars.iter().map(|v| var_domain(a, v, inst)).collect();
    let mut env: BTreeMap<String, i64> = BTreeMap::new();
    fn rec(
        a: &Assertion,
        inst: &ConcreteInstance,
        domains: &[(i64, i64)],
        k: usize,
        env: &mut BTreeMap<String, i64>,
    ) -> Result<(), String> {
        if k == a.vars.len() {
            let ante: Option<bool> = a
                .antecedent
                .iter()
                .try_fold(true, |acc, c| eval_constraint(c, env, inst).map(|b| acc && b));
            match ante {
                None => return Ok(()),      // out of domain: vacuous
                Some(false) => return Ok(()),
                Some(true) => {}
            }
            for c in &a.consequent {
                match eval_constraint(c, env, inst) {
                    None => return Ok(()), // out of domain: skipped
                    Some(true) => {}
                    Some(false) => {
                        return Err(format!(
                            "assertion {} violated at {:?}: {}",
                            a.name, env, c
                        ))
                    }
                }
            }
            return Ok(());
        }
        let (lo, hi) = domains[k];
        for v in lo..=hi {
            env.insert(a.vars[k].clone(), v);
            rec(a, inst, domains, k + 1, env)?;
        }
        env.remove(&a.vars[k]);
        Ok(())
    }
    rec(a, inst, &domains, 0, &mut env)
}

/// Domain of a quantified variable: the tightest index range over the
/// arrays it feeds (offset by the argument's constant), else [0, n].
fn var_domain(a: &Assertion, v: &str, inst: &ConcreteInstance) -> (i64, i64) {
    let mut lo = i64::MIN;
    let mut hi = i64::MAX;
    let mut seen = false;
    let mut visit = |e: &AffineExpr| {
        let mut terms: BTreeSet<crate::relation::UfTerm> = BTreeSet::new();
        e.collect_uf_terms(&mut terms);
        for t in terms {
            let Some(arr) = inst.arrays.get(&t.symbol) else { continue };
            let arg = &t.args[0];
            if arg.terms.len() == 1 && arg.terms[0].0 == 1 {
                if let Atom::Var(x) = &arg.terms[0].1 {
                    if x == v {
                        // arg = v + c must lie in [0, len)
                        lo = lo.max(-arg.constant);
                        hi = hi.min(arr.len() as i64 - 1 - arg.constant);
                        seen = true;
                    }
                }
            }
        }
    };
    for c in a.antecedent.iter().chain(a.consequent.iter()) {
        visit(&c.expr);
    }
    if !seen {
        (0, inst.n)
    } else {
        (lo, hi.max(lo - 1))
    }
}

/// Validates every declared assertion; instances failing validation are
/// generator bugs and must never be used.
pub fn validate_instance(problem: &Problem, inst: &ConcreteInstance) -> Result<(), String> {
    validate_instance_scoped(problem, inst, None)
}

/// Validates the assertions relevant to one kernel (or all assertions
/// when `kernel` is None).
pub fn validate_instance_scoped(
    problem: &Problem,
    inst: &ConcreteInstance,
    kernel: Option<&str>,
) -> Result<(), String> {
    for a in &problem.assertions {
        if let Some(k) = kernel {
            if !a.scope.is_empty() && !a.scope.contains(k) {
                continue;
            }
        }
        // skip assertions about arrays this instance does not carry
        let mut syms = BTreeSet::new();
        for c in a.antecedent.iter().chain(a.consequent.iter()) {
            let mut ts = BTreeSet::new();
            c.collect_uf_terms(&mut ts);
            for t in ts {
                syms.insert(t.symbol.clone());
            }
        }
        if syms.iter().any(|s| !inst.arrays.contains_key(s)) {
            continue;
        }
        validate_assertion(a, inst)?;
    }
    Ok(())
}

/// Exhaustive solutions of one relation on one instance.
#[derive(Debug, Clone, Default)]
pub struct Solutions {
    /// (source outer iteration, sink outer iteration)
    pub outer_pairs: BTreeSet<(i64, i64)>,
    /// full tuples over enumerated (constrained) iterators, per clause
    pub tuples: Vec<(usize, BTreeMap<String, i64>)>,
    pub out_of_domain_points: usize,
    pub enumerated_points: u64,
    pub warnings: Vec<String>,
}

const POINT_CAP: u64 = 1_000_000_000;

/// Enumerates all integer solutions by interval propagation: iterators
/// are ordered so each has evaluable bounds given its predecessors.
pub fn enumerate(r: &Relation, inst: &ConcreteInstance) -> Result<Solutions, String> {
    let mut sol = Solutions::default();
    let (src, dst) = (
        r.in_tuple.first().cloned().unwrap_or_default(),
        r.out_tuple.first().cloned().unwrap_or_default(),
    );
    for (ci, clause) in r.clauses.iter().enumerate() {
        let vars = clause.collect_vars();
        let iters: Vec<String> = r.iterators().into_iter().filter(|v| vars.contains(v)).collect();
        for v in r.iterators() {
            if !vars.contains(&v) {
                sol.warnings.push(format!(
                    "iterator {} unconstrained in clause {}; omitted from tuples",
                    v, ci
                ));
            }
        }
        let order = enumeration_order(clause, &iters, &mut sol.warnings);
        enumerate_clause(r, clause, inst, &order, ci, &src, &dst, &mut sol)?;
    }
    Ok(sol)
}

/// Greedy ordering: next iterator is one whose bound expressions only
/// mention already-ordered iterators.
fn enumeration_order(
    clause: &Conjunction,
    iters: &[String],
    warnings: &mut Vec<String>,
) -> Vec<(String, bool)> {
    let mut placed: Vec<(String, bool)> = Vec::new(); // (var, fallback_box)
    let mut avail: BTreeSet<String> = BTreeSet::new();
    let mut rest: Vec<String> = iters.to_vec();
    while !rest.is_empty() {
        let mut picked = None;
        for (pos, v) in rest.iter().enumerate() {
            let mut has_lower = false;
            let mut has_upper = false;
            for c in &clause.constraints {
                let k = c.expr.coeff_of_var(v);
                if k.abs() != 1 || c.expr.var_under_uf(v) {
                    continue;
                }
                let mut others = BTreeSet::new();
                c.expr.collect_vars(&mut others);
                others.remove(v.as_str());
                if !others.iter().all(|o| avail.contains(o)) {
                    continue;
                }
                match (c.kind, k) {
                    (CmpKind::Eq, _) => {
                        has_lower = true;
                        has_upper = true;
                    }
                    (CmpKind::Geq, 1) => has_lower = true,
                    (CmpKind::Geq, -1) => has_upper = true,
                    _ => {}
                }
            }
            if has_lower && has_upper {
                picked = Some(pos);
                break;
            }
        }
        match picked {
            Some(pos) => {
                let v = rest.remove(pos);
                avail.insert(v.clone());
                placed.push((v, false));
            }
            None => {
                let v = rest.remove(0);
                warnings.push(format!(
                    "iterator {} has no derivable bounds; using fallback box",
                    v
                ));
                avail.insert(v.clone());
                placed.push((v, true));
            }
        }
    }
    placed
}

#[allow(clippy::too_many_arguments)]
fn enumerate_clause(
    r: &Relation,
    clause: &Conjunction,
    inst: &ConcreteInstance,
    order: &[(String, bool)],
    ci: usize,
    src: &str,
    dst: &str,
    sol: &mut Solutions,
) -> Result<(), String> {
    let mut env: BTreeMap<String, i64> = BTreeMap::new();
    rec(r, clause, inst, order, ci, src, dst, sol, &mut env, 0)?;
    #[allow(clippy::too_many_arguments)]
    fn rec(
        r: &Relation,
        clause: &Conjunction,
        inst: &ConcreteInstance,
        order: &[(String, bool)],
        ci: usize,
        src: &str,
        dst: &str,
        sol: &mut Solutions,
        env: &mut BTreeMap<String, i64>,
        depth: usize,
    ) -> Result<(), String> {
        sol.enumerated_points += 1;
        if sol.enumerated_points > POINT_CAP {
            return Err("enumeration point cap exceeded".into());
        }
        if depth == order.len() {
            for c in &clause.constraints {
                match eval_constraint(c, env, inst) {
                    Some(true) => {}
                    Some(false) => return Ok(()),
                    None => {
                        sol.out_of_domain_points += 1;
                        return Ok(());
                    }
                }
            }
            let (a, b) = (env.get(src).copied(), env.get(dst).copied());
            if let (Some(a), Some(b)) = (a, b) {
                sol.outer_pairs.insert((a, b));
            }
            sol.tuples.push((ci, env.clone()));
            return Ok(());
        }
        let (v, fallback) = &order[depth];
        let (mut lo, mut hi) = if *fallback {
            (-2 * inst.nnz, 2 * inst.nnz)
        } else {
            (i64::MIN, i64::MAX)
        };
        for c in &clause.constraints {
            let k = c.expr.coeff_of_var(v);
            if k.abs() != 1 || c.expr.var_under_uf(v) {
                continue;
            }
            let mut others = c.expr.clone();
            others.terms.retain(|(_, a)| !matches!(a, Atom::Var(x) if x == v));
            let mut vars = BTreeSet::new();
            others.collect_vars(&mut vars);
            if !vars.iter().all(|o| env.contains_key(o)) {
                continue;
            }
            let Some(rest) = eval_expr(&others, env, inst) else {
                sol.out_of_domain_points += 1;
                return Ok(());
            };
            match (c.kind, k) {
                (CmpKind::Eq, 1) => {
                    lo = lo.max(-rest);
                    hi = hi.min(-rest);
                }
                (CmpKind::Eq, -1) => {
                    lo = lo.max(rest);
                    hi = hi.min(rest);
                }
                (CmpKind::Geq, 1) => lo = lo.max(-rest),
                (CmpKind::Geq, -1) => hi = hi.min(rest),
                _ => {}
            }
        }
        if lo == i64::MIN || hi == i64::MAX {
            return Err(format!("iterator {} unbounded during enumeration", v));
        }
        for x in lo..=hi {
            env.insert(v.clone(), x);
            rec(r, clause, inst, order, ci, src, dst, sol, env, depth + 1)?;
        }
        env.remove(v);
        Ok(())
    }
    Ok(())
}

/// One falsification finding with the instance needed to reproduce it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Counterexample {
    pub kind: String,
    pub subject: String,
    pub detail: String,
    pub instance: ConcreteInstance,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct FalsifyReport {
    pub trials: usize,
    pub checked_unsat: usize,
    pub checked_equalities: usize,
    pub checked_claims: usize,
    pub counterexamples: Vec<Counterexample>,
}

/// Checks every UNSAT verdict (emptiness), every certified equality
/// (holds on each solution tuple) and every superset claim (outer-pair
/// inclusion) against each instance.
pub fn falsify(
    problem: &Problem,
    analyses: &[RelationAnalysis],
    claims: &[SupersetClaim],
    instances: &[ConcreteInstance],
    report: &mut FalsifyReport,
) -> Result<(), String> {
    let by_name: BTreeMap<&str, &RelationAnalysis> = analyses
        .iter()
        .map(|a| (a.relation.name.as_str(), a))
        .collect();
    let kernels: std::collections::BTreeSet<&str> =
        analyses.iter().map(|a| a.verdict.kernel.as_str()).collect();
    for inst in instances {
        for k in &kernels {
            validate_instance_scoped(problem, inst, Some(k))?;
        }
        report.trials += 1;
        let mut pair_cache: BTreeMap<&str, BTreeSet<(i64, i64)>> = BTreeMap::new();
        for a in analyses {
            let needed: BTreeSet<String> = a
                .relation
                .free_uf_terms()
                .iter()
                .map(|t| t.symbol.clone())
                .collect();
            if needed.iter().any(|s| !inst.arrays.contains_key(s)) {
                continue;
            }
            let sol = enumerate(&a.relation, inst)?;
            if a.verdict.status.is_unsat() {
                report.checked_unsat += 1;
                if !sol.outer_pairs.is_empty() {
                    report.counterexamples.push(Counterexample {
                        kind: "unsat".into(),
                        subject: a.relation.name.clone(),
                        detail: format!(
                            "relation judged unsatisfiable has {} dependent pairs, e.g. {:?}",
                            sol.outer_pairs.len(),
                            sol.outer_pairs.iter().next().unwrap()
                        ),
                        instance: inst.clone(),
                    });
                }
            } else {
                // certified equalities must hold on every solution tuple
                for (slot, &ci) in a.retained_clauses.iter().enumerate() {
                    for eq in a.clause_equalities.get(slot).into_iter().flatten() {
                        report.checked_equalities += 1;
                        check_equality(a, eq, ci, &sol, inst, report);
                    }
                }
            }
            pair_cache.insert(a.relation.name.as_str(), sol.outer_pairs);
        }
        for c in claims {
            let (Some(sup), Some(sub)) = (
                pair_cache.get(c.superset.as_str()),
                pair_cache.get(c.subset.as_str()),
            ) else {
                continue;
            };
            report.checked_claims += 1;
            if !sub.is_subset(sup) {
                let missing = sub.difference(sup).next().unwrap();
                report.counterexamples.push(Counterexample {
                    kind: "superset".into(),
                    subject: format!("{} >= {}", c.superset, c.subset),
                    detail: format!("dependent pair {:?} of the subset is not covered", missing),
                    instance: inst.clone(),
                });
            }
        }
        let _ = by_name;
    }
    Ok(())
}

fn check_equality(
    a: &RelationAnalysis,
    eq: &DerivedEquality,
    clause: usize,
    sol: &Solutions,
    inst: &ConcreteInstance,
    report: &mut FalsifyReport,
) {
    for (ci, env) in &sol.tuples {
        if *ci != clause {
            continue;
        }
        let lhs = env.get(&eq.var).copied();
        let rhs = eval_expr(&eq.rhs, env, inst);
        if lhs.is_none() {
            continue; // variable not part of this clause's tuple
        }
        match (lhs, rhs) {
            (Some(l), Some(r)) if l == r => {}
            _ => {
                report.counterexamples.push(Counterexample {
                    kind: "equality".into(),
                    subject: format!("{}: {}", a.relation.name, eq),
                    detail: format!("violated at {:?} (lhs={:?}, rhs={:?})", env, lhs, rhs),
                    instance: inst.clone(),
                });
                return;
            }
        }
    }
}

/// Maps a kernel to the preset its index arrays come from.
pub fn preset_for_kernel(kernel: &str) -> Option<GeneratorPreset> {
    match kernel {
        "fs_csr" => Some(GeneratorPreset::CsrLowerTriangular),
        "gs_csr" | "gs_bcsr" | "spmv" | "ilu_csr" => Some(GeneratorPreset::CsrWithDiagptr),
        "fs_csc" | "ic0" => Some(GeneratorPreset::CscLowerTriangular),
        "left_cholesky" => Some(GeneratorPreset::CholeskyPruneSets),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_problem;

    #[test]
    fn lower_triangular_rowptr_is_strictly_monotone() {
        let insts = sample(GeneratorPreset::CsrLowerTriangular, (5, 5), 40, 1, 3).unwrap();
        for inst in &insts {
            let rp = &inst.arrays["rowptr"];
            assert!(rp.windows(2).all(|w| w[0] < w[1]));
            assert_eq!(*rp.last().unwrap(), inst.nnz);
        }
    }

    #[test]
    fn diagptr_sits_inside_its_row() {
        let insts = sample(GeneratorPreset::CsrWithDiagptr, (6, 6), 30, 2, 3).unwrap();
        for inst in &insts {
            let (rp, dp, col) = (&inst.arrays["rowptr"], &inst.arrays["diagptr"], &inst.arrays["col"]);
            for i in 0..inst.n as usize {
                assert!(rp[i] <= dp[i] && dp[i] < rp[i + 1]);
                assert_eq!(col[dp[i] as usize], i as i64);
            }
        }
    }

    #[test]
    fn zero_n_is_rejected() {
        assert!(sample(GeneratorPreset::CsrLowerTriangular, (0, 4), 40, 1, 1).is_err());
    }

    #[test]
    fn instances_validate_declared_assertions() {
        let p = parse_problem(
            "symbolic n, nnz;\nuf rowptr : 1;\nuf col : 1;\nassert strict_monotone(rowptr);\nassert forall x1, x2 : x1 < rowptr(x2) -> col(x1) < x2 category triangular;\nassert forall x : col(rowptr(x+1) - 1) = x category correlated_monotonicity;",
        )
        .unwrap();
        for inst in sample(GeneratorPreset::CsrLowerTriangular, (3, 8), 50, 7, 10).unwrap() {
            validate_instance(&p, &inst).unwrap();
        }
    }

    #[test]
    fn cholesky_prune_sets_validate() {
        let p = parse_problem(
            "symbolic n, nnz;\nuf lcolptr : 1;\nuf lrow : 1;\nuf pruneptr : 1;\nuf pruneset : 1;\nassert strict_monotone(lcolptr);\nassert monotone(pruneptr);\nassert forall x1, x2 : x1 < pruneptr(x2) -> pruneset(x1) < x2 category triangular;\nassert forall x1, x2 : lcolptr(x1) < x2 -> x1 < lrow(x2) category triangular;\nassert forall x : lrow(lcolptr(x)) = x category correlated_monotonicity;",
        )
        .unwrap();
        for inst in sample(GeneratorPreset::CholeskyPruneSets, (3, 8), 50, 11, 10).unwrap() {
            validate_instance(&p, &inst).unwrap();
        }
    }

    #[test]
    fn enumerate_finds_no_pairs_for_affine_unsat() {
        let p = parse_problem(
            "symbolic n, nnz;\nuf rowptr : 1;\nrelation \"d1\" { [i,k] -> [ip,kp] : i = ip && i < ip && 0 <= i < n && 0 <= ip < n && rowptr(i) <= k < rowptr(i+1) && rowptr(ip) <= kp < rowptr(ip+1) }",
        )
        .unwrap();
        let inst = &sample(GeneratorPreset::CsrLowerTriangular, (5, 5), 40, 3, 1).unwrap()[0];
        let sol = enumerate(&p.relations[0], inst).unwrap();
        assert!(sol.outer_pairs.is_empty());
    }

    #[test]
    fn enumerate_finds_real_flow_dependences() {
        let p = parse_problem(
            "symbolic n, nnz;\nuf rowptr : 1;\nuf col : 1;\nrelation \"d3\" { [i,k] -> [ip,kp] : i = col(kp) && i < ip && 0 <= i < n && 0 <= ip < n && rowptr(ip) <= kp < rowptr(ip+1) }",
        )
        .unwrap();
        let inst = &sample(GeneratorPreset::CsrLowerTriangular, (6, 6), 80, 5, 1).unwrap()[0];
        let sol = enumerate(&p.relations[0], inst).unwrap();
        // every row with an off-diagonal entry depends on that column's row
        assert!(!sol.outer_pairs.is_empty());
        for (a, b) in &sol.outer_pairs {
            assert!(a < b);
        }
    }
}
