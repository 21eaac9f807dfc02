//! Universally quantified index-array assertions and their
//! instantiation over the ground-term set.
//!
//! Instances are applied in two phases: phase 1 adds only instances that
//! introduce no disjunction (antecedent entailed, or contrapositive with
//! entailed negated consequent), iterated to a fixed point; phase 2
//! case-splits the remainder under a disjunction budget.

use crate::presburger::SatStatus;
use crate::relation::{normalize, AffineExpr, CmpKind, Constraint, Tag};
use crate::ufenc::Encoding;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Ablation categories for index-array properties.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PropertyCategory {
    Monotonicity,
    CorrelatedMonotonicity,
    Triangular,
    General,
}

impl PropertyCategory {
    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "monotonicity" => Some(PropertyCategory::Monotonicity),
            "correlated_monotonicity" => Some(PropertyCategory::CorrelatedMonotonicity),
            "triangular" => Some(PropertyCategory::Triangular),
            "general" => Some(PropertyCategory::General),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            PropertyCategory::Monotonicity => "monotonicity",
            PropertyCategory::CorrelatedMonotonicity => "correlated_monotonicity",
            PropertyCategory::Triangular => "triangular",
            PropertyCategory::General => "general",
        }
    }
}

/// Syntactic shape of an assertion, per the three general forms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AssertionForm {
    Form1,
    Form2,
    Form3,
    General,
}

/// A universally quantified implication template over index arrays.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assertion {
    pub name: String,
    /// base builtin group, e.g. `strict_monotone(rowptr)`, for reporting
    pub group: String,
    pub category: PropertyCategory,
    pub vars: Vec<String>,
    pub antecedent: Vec<Constraint>,
    pub consequent: Vec<Constraint>,
    pub form: AssertionForm,
    /// kernels whose index arrays this assertion describes; empty means
    /// every kernel in the problem
    pub scope: std::collections::BTreeSet<String>,
}

impl Assertion {
    pub fn general(
        name: &str,
        category: PropertyCategory,
        vars: Vec<String>,
        antecedent: Vec<Constraint>,
        consequent: Vec<Constraint>,
    ) -> Assertion {
        let form = classify_form(&vars, &antecedent, &consequent);
        Assertion {
            name: name.to_string(),
            group: name.to_string(),
            category,
            vars,
            antecedent,
            consequent,
            form,
            scope: Default::default(),
        }
    }
}

fn classify_form(vars: &[String], ante: &[Constraint], cons: &[Constraint]) -> AssertionForm {
    // FORM1: x1 + c1 <= x2  =>  f(x1) + c2 <= f(x2)
    // FORM2: same antecedent, g on the right-hand side
    // FORM3: x1 + c1 <= f(x2)  =>  g(x1) + c2 <= x2
    if vars.len() != 2 || ante.len() != 1 || cons.len() != 1 {
        return AssertionForm::General;
    }
    let (a, c) = (&ante[0], &cons[0]);
    if a.kind != CmpKind::Geq || c.kind != CmpKind::Geq {
        return AssertionForm::General;
    }
    let simple_gap = |e: &AffineExpr, lo: &str, hi: &str| -> Option<i64> {
        // e = hi - lo - c  with c in {0,1}
        if e.terms.len() == 2
            && e.coeff_of_var(hi) == 1
            && e.coeff_of_var(lo) == -1
            && (-1..=0).contains(&e.constant)
        {
            Some(-e.constant)
        } else {
            None
        }
    };
    let uf_gap = |e: &AffineExpr, lo_arg: &str, hi_arg: &str| -> Option<(String, String, i64)> {
        if e.terms.len() != 2 || !(-1..=0).contains(&e.constant) {
            return None;
        }
        let mut f_lo = None;
        let mut f_hi = None;
        for (k, atom) in &e.terms {
            if let crate::relation::Atom::Uf(t) = atom {
                if t.args.len() == 1 {
                    if let Some(v) = t.args[0].terms.first().and_then(|(c, a)| {
                        if *c == 1 && t.args[0].terms.len() == 1 && t.args[0].constant == 0 {
                            a.as_var()
                        } else {
                            None
                        }
                    }) {
                        if *k == -1 && v == lo_arg {
                            f_lo = Some(t.symbol.clone());
                        }
                        if *k == 1 && v == hi_arg {
                            f_hi = Some(t.symbol.clone());
                        }
                    }
                }
            }
        }
        Some((f_lo?, f_hi?, -e.constant))
    };
    let (x1, x2) = (&vars[0], &vars[1]);
    if simple_gap(&a.expr, x1, x2).is_some() {
        if let Some((flo, fhi, _)) = uf_gap(&c.expr, x1, x2) {
            return if flo == fhi { AssertionForm::Form1 } else { AssertionForm::Form2 };
        }
    }
    // FORM3 antecedent: f(x2) - x1 - c1 >= 0
    let ante_is_form3 = a.expr.terms.len() == 2
        && a.expr.coeff_of_var(x1) == -1
        && a.expr.terms.iter().any(|(k, at)| {
            *k == 1 && matches!(at, crate::relation::Atom::Uf(t) if t.args.len() == 1)
        });
    let cons_is_form3 = c.expr.terms.len() == 2
        && c.expr.coeff_of_var(x2) == 1
        && c.expr.terms.iter().any(|(k, at)| {
            *k == -1 && matches!(at, crate::relation::Atom::Uf(t) if t.args.len() == 1)
        });
    if ante_is_form3 && cons_is_form3 {
        return AssertionForm::Form3;
    }
    AssertionForm::General
}

fn tvar(name: &str) -> AffineExpr {
    AffineExpr::var(name)
}

fn tuf(sym: &str, arg: AffineExpr) -> AffineExpr {
    AffineExpr::atom(crate::relation::Atom::Uf(crate::relation::UfTerm {
        symbol: sym.to_string(),
        args: vec![arg],
    }))
}

fn geq(e: AffineExpr) -> Constraint {
    normalize(Constraint { kind: CmpKind::Geq, expr: e, tag: Tag::Exact })
}

fn lt(a: AffineExpr, b: AffineExpr) -> Constraint {
    geq(b.sub(&a).add_const(-1))
}

fn le(a: AffineExpr, b: AffineExpr) -> Constraint {
    geq(b.sub(&a))
}

/// Expands a builtin assertion family. Strict monotonicity registers the
/// biconditional as separate forward, non-strict and converse
/// implications, all sound consequences of the strict form.
pub fn builtin(
    which: &str,
    syms: &[String],
    name_override: Option<&str>,
    category_override: Option<PropertyCategory>,
) -> Result<Vec<Assertion>, String> {
    let want = |n: usize| -> Result<(), String> {
        if syms.len() != n {
            Err(format!("`{}` expects {} symbol(s), got {}", which, n, syms.len()))
        } else {
            Ok(())
        }
    };
    let x1 = || tvar("x1");
    let x2 = || tvar("x2");
    let vars = vec!["x1".to_string(), "x2".to_string()];
    let mk = |suffix: &str, group: &str, cat: PropertyCategory, ante: Vec<Constraint>, cons: Vec<Constraint>| {
        let base = name_override.map(str::to_string).unwrap_or_else(|| group.to_string());
        let mut a = Assertion::general(
            &format!("{}{}", base, suffix),
            category_override.unwrap_or(cat),
            vars.clone(),
            ante,
            cons,
        );
        a.group = base;
        a
    };
    match which {
        "strict_monotone" => {
            want(1)?;
            let f = &syms[0];
            let group = format!("strict_monotone({})", f);
            Ok(vec![
                mk("_lt", &group, PropertyCategory::Monotonicity,
                    vec![lt(x1(), x2())], vec![lt(tuf(f, x1()), tuf(f, x2()))]),
                mk("_le", &group, PropertyCategory::Monotonicity,
                    vec![le(x1(), x2())], vec![le(tuf(f, x1()), tuf(f, x2()))]),
                mk("_conv_lt", &group, PropertyCategory::Monotonicity,
                    vec![lt(tuf(f, x1()), tuf(f, x2()))], vec![lt(x1(), x2())]),
                mk("_conv_le", &group, PropertyCategory::Monotonicity,
                    vec![le(tuf(f, x1()), tuf(f, x2()))], vec![le(x1(), x2())]),
            ])
        }
        "monotone" => {
            want(1)?;
            let f = &syms[0];
            let group = format!("monotone({})", f);
            Ok(vec![mk("", &group, PropertyCategory::Monotonicity,
                vec![le(x1(), x2())], vec![le(tuf(f, x1()), tuf(f, x2()))])])
        }
        "strict_antitone_pair" => {
            want(2)?;
            let (f, g) = (&syms[0], &syms[1]);
            let group = format!("strict_antitone_pair({},{})", f, g);
            Ok(vec![mk("", &group, PropertyCategory::Triangular,
                vec![lt(x1(), x2())], vec![lt(tuf(g, x2()), tuf(f, x1()))])])
        }
        "correlated_bound" => {
            want(2)?;
            let (f, g) = (&syms[0], &syms[1]);
            let group = format!("correlated_bound({},{})", f, g);
            Ok(vec![
                mk("_eq", &group, PropertyCategory::CorrelatedMonotonicity,
                    vec![Constraint::eq(x1().sub(&x2()))],
                    vec![le(tuf(f, x1()), tuf(g, x2()))]),
                mk("_lt", &group, PropertyCategory::CorrelatedMonotonicity,
                    vec![lt(x1(), x2())], vec![lt(tuf(g, x1()), tuf(f, x2()))]),
            ])
        }
        "triangular" => {
            want(2)?;
            let (f, g) = (&syms[0], &syms[1]);
            let group = format!("triangular({},{})", f, g);
            Ok(vec![mk("", &group, PropertyCategory::Triangular,
                vec![lt(tuf(f, x1()), x2())], vec![lt(x1(), tuf(g, x2()))])])
        }
        other => Err(format!("unknown builtin assertion `{}`", other)),
    }
}

/// Instantiation budget. Phase-2 additions never exceed
/// `max_disjunctive` case splits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceBudget {
    pub max_instances: usize,
    pub max_disjunctive: usize,
    pub phase1_sweeps: usize,
}

impl Default for InstanceBudget {
    fn default() -> Self {
        InstanceBudget { max_instances: 1000, max_disjunctive: 100, phase1_sweeps: 4 }
    }
}

/// One ground instance of an assertion.
#[derive(Debug, Clone)]
pub struct Instance {
    pub assertion: String,
    pub group: String,
    pub category: PropertyCategory,
    pub antecedent: Vec<Constraint>,
    pub consequent: Vec<Constraint>,
    pub binding: Vec<AffineExpr>,
}

impl Instance {
    pub fn describe(&self) -> String {
        format!(
            "{}[{}]",
            self.assertion,
            self.binding.iter().map(|b| b.to_string()).collect::<Vec<_>>().join(", ")
        )
    }
}

/// Substitutes a ground vector from E^n into an assertion's templates.
/// Enumeration order is lexicographic over the normalized E ordering;
/// the boolean is the truncation flag.
pub fn instantiate(
    a: &Assertion,
    e_set: &[AffineExpr],
    budget: &InstanceBudget,
) -> (Vec<Instance>, bool) {
    let n = a.vars.len();
    if e_set.is_empty() || n == 0 {
        return (Vec::new(), false);
    }
    let mut out = Vec::new();
    let mut idx = vec![0usize; n];
    let mut truncated = false;
    loop {
        if out.len() >= budget.max_instances {
            truncated = true;
            break;
        }
        let map: BTreeMap<&str, &AffineExpr> = a
            .vars
            .iter()
            .zip(idx.iter())
            .map(|(v, &i)| (v.as_str(), &e_set[i]))
            .collect();
        let subst = |v: &str| map.get(v).map(|e| (*e).clone());
        let inst_cons = |cs: &[Constraint]| -> Vec<Constraint> {
            cs.iter()
                .map(|c| normalize(Constraint { kind: c.kind, expr: c.expr.subst(&subst), tag: c.tag }))
                .collect()
        };
        out.push(Instance {
            assertion: a.name.clone(),
            group: a.group.clone(),
            category: a.category,
            antecedent: inst_cons(&a.antecedent),
            consequent: inst_cons(&a.consequent),
            binding: idx.iter().map(|&i| e_set[i].clone()).collect(),
        });
        // lexicographic increment
        let mut k = n;
        loop {
            if k == 0 {
                return (out, truncated);
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < e_set.len() {
                break;
            }
            idx[k] = 0;
        }
    }
    (out, truncated)
}

/// Per-instance outcome recorded in the trace.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum InstanceAction {
    /// antecedent entailed; consequent added
    Fired,
    /// negated consequent entailed; negated antecedent added
    Contrapositive,
    /// explored as a phase-2 case split
    Split,
    /// dropped by the disjunction budget
    Dropped,
    /// not applicable in phase 1 (kept for phase 2)
    Pending,
    /// mentions index-array terms absent from the clause; adding it
    /// could never refute, so it is skipped exactly
    Inapplicable,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceEntry {
    pub instance: String,
    pub action: InstanceAction,
}

/// Result of applying instances to one encoded clause.
#[derive(Debug, Clone)]
pub struct TwoPhaseResult {
    pub status: SatStatus,
    pub trace: Vec<TraceEntry>,
    /// instance descriptions that fired during phase 1 (the certificate)
    pub fired: Vec<String>,
    pub capped: bool,
    pub phase1_status: SatStatus,
}

/// Runs phase-1 saturation then phase-2 case analysis on `enc`.
pub fn apply_two_phase(
    enc: &mut Encoding,
    instances: &[Instance],
    budget: &InstanceBudget,
) -> TwoPhaseResult {
    let mut trace = Vec::new();
    let mut fired_desc = Vec::new();
    let mut fired = vec![false; instances.len()];
    enc.consistency_pass();
    for _ in 0..budget.phase1_sweeps {
        let mut progressed = false;
        for (k, inst) in instances.iter().enumerate() {
            if fired[k] {
                continue;
            }
            // Phase 1a: antecedent already part of the constraints.
            let ante_holds = !inst.antecedent.is_empty()
                && inst
                    .antecedent
                    .iter()
                    .all(|c| enc.entails(c).unwrap_or(false));
            let ante_trivial = inst.antecedent.is_empty();
            if ante_holds || ante_trivial {
                for c in &inst.consequent {
                    enc.add_constraint(c);
                }
                fired[k] = true;
                progressed = true;
                trace.push(TraceEntry { instance: inst.describe(), action: InstanceAction::Fired });
                fired_desc.push(inst.describe());
                continue;
            }
            // Phase 1b: contrapositive — negated consequent entailed.
            if inst.consequent.len() == 1 && inst.antecedent.len() == 1 {
                let q = &inst.consequent[0];
                if let Some(nq) = negate(q) {
                    if enc.entails(&nq).unwrap_or(false) {
                        if let Some(np) = negate(&inst.antecedent[0]) {
                            enc.add_constraint(&np);
                            fired[k] = true;
                            progressed = true;
                            trace.push(TraceEntry {
                                instance: inst.describe(),
                                action: InstanceAction::Contrapositive,
                            });
                            fired_desc.push(inst.describe());
                            continue;
                        }
                    }
                }
            }
        }
        if enc.consistency_pass() {
            progressed = true;
        }
        if !progressed {
            break;
        }
        if enc.system.check().is_unsat() {
            break;
        }
    }
    let phase1_status = enc.system.check();
    if phase1_status.is_unsat() {
        let mut t2 = trace.clone();
        for (k, inst) in instances.iter().enumerate() {
            if !fired[k] {
                t2.push(TraceEntry { instance: inst.describe(), action: InstanceAction::Pending });
            }
        }
        return TwoPhaseResult {
            status: phase1_status.clone(),
            trace: t2,
            fired: fired_desc,
            capped: false,
            phase1_status,
        };
    }
    // Phase 2: remaining instances become case splits, smallest
    // antecedent first so cheap conflicts surface early. Instances
    // whose terms never got bound cannot contribute a conflict on
    // their own and are skipped.
    let testable = |i: &Instance| {
        i.antecedent
            .iter()
            .chain(i.consequent.iter())
            .all(|c| enc.try_flatten(&c.expr).is_some())
    };
    let mut rest: Vec<&Instance> = Vec::new();
    for (k, inst) in instances.iter().enumerate() {
        if fired[k] {
            continue;
        }
        if !testable(inst) {
            trace.push(TraceEntry { instance: inst.describe(), action: InstanceAction::Inapplicable });
            continue;
        }
        // only single-inequality antecedents split into two convex cases
        if inst.antecedent.len() != 1 || negate(&inst.antecedent[0]).is_none() {
            trace.push(TraceEntry { instance: inst.describe(), action: InstanceAction::Dropped });
            continue;
        }
        // exact vacuity filters: an instance whose consequent already
        // holds, or whose antecedent is already refuted, adds nothing
        if inst.consequent.iter().all(|c| enc.entails(c).unwrap_or(false)) {
            trace.push(TraceEntry { instance: inst.describe(), action: InstanceAction::Inapplicable });
            continue;
        }
        if let Some(np) = negate(&inst.antecedent[0]) {
            if enc.entails(&np).unwrap_or(false) {
                trace.push(TraceEntry { instance: inst.describe(), action: InstanceAction::Inapplicable });
                continue;
            }
        }
        rest.push(inst);
    }
    rest.sort_by_key(|i| {
        (
            i.antecedent.iter().map(|c| c.expr.terms.len() + 1).sum::<usize>(),
            i.describe(),
        )
    });
    // dropping beyond the budget weakens only toward maybe-satisfiable;
    // it is recorded in the trace, not as a solver resource cap
    if rest.len() > budget.max_disjunctive {
        for inst in &rest[budget.max_disjunctive..] {
            trace.push(TraceEntry { instance: inst.describe(), action: InstanceAction::Dropped });
        }
        rest.truncate(budget.max_disjunctive);
    }
    let capped = matches!(phase1_status, SatStatus::UnknownCapped(_));
    let splittable: Vec<&Instance> = rest.clone();
    for inst in &splittable {
        trace.push(TraceEntry { instance: inst.describe(), action: InstanceAction::Split });
    }
    let status = if splittable.is_empty() {
        phase1_status.clone()
    } else {
        let mut nodes = 0usize;
        if split_all_unsat(enc, &splittable, 0, &mut nodes) {
            SatStatus::IntegerUnsat(crate::presburger::Certificate {
                steps: splittable.iter().map(|i| format!("split {}", i.describe())).collect(),
                conflict: "every phase-2 case is unsatisfiable".into(),
            })
        } else {
            phase1_status.clone()
        }
    };
    TwoPhaseResult { status, trace, fired: fired_desc, capped, phase1_status }
}

const SPLIT_NODE_CAP: usize = 20_000;

/// Depth-first case analysis: a clause is UNSAT only if all cases are.
fn split_all_unsat(enc: &Encoding, insts: &[&Instance], depth: usize, nodes: &mut usize) -> bool {
    *nodes += 1;
    if *nodes > SPLIT_NODE_CAP {
        return false;
    }
    let st = enc.system.check();
    if st.is_unsat() {
        return true;
    }
    if depth == insts.len() {
        return false;
    }
    let inst = insts[depth];
    // case A: antecedent false
    let mut case_a = enc.clone();
    if let Some(np) = negate(&inst.antecedent[0]) {
        case_a.add_constraint(&np);
    }
    if !split_all_unsat(&case_a, insts, depth + 1, nodes) {
        return false;
    }
    // case B: antecedent and consequent both hold
    let mut case_b = enc.clone();
    for c in inst.antecedent.iter().chain(inst.consequent.iter()) {
        case_b.add_constraint(c);
    }
    split_all_unsat(&case_b, insts, depth + 1, nodes)
}

/// Negation within the conjunctive fragment: only inequalities negate
/// without introducing a disjunction.
fn negate(c: &Constraint) -> Option<Constraint> {
    match c.kind {
        CmpKind::Geq => Some(normalize(Constraint {
            kind: CmpKind::Geq,
            expr: c.expr.scale(-1).add_const(-1),
            tag: c.tag,
        })),
        CmpKind::Eq => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_problem;
    use crate::ufenc::ground_terms;

    #[test]
    fn builtin_strict_monotone_registers_biconditional_directions() {
        let asrts = builtin("strict_monotone", &["rowptr".to_string()], None, None).unwrap();
        assert_eq!(asrts.len(), 4);
        assert!(asrts.iter().all(|a| a.category == PropertyCategory::Monotonicity));
        assert_eq!(asrts[0].form, AssertionForm::Form1);
    }

    #[test]
    fn builtin_triangular_is_table_direction() {
        let asrts = builtin("triangular", &["lcolptr".to_string(), "lrow".to_string()], None, None).unwrap();
        assert_eq!(asrts.len(), 1);
        // lcolptr(x1) < x2 -> x1 < lrow(x2)
        let a = &asrts[0];
        assert_eq!(a.antecedent.len(), 1);
        assert_eq!(a.consequent.len(), 1);
    }

    #[test]
    fn unknown_builtin_is_an_error() {
        assert!(builtin("bogus", &["f".to_string()], None, None).is_err());
    }

    #[test]
    fn instantiation_enumerates_cartesian_power() {
        let asrts = builtin("strict_monotone", &["rowptr".to_string()], None, None).unwrap();
        let e = vec![AffineExpr::var("ip"), AffineExpr::var("ip").add_const(1)];
        let (insts, trunc) = instantiate(&asrts[0], &e, &InstanceBudget::default());
        assert_eq!(insts.len(), 4);
        assert!(!trunc);
        // truncation flag at small budget
        let tight = InstanceBudget { max_instances: 3, ..Default::default() };
        let (insts2, trunc2) = instantiate(&asrts[0], &e, &tight);
        assert_eq!(insts2.len(), 3);
        assert!(trunc2);
    }

    #[test]
    fn empty_ground_set_yields_no_instances() {
        let asrts = builtin("monotone", &["f".to_string()], None, None).unwrap();
        let (insts, trunc) = instantiate(&asrts[0], &[], &InstanceBudget::default());
        assert!(insts.is_empty());
        assert!(!trunc);
    }

    /// The worked conflict of the paper's running example: a strictly
    /// monotone row pointer makes crossing position windows empty.
    #[test]
    fn monotonicity_chain_detects_conflict() {
        let src = "symbolic n;\nuf rowptr : 1;\nassert strict_monotone(rowptr);\nrelation \"sec31\" { [i,k] -> [ipr,mp] : ipr < i && k = mp && 0 <= i < n && 0 <= ipr < n && rowptr(i) <= k < rowptr(i+1) && rowptr(ipr-1) <= mp < rowptr(ipr) }";
        let p = parse_problem(src).unwrap();
        let r = &p.relations[0];
        let clause = &r.clauses[0];
        let mut enc = crate::ufenc::Encoding::new(clause, &p.symconsts);
        assert!(enc.system.check().is_satish(), "affine part alone is satisfiable");
        let e = ground_terms(&clause.collect_uf_terms());
        let budget = InstanceBudget::default();
        let mut insts = Vec::new();
        for a in &p.assertions {
            insts.extend(instantiate(a, &e, &budget).0);
        }
        let res = apply_two_phase(&mut enc, &insts, &budget);
        assert!(res.status.is_unsat());
        assert!(!res.fired.is_empty());
    }

    /// Contrapositive example: from f(ip) <= f(i) and strict
    /// monotonicity, ip <= i is added; with i <= ip an equality follows.
    #[test]
    fn contrapositive_discovers_equality() {
        let src = "symbolic n;\nuf f : 1;\nassert strict_monotone(f);\nrelation \"toy\" { [i] -> [ip] : i <= ip && f(ip) <= f(i) && 0 <= i < n && 0 <= ip < n }";
        let p = parse_problem(src).unwrap();
        let clause = &p.relations[0].clauses[0];
        let mut enc = crate::ufenc::Encoding::new(clause, &p.symconsts);
        let e = ground_terms(&clause.collect_uf_terms());
        let budget = InstanceBudget::default();
        let mut insts = Vec::new();
        for a in &p.assertions {
            insts.extend(instantiate(a, &e, &budget).0);
        }
        let res = apply_two_phase(&mut enc, &insts, &budget);
        assert!(res.status.is_satish());
        let eqs = enc.system.implied_equalities(false);
        let found = eqs.iter().any(|row| {
            enc.solve_equality(row)
                .map(|(v, rhs)| {
                    (v == "i" && rhs == AffineExpr::var("ip"))
                        || (v == "ip" && rhs == AffineExpr::var("i"))
                })
                .unwrap_or(false)
        });
        assert!(found, "expected i = ip among implied equalities");
    }

    #[test]
    fn phase2_splits_prove_unsat_when_all_cases_conflict() {
        // x in [0,1]; f(0) = 5; f(1) = 5; f(x) <= 4 contradicts both cases
        // via the instance (0 <= x -> ...) style splits. Construct directly:
        let src = "symbolic n;\nuf f : 1;\nrelation \"r\" { [x] -> [y] : 0 <= x <= 1 && f(x) <= 4 && f(0) = 5 && f(1) = 5 && y = 0 }";
        let p = parse_problem(src).unwrap();
        let clause = &p.relations[0].clauses[0];
        let mut enc = crate::ufenc::Encoding::new(clause, &p.symconsts);
        // one synthetic instance: x <= 0 -> f(x) = f(0)
        let mk = |k| {
            normalize(Constraint { kind: CmpKind::Geq, expr: k, tag: Tag::Exact })
        };
        let fx = AffineExpr::atom(crate::relation::Atom::Uf(crate::relation::UfTerm {
            symbol: "f".into(),
            args: vec![AffineExpr::var("x")],
        }));
        let f0 = AffineExpr::atom(crate::relation::Atom::Uf(crate::relation::UfTerm {
            symbol: "f".into(),
            args: vec![AffineExpr::constant(0)],
        }));
        let f1 = AffineExpr::atom(crate::relation::Atom::Uf(crate::relation::UfTerm {
            symbol: "f".into(),
            args: vec![AffineExpr::constant(1)],
        }));
        let insts = vec![
            Instance {
                assertion: "le0".into(),
                group: "le0".into(),
                category: PropertyCategory::General,
                antecedent: vec![mk(AffineExpr::var("x").scale(-1))], // -x >= 0, i.e. x <= 0
                consequent: vec![Constraint::eq(fx.sub(&f0))],
                binding: vec![],
            },
            Instance {
                assertion: "ge1".into(),
                group: "ge1".into(),
                category: PropertyCategory::General,
                antecedent: vec![mk(AffineExpr::var("x").add_const(-1))], // x >= 1
                consequent: vec![Constraint::eq(fx.sub(&f1))],
                binding: vec![],
            },
        ];
        let budget = InstanceBudget::default();
        let res = apply_two_phase(&mut enc, &insts, &budget);
        assert!(res.status.is_unsat(), "all cases conflict: {:?}", res.status);
        // phase-1 alone cannot decide it
        assert!(res.phase1_status.is_satish());
    }
}
