//! End-to-end analysis: per-clause encoding, affine/functional
//! consistency check, assertion instantiation, equality discovery, and
//! corpus-level aggregation with deduplication.

use crate::assertions::{apply_two_phase, instantiate, Instance, InstanceBudget, PropertyCategory, TraceEntry};
use crate::complexity::{model_loops, ComplexityExpr, DerivedEquality, LoopNestModel};
use crate::parse::Problem;
use crate::presburger::SatStatus;
use crate::relation::Relation;
use crate::ufenc::{ground_terms, Encoding};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

/// Analysis outcome for one relation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VerdictStatus {
    UnsatAffine,
    UnsatWithProperties,
    MaybeSat,
    /// a budget cap limited the search; treated as maybe-satisfiable
    UnknownCapped,
}

impl VerdictStatus {
    pub fn is_unsat(&self) -> bool {
        matches!(self, VerdictStatus::UnsatAffine | VerdictStatus::UnsatWithProperties)
    }

    pub fn name(&self) -> &'static str {
        match self {
            VerdictStatus::UnsatAffine => "UNSAT_AFFINE",
            VerdictStatus::UnsatWithProperties => "UNSAT_WITH_PROPERTIES",
            VerdictStatus::MaybeSat => "MAYBE_SAT",
            VerdictStatus::UnknownCapped => "UNKNOWN_CAPPED",
        }
    }
}

/// Which assertion categories participate in the analysis.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PropertyConfig {
    pub enabled: BTreeSet<PropertyCategory>,
}

impl PropertyConfig {
    pub fn none() -> Self {
        PropertyConfig::default()
    }

    pub fn all() -> Self {
        PropertyConfig {
            enabled: [
                PropertyCategory::Monotonicity,
                PropertyCategory::CorrelatedMonotonicity,
                PropertyCategory::Triangular,
                PropertyCategory::General,
            ]
            .into_iter()
            .collect(),
        }
    }

    pub fn single(c: PropertyCategory) -> Self {
        PropertyConfig { enabled: [c].into_iter().collect() }
    }

    pub fn is_none(&self) -> bool {
        self.enabled.is_empty()
    }
}

/// Per-clause proof record.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClauseReport {
    pub clause: usize,
    pub affine_unsat: bool,
    pub property_unsat: bool,
    pub fired_instances: Vec<String>,
    pub refutation: Vec<String>,
    pub trace: Vec<TraceEntry>,
    pub equalities: Vec<String>,
    pub capped: bool,
}

/// The analysis outcome for a relation, with a replayable certificate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Verdict {
    pub relation: String,
    pub kernel: String,
    pub status: VerdictStatus,
    pub clauses: Vec<ClauseReport>,
    pub properties_used: BTreeSet<String>,
    pub millis: u128,
}

/// Full record including loop models and complexities.
#[derive(Debug, Clone)]
pub struct RelationAnalysis {
    pub relation: Relation,
    pub verdict: Verdict,
    /// authored duplicates folded into this unique relation
    pub duplicates: Vec<String>,
    /// model over all clauses, explicit equalities only
    pub baseline: Option<LoopNestModel>,
    /// model over surviving clauses with discovered equalities
    pub simplified: Option<LoopNestModel>,
    pub retained_clauses: Vec<usize>,
    pub clause_equalities: Vec<Vec<DerivedEquality>>,
}

impl RelationAnalysis {
    pub fn baseline_cx(&self) -> ComplexityExpr {
        self.baseline.as_ref().map(|m| m.complexity.clone()).unwrap_or_default()
    }

    pub fn simplified_cx(&self) -> ComplexityExpr {
        self.simplified.as_ref().map(|m| m.complexity.clone()).unwrap_or_default()
    }

    pub fn equalities(&self) -> Vec<DerivedEquality> {
        let mut v: Vec<DerivedEquality> = self.clause_equalities.iter().flatten().cloned().collect();
        v.sort();
        v.dedup();
        v
    }
}

/// Instances for the enabled assertions over the relation's ground terms.
fn build_instances(
    problem: &Problem,
    r: &Relation,
    cfg: &PropertyConfig,
    budget: &InstanceBudget,
    only: Option<&BTreeSet<String>>,
) -> (Vec<Instance>, bool) {
    let e = ground_terms(&r.free_uf_terms());
    let mut out = Vec::new();
    let mut truncated = false;
    for a in &problem.assertions {
        if !cfg.enabled.contains(&a.category) {
            continue;
        }
        if !a.scope.is_empty() && !a.scope.contains(&r.source.kernel) {
            continue;
        }
        let (insts, trunc) = instantiate(a, &e, budget);
        truncated |= trunc;
        for i in insts {
            if let Some(filter) = only {
                if !filter.contains(&i.describe()) {
                    continue;
                }
            }
            out.push(i);
        }
    }
    (out, truncated)
}

/// Runs the unsatisfiability pipeline on one relation.
pub fn analyze(problem: &Problem, r: &Relation, cfg: &PropertyConfig, budget: &InstanceBudget) -> Verdict {
    analyze_with_filter(problem, r, cfg, budget, None).0
}

/// Certificate replay: re-runs the analysis restricted to the named
/// instances; a faithful certificate reproduces the unsat verdict.
pub fn replay(
    problem: &Problem,
    r: &Relation,
    cfg: &PropertyConfig,
    budget: &InstanceBudget,
    fired: &BTreeSet<String>,
) -> Verdict {
    analyze_with_filter(problem, r, cfg, budget, Some(fired)).0
}

fn analyze_with_filter(
    problem: &Problem,
    r: &Relation,
    cfg: &PropertyConfig,
    budget: &InstanceBudget,
    only: Option<&BTreeSet<String>>,
) -> (Verdict, Vec<(usize, Vec<DerivedEquality>)>) {
    let start = std::time::Instant::now();
    let (instances, _truncated) = if cfg.is_none() {
        (Vec::new(), false)
    } else {
        build_instances(problem, r, cfg, budget, only)
    };
    let mut clause_reports = Vec::new();
    let mut properties_used = BTreeSet::new();
    let mut structured_eqs: Vec<(usize, Vec<DerivedEquality>)> = Vec::new();
    for (ci, clause) in r.clauses.iter().enumerate() {
        let mut enc = Encoding::new(clause, &problem.symconsts);
        while enc.consistency_pass() {}
        let affine_status = enc.system.check();
        if affine_status.is_unsat() {
            let refutation = match &affine_status {
                SatStatus::IntegerUnsat(c) => {
                    let mut v = c.steps.clone();
                    v.push(c.conflict.clone());
                    v
                }
                _ => vec![],
            };
            clause_reports.push(ClauseReport {
                clause: ci,
                affine_unsat: true,
                property_unsat: false,
                fired_instances: vec![],
                refutation,
                trace: vec![],
                equalities: vec![],
                capped: false,
            });
            continue;
        }
        if cfg.is_none() {
            clause_reports.push(ClauseReport {
                clause: ci,
                affine_unsat: false,
                property_unsat: false,
                fired_instances: vec![],
                refutation: vec![],
                trace: vec![],
                equalities: vec![],
                capped: false,
            });
            continue;
        }
        let res = apply_two_phase(&mut enc, &instances, budget);
        let unsat = res.status.is_unsat();
        if unsat {
            for desc in &res.fired {
                if let Some(group) = instances.iter().find(|i| i.describe() == *desc) {
                    properties_used.insert(group.group.clone());
                }
            }
        }
        let refutation = match &res.status {
            SatStatus::IntegerUnsat(c) => {
                let mut v = c.steps.clone();
                v.push(c.conflict.clone());
                v
            }
            _ => vec![],
        };
        let mut equalities = Vec::new();
        let mut structured = Vec::new();
        if !unsat {
            for row in enc.system.implied_equalities(false) {
                if let Some((var, rhs)) = enc.solve_equality(&row) {
                    if r.iterators().contains(&var) {
                        equalities.push(format!("{} = {}", var, rhs));
                        structured.push(DerivedEquality { var, rhs });
                    }
                }
            }
            structured.sort();
            structured.dedup();
        }
        structured_eqs.push((ci, structured));
        clause_reports.push(ClauseReport {
            clause: ci,
            affine_unsat: false,
            property_unsat: unsat,
            fired_instances: res.fired,
            refutation,
            trace: res.trace,
            equalities,
            capped: res.capped,
        });
    }
    let all_unsat = clause_reports.iter().all(|c| c.affine_unsat || c.property_unsat);
    let any_props = clause_reports.iter().any(|c| c.property_unsat);
    let any_capped = clause_reports
        .iter()
        .any(|c| c.capped && !(c.affine_unsat || c.property_unsat));
    let status = if all_unsat && !any_props {
        VerdictStatus::UnsatAffine
    } else if all_unsat {
        VerdictStatus::UnsatWithProperties
    } else if any_capped {
        VerdictStatus::UnknownCapped
    } else {
        VerdictStatus::MaybeSat
    };
    (
        Verdict {
            relation: r.name.clone(),
            kernel: r.source.kernel.clone(),
            status,
            clauses: clause_reports,
            properties_used,
            millis: start.elapsed().as_millis(),
        },
        structured_eqs,
    )
}

/// Full analysis of one relation including loop models; used by the
/// corpus driver so equalities feed the complexity estimate.
pub fn analyze_full(
    problem: &Problem,
    r: &Relation,
    cfg: &PropertyConfig,
    budget: &InstanceBudget,
) -> RelationAnalysis {
    let (verdict, structured) = analyze_with_filter(problem, r, cfg, budget, None);
    let sizes = |s: &str| s == "n";
    let all_clauses: Vec<usize> = (0..r.clauses.len()).collect();
    let no_eqs: Vec<Vec<DerivedEquality>> = vec![Vec::new(); r.clauses.len()];
    let baseline = if verdict.status == VerdictStatus::UnsatAffine {
        None
    } else {
        model_loops(r, &all_clauses, &no_eqs, &sizes).ok()
    };
    let mut retained = Vec::new();
    let mut clause_equalities: Vec<Vec<DerivedEquality>> = Vec::new();
    if !verdict.status.is_unsat() {
        for report in &verdict.clauses {
            if report.affine_unsat || report.property_unsat {
                continue;
            }
            retained.push(report.clause);
            clause_equalities.push(
                structured
                    .iter()
                    .find(|(ci, _)| *ci == report.clause)
                    .map(|(_, eqs)| eqs.clone())
                    .unwrap_or_default(),
            );
        }
    }
    let simplified = if verdict.status.is_unsat() {
        None
    } else {
        model_loops(r, &retained, &clause_equalities, &sizes).ok()
    };
    RelationAnalysis {
        relation: r.clone(),
        verdict,
        duplicates: Vec::new(),
        baseline,
        simplified,
        retained_clauses: retained,
        clause_equalities,
    }
}

/// Deduplicated corpus with per-kernel grouping.
#[derive(Debug, Clone)]
pub struct CorpusAnalysis {
    pub analyses: Vec<RelationAnalysis>,
    pub total_authored: usize,
    pub summary: Summary,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Summary {
    pub total: usize,
    pub unique: usize,
    pub unsat_affine: usize,
    pub unsat_properties: usize,
    pub maybe: usize,
    pub capped: usize,
    pub per_kernel: BTreeMap<String, KernelSummary>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct KernelSummary {
    pub total: usize,
    pub unique: usize,
    pub unsat_affine: usize,
    pub unsat_properties: usize,
    pub maybe: usize,
}

/// Deduplicates relations (per kernel, canonical direction-folded key)
/// and analyzes each unique relation.
pub fn analyze_corpus(problem: &Problem, cfg: &PropertyConfig, budget: &InstanceBudget) -> CorpusAnalysis {
    let mut groups: BTreeMap<(String, String), (Relation, Vec<String>)> = BTreeMap::new();
    let mut order: Vec<(String, String)> = Vec::new();
    for r in &problem.relations {
        let key = (r.source.kernel.clone(), r.dedup_key());
        match groups.get_mut(&key) {
            Some((_, dups)) => dups.push(r.name.clone()),
            None => {
                groups.insert(key.clone(), (r.clone(), Vec::new()));
                order.push(key);
            }
        }
    }
    let uniques: Vec<(Relation, Vec<String>)> =
        order.iter().map(|k| groups.get(k).unwrap().clone()).collect();
    let analyses: Vec<RelationAnalysis> = par_map(&uniques, |(r, dups)| {
        let mut a = analyze_full(problem, r, cfg, budget);
        a.duplicates = dups.clone();
        a
    });
    let mut summary = Summary {
        total: problem.relations.len(),
        unique: analyses.len(),
        ..Default::default()
    };
    for a in &analyses {
        let k = summary.per_kernel.entry(a.verdict.kernel.clone()).or_default();
        k.unique += 1;
        k.total += 1 + a.duplicates.len();
        match a.verdict.status {
            VerdictStatus::UnsatAffine => {
                summary.unsat_affine += 1;
                k.unsat_affine += 1;
            }
            VerdictStatus::UnsatWithProperties => {
                summary.unsat_properties += 1;
                k.unsat_properties += 1;
            }
            VerdictStatus::MaybeSat => {
                summary.maybe += 1;
                k.maybe += 1;
            }
            VerdictStatus::UnknownCapped => {
                summary.maybe += 1;
                summary.capped += 1;
                k.maybe += 1;
            }
        }
    }
    CorpusAnalysis { analyses, total_authored: problem.relations.len(), summary }
}

/// Deterministic parallel map: results land by index regardless of
/// completion order. Worker count respects `SPARSEDEP_THREADS`.
pub fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let threads = std::env::var("SPARSEDEP_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|&t| t >= 1)
        .unwrap_or_else(|| {
            std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
        })
        .min(items.len().max(1));
    if threads <= 1 || items.len() <= 1 {
        return items.iter().map(&f).collect();
    }
    let mut out: Vec<Option<R>> = (0..items.len()).map(|_| None).collect();
    let next = std::sync::atomic::AtomicUsize::new(0);
    let slots: Vec<std::sync::Mutex<&mut Option<R>>> =
        out.iter_mut().map(std::sync::Mutex::new).collect();
    std::thread::scope(|scope| {
        for _ in 0..threads {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                **slots[i].lock().unwrap() = Some(r);
            });
        }
    });
    out.into_iter().map(|o| o.unwrap()).collect()
}

/// The seven inspector complexity classes used for reporting.
pub fn complexity_class(cx: &ComplexityExpr) -> &'static str {
    let Some((_, powers)) = cx.terms.last() else { return "0" };
    let get = |f| powers.get(&f).copied().unwrap_or(0);
    match (get(crate::complexity::Factor::N), get(crate::complexity::Factor::Nnz), get(crate::complexity::Factor::Avg)) {
        (1, 0, 0) => "n",
        (0, 1, 0) => "nnz",
        (0, 1, 1) => "nnz*(nnz/n)",
        (2, 0, 0) => "n^2",
        (1, 1, 0) => "n*nnz",
        (0, 2, 0) => "nnz^2",
        _ => ">nnz^2",
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_problem;

    const FS: &str = r#"
symbolic n, nnz;
uf rowptr : 1;
uf col : 1;
assert strict_monotone(rowptr);
assert forall x1, x2 : x1 < rowptr(x2) -> col(x1) < x2 category triangular;
relation "d1" kernel="fs_csr" { [i,k] -> [ip,kp] : i = ip && i < ip && 0 <= i < n && 0 <= ip < n && rowptr(i) <= k < rowptr(i+1) && rowptr(ip) <= kp < rowptr(ip+1) }
relation "d2" kernel="fs_csr" { [i,k] -> [ip,kp] : i = ip && ip < i && 0 <= i < n && 0 <= ip < n && rowptr(i) <= k < rowptr(i+1) && rowptr(ip) <= kp < rowptr(ip+1) }
relation "d3" kernel="fs_csr" { [i,k] -> [ip,kp] : i = col(kp) && i < ip && 0 <= i < n && 0 <= ip < n && rowptr(ip) <= kp < rowptr(ip+1) }
relation "d4" kernel="fs_csr" { [i,k] -> [ip,kp] : i = col(kp) && ip < i && 0 <= i < n && 0 <= ip < n && rowptr(ip) <= kp < rowptr(ip+1) }
"#;

    #[test]
    fn forward_solve_verdicts() {
        let p = parse_problem(FS).unwrap();
        let budget = InstanceBudget::default();
        let nocfg = PropertyConfig::none();
        let all = PropertyConfig::all();
        let status = |name: &str, cfg: &PropertyConfig| {
            let r = p.relations.iter().find(|r| r.name == name).unwrap();
            analyze(&p, r, cfg, &budget).status
        };
        assert_eq!(status("d1", &nocfg), VerdictStatus::UnsatAffine);
        assert_eq!(status("d2", &nocfg), VerdictStatus::UnsatAffine);
        assert_eq!(status("d3", &nocfg), VerdictStatus::MaybeSat);
        assert_eq!(status("d4", &nocfg), VerdictStatus::MaybeSat);
        assert_eq!(status("d3", &all), VerdictStatus::MaybeSat);
        assert_eq!(status("d4", &all), VerdictStatus::UnsatWithProperties);
    }

    #[test]
    fn corpus_dedup_folds_mirror_outputs() {
        let p = parse_problem(FS).unwrap();
        let c = analyze_corpus(&p, &PropertyConfig::all(), &InstanceBudget::default());
        assert_eq!(c.summary.total, 4);
        assert_eq!(c.summary.unique, 3); // d1 and d2 fold together
        assert_eq!(c.summary.unsat_affine, 1);
        assert_eq!(c.summary.unsat_properties, 1);
        assert_eq!(c.summary.maybe, 1);
    }

    #[test]
    fn ablation_is_monotone_for_fs() {
        let p = parse_problem(FS).unwrap();
        let budget = InstanceBudget::default();
        let count = |cfg: &PropertyConfig| {
            analyze_corpus(&p, cfg, &budget)
                .analyses
                .iter()
                .filter(|a| a.verdict.status.is_unsat())
                .count()
        };
        let none = count(&PropertyConfig::none());
        let tri = count(&PropertyConfig::single(PropertyCategory::Triangular));
        let all = count(&PropertyConfig::all());
        assert!(none <= tri && tri <= all);
        assert_eq!(all, 2);
    }

    #[test]
    fn certificate_replay_reproduces_unsat() {
        let p = parse_problem(FS).unwrap();
        let budget = InstanceBudget::default();
        let all = PropertyConfig::all();
        let r = p.relations.iter().find(|r| r.name == "d4").unwrap();
        let v = analyze(&p, r, &all, &budget);
        assert_eq!(v.status, VerdictStatus::UnsatWithProperties);
        let fired: BTreeSet<String> =
            v.clauses.iter().flat_map(|c| c.fired_instances.clone()).collect();
        assert!(!fired.is_empty());
        let v2 = replay(&p, r, &all, &budget, &fired);
        assert_eq!(v2.status, VerdictStatus::UnsatWithProperties);
    }
}
