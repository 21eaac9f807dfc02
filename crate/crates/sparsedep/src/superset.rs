//! Redundant dependence detection: the trivial constraint-subset rule
//! and the overlapped-access rule, plus greedy minimization of the
//! runtime check set.

use crate::complexity::ComplexityExpr;
use crate::pipeline::RelationAnalysis;
use crate::relation::{AffineExpr, CmpKind, Conjunction, Constraint, Relation, Tag};
use crate::ufenc::Encoding;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SupersetRule {
    Trivial,
    Overlap,
}

/// Why a claim holds; enough to replay the decision.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SupersetEvidence {
    /// variable renaming applied to the subset relation
    pub renaming: BTreeMap<String, String>,
    /// overlap rule: the superset-side equality missing from the subset
    pub missing_equality: Option<String>,
    /// overlap rule: the similar equality found in the subset relation
    pub similar_equality: Option<String>,
    /// overlap rule: compared bound sets
    pub superset_bounds: Vec<String>,
    pub subset_bounds: Vec<String>,
    pub superset_bounds_exact: bool,
    pub note: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SupersetClaim {
    pub superset: String,
    pub subset: String,
    pub rule: SupersetRule,
    pub evidence: SupersetEvidence,
}

/// Renames `sub`'s variables into `sup`'s namespace: tuple positions
/// align positionally; existentials first by name, then by a
/// backtracking signature match.
fn alignments(sup: &Relation, sub: &Relation) -> Vec<BTreeMap<String, String>> {
    let mut base: BTreeMap<String, String> = BTreeMap::new();
    for (a, b) in sub.in_tuple.iter().zip(sup.in_tuple.iter()) {
        base.insert(a.clone(), b.clone());
    }
    for (a, b) in sub.out_tuple.iter().zip(sup.out_tuple.iter()) {
        base.insert(a.clone(), b.clone());
    }
    // existentials of the superset must find images among the subset's
    // variables; try identity first, then injections
    let sup_ex: Vec<String> = sup.existentials.clone();
    let sub_candidates: Vec<String> = sub
        .existentials
        .iter()
        .cloned()
        .chain(sub.in_tuple.iter().skip(sup.in_tuple.len()).cloned())
        .chain(sub.out_tuple.iter().skip(sup.out_tuple.len()).cloned())
        .collect();
    let mut out = Vec::new();
    if sup_ex.is_empty() {
        out.push(base);
        return out;
    }
    // identity mapping when names coincide
    if sup_ex.iter().all(|e| sub_candidates.contains(e)) {
        let mut m = base.clone();
        for e in &sup_ex {
            m.insert(e.clone(), e.clone());
        }
        out.push(m);
    }
    // bounded backtracking over injective assignments
    fn rec(
        sup_ex: &[String],
        cands: &[String],
        used: &mut BTreeSet<String>,
        cur: &mut BTreeMap<String, String>,
        base: &BTreeMap<String, String>,
        out: &mut Vec<BTreeMap<String, String>>,
    ) {
        if out.len() > 64 {
            return;
        }
        match sup_ex.first() {
            None => {
                let mut m = base.clone();
                for (k, v) in cur.iter() {
                    m.insert(v.clone(), k.clone());
                }
                out.push(m);
            }
            Some(e) => {
                for c in cands {
                    if used.contains(c) {
                        continue;
                    }
                    used.insert(c.clone());
                    cur.insert(c.clone(), e.clone());
                    rec(&sup_ex[1..], cands, used, cur, base, out);
                    cur.remove(c);
                    used.remove(c);
                }
            }
        }
    }
    let mut used = BTreeSet::new();
    let mut cur = BTreeMap::new();
    rec(&sup_ex, &sub_candidates, &mut used, &mut cur, &base, &mut out);
    out
}

fn rename_clause(cl: &Conjunction, map: &BTreeMap<String, String>) -> Conjunction {
    let subst = |v: &str| map.get(v).map(|t| AffineExpr::var(t));
    Conjunction::new(
        cl.constraints
            .iter()
            .map(|c| Constraint {
                kind: c.kind,
                expr: c.expr.subst(&subst),
                tag: c.tag,
            })
            .collect(),
    )
}

/// Trivial rule: the superset relation is expressed with a subset of the
/// constraints of the other relation.
pub fn trivial_superset(sup: &Relation, sub: &Relation) -> Option<SupersetClaim> {
    if sup.in_tuple.len() > sub.in_tuple.len() || sup.out_tuple.len() > sub.out_tuple.len() {
        return None;
    }
    for map in alignments(sup, sub) {
        // rename the subset's own variables to themselves; the mapping
        // renames subset vars into superset names, so rename SUP side
        // by the inverse: instead rename both sides into the sub names.
        let inv: BTreeMap<String, String> = map.iter().map(|(a, b)| (b.clone(), a.clone())).collect();
        let ok = sub.clauses.iter().all(|c2| {
            sup.clauses.iter().any(|c1| {
                let c1r = rename_clause(c1, &inv);
                c1r.subset_of(c2)
            })
        });
        if ok {
            return Some(SupersetClaim {
                superset: sup.name.clone(),
                subset: sub.name.clone(),
                rule: SupersetRule::Trivial,
                evidence: SupersetEvidence {
                    renaming: map,
                    note: "constraint set inclusion after alignment".into(),
                    superset_bounds_exact: true,
                    ..Default::default()
                },
            });
        }
    }
    None
}

/// An equality between two plain iterators, one from each tuple side.
fn cross_tuple_equality(c: &Constraint, r: &Relation) -> Option<(String, String)> {
    if c.kind != CmpKind::Eq || c.expr.constant != 0 || c.expr.terms.len() != 2 {
        return None;
    }
    let mut vars = Vec::new();
    for (k, a) in &c.expr.terms {
        if k.abs() != 1 {
            return None;
        }
        vars.push(a.as_var()?.to_string());
    }
    let in_side = |v: &String| r.in_tuple.contains(v);
    let out_side = |v: &String| r.out_tuple.contains(v) || r.existentials.contains(v);
    if in_side(&vars[0]) && out_side(&vars[1]) {
        Some((vars[0].clone(), vars[1].clone()))
    } else if in_side(&vars[1]) && out_side(&vars[0]) {
        Some((vars[1].clone(), vars[0].clone()))
    } else {
        None
    }
}

/// Bounds on `v`: unit-coefficient linear constraints mentioning it.
fn bounds_on(cl: &Conjunction, v: &str) -> Vec<Constraint> {
    cl.constraints
        .iter()
        .filter(|c| c.expr.coeff_of_var(v) != 0 && !c.expr.var_under_uf(v))
        .cloned()
        .collect()
}

/// Overlapped-access rule, the four-step procedure: a single missing
/// equality with a similar counterpart, bound sets compared through the
/// shared side, exactness required of the superset side.
pub fn overlap_superset(sup: &Relation, sub: &Relation) -> Option<SupersetClaim> {
    if sup.clauses.len() != 1 || sub.clauses.len() != 1 {
        return None;
    }
    for map in alignments(sup, sub) {
        let inv: BTreeMap<String, String> = map.iter().map(|(a, b)| (b.clone(), a.clone())).collect();
        let sup_cl = rename_clause(&sup.clauses[0], &inv);
        let sub_cl = &sub.clauses[0];
        let sub_set: BTreeSet<&Constraint> = sub_cl.constraints.iter().collect();
        // step 1: equalities of the superset missing from the subset
        let missing: Vec<&Constraint> = sup_cl
            .constraints
            .iter()
            .filter(|c| c.kind == CmpKind::Eq && !sub_set.contains(c))
            .collect();
        if missing.len() != 1 {
            continue;
        }
        // every non-equality superset constraint must be in the subset
        if !sup_cl
            .constraints
            .iter()
            .filter(|c| *c != missing[0])
            .all(|c| sub_set.contains(c))
        {
            continue;
        }
        let Some((shared, sup_iter)) = cross_tuple_equality(missing[0], sup) else {
            continue;
        };
        // step 2: a similar equality in the subset sharing one side
        let mut similar = None;
        for c in &sub_cl.constraints {
            if c.kind != CmpKind::Eq || sup_cl.constraints.contains(c) {
                continue;
            }
            if let Some((s2, v2)) = cross_tuple_equality(c, sub) {
                if s2 == shared {
                    similar = Some((c.clone(), v2));
                    break;
                }
            }
        }
        let Some((similar_c, sub_iter)) = similar else { continue };
        // step 3: collect bounds on the two distinguished iterators
        let sup_bounds: Vec<Constraint> = bounds_on(&sup_cl, &sup_iter)
            .into_iter()
            .filter(|c| *c != *missing[0])
            .collect();
        let sub_bounds: Vec<Constraint> = bounds_on(sub_cl, &sub_iter)
            .into_iter()
            .filter(|c| *c != similar_c)
            .collect();
        if sup_bounds.is_empty() || sub_bounds.is_empty() {
            continue;
        }
        // the superset side's accesses must be exact: no bound and no
        // guard may mention its distinguished iterator conditionally
        let sup_iter_guarded = sup_cl.constraints.iter().any(|c| {
            c.tag == Tag::May && {
                let mut vs = BTreeSet::new();
                c.collect_vars(&mut vs);
                vs.contains(&sup_iter)
            }
        });
        if sup_bounds.iter().any(|c| c.tag == Tag::May) || sup_iter_guarded {
            continue;
        }
        // step 4: the superset-side bounds, substituted onto the
        // subset-side iterator, must be entailed by the subset's clause
        let enc = {
            let mut e = Encoding::new(sub_cl, &[]);
            while e.consistency_pass() {}
            e
        };
        let renamed: Vec<Constraint> = sup_bounds
            .iter()
            .map(|c| {
                let subst = |v: &str| {
                    if v == sup_iter {
                        Some(AffineExpr::var(&sub_iter))
                    } else {
                        None
                    }
                };
                crate::relation::normalize(Constraint {
                    kind: c.kind,
                    expr: c.expr.subst(&subst),
                    tag: c.tag,
                })
            })
            .collect();
        if !renamed.iter().all(|c| enc.entails(c).unwrap_or(false)) {
            continue;
        }
        // residual subset constraints must be bounds on subset-only
        // iterators or may-tagged guards
        let sup_all: BTreeSet<&Constraint> = sup_cl.constraints.iter().collect();
        let sup_vars: BTreeSet<String> = {
            let mut s = BTreeSet::new();
            for c in &sup_cl.constraints {
                c.collect_vars(&mut s);
            }
            s
        };
        let extras_ok = sub_cl
            .constraints
            .iter()
            .filter(|c| !sup_all.contains(c) && **c != similar_c)
            .all(|c| {
                if c.tag == Tag::May {
                    return true;
                }
                let mut vs = BTreeSet::new();
                c.collect_vars(&mut vs);
                vs.iter().any(|v| !sup_vars.contains(v))
            });
        if !extras_ok {
            continue;
        }
        return Some(SupersetClaim {
            superset: sup.name.clone(),
            subset: sub.name.clone(),
            rule: SupersetRule::Overlap,
            evidence: SupersetEvidence {
                renaming: map,
                missing_equality: Some(format!("{} = {}", shared, sup_iter)),
                similar_equality: Some(format!("{} = {}", shared, sub_iter)),
                superset_bounds: sup_bounds.iter().map(|c| c.to_string()).collect(),
                subset_bounds: sub_bounds.iter().map(|c| c.to_string()).collect(),
                superset_bounds_exact: true,
                note: format!(
                    "bounds on {} subsume bounds on {} under the clause context",
                    sup_iter, sub_iter
                ),
            },
        });
    }
    None
}

/// Tries the trivial rule then the overlap rule.
pub fn claim(sup: &Relation, sub: &Relation) -> Option<SupersetClaim> {
    trivial_superset(sup, sub).or_else(|| overlap_superset(sup, sub))
}

/// Result of check-set minimization.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MinimizeOutcome {
    pub kept: Vec<String>,
    pub discarded: Vec<(String, String)>, // (discarded, kept superset)
    pub claims: Vec<SupersetClaim>,
}

/// Builds the superset digraph over all pairs and keeps, among mutually
/// covering relations, the cheapest; every discarded relation has a
/// kept (possibly transitive) superset.
pub fn minimize(maybes: &[&RelationAnalysis]) -> MinimizeOutcome {
    let n = maybes.len();
    let mut claims = Vec::new();
    let mut edge = vec![vec![false; n]; n]; // edge[a][b]: a (supset) covers b
    for a in 0..n {
        for b in 0..n {
            if a == b {
                continue;
            }
            if let Some(c) = claim(&maybes[a].relation, &maybes[b].relation) {
                edge[a][b] = true;
                claims.push(c);
            }
        }
    }
    // transitive closure for coverage reasoning
    let mut reach = edge.clone();
    for k in 0..n {
        for i in 0..n {
            if reach[i][k] {
                for j in 0..n {
                    if reach[k][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
    }
    let cx = |i: usize| -> (u128, String) {
        let c: ComplexityExpr = maybes[i].simplified_cx();
        (c.value(), maybes[i].relation.name.clone())
    };
    // a relation is kept unless some relation outside its mutual-cover
    // class covers it, or a cheaper member of its own class exists
    let mut kept_idx = Vec::new();
    let mut discarded = Vec::new();
    for i in 0..n {
        let mutual: Vec<usize> = (0..n)
            .filter(|&j| j != i && reach[i][j] && reach[j][i])
            .collect();
        let covered_from_outside = (0..n).any(|j| j != i && reach[j][i] && !reach[i][j]);
        let class_rep = mutual.iter().all(|&j| cx(i) <= cx(j));
        if !covered_from_outside && class_rep {
            kept_idx.push(i);
        }
    }
    for i in 0..n {
        if kept_idx.contains(&i) {
            continue;
        }
        let anchor = kept_idx
            .iter()
            .find(|&&k| reach[k][i])
            .map(|&k| maybes[k].relation.name.clone())
            .unwrap_or_default();
        discarded.push((maybes[i].relation.name.clone(), anchor));
    }
    MinimizeOutcome {
        kept: kept_idx.iter().map(|&i| maybes[i].relation.name.clone()).collect(),
        discarded,
        claims,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_problem;

    const IC0: &str = r#"
symbolic n, nnz;
uf colptr : 1;
uf rowidx : 1;
relation "r1" kernel="ic0" { [i,m,k,l] -> [ip,mp] : k = mp && i < ip && 0 <= i < n && 0 <= ip < n && colptr(ip) + 1 <= mp < colptr(ip+1) }
relation "r2" kernel="ic0" { [i,m,k,l] -> [ip,mp,kp,lp] : k = mp && i < ip && 0 <= i < n && 0 <= ip < n && colptr(ip) + 1 <= mp < colptr(ip+1) && colptr(rowidx(mp)) <= kp < colptr(rowidx(mp)+1) && mp <= lp < colptr(ip+1) && may(rowidx(lp) = rowidx(kp)) && may(rowidx(lp+1) <= rowidx(kp)) }
relation "r3" kernel="ic0" { [i,m,k,l] -> [ip,mp,kp,lp] : k = lp && i < ip && 0 <= i < n && 0 <= ip < n && colptr(ip) + 1 <= mp < colptr(ip+1) && colptr(rowidx(mp)) <= kp < colptr(rowidx(mp)+1) && mp <= lp < colptr(ip+1) && may(rowidx(lp) = rowidx(kp)) && may(rowidx(lp+1) <= rowidx(kp)) }
relation "r3_may" kernel="ic0" { [i,m,k,l] -> [ip,mp,kp,lp] : k = lp && i < ip && 0 <= i < n && 0 <= ip < n && may(colptr(ip) + 1 <= mp) && may(mp < colptr(ip+1)) && colptr(rowidx(mp)) <= kp < colptr(rowidx(mp)+1) && mp <= lp < colptr(ip+1) }
"#;

    #[test]
    fn trivial_rule_accepts_constraint_subset() {
        let p = parse_problem(IC0).unwrap();
        let r1 = p.relations.iter().find(|r| r.name == "r1").unwrap();
        let r2 = p.relations.iter().find(|r| r.name == "r2").unwrap();
        let c = trivial_superset(r1, r2).expect("r1 is a superset of r2");
        assert_eq!(c.rule, SupersetRule::Trivial);
        // reflexivity
        assert!(trivial_superset(r1, r1).is_some());
        // no claim in the other direction
        assert!(trivial_superset(r2, r1).is_none());
    }

    #[test]
    fn overlap_rule_matches_the_four_steps() {
        let p = parse_problem(IC0).unwrap();
        let r1 = p.relations.iter().find(|r| r.name == "r1").unwrap();
        let r3 = p.relations.iter().find(|r| r.name == "r3").unwrap();
        assert!(trivial_superset(r1, r3).is_none());
        let c = overlap_superset(r1, r3).expect("r1 covers r3 via overlapped access");
        assert_eq!(c.rule, SupersetRule::Overlap);
        assert_eq!(c.evidence.missing_equality.as_deref(), Some("k = mp"));
        assert_eq!(c.evidence.similar_equality.as_deref(), Some("k = lp"));
    }

    #[test]
    fn overlap_rule_requires_exact_superset_bounds() {
        // when the superset-side bounds are may-tagged, no claim holds
        let src = IC0.replace(
            "relation \"r1\" kernel=\"ic0\" { [i,m,k,l] -> [ip,mp] : k = mp && i < ip && 0 <= i < n && 0 <= ip < n && colptr(ip) + 1 <= mp < colptr(ip+1) }",
            "relation \"r1\" kernel=\"ic0\" { [i,m,k,l] -> [ip,mp] : k = mp && i < ip && 0 <= i < n && 0 <= ip < n && may(colptr(ip) + 1 <= mp) && may(mp < colptr(ip+1)) }",
        );
        let p = parse_problem(&src).unwrap();
        let r1 = p.relations.iter().find(|r| r.name == "r1").unwrap();
        let r3 = p.relations.iter().find(|r| r.name == "r3").unwrap();
        assert!(overlap_superset(r1, r3).is_none());
    }

    #[test]
    fn two_missing_equalities_block_the_overlap_rule() {
        let src = format!(
            "{}relation \"r1b\" kernel=\"ic0\" {{ [i,m,k,l] -> [ip,mp] : k = mp && i = mp && i < ip && 0 <= i < n && 0 <= ip < n && colptr(ip) + 1 <= mp < colptr(ip+1) }}",
            IC0
        );
        let p = parse_problem(&src).unwrap();
        let r1b = p.relations.iter().find(|r| r.name == "r1b").unwrap();
        let r3 = p.relations.iter().find(|r| r.name == "r3").unwrap();
        assert!(overlap_superset(r1b, r3).is_none());
    }
}
