//! Executable inspectors: interpreted loop nests derived from the
//! complexity model, dependence-graph construction on concrete
//! instances, and wavefront computation.

use crate::complexity::{LoopKind, LoopNestModel, ScheduledIter};
use crate::oracle::{eval_constraint, eval_expr, ConcreteInstance};
use crate::pipeline::RelationAnalysis;
use crate::relation::{Constraint, Relation};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

/// An interpreted inspector for one relation: scheduled loops plus the
/// residual checks evaluated at every candidate point.
#[derive(Debug, Clone)]
pub struct InspectorPlan {
    pub relation: String,
    pub src_var: String,
    pub dst_var: String,
    pub clauses: Vec<ClausePlan>,
}

#[derive(Debug, Clone)]
pub struct ClausePlan {
    pub schedule: Vec<ScheduledIter>,
    /// residual checks from projection plus all original constraints
    /// still mentioning enumerated iterators
    pub checks: Vec<Constraint>,
}

/// Builds the plan for a MAYBE relation from its loop model.
pub fn build_inspector(
    r: &Relation,
    model: &LoopNestModel,
    retained: &[usize],
) -> Result<InspectorPlan, String> {
    let src = r.in_tuple.first().cloned().ok_or("relation has no source tuple")?;
    let dst = r.out_tuple.first().cloned().ok_or("relation has no sink tuple")?;
    let mut clauses = Vec::new();
    for (m, &ci) in model.clauses.iter().zip(retained.iter()) {
        let enumerated: BTreeSet<&String> = m
            .schedule
            .iter()
            .filter(|s| !matches!(s.kind, LoopKind::Projected))
            .map(|s| &s.var)
            .collect();
        let mut checks: Vec<Constraint> = m.residuals.clone();
        for c in &r.clauses[ci].constraints {
            let mut vars = BTreeSet::new();
            c.collect_vars(&mut vars);
            if vars.iter().all(|v| enumerated.contains(v) || !r.iterators().contains(v)) {
                checks.push(c.clone());
            }
        }
        for s in &m.schedule {
            if let LoopKind::Dimension | LoopKind::UfRangePaired { .. } | LoopKind::UfRangeUnpaired =
                s.kind
            {
                if s.lowers.is_empty() || s.uppers.is_empty() {
                    return Err(format!("iterator {} has no finite symbolic bound", s.var));
                }
            }
        }
        clauses.push(ClausePlan { schedule: m.schedule.clone(), checks });
    }
    Ok(InspectorPlan { relation: r.name.clone(), src_var: src, dst_var: dst, clauses })
}

/// Convenience: baseline (no discovered equalities) and simplified
/// plans for a MAYBE relation.
pub fn plans_for(a: &RelationAnalysis) -> Result<(InspectorPlan, InspectorPlan), String> {
    let baseline_model = a.baseline.as_ref().ok_or("no baseline model")?;
    let simplified_model = a.simplified.as_ref().ok_or("no simplified model")?;
    let all: Vec<usize> = (0..a.relation.clauses.len()).collect();
    let b = build_inspector(&a.relation, baseline_model, &all)?;
    let s = build_inspector(&a.relation, simplified_model, &a.retained_clauses)?;
    Ok((b, s))
}

/// Runs one plan, returning the dependent outer-iteration pairs.
pub fn run_plan(plan: &InspectorPlan, inst: &ConcreteInstance) -> BTreeSet<(i64, i64)> {
    let mut edges = BTreeSet::new();
    for clause in &plan.clauses {
        let mut env = BTreeMap::new();
        exec(clause, 0, inst, &mut env, &mut |env| {
            if let (Some(&a), Some(&b)) = (env.get(&plan.src_var), env.get(&plan.dst_var)) {
                edges.insert((a, b));
            }
        });
    }
    edges
}

fn exec(
    clause: &ClausePlan,
    depth: usize,
    inst: &ConcreteInstance,
    env: &mut BTreeMap<String, i64>,
    emit: &mut dyn FnMut(&BTreeMap<String, i64>),
) {
    if depth == clause.schedule.len() {
        for c in &clause.checks {
            match eval_constraint(c, env, inst) {
                Some(true) => {}
                _ => return, // false or out-of-domain: clause is false here
            }
        }
        emit(env);
        return;
    }
    let step = &clause.schedule[depth];
    match &step.kind {
        LoopKind::Projected => exec(clause, depth + 1, inst, env, emit),
        LoopKind::Derived { expr } => {
            let Some(v) = eval_expr(expr, env, inst) else { return };
            env.insert(step.var.clone(), v);
            exec(clause, depth + 1, inst, env, emit);
            env.remove(&step.var);
        }
        _ => {
            let mut lo = i64::MIN;
            let mut hi = i64::MAX;
            for e in &step.lowers {
                let Some(v) = eval_expr(e, env, inst) else { return };
                lo = lo.max(v);
            }
            for e in &step.uppers {
                let Some(v) = eval_expr(e, env, inst) else { return };
                hi = hi.min(v);
            }
            if lo == i64::MIN || hi == i64::MAX {
                return;
            }
            for x in lo..=hi {
                env.insert(step.var.clone(), x);
                exec(clause, depth + 1, inst, env, emit);
            }
            env.remove(&step.var);
        }
    }
}

/// Dependence graph over outer iterations 0..n-1.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct DependenceGraph {
    pub n: i64,
    /// directed edges with originating relation names
    pub edges: BTreeMap<(i64, i64), BTreeSet<String>>,
}

impl DependenceGraph {
    pub fn edge_set(&self) -> BTreeSet<(i64, i64)> {
        self.edges.keys().copied().collect()
    }

    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph deps {\n");
        for v in 0..self.n {
            s.push_str(&format!("  i{};\n", v));
        }
        for ((a, b), rels) in &self.edges {
            s.push_str(&format!(
                "  i{} -> i{} [label=\"{}\"];\n",
                a,
                b,
                rels.iter().cloned().collect::<Vec<_>>().join(",")
            ));
        }
        s.push('}');
        s
    }
}

/// Union of the plans' edges on one instance.
pub fn run_inspectors(plans: &[InspectorPlan], inst: &ConcreteInstance) -> DependenceGraph {
    let mut g = DependenceGraph { n: inst.n, edges: BTreeMap::new() };
    for p in plans {
        for (a, b) in run_plan(p, inst) {
            if a == b {
                continue; // outer-loop-carried dependences only
            }
            g.edges.entry((a, b)).or_default().insert(p.relation.clone());
        }
    }
    g
}

/// Wavefront levels: level(v) = 1 + max level over predecessors.
/// Iterations in a level can run in parallel. Fails hard on cycles.
pub fn wavefronts(g: &DependenceGraph) -> Result<Vec<Vec<i64>>, String> {
    let n = g.n;
    let mut preds: BTreeMap<i64, Vec<i64>> = BTreeMap::new();
    let mut succs: BTreeMap<i64, Vec<i64>> = BTreeMap::new();
    let mut indeg: BTreeMap<i64, usize> = (0..n).map(|v| (v, 0)).collect();
    for (a, b) in g.edges.keys() {
        preds.entry(*b).or_default().push(*a);
        succs.entry(*a).or_default().push(*b);
        *indeg.entry(*b).or_default() += 1;
    }
    let mut level: BTreeMap<i64, usize> = BTreeMap::new();
    let mut queue: Vec<i64> = (0..n).filter(|v| indeg[v] == 0).collect();
    let mut seen = 0usize;
    while let Some(v) = queue.pop() {
        seen += 1;
        let l = preds
            .get(&v)
            .map(|ps| ps.iter().map(|p| level[p] + 1).max().unwrap_or(0))
            .unwrap_or(0);
        level.insert(v, l);
        for s in succs.get(&v).cloned().unwrap_or_default() {
            let d = indeg.get_mut(&s).unwrap();
            *d -= 1;
            if *d == 0 {
                queue.push(s);
            }
        }
        queue.sort_unstable_by(|a, b| b.cmp(a)); // deterministic ascending pop
    }
    if seen != n as usize {
        return Err("dependence graph has a cycle".into());
    }
    let max_level = level.values().copied().max().unwrap_or(0);
    let mut out = vec![Vec::new(); max_level + 1];
    for v in 0..n {
        out[level[&v]].push(v);
    }
    Ok(out)
}

/// Prints the plan as pseudo-code in the style of the paper's inspector
/// listings.
pub fn emit_pseudo(plan: &InspectorPlan) -> String {
    let mut s = format!("// inspector for {}\n", plan.relation);
    for (ci, clause) in plan.clauses.iter().enumerate() {
        if plan.clauses.len() > 1 {
            s.push_str(&format!("// clause {}\n", ci));
        }
        let mut indent = 0usize;
        let pad = |k: usize| "  ".repeat(k);
        for step in &clause.schedule {
            match &step.kind {
                LoopKind::Projected => continue,
                LoopKind::Derived { expr } => {
                    s.push_str(&format!("{}{} = {};\n", pad(indent), step.var, expr));
                }
                _ => {
                    let lo = step
                        .lowers
                        .iter()
                        .map(|e| e.to_string())
                        .collect::<Vec<_>>()
                        .join(", ");
                    let hi = step
                        .uppers
                        .iter()
                        .map(|e| e.to_string())
                        .collect::<Vec<_>>()
                        .join(", ");
                    let lo = if step.lowers.len() > 1 { format!("max({})", lo) } else { lo };
                    let hi = if step.uppers.len() > 1 { format!("min({})", hi) } else { hi };
                    s.push_str(&format!(
                        "{}for({} = {}; {} <= {}; {}++) {{\n",
                        pad(indent),
                        step.var,
                        lo,
                        step.var,
                        hi,
                        step.var
                    ));
                    indent += 1;
                }
            }
        }
        let checks: Vec<String> = clause.checks.iter().map(|c| c.to_string()).collect();
        if !checks.is_empty() {
            s.push_str(&format!("{}if({}) {{\n", pad(indent), checks.join(" && ")));
            s.push_str(&format!(
                "{}// dependence between {} and {}\n",
                pad(indent + 1),
                plan.src_var,
                plan.dst_var
            ));
            s.push_str(&format!("{}}}\n", pad(indent)));
        }
        for k in (0..indent).rev() {
            s.push_str(&format!("{}}}\n", pad(k)));
        }
    }
    s
}

/// Reads a Matrix Market coordinate file into a CSR lower-triangular
/// instance (entries above the diagonal are dropped; the diagonal is
/// completed), matching the forward-solve presets.
pub fn load_matrix_market(path: &std::path::Path) -> Result<ConcreteInstance, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {}", path.display(), e))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or("empty file")?;
    if !header.starts_with("%%MatrixMarket") {
        return Err("missing MatrixMarket header".into());
    }
    let mut body = lines.skip_while(|l| l.starts_with('%'));
    let dims = body.next().ok_or("missing size line")?;
    let mut it = dims.split_whitespace();
    let rows: i64 = it.next().and_then(|s| s.parse().ok()).ok_or("bad size line")?;
    let cols: i64 = it.next().and_then(|s| s.parse().ok()).ok_or("bad size line")?;
    if rows != cols {
        return Err("matrix must be square".into());
    }
    let mut per_row: BTreeMap<i64, BTreeSet<i64>> = (0..rows).map(|i| (i, BTreeSet::new())).collect();
    for line in body {
        if line.starts_with('%') {
            continue;
        }
        let mut f = line.split_whitespace();
        let (Some(r), Some(c)) = (f.next(), f.next()) else { continue };
        let r: i64 = r.parse().map_err(|_| "bad entry")?;
        let c: i64 = c.parse().map_err(|_| "bad entry")?;
        let (r, c) = (r - 1, c - 1); // 1-based input
        if r < 0 || r >= rows || c < 0 || c >= cols {
            return Err("entry out of range".into());
        }
        if c <= r {
            per_row.get_mut(&r).unwrap().insert(c);
        }
    }
    let mut rowptr = vec![0i64];
    let mut col = Vec::new();
    for i in 0..rows {
        let set = &mut per_row.get_mut(&i).unwrap();
        set.insert(i); // ensure the diagonal
        for &c in set.iter() {
            col.push(c);
        }
        rowptr.push(col.len() as i64);
    }
    let nnz = col.len() as i64;
    let mut arrays = BTreeMap::new();
    arrays.insert("rowptr".to_string(), rowptr);
    arrays.insert("col".to_string(), col);
    Ok(ConcreteInstance { n: rows, nnz, arrays, preset: "matrix_market".into(), seed: 0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assertions::InstanceBudget;
    use crate::oracle::{enumerate, sample, GeneratorPreset};
    use crate::parse::parse_problem;
    use crate::pipeline::{analyze_full, PropertyConfig};

    const FS_FLOW: &str = r#"
symbolic n, nnz;
uf rowptr : 1;
uf col : 1;
assert strict_monotone(rowptr);
relation "d3" kernel="fs_csr" { [i,k] -> [ip,kp] : i = col(kp) && i < ip && 0 <= i < n && 0 <= ip < n && rowptr(ip) <= kp < rowptr(ip+1) }
relation "d4" kernel="fs_csr" { [i,k] -> [ip,kp] : i = col(kp) && ip < i && 0 <= i < n && 0 <= ip < n && rowptr(ip) <= kp < rowptr(ip+1) }
"#;

    #[test]
    fn plan_edges_match_oracle_edges() {
        let p = parse_problem(FS_FLOW).unwrap();
        let cfg = PropertyConfig::all();
        let budget = InstanceBudget::default();
        for inst in sample(GeneratorPreset::CsrLowerTriangular, (4, 10), 50, 17, 8).unwrap() {
            for r in &p.relations {
                let a = analyze_full(&p, r, &cfg, &budget);
                if a.verdict.status.is_unsat() {
                    continue;
                }
                let (b, s) = plans_for(&a).unwrap();
                let oracle_pairs: BTreeSet<(i64, i64)> =
                    enumerate(r, &inst).unwrap().outer_pairs;
                assert_eq!(run_plan(&b, &inst), oracle_pairs, "baseline plan differs");
                assert_eq!(run_plan(&s, &inst), oracle_pairs, "simplified plan differs");
            }
        }
    }

    #[test]
    fn diagonal_only_matrix_has_single_wavefront() {
        let p = parse_problem(FS_FLOW).unwrap();
        let cfg = PropertyConfig::all();
        let budget = InstanceBudget::default();
        let a = analyze_full(&p, &p.relations[0], &cfg, &budget);
        let (_, s) = plans_for(&a).unwrap();
        // density 0: diagonal-only
        let inst = &sample(GeneratorPreset::CsrLowerTriangular, (6, 6), 0, 1, 1).unwrap()[0];
        let g = run_inspectors(&[s], inst);
        assert!(g.edges.is_empty());
        let w = wavefronts(&g).unwrap();
        assert_eq!(w.len(), 1);
        assert_eq!(w[0].len(), 6);
    }

    #[test]
    fn chain_matrix_has_n_wavefronts() {
        let p = parse_problem(FS_FLOW).unwrap();
        let cfg = PropertyConfig::all();
        let budget = InstanceBudget::default();
        let a = analyze_full(&p, &p.relations[0], &cfg, &budget);
        let (_, s) = plans_for(&a).unwrap();
        // chain: row i has nonzeros at i-1 and i
        let n = 7i64;
        let mut rowptr = vec![0i64];
        let mut col = Vec::new();
        for i in 0..n {
            if i > 0 {
                col.push(i - 1);
            }
            col.push(i);
            rowptr.push(col.len() as i64);
        }
        let inst = ConcreteInstance {
            n,
            nnz: col.len() as i64,
            arrays: [("rowptr".to_string(), rowptr), ("col".to_string(), col)]
                .into_iter()
                .collect(),
            preset: "chain".into(),
            seed: 0,
        };
        let g = run_inspectors(&[s], &inst);
        let w = wavefronts(&g).unwrap();
        assert_eq!(w.len(), n as usize);
        assert!(w.iter().all(|l| l.len() == 1));
    }

    #[test]
    fn wavefront_levels_respect_edges() {
        let p = parse_problem(FS_FLOW).unwrap();
        let cfg = PropertyConfig::all();
        let budget = InstanceBudget::default();
        let a = analyze_full(&p, &p.relations[0], &cfg, &budget);
        let (_, s) = plans_for(&a).unwrap();
        let inst = &sample(GeneratorPreset::CsrLowerTriangular, (10, 10), 60, 23, 1).unwrap()[0];
        let g = run_inspectors(&[s], inst);
        let w = wavefronts(&g).unwrap();
        let level_of: BTreeMap<i64, usize> = w
            .iter()
            .enumerate()
            .flat_map(|(l, vs)| vs.iter().map(move |v| (*v, l)))
            .collect();
        for (a, b) in g.edges.keys() {
            assert!(level_of[a] < level_of[b]);
        }
    }

    #[test]
    fn pseudo_output_uses_derived_assignment() {
        let p = parse_problem(FS_FLOW).unwrap();
        let a = analyze_full(&p, &p.relations[0], &PropertyConfig::all(), &InstanceBudget::default());
        let (_, s) = plans_for(&a).unwrap();
        let text = emit_pseudo(&s);
        assert!(text.contains("i = col(kp);"), "{}", text);
        assert!(text.contains("for(ip"), "{}", text);
    }
}
