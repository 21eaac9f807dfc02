//! Corpus report: reruns the full analysis and reproduces the result
//! tables cell by cell against the shipped manifest.

use crate::assertions::{InstanceBudget, PropertyCategory};
use crate::complexity::{le_kernel, ComplexityExpr, Factor, KernelComplexity};
use crate::parse::Problem;
use crate::pipeline::{analyze_corpus, CorpusAnalysis, PropertyConfig, RelationAnalysis, VerdictStatus};
use crate::superset::{minimize, MinimizeOutcome, SupersetClaim};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::collections::BTreeMap;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestAggregate {
    pub total: usize,
    pub unique: usize,
    pub unsat_affine: usize,
    pub unsat_properties: usize,
    pub maybe: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestKernel {
    #[serde(default)]
    pub title: String,
    pub preset: String,
    pub kernel_complexity: String,
    pub counts: ManifestAggregate,
    pub table3: ManifestTable3,
    pub table4: ManifestTable4,
    #[serde(default)]
    pub kept: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestTable3 {
    pub remaining: [usize; 2],
    pub equality: [usize; 2],
    pub superset: [usize; 2],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestTable4 {
    pub baseline: String,
    pub simplified: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub aggregate: ManifestAggregate,
    pub ablation: BTreeMap<String, usize>,
    pub kernels: BTreeMap<String, ManifestKernel>,
    pub verdicts: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    pub maybe_complexities: BTreeMap<String, [String; 2]>,
    #[serde(default)]
    pub notes: Vec<String>,
    #[serde(default)]
    pub comment: String,
}

impl Manifest {
    pub fn load(path: &std::path::Path) -> Result<Manifest, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {}", path.display(), e))?;
        serde_json::from_str(&text).map_err(|e| format!("{}: {}", path.display(), e))
    }
}

/// Parses a complexity sum in table notation, e.g. `8(n x nnz) + 4(n^2)`.
pub fn parse_complexity_sum(s: &str) -> Option<ComplexityExpr> {
    let s = s.trim();
    if s == "0" {
        return Some(ComplexityExpr::zero());
    }
    let mut terms = Vec::new();
    for part in s.split(" + ") {
        let part = part.trim();
        let open = part.find('(')?;
        let coeff: i64 = if open == 0 { 1 } else { part[..open].trim().parse().ok()? };
        let inner = part[open + 1..].strip_suffix(')')?;
        let mut powers: BTreeMap<Factor, u32> = BTreeMap::new();
        for f in inner.split(" x ") {
            let f = f.trim();
            let (base, pow) = match f.find('^') {
                Some(i) => (&f[..i], f[i + 1..].parse::<u32>().ok()?),
                None => (f, 1),
            };
            let base = base.trim_start_matches('(').trim_end_matches(')');
            let factor = match base {
                "n" => Factor::N,
                "nnz" => Factor::Nnz,
                "nnz/n" => Factor::Avg,
                _ => return None,
            };
            *powers.entry(factor).or_default() += pow;
        }
        terms.push((coeff, powers));
    }
    Some(ComplexityExpr { terms }.normalized())
}

/// One comparison line of the report.
#[derive(Debug, Clone, Serialize)]
pub struct Cell {
    pub name: String,
    pub expected: String,
    pub actual: String,
    pub pass: bool,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub cells: Vec<Cell>,
    pub failures: usize,
    pub summary_all: crate::pipeline::Summary,
    pub summary_affine: crate::pipeline::Summary,
    pub kept: BTreeMap<String, Vec<String>>,
    pub claims: Vec<SupersetClaim>,
    pub ablation_counts: BTreeMap<String, usize>,
}

fn cell(cells: &mut Vec<Cell>, name: impl Into<String>, expected: impl ToString, actual: impl ToString) {
    let expected = expected.to_string();
    let actual = actual.to_string();
    let pass = expected == actual;
    cells.push(Cell { name: name.into(), expected, actual, pass });
}

fn cell_cx(cells: &mut Vec<Cell>, name: impl Into<String>, expected_str: &str, actual: &ComplexityExpr) {
    let expected = parse_complexity_sum(expected_str);
    let pass = match &expected {
        Some(e) => e.term_multiset() == actual.term_multiset(),
        None => false,
    };
    cells.push(Cell {
        name: name.into(),
        expected: expected_str.to_string(),
        actual: actual.to_string(),
        pass,
    });
}

/// Per-kernel superset minimization over the maybe-satisfiable set.
pub fn minimize_per_kernel(
    corpus: &CorpusAnalysis,
) -> BTreeMap<String, (MinimizeOutcome, Vec<String>)> {
    let mut out = BTreeMap::new();
    let kernels: std::collections::BTreeSet<String> = corpus
        .analyses
        .iter()
        .map(|a| a.verdict.kernel.clone())
        .collect();
    for k in kernels {
        let maybes: Vec<&RelationAnalysis> = corpus
            .analyses
            .iter()
            .filter(|a| a.verdict.kernel == k && !a.verdict.status.is_unsat())
            .collect();
        let outcome = minimize(&maybes);
        let names = maybes.iter().map(|a| a.relation.name.clone()).collect();
        out.insert(k, (outcome, names));
    }
    out
}

/// Runs every analysis pass and compares all table cells.
pub fn run_report(problem: &Problem, manifest: &Manifest, budget: &InstanceBudget) -> Report {
    let mut cells = Vec::new();
    let affine = analyze_corpus(problem, &PropertyConfig::none(), budget);
    let all = analyze_corpus(problem, &PropertyConfig::all(), budget);

    // aggregate counts
    cell(&mut cells, "aggregate.total", manifest.aggregate.total, all.summary.total);
    cell(&mut cells, "aggregate.unique", manifest.aggregate.unique, all.summary.unique);
    cell(
        &mut cells,
        "aggregate.unsat_affine",
        manifest.aggregate.unsat_affine,
        affine.summary.unsat_affine,
    );
    cell(
        &mut cells,
        "aggregate.baseline_relations",
        manifest.aggregate.unique - manifest.aggregate.unsat_affine,
        all.summary.unique - all.summary.unsat_affine,
    );
    cell(
        &mut cells,
        "aggregate.unsat_properties",
        manifest.aggregate.unsat_properties,
        all.summary.unsat_properties,
    );
    cell(&mut cells, "aggregate.maybe", manifest.aggregate.maybe, all.summary.maybe);

    // ablation: single-category passes
    let mut ablation_counts = BTreeMap::new();
    for cat in [
        PropertyCategory::Monotonicity,
        PropertyCategory::CorrelatedMonotonicity,
        PropertyCategory::Triangular,
    ] {
        let single = analyze_corpus(problem, &PropertyConfig::single(cat), budget);
        ablation_counts.insert(cat.name().to_string(), single.summary.unsat_properties);
    }
    ablation_counts.insert("combined".into(), all.summary.unsat_properties);
    for (name, expected) in &manifest.ablation {
        if name == "triangular_min" {
            let got = ablation_counts.get("triangular").copied().unwrap_or(0);
            cell(&mut cells, "ablation.triangular_min", format!(">= {}", expected), {
                if got >= *expected {
                    format!(">= {}", expected)
                } else {
                    format!("{}", got)
                }
            });
            continue;
        }
        let got = ablation_counts.get(name).copied().unwrap_or(0);
        cell(&mut cells, format!("ablation.{}", name), expected, got);
    }
    {
        let mono = ablation_counts["monotonicity"];
        let corr = ablation_counts["correlated_monotonicity"];
        let tri = ablation_counts["triangular"];
        let comb = ablation_counts["combined"];
        cell(
            &mut cells,
            "ablation.monotonicity_highest",
            true,
            mono >= corr && mono >= tri && comb >= mono,
        );
    }

    // per-relation verdict buckets
    let verdict_of = |name: &str| -> Option<VerdictStatus> {
        all.analyses
            .iter()
            .find(|a| a.relation.name == name)
            .map(|a| a.verdict.status)
    };
    for (bucket, names) in &manifest.verdicts {
        let want = match bucket.as_str() {
            "unsat_affine" => VerdictStatus::UnsatAffine,
            "unsat_properties" => VerdictStatus::UnsatWithProperties,
            "maybe" => VerdictStatus::MaybeSat,
            _ => continue,
        };
        let mut wrong = Vec::new();
        for n in names {
            match verdict_of(n) {
                Some(v) if v == want => {}
                Some(v) => wrong.push(format!("{}={}", n, v.name())),
                None => wrong.push(format!("{}=missing", n)),
            }
        }
        cell(
            &mut cells,
            format!("verdicts.{}", bucket),
            format!("{} relations", names.len()),
            if wrong.is_empty() {
                format!("{} relations", names.len())
            } else {
                format!("mismatches: {}", wrong.join(", "))
            },
        );
    }

    // per-maybe complexities
    for (name, [base_s, simp_s]) in &manifest.maybe_complexities {
        if let Some(a) = all.analyses.iter().find(|a| a.relation.name == *name) {
            cell_cx(&mut cells, format!("complexity.{}.baseline", name), base_s, &a.baseline_cx());
            cell_cx(
                &mut cells,
                format!("complexity.{}.simplified", name),
                simp_s,
                &a.simplified_cx(),
            );
        } else {
            cell(&mut cells, format!("complexity.{}", name), "present", "missing");
        }
    }

    // per-kernel tables
    let minimized = minimize_per_kernel(&all);
    let mut kept_map = BTreeMap::new();
    let mut claims = Vec::new();
    for (kname, mk) in &manifest.kernels {
        let ks_all = all.summary.per_kernel.get(kname).cloned().unwrap_or_default();
        let ks_aff = affine.summary.per_kernel.get(kname).cloned().unwrap_or_default();
        cell(&mut cells, format!("{}.total", kname), mk.counts.total, ks_all.total);
        cell(&mut cells, format!("{}.unique", kname), mk.counts.unique, ks_all.unique);
        cell(
            &mut cells,
            format!("{}.unsat_affine", kname),
            mk.counts.unsat_affine,
            ks_aff.unsat_affine,
        );
        cell(
            &mut cells,
            format!("{}.unsat_properties", kname),
            mk.counts.unsat_properties,
            ks_all.unsat_properties,
        );
        cell(&mut cells, format!("{}.maybe", kname), mk.counts.maybe, ks_all.maybe);

        let Some(kernel_cx) = KernelComplexity::parse(&mk.kernel_complexity) else {
            cell(&mut cells, format!("{}.kernel_complexity", kname), &mk.kernel_complexity, "unparseable");
            continue;
        };
        let maybes: Vec<&RelationAnalysis> = all
            .analyses
            .iter()
            .filter(|a| a.verdict.kernel == *kname && !a.verdict.status.is_unsat())
            .collect();
        // Table 3: remaining / equality / superset, (<= kernel, total)
        let rem_le = maybes
            .iter()
            .filter(|a| le_kernel(&a.baseline_cx(), &kernel_cx))
            .count();
        cell(
            &mut cells,
            format!("{}.table3.remaining", kname),
            format!("{} {}", mk.table3.remaining[0], mk.table3.remaining[1]),
            format!("{} {}", rem_le, maybes.len()),
        );
        let eq_le = maybes
            .iter()
            .filter(|a| le_kernel(&a.simplified_cx(), &kernel_cx))
            .count();
        cell(
            &mut cells,
            format!("{}.table3.equality", kname),
            format!("{} {}", mk.table3.equality[0], mk.table3.equality[1]),
            format!("{} {}", eq_le, maybes.len()),
        );
        let (outcome, _) = minimized.get(kname).cloned().unwrap_or_else(|| {
            (MinimizeOutcome { kept: vec![], discarded: vec![], claims: vec![] }, vec![])
        });
        let kept_le = outcome
            .kept
            .iter()
            .filter_map(|n| maybes.iter().find(|a| a.relation.name == *n))
            .filter(|a| le_kernel(&a.simplified_cx(), &kernel_cx))
            .count();
        cell(
            &mut cells,
            format!("{}.table3.superset", kname),
            format!("{} {}", mk.table3.superset[0], mk.table3.superset[1]),
            format!("{} {}", kept_le, outcome.kept.len()),
        );
        {
            let mut expected_kept = mk.kept.clone();
            expected_kept.sort();
            let mut got_kept = outcome.kept.clone();
            got_kept.sort();
            cell(
                &mut cells,
                format!("{}.kept", kname),
                expected_kept.join(","),
                got_kept.join(","),
            );
        }
        // Table 4: baseline over affine-satisfiable uniques, simplified
        // over the kept runtime checks
        let mut baseline = ComplexityExpr::zero();
        for a in all
            .analyses
            .iter()
            .filter(|a| a.verdict.kernel == *kname && a.verdict.status != VerdictStatus::UnsatAffine)
        {
            baseline = baseline.add(&a.baseline_cx());
        }
        cell_cx(&mut cells, format!("{}.table4.baseline", kname), &mk.table4.baseline, &baseline);
        let mut simplified = ComplexityExpr::zero();
        for n in &outcome.kept {
            if let Some(a) = maybes.iter().find(|a| a.relation.name == *n) {
                simplified = simplified.add(&a.simplified_cx());
            }
        }
        cell_cx(
            &mut cells,
            format!("{}.table4.simplified", kname),
            &mk.table4.simplified,
            &simplified,
        );
        kept_map.insert(kname.clone(), outcome.kept.clone());
        claims.extend(outcome.claims.clone());
    }

    let failures = cells.iter().filter(|c| !c.pass).count();
    Report {
        cells,
        failures,
        summary_all: all.summary.clone(),
        summary_affine: affine.summary.clone(),
        kept: kept_map,
        claims,
        ablation_counts,
    }
}

impl Report {
    pub fn render_text(&self) -> String {
        let mut s = String::new();
        for c in &self.cells {
            let mark = if c.pass { "PASS" } else { "FAIL" };
            s.push_str(&format!("[{}] {}: expected {} | actual {}\n", mark, c.name, c.expected, c.actual));
        }
        s.push_str(&format!(
            "report: {} cells, {} failures\n",
            self.cells.len(),
            self.failures
        ));
        s
    }

    /// Canonical JSON: stable key order, no timing data.
    pub fn to_json(&self) -> Value {
        serde_json::json!({
            "cells": self.cells.iter().map(|c| {
                serde_json::json!({
                    "name": c.name,
                    "expected": c.expected,
                    "actual": c.actual,
                    "pass": c.pass,
                })
            }).collect::<Vec<_>>(),
            "failures": self.failures,
            "summary": {
                "all": serde_json::to_value(&self.summary_all).unwrap(),
                "affine": serde_json::to_value(&self.summary_affine).unwrap(),
            },
            "kept": serde_json::to_value(&self.kept).unwrap(),
            "ablation": serde_json::to_value(&self.ablation_counts).unwrap(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complexity_sum_parser_roundtrips() {
        for s in [
            "(n) + 2(nnz)",
            "10(n^2) + 8(nnz^2) + 6(nnz^2 x (nnz/n)) + 4(nnz^2 x (nnz/n)^3)",
            "2(nnz x (nnz/n)^2) + 2(nnz x (nnz/n)^4)",
            "0",
            "(nnz x (nnz/n))",
        ] {
            let e = parse_complexity_sum(s).unwrap();
            let e2 = parse_complexity_sum(&e.to_string()).unwrap();
            assert_eq!(e.term_multiset(), e2.term_multiset(), "{}", s);
        }
    }
}
