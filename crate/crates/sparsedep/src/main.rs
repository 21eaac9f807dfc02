//! Command-line driver for the sparse dependence analysis engine.
//!
//! Exit codes: 0 ok, 1 report mismatch, 2 parse error, 3 oracle
//! counterexample.

use sparsedep::assertions::InstanceBudget;
use sparsedep::complexity::KernelComplexity;
use sparsedep::inspector::{emit_pseudo, load_matrix_market, plans_for, run_inspectors, wavefronts};
use sparsedep::oracle::{falsify, preset_for_kernel, sample, FalsifyReport, GeneratorPreset};
use sparsedep::parse::load_problems;
use sparsedep::pipeline::{analyze_corpus, complexity_class, PropertyConfig};
use sparsedep::report::{minimize_per_kernel, run_report, Manifest};
use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

fn usage() -> ! {
    eprintln!(
        "usage: sparsedep <command> [args]

commands:
  check <files|dirs> [--properties none|single:<name>|all] [--json|--table]
  simplify <files|dirs>
  superset <files|dirs>
  report <files|dirs> [--manifest <path>] [--json-out <out>]
  oracle <files|dirs> [--preset <name>|auto] [--trials N] [--seed S] [--dump-dir <dir>]
  inspect <files|dirs> --matrix <path.mtx|preset:<name>:<n>:<density>:<seed>> [--emit-pseudo] [--dot]

properties: monotonicity, correlated_monotonicity, triangular
presets: csr_lower_triangular, csr_general, csc_lower_triangular,
         csr_with_diagptr, cholesky_prune_sets"
    );
    std::process::exit(2)
}

fn collect_paths(args: &[String]) -> Vec<PathBuf> {
    let mut out = Vec::new();
    for a in args {
        let p = PathBuf::from(a);
        if p.is_dir() {
            let mut entries: Vec<PathBuf> = std::fs::read_dir(&p)
                .map(|rd| {
                    rd.filter_map(|e| e.ok())
                        .map(|e| e.path())
                        .filter(|q| q.extension().map(|x| x == "deps").unwrap_or(false))
                        .collect()
                })
                .unwrap_or_default();
            entries.sort();
            out.extend(entries);
        } else {
            out.push(p);
        }
    }
    out
}

fn parse_properties(s: &str) -> Option<PropertyConfig> {
    match s {
        "none" => Some(PropertyConfig::none()),
        "all" => Some(PropertyConfig::all()),
        _ => s.strip_prefix("single:").and_then(|name| {
            sparsedep::assertions::PropertyCategory::from_name(name).map(PropertyConfig::single)
        }),
    }
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.is_empty() {
        usage();
    }
    let cmd = args[0].as_str();
    let rest = &args[1..];
    // split positional file args from flags
    let mut files = Vec::new();
    let mut flags: BTreeMap<String, String> = BTreeMap::new();
    let mut i = 0;
    while i < rest.len() {
        let a = &rest[i];
        if let Some(name) = a.strip_prefix("--") {
            let takes_value = matches!(
                name,
                "properties" | "manifest" | "json-out" | "preset" | "trials" | "seed" | "matrix" | "dump-dir"
            );
            if takes_value {
                if i + 1 >= rest.len() {
                    eprintln!("flag --{} needs a value", name);
                    return ExitCode::from(2);
                }
                flags.insert(name.to_string(), rest[i + 1].clone());
                i += 2;
            } else {
                flags.insert(name.to_string(), String::new());
                i += 1;
            }
        } else {
            files.push(a.clone());
            i += 1;
        }
    }
    let paths = collect_paths(&files);
    let budget = InstanceBudget::default();
    let problem = match load_problems(&paths) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("parse error: {}", e);
            return ExitCode::from(2);
        }
    };
    match cmd {
        "check" => {
            let cfg = match parse_properties(flags.get("properties").map(|s| s.as_str()).unwrap_or("all")) {
                Some(c) => c,
                None => usage(),
            };
            let corpus = analyze_corpus(&problem, &cfg, &budget);
            if flags.contains_key("json") {
                let verdicts: Vec<_> = corpus
                    .analyses
                    .iter()
                    .map(|a| {
                        serde_json::json!({
                            "relation": a.relation.name,
                            "kernel": a.verdict.kernel,
                            "status": a.verdict.status.name(),
                            "duplicates": a.duplicates,
                            "properties_used": a.verdict.properties_used,
                            "equalities": a.equalities().iter().map(|e| e.to_string()).collect::<Vec<_>>(),
                            "complexity_class": complexity_class(&a.baseline_cx()),
                            "clauses": serde_json::to_value(&a.verdict.clauses).unwrap(),
                        })
                    })
                    .collect();
                let out = serde_json::json!({
                    "summary": serde_json::to_value(&corpus.summary).unwrap(),
                    "verdicts": verdicts,
                });
                println!("{}", serde_json::to_string_pretty(&out).unwrap());
            } else {
                println!(
                    "{:<24} {:<14} {:<22} {:<14} {}",
                    "relation", "kernel", "status", "class", "properties"
                );
                for a in &corpus.analyses {
                    println!(
                        "{:<24} {:<14} {:<22} {:<14} {}",
                        a.relation.name,
                        a.verdict.kernel,
                        a.verdict.status.name(),
                        complexity_class(&a.baseline_cx()),
                        a.verdict
                            .properties_used
                            .iter()
                            .cloned()
                            .collect::<Vec<_>>()
                            .join(",")
                    );
                }
                let s = &corpus.summary;
                println!(
                    "{} relations, {} unique: unsat={} ({} affine + {} properties), maybe={}",
                    s.total,
                    s.unique,
                    s.unsat_affine + s.unsat_properties,
                    s.unsat_affine,
                    s.unsat_properties,
                    s.maybe
                );
            }
            ExitCode::SUCCESS
        }
        "simplify" => {
            let corpus = analyze_corpus(&problem, &PropertyConfig::all(), &budget);
            for a in &corpus.analyses {
                if a.verdict.status.is_unsat() {
                    continue;
                }
                let eqs = a.equalities();
                let eq_text = if eqs.is_empty() {
                    "none".to_string()
                } else {
                    eqs.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; ")
                };
                println!(
                    "{:<24} {:<14} equalities: {:<38} {} -> {}",
                    a.relation.name,
                    a.verdict.kernel,
                    eq_text,
                    a.baseline_cx(),
                    a.simplified_cx()
                );
            }
            ExitCode::SUCCESS
        }
        "superset" => {
            let corpus = analyze_corpus(&problem, &PropertyConfig::all(), &budget);
            let outcomes = minimize_per_kernel(&corpus);
            for (kernel, (outcome, maybes)) in &outcomes {
                if maybes.is_empty() {
                    continue;
                }
                println!("kernel {}: {} maybe relations", kernel, maybes.len());
                for c in &outcome.claims {
                    println!(
                        "  {} >= {} [{}] {}",
                        c.superset,
                        c.subset,
                        match c.rule {
                            sparsedep::superset::SupersetRule::Trivial => "trivial",
                            sparsedep::superset::SupersetRule::Overlap => "overlap",
                        },
                        c.evidence.note
                    );
                }
                println!("  kept: {}", outcome.kept.join(", "));
                for (d, anchor) in &outcome.discarded {
                    println!("  discarded {} (covered by {})", d, anchor);
                }
            }
            ExitCode::SUCCESS
        }
        "report" => {
            let manifest_path = flags
                .get("manifest")
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from("corpus/manifest.json"));
            let manifest = match Manifest::load(&manifest_path) {
                Ok(m) => m,
                Err(e) => {
                    eprintln!("manifest error: {}", e);
                    return ExitCode::from(2);
                }
            };
            let report = run_report(&problem, &manifest, &budget);
            print!("{}", report.render_text());
            if let Some(out) = flags.get("json-out") {
                let json = serde_json::to_string_pretty(&report.to_json()).unwrap();
                if out == "-" {
                    println!("{}", json);
                } else if let Err(e) = std::fs::write(out, json) {
                    eprintln!("cannot write {}: {}", out, e);
                    return ExitCode::from(2);
                }
            }
            if report.failures > 0 {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        "oracle" => {
            let trials: usize = flags.get("trials").and_then(|s| s.parse().ok()).unwrap_or(50);
            let seed: u64 = flags.get("seed").and_then(|s| s.parse().ok()).unwrap_or(7);
            let preset_arg = flags.get("preset").map(|s| s.as_str()).unwrap_or("auto");
            let corpus = analyze_corpus(&problem, &PropertyConfig::all(), &budget);
            let outcomes = minimize_per_kernel(&corpus);
            let mut report = FalsifyReport::default();
            let kernels: Vec<String> = corpus
                .summary
                .per_kernel
                .keys()
                .cloned()
                .collect();
            for kernel in kernels {
                let preset = if preset_arg == "auto" {
                    match preset_for_kernel(&kernel) {
                        Some(p) => p,
                        None => {
                            eprintln!("no preset mapping for kernel {}; use --preset", kernel);
                            return ExitCode::from(2);
                        }
                    }
                } else {
                    match GeneratorPreset::from_name(preset_arg) {
                        Some(p) => p,
                        None => usage(),
                    }
                };
                let analyses: Vec<_> = corpus
                    .analyses
                    .iter()
                    .filter(|a| a.verdict.kernel == kernel)
                    .cloned()
                    .collect();
                let claims = outcomes
                    .get(&kernel)
                    .map(|(o, _)| o.claims.clone())
                    .unwrap_or_default();
                let instances = match sample(preset, (4, 16), 40, seed, trials) {
                    Ok(v) => v,
                    Err(e) => {
                        eprintln!("instance generation failed: {}", e);
                        return ExitCode::from(2);
                    }
                };
                if let Err(e) = falsify(&problem, &analyses, &claims, &instances, &mut report) {
                    eprintln!("oracle error ({}): {}", kernel, e);
                    return ExitCode::from(2);
                }
            }
            println!(
                "{} trials: checked {} unsat verdicts, {} equalities, {} superset claims: {} counterexamples",
                report.trials,
                report.checked_unsat,
                report.checked_equalities,
                report.checked_claims,
                report.counterexamples.len()
            );
            if !report.counterexamples.is_empty() {
                let dir = flags
                    .get("dump-dir")
                    .map(PathBuf::from)
                    .unwrap_or_else(std::env::temp_dir);
                for (k, cex) in report.counterexamples.iter().enumerate() {
                    println!("counterexample[{}]: {} {}: {}", k, cex.kind, cex.subject, cex.detail);
                    let path = dir.join(format!("sparsedep_cex_{}.json", k));
                    if std::fs::write(&path, serde_json::to_string_pretty(cex).unwrap()).is_ok() {
                        println!("  instance dumped to {}", path.display());
                    }
                }
                return ExitCode::from(3);
            }
            ExitCode::SUCCESS
        }
        "inspect" => {
            let Some(matrix) = flags.get("matrix") else { usage() };
            let inst = if let Some(spec) = matrix.strip_prefix("preset:") {
                let parts: Vec<&str> = spec.split(':').collect();
                let preset = parts
                    .first()
                    .and_then(|s| GeneratorPreset::from_name(s))
                    .unwrap_or_else(|| usage());
                let n: i64 = parts.get(1).and_then(|s| s.parse().ok()).unwrap_or(8);
                let density: u64 = parts.get(2).and_then(|s| s.parse().ok()).unwrap_or(40);
                let seed: u64 = parts.get(3).and_then(|s| s.parse().ok()).unwrap_or(1);
                match sample(preset, (n, n), density, seed, 1) {
                    Ok(mut v) => v.remove(0),
                    Err(e) => {
                        eprintln!("{}", e);
                        return ExitCode::from(2);
                    }
                }
            } else {
                match load_matrix_market(&PathBuf::from(matrix)) {
                    Ok(i) => i,
                    Err(e) => {
                        eprintln!("{}", e);
                        return ExitCode::from(2);
                    }
                }
            };
            let corpus = analyze_corpus(&problem, &PropertyConfig::all(), &budget);
            let mut plans = Vec::new();
            for a in &corpus.analyses {
                if a.verdict.status.is_unsat() {
                    continue;
                }
                match plans_for(a) {
                    Ok((_, simplified)) => {
                        if flags.contains_key("emit-pseudo") {
                            print!("{}", emit_pseudo(&simplified));
                        }
                        plans.push(simplified);
                    }
                    Err(e) => {
                        eprintln!("no inspector for {}: {}", a.relation.name, e);
                        return ExitCode::from(2);
                    }
                }
            }
            let g = run_inspectors(&plans, &inst);
            match wavefronts(&g) {
                Ok(w) => {
                    println!("n = {}, edges = {}", g.n, g.edges.len());
                    for (l, vs) in w.iter().enumerate() {
                        println!(
                            "wavefront {}: {}",
                            l,
                            vs.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
                        );
                    }
                }
                Err(e) => {
                    eprintln!("wavefront error: {}", e);
                    return ExitCode::from(2);
                }
            }
            if flags.contains_key("dot") {
                println!("{}", g.to_dot());
            }
            ExitCode::SUCCESS
        }
        "kernels" => {
            // small helper: list kernel complexities parsed from a manifest
            let manifest_path = flags
                .get("manifest")
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from("corpus/manifest.json"));
            if let Ok(m) = Manifest::load(&manifest_path) {
                for (k, mk) in &m.kernels {
                    let parsed = KernelComplexity::parse(&mk.kernel_complexity)
                        .map(|c| c.to_string())
                        .unwrap_or_else(|| "?".into());
                    println!("{}: {}", k, parsed);
                }
            }
            ExitCode::SUCCESS
        }
        _ => usage(),
    }
}
