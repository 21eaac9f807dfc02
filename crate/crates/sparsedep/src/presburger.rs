//! Exact integer linear constraint reasoning over plain variables.
//!
//! The decision core is Fourier-Motzkin elimination with integer
//! tightening (gcd normalization of every derived inequality) and
//! equality substitution, followed by a bounded integer witness search
//! on the rational-feasible side. UNSAT answers are sound; SAT-side
//! answers may remain `RationalSatUnknownInteger`.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use std::collections::BTreeMap;
use std::fmt;

const COEFF_BIT_CAP: u64 = 4096;
const DERIVED_ROW_CAP: usize = 1_000_000;
const WITNESS_NODE_CAP: usize = 200_000;
const WITNESS_RANGE_CAP: i64 = 100_000;

/// A linear row `sum(coeffs[i] * var[i]) + constant`, interpreted as
/// `= 0` or `>= 0` depending on which bucket it sits in.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Row {
    pub coeffs: Vec<BigInt>,
    pub constant: BigInt,
}

impl Row {
    pub fn zero(nvars: usize) -> Row {
        Row { coeffs: vec![BigInt::zero(); nvars], constant: BigInt::zero() }
    }

    pub fn is_const(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    pub fn scale(&self, k: &BigInt) -> Row {
        Row {
            coeffs: self.coeffs.iter().map(|c| c * k).collect(),
            constant: &self.constant * k,
        }
    }

    fn add(&self, other: &Row) -> Row {
        Row {
            coeffs: self
                .coeffs
                .iter()
                .zip(other.coeffs.iter())
                .map(|(a, b)| a + b)
                .collect(),
            constant: &self.constant + &other.constant,
        }
    }

    pub fn neg(&self) -> Row {
        self.scale(&BigInt::from(-1))
    }

    fn content(&self) -> BigInt {
        let mut g = BigInt::zero();
        for c in &self.coeffs {
            g = g.gcd(c);
        }
        g
    }

    /// gcd-tightens an inequality row in place. Sound for integers.
    fn tighten_geq(&mut self) {
        let g = self.content();
        if g > BigInt::one() {
            for c in &mut self.coeffs {
                *c /= &g;
            }
            self.constant = self.constant.div_floor(&g);
        }
    }

    fn max_bits(&self) -> u64 {
        self.coeffs
            .iter()
            .chain(std::iter::once(&self.constant))
            .map(|c| c.bits())
            .max()
            .unwrap_or(0)
    }

    pub fn eval(&self, point: &[i64]) -> BigInt {
        let mut acc = self.constant.clone();
        for (c, v) in self.coeffs.iter().zip(point.iter()) {
            acc += c * BigInt::from(*v);
        }
        acc
    }

    pub fn display(&self, vars: &[String]) -> String {
        let mut s = String::new();
        for (c, v) in self.coeffs.iter().zip(vars.iter()) {
            if c.is_zero() {
                continue;
            }
            if !s.is_empty() {
                s.push_str(if c.is_negative() { " - " } else { " + " });
            } else if c.is_negative() {
                s.push('-');
            }
            let a = c.abs();
            if !a.is_one() {
                s.push_str(&format!("{}*", a));
            }
            s.push_str(v);
        }
        if s.is_empty() {
            s = self.constant.to_string();
        } else if !self.constant.is_zero() {
            s.push_str(if self.constant.is_negative() { " - " } else { " + " });
            s.push_str(&self.constant.abs().to_string());
        }
        s
    }
}

/// Quantifier-free conjunction of integer linear equalities and
/// inequalities (`>= 0`) over named variables. No UF atoms.
#[derive(Debug, Default)]
pub struct LinearSystem {
    pub vars: Vec<String>,
    pub eqs: Vec<Row>,
    pub ineqs: Vec<Row>,
    diff: std::cell::RefCell<Option<DiffRepr>>,
}

impl Clone for LinearSystem {
    fn clone(&self) -> Self {
        LinearSystem {
            vars: self.vars.clone(),
            eqs: self.eqs.clone(),
            ineqs: self.ineqs.clone(),
            diff: std::cell::RefCell::new(None),
        }
    }
}

/// Cached difference-graph encoding of the system's rows.
#[derive(Debug, Clone)]
struct DiffRepr {
    /// edge (u, v, w) encodes var_v - var_u <= w; node = nvars is zero
    edges: Vec<(usize, usize, i64)>,
    /// every row was representable
    pure: bool,
}

/// Converts one `>= 0` row into difference edges; returns false if the
/// row is not a unit-coefficient difference constraint.
fn row_to_edges(row: &Row, n: usize, edges: &mut Vec<(usize, usize, i64)>) -> bool {
    use num_traits::ToPrimitive;
    let mut r = row.clone();
    r.tighten_geq();
    let nz: Vec<usize> = (0..n).filter(|&i| !r.coeffs[i].is_zero()).collect();
    let Some(k) = r.constant.to_i64() else { return false };
    let zero_node = n;
    match nz.len() {
        0 => {
            if k < 0 {
                edges.push((zero_node, zero_node, -1));
            }
            true
        }
        1 => {
            let i = nz[0];
            match r.coeffs[i].to_i64() {
                Some(1) => edges.push((i, zero_node, k)),
                Some(-1) => edges.push((zero_node, i, k)),
                _ => return false,
            }
            true
        }
        2 => {
            let (i, j) = (nz[0], nz[1]);
            match (r.coeffs[i].to_i64(), r.coeffs[j].to_i64()) {
                (Some(1), Some(-1)) => edges.push((i, j, k)),
                (Some(-1), Some(1)) => edges.push((j, i, k)),
                _ => return false,
            }
            true
        }
        _ => false,
    }
}

/// Bellman-Ford negative-cycle test over `nodes` vertices.
fn bf_unsat(nodes: usize, edges: &[(usize, usize, i64)]) -> bool {
    let mut dist = vec![0i128; nodes];
    for round in 0..nodes {
        let mut changed = false;
        for &(u, v, w) in edges {
            if dist[u] + (w as i128) < dist[v] {
                dist[v] = dist[u] + w as i128;
                changed = true;
                if round + 1 == nodes {
                    return true;
                }
            }
        }
        if !changed {
            return false;
        }
    }
    false
}

/// Result of a satisfiability check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SatStatus {
    /// Sound: a refutation certificate exists.
    IntegerUnsat(Certificate),
    /// Rationally feasible; no integer witness found within bounds.
    RationalSatUnknownInteger,
    /// A concrete integer point satisfying all constraints.
    IntegerSatWitness(Vec<i64>),
    /// A resource cap was exceeded; never reported as UNSAT.
    UnknownCapped(String),
}

impl SatStatus {
    pub fn is_unsat(&self) -> bool {
        matches!(self, SatStatus::IntegerUnsat(_))
    }

    pub fn is_satish(&self) -> bool {
        matches!(
            self,
            SatStatus::RationalSatUnknownInteger | SatStatus::IntegerSatWitness(_)
        )
    }
}

/// Replayable refutation trace: equality substitutions, eliminations and
/// the final contradictory constant constraint.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Certificate {
    pub steps: Vec<String>,
    pub conflict: String,
}

impl fmt::Display for Certificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.steps {
            writeln!(f, "{}", s)?;
        }
        write!(f, "conflict: {}", self.conflict)
    }
}

impl LinearSystem {
    pub fn new(vars: Vec<String>) -> Self {
        LinearSystem { vars, eqs: vec![], ineqs: vec![], diff: Default::default() }
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v == name)
    }

    /// Adds a variable if not present and returns its index.
    pub fn ensure_var(&mut self, name: &str) -> usize {
        if let Some(i) = self.var_index(name) {
            return i;
        }
        self.vars.push(name.to_string());
        for r in self.eqs.iter_mut().chain(self.ineqs.iter_mut()) {
            r.coeffs.push(BigInt::zero());
        }
        self.diff.replace(None);
        self.vars.len() - 1
    }

    pub fn push_eq(&mut self, row: Row) {
        self.eqs.push(row);
        self.diff.replace(None);
    }

    pub fn push_geq(&mut self, row: Row) {
        self.ineqs.push(row);
        self.diff.replace(None);
    }

    fn with_diff<T>(&self, f: impl FnOnce(&DiffRepr) -> T) -> T {
        {
            let cached = self.diff.borrow();
            if let Some(d) = cached.as_ref() {
                return f(d);
            }
        }
        let n = self.vars.len();
        let mut edges = Vec::new();
        let mut pure = true;
        for row in &self.ineqs {
            pure &= row_to_edges(row, n, &mut edges);
        }
        for row in &self.eqs {
            pure &= row_to_edges(row, n, &mut edges);
            pure &= row_to_edges(&row.neg(), n, &mut edges);
        }
        let repr = DiffRepr { edges, pure };
        let out = f(&repr);
        self.diff.replace(Some(repr));
        out
    }

    pub fn row_from(&self, terms: &[(i64, &str)], constant: i64) -> Row {
        let mut r = Row::zero(self.vars.len());
        r.constant = BigInt::from(constant);
        for (c, v) in terms {
            let i = self
                .var_index(v)
                .unwrap_or_else(|| panic!("unknown variable `{}`", v));
            r.coeffs[i] += BigInt::from(*c);
        }
        r
    }

    pub fn satisfied_by(&self, point: &[i64]) -> bool {
        self.eqs.iter().all(|r| r.eval(point).is_zero())
            && self.ineqs.iter().all(|r| !r.eval(point).is_negative())
    }

    /// Integer satisfiability check. See module docs for the procedure.
    /// Systems whose rows are all unit-coefficient difference
    /// constraints are decided exactly by negative-cycle detection; the
    /// general path is Fourier-Motzkin with tightening.
    pub fn check(&self) -> SatStatus {
        let mut cert = Certificate::default();
        let mut work = self.clone();
        match presolve_equalities(&mut work, &mut cert) {
            Presolve::Unsat => return SatStatus::IntegerUnsat(cert),
            Presolve::Capped(m) => return SatStatus::UnknownCapped(m),
            Presolve::Ok(substs) => {
                match difference_check(&work, &mut cert) {
                    DiffOutcome::Unsat => return SatStatus::IntegerUnsat(cert),
                    DiffOutcome::SatWitness(mut point) => {
                        back_substitute(&mut point, &work.vars, &substs, &self.vars);
                        if self.satisfied_by(&point) {
                            return SatStatus::IntegerSatWitness(point);
                        }
                        // fall through to the general engine
                    }
                    DiffOutcome::Inconclusive => {}
                }
                match fm_run(&work, &mut cert) {
                    FmOutcome::Unsat => SatStatus::IntegerUnsat(cert),
                    FmOutcome::Capped(m) => SatStatus::UnknownCapped(m),
                    FmOutcome::RationalSat => match witness_search(&work) {
                        Some(mut point) => {
                            // re-express the witness over the original vars
                            back_substitute(&mut point, &work.vars, &substs, &self.vars);
                            if self.satisfied_by(&point) {
                                SatStatus::IntegerSatWitness(point)
                            } else {
                                SatStatus::RationalSatUnknownInteger
                            }
                        }
                        None => SatStatus::RationalSatUnknownInteger,
                    },
                }
            }
        }
    }

    /// Sound entailment: true only if every integer point of `self`
    /// satisfies `row >= 0`. The cached difference graph decides the
    /// common case without cloning; the general engine is the fallback.
    pub fn entails_geq(&self, row: &Row) -> bool {
        let mut neg = row.neg();
        neg.constant -= 1;
        let fast = self.with_diff(|d| {
            let n = self.vars.len();
            let mut extra = d.edges.clone();
            if row_to_edges(&neg, n, &mut extra) {
                let unsat = bf_unsat(n + 1, &extra);
                if unsat {
                    return Some(true);
                }
                if d.pure {
                    // difference logic is decided exactly
                    return Some(false);
                }
            }
            None
        });
        if let Some(v) = fast {
            return v;
        }
        let mut s = self.clone();
        s.ineqs.push(neg);
        s.check().is_unsat()
    }

    pub fn entails_eq(&self, row: &Row) -> bool {
        self.entails_geq(row) && self.entails_geq(&row.neg())
    }

    /// Discovers equalities entailed but not explicit: reversed copies of
    /// present inequalities, variable-difference candidates for variables
    /// sharing a constraint, and fixed-value variables.
    pub fn implied_equalities(&self, exhaustive_pairs: bool) -> Vec<Row> {
        let mut found: Vec<Row> = Vec::new();
        let mut seen: std::collections::BTreeSet<Row> = self
            .eqs
            .iter()
            .map(|r| canonical_eq(r.clone()))
            .collect();
        let push = |row: Row, found: &mut Vec<Row>, seen: &mut std::collections::BTreeSet<Row>| {
            if row.is_const() {
                return;
            }
            let c = canonical_eq(row);
            if seen.insert(c.clone()) {
                found.push(c);
            }
        };
        for r in &self.ineqs {
            if r.is_const() {
                continue;
            }
            if self.entails_geq(&r.neg()) {
                push(r.clone(), &mut found, &mut seen);
            }
        }
        // variable pairs co-occurring in some constraint
        let mut pairs: std::collections::BTreeSet<(usize, usize)> = Default::default();
        for r in self.eqs.iter().chain(self.ineqs.iter()) {
            let present: Vec<usize> = (0..self.vars.len())
                .filter(|&i| !r.coeffs[i].is_zero())
                .collect();
            for a in 0..present.len() {
                for b in a + 1..present.len() {
                    pairs.insert((present[a], present[b]));
                }
            }
        }
        if exhaustive_pairs {
            for a in 0..self.vars.len() {
                for b in a + 1..self.vars.len() {
                    pairs.insert((a, b));
                }
            }
        }
        for (a, b) in pairs {
            let mut row = Row::zero(self.vars.len());
            row.coeffs[a] = BigInt::one();
            row.coeffs[b] = -BigInt::one();
            if seen.contains(&canonical_eq(row.clone())) {
                continue;
            }
            if self.entails_eq(&row) {
                push(row, &mut found, &mut seen);
            }
        }
        found
    }

    /// Projects out one variable. The result is the rational shadow,
    /// marked exact when the Omega-style condition holds (all inequality
    /// coefficients of `v` are +-1 and `v` is absent from equalities or
    /// has a unit coefficient there).
    pub fn eliminate(&self, v: &str) -> (LinearSystem, bool) {
        let Some(idx) = self.var_index(v) else {
            return (self.clone(), true);
        };
        let mut work = self.clone();
        let mut exact = true;
        // substitute via an equality when possible
        if let Some(pos) = work.eqs.iter().position(|r| !r.coeffs[idx].is_zero()) {
            let row = work.eqs.remove(pos);
            if row.coeffs[idx].abs().is_one() {
                substitute_row(&mut work, idx, &row);
            } else {
                exact = false;
                work.eqs.push(row.clone());
                // fall through to FM over the two-inequality encoding
                work.ineqs.push(row.clone());
                work.ineqs.push(row.neg());
                work.eqs.retain(|r| r.coeffs[idx].is_zero());
            }
        }
        let (lowers, uppers, rest): (Vec<Row>, Vec<Row>, Vec<Row>) = split_for_var(&work.ineqs, idx);
        for r in lowers.iter().chain(uppers.iter()) {
            if !r.coeffs[idx].abs().is_one() {
                exact = false;
            }
        }
        let mut out = LinearSystem {
            diff: Default::default(),
            vars: remove_index(&work.vars, idx),
            eqs: work
                .eqs
                .iter()
                .filter(|r| r.coeffs[idx].is_zero())
                .map(|r| Row { coeffs: remove_index(&r.coeffs, idx), constant: r.constant.clone() })
                .collect(),
            ineqs: rest
                .iter()
                .map(|r| Row { coeffs: remove_index(&r.coeffs, idx), constant: r.constant.clone() })
                .collect(),
        };
        for lo in &lowers {
            for up in &uppers {
                if let Some(mut comb) = combine(lo, up, idx) {
                    comb.tighten_geq();
                    out.ineqs.push(Row {
                        coeffs: remove_index(&comb.coeffs, idx),
                        constant: comb.constant,
                    });
                }
            }
        }
        dedup_rows(&mut out.ineqs);
        (out, exact)
    }
}

fn canonical_eq(mut row: Row) -> Row {
    let g = row.content().gcd(&row.constant);
    if g > BigInt::one() {
        for c in &mut row.coeffs {
            *c /= &g;
        }
        row.constant /= &g;
    }
    if let Some(first) = row.coeffs.iter().find(|c| !c.is_zero()) {
        if first.is_negative() {
            row = row.neg();
        }
    }
    row
}

fn remove_index<T: Clone>(v: &[T], idx: usize) -> Vec<T> {
    v.iter()
        .enumerate()
        .filter(|(i, _)| *i != idx)
        .map(|(_, x)| x.clone())
        .collect()
}

enum Presolve {
    Ok(Vec<(usize, Row)>),
    Unsat,
    Capped(String),
}

/// Gcd-tests and substitutes away equalities with a unit-coefficient
/// variable. Remaining equalities become inequality pairs.
fn presolve_equalities(sys: &mut LinearSystem, cert: &mut Certificate) -> Presolve {
    let mut substs: Vec<(usize, Row)> = Vec::new();
    loop {
        let mut changed = false;
        let mut i = 0;
        while i < sys.eqs.len() {
            let row = sys.eqs[i].clone();
            if row.is_const() {
                if row.constant.is_zero() {
                    sys.eqs.remove(i);
                    continue;
                }
                cert.conflict = format!("equality reduces to {} = 0", row.constant);
                return Presolve::Unsat;
            }
            let g = row.content();
            if !(&row.constant % &g).is_zero() {
                cert.steps.push(format!(
                    "gcd test: {} does not divide constant in {} = 0",
                    g,
                    row.display(&sys.vars)
                ));
                cert.conflict = "no integer solution to equality (gcd test)".into();
                return Presolve::Unsat;
            }
            if let Some(idx) = row.coeffs.iter().position(|c| c.abs().is_one()) {
                cert.steps.push(format!(
                    "substitute {} using {} = 0",
                    sys.vars[idx],
                    row.display(&sys.vars)
                ));
                sys.eqs.remove(i);
                substitute_row(sys, idx, &row);
                substs.push((idx, row));
                changed = true;
                continue;
            }
            i += 1;
        }
        if !changed {
            break;
        }
    }
    // leftover non-unit equalities: keep them as inequality pairs
    for row in std::mem::take(&mut sys.eqs) {
        sys.ineqs.push(row.clone());
        sys.ineqs.push(row.neg());
    }
    for r in &sys.ineqs {
        if r.max_bits() > COEFF_BIT_CAP {
            return Presolve::Capped("coefficient size cap exceeded".into());
        }
    }
    Presolve::Ok(substs)
}

/// Replaces `var[idx]` in all rows using the equality `row = 0`
/// (which has a +-1 coefficient on `idx`).
fn substitute_row(sys: &mut LinearSystem, idx: usize, row: &Row) {
    // solve row for var[idx]: var = expr
    let sign = if row.coeffs[idx].is_negative() { 1 } else { -1 };
    let solved = row.scale(&BigInt::from(sign)); // var[idx] coeff is now -1
    for r in sys.eqs.iter_mut().chain(sys.ineqs.iter_mut()) {
        let c = r.coeffs[idx].clone();
        if c.is_zero() {
            continue;
        }
        // r + c * solved has zero coefficient on idx
        let mut nr = r.add(&solved.scale(&c));
        nr.coeffs[idx] = BigInt::zero();
        *r = nr;
    }
}

fn split_for_var(ineqs: &[Row], idx: usize) -> (Vec<Row>, Vec<Row>, Vec<Row>) {
    let mut lowers = Vec::new();
    let mut uppers = Vec::new();
    let mut rest = Vec::new();
    for r in ineqs {
        if r.coeffs[idx].is_positive() {
            lowers.push(r.clone());
        } else if r.coeffs[idx].is_negative() {
            uppers.push(r.clone());
        } else {
            rest.push(r.clone());
        }
    }
    (lowers, uppers, rest)
}

/// Combines a lower and an upper bound row on `idx`, eliminating it.
fn combine(lo: &Row, up: &Row, idx: usize) -> Option<Row> {
    let a = lo.coeffs[idx].clone(); // > 0
    let b = -up.coeffs[idx].clone(); // > 0
    let g = a.gcd(&b);
    let (ma, mb) = (&b / &g, &a / &g);
    let comb = lo.scale(&ma).add(&up.scale(&mb));
    debug_assert!(comb.coeffs[idx].is_zero());
    Some(comb)
}

fn dedup_rows(rows: &mut Vec<Row>) {
    // keep only the tightest row per coefficient vector
    let mut best: BTreeMap<Vec<BigInt>, BigInt> = BTreeMap::new();
    for r in rows.drain(..) {
        match best.get_mut(&r.coeffs) {
            Some(k) => {
                if r.constant < *k {
                    *k = r.constant;
                }
            }
            None => {
                best.insert(r.coeffs, r.constant);
            }
        }
    }
    *rows = best
        .into_iter()
        .map(|(coeffs, constant)| Row { coeffs, constant })
        .collect();
}

enum DiffOutcome {
    Unsat,
    SatWitness(Vec<i64>),
    Inconclusive,
}

/// Difference-logic fast path. Rows of the form `x - y + k >= 0`,
/// `x + k >= 0` or `-x + k >= 0` map to weighted edges; a negative
/// cycle refutes the system, otherwise shortest-path potentials give an
/// integer witness. Complete when every row is a difference row.
fn difference_check(sys: &LinearSystem, cert: &mut Certificate) -> DiffOutcome {
    use num_traits::ToPrimitive;
    let n = sys.vars.len();
    let zero_node = n; // virtual variable fixed to 0
    // edge (u, v, w) encodes var_v - var_u <= w
    let mut edges: Vec<(usize, usize, i64)> = Vec::new();
    let mut pure = true;
    let add_row = |row: &Row, edges: &mut Vec<(usize, usize, i64)>, pure: &mut bool| {
        let nz: Vec<usize> = (0..n).filter(|&i| !row.coeffs[i].is_zero()).collect();
        let Some(k) = row.constant.to_i64() else {
            *pure = false;
            return;
        };
        match nz.len() {
            0 => {
                if k < 0 {
                    edges.push((zero_node, zero_node, -1)); // immediate conflict
                }
            }
            1 => {
                let i = nz[0];
                let c = row.coeffs[i].to_i64().unwrap_or(0);
                if c == 1 {
                    // x + k >= 0: 0 - x <= k
                    edges.push((i, zero_node, k));
                } else if c == -1 {
                    // -x + k >= 0: x - 0 <= k
                    edges.push((zero_node, i, k));
                } else {
                    *pure = false;
                }
            }
            2 => {
                let (i, j) = (nz[0], nz[1]);
                let (ci, cj) = (
                    row.coeffs[i].to_i64().unwrap_or(0),
                    row.coeffs[j].to_i64().unwrap_or(0),
                );
                match (ci, cj) {
                    (1, -1) => edges.push((i, j, k)),  // y - x <= k with x=i
                    (-1, 1) => edges.push((j, i, k)),
                    _ => *pure = false,
                }
            }
            _ => *pure = false,
        }
    };
    for row in &sys.ineqs {
        let mut r = row.clone();
        r.tighten_geq();
        add_row(&r, &mut edges, &mut pure);
    }
    for row in &sys.eqs {
        add_row(row, &mut edges, &mut pure);
        add_row(&row.neg(), &mut edges, &mut pure);
        if !pure {
            break;
        }
    }
    // Bellman-Ford from a super-source (all distances start at 0)
    let nodes = n + 1;
    let mut dist = vec![0i128; nodes];
    let mut pred: Vec<Option<usize>> = vec![None; nodes];
    let mut changed_node = None;
    for round in 0..nodes {
        let mut changed = false;
        for &(u, v, w) in &edges {
            if dist[u] + (w as i128) < dist[v] {
                dist[v] = dist[u] + w as i128;
                pred[v] = Some(u);
                changed = true;
                if round + 1 == nodes {
                    changed_node = Some(v);
                }
            }
        }
        if !changed {
            break;
        }
    }
    if let Some(start) = changed_node {
        // walk back to the cycle for the certificate
        let mut node = start;
        for _ in 0..nodes {
            node = pred[node].unwrap_or(node);
        }
        let mut cycle = vec![node];
        let mut cur = pred[node].unwrap_or(node);
        while cur != node && cycle.len() <= nodes {
            cycle.push(cur);
            cur = pred[cur].unwrap_or(cur);
        }
        let names: Vec<String> = cycle
            .iter()
            .rev()
            .map(|&i| {
                if i == zero_node {
                    "0".to_string()
                } else {
                    sys.vars[i].clone()
                }
            })
            .collect();
        cert.steps
            .push(format!("negative difference cycle through {}", names.join(" -> ")));
        cert.conflict = "difference constraints form a negative cycle".into();
        return DiffOutcome::Unsat;
    }
    if !pure {
        return DiffOutcome::Inconclusive;
    }
    let base = dist[zero_node];
    let mut point = Vec::with_capacity(n);
    for i in 0..n {
        match i64::try_from(dist[i] - base) {
            Ok(v) => point.push(v),
            Err(_) => return DiffOutcome::Inconclusive,
        }
    }
    DiffOutcome::SatWitness(point)
}

enum FmOutcome {
    RationalSat,
    Unsat,
    Capped(String),
}

fn fm_run(sys: &LinearSystem, cert: &mut Certificate) -> FmOutcome {
    let mut rows: Vec<Row> = sys.ineqs.clone();
    for r in &mut rows {
        r.tighten_geq();
    }
    dedup_rows(&mut rows);
    if let Some(r) = rows.iter().find(|r| r.is_const() && r.constant.is_negative()) {
        cert.conflict = format!("{} >= 0 is false", r.constant);
        return FmOutcome::Unsat;
    }
    let nvars = sys.vars.len();
    let mut alive: Vec<usize> = (0..nvars)
        .filter(|&i| rows.iter().any(|r| !r.coeffs[i].is_zero()))
        .collect();
    let mut total_rows = rows.len();
    while !alive.is_empty() {
        // min-product heuristic: eliminate the variable producing the
        // fewest combined rows first
        let idx = *alive
            .iter()
            .min_by_key(|&&i| {
                let mut pos = 0usize;
                let mut neg = 0usize;
                for r in &rows {
                    if r.coeffs[i].is_positive() {
                        pos += 1;
                    } else if r.coeffs[i].is_negative() {
                        neg += 1;
                    }
                }
                pos * neg
            })
            .unwrap();
        let (lowers, uppers, rest) = split_for_var(&rows, idx);
        let mut next = rest;
        for lo in &lowers {
            for up in &uppers {
                if let Some(mut comb) = combine(lo, up, idx) {
                    comb.tighten_geq();
                    if comb.max_bits() > COEFF_BIT_CAP {
                        return FmOutcome::Capped("coefficient size cap exceeded".into());
                    }
                    if comb.is_const() {
                        if comb.constant.is_negative() {
                            cert.steps.push(format!(
                                "eliminate {}: combine {} >= 0 with {} >= 0",
                                sys.vars[idx],
                                lo.display(&sys.vars),
                                up.display(&sys.vars)
                            ));
                            cert.conflict = format!("derived {} >= 0", comb.constant);
                            return FmOutcome::Unsat;
                        }
                        continue;
                    }
                    next.push(comb);
                    total_rows += 1;
                    if total_rows > DERIVED_ROW_CAP {
                        return FmOutcome::Capped("derived inequality cap exceeded".into());
                    }
                }
            }
        }
        dedup_rows(&mut next);
        rows = next;
        cert.steps.push(format!("eliminated {}", sys.vars[idx]));
        alive = (0..nvars)
            .filter(|&i| rows.iter().any(|r| !r.coeffs[i].is_zero()))
            .collect();
        if let Some(r) = rows.iter().find(|r| r.is_const() && r.constant.is_negative()) {
            cert.conflict = format!("derived {} >= 0", r.constant);
            return FmOutcome::Unsat;
        }
    }
    FmOutcome::RationalSat
}

/// Interval propagation plus DFS over finite-range variables.
fn witness_search(sys: &LinearSystem) -> Option<Vec<i64>> {
    let n = sys.vars.len();
    let mut lo = vec![i64::MIN; n];
    let mut hi = vec![i64::MAX; n];
    // a few propagation sweeps to derive per-variable bounds
    for _ in 0..4 {
        for r in &sys.ineqs {
            for i in 0..n {
                let ci = &r.coeffs[i];
                if ci.is_zero() {
                    continue;
                }
                // valid-for-all-solutions bound on var i: take the maximum
                // of the remaining terms over the current box
                let mut rest_max = r.constant.clone();
                let mut ok = true;
                for j in 0..n {
                    if j == i || r.coeffs[j].is_zero() {
                        continue;
                    }
                    let cj = &r.coeffs[j];
                    let b = if cj.is_positive() { hi[j] } else { lo[j] };
                    if b == i64::MIN || b == i64::MAX {
                        ok = false;
                        break;
                    }
                    rest_max += cj * BigInt::from(b);
                }
                if !ok {
                    continue;
                }
                // ci * xi + rest_max >= 0 bounds xi
                use num_traits::ToPrimitive;
                if ci.is_positive() {
                    let bound = (-rest_max).div_ceil(ci);
                    if let Some(b) = bound.to_i64() {
                        lo[i] = lo[i].max(b);
                    }
                } else {
                    let bound = rest_max.div_floor(&-ci.clone());
                    if let Some(b) = bound.to_i64() {
                        hi[i] = hi[i].min(b);
                    }
                }
            }
        }
    }
    for i in 0..n {
        if lo[i] == i64::MIN || hi[i] == i64::MAX {
            return None;
        }
        if lo[i] > hi[i] {
            return None;
        }
        if hi[i] - lo[i] > WITNESS_RANGE_CAP {
            return None;
        }
    }
    let mut point = vec![0i64; n];
    let mut nodes = 0usize;
    fn dfs(
        sys: &LinearSystem,
        lo: &[i64],
        hi: &[i64],
        point: &mut Vec<i64>,
        depth: usize,
        nodes: &mut usize,
    ) -> bool {
        if depth == lo.len() {
            return sys.satisfied_by(point);
        }
        for v in lo[depth]..=hi[depth] {
            *nodes += 1;
            if *nodes > WITNESS_NODE_CAP {
                return false;
            }
            point[depth] = v;
            // partial feasibility: rows fully assigned so far must hold
            let assigned = |r: &Row| r.coeffs[depth + 1..].iter().all(|c| c.is_zero());
            let feasible = sys
                .ineqs
                .iter()
                .all(|r| !assigned(r) || !r.eval(point).is_negative())
                && sys.eqs.iter().all(|r| !assigned(r) || r.eval(point).is_zero());
            if feasible && dfs(sys, lo, hi, point, depth + 1, nodes) {
                return true;
            }
        }
        false
    }
    if dfs(sys, &lo, &hi, &mut point, 0, &mut nodes) {
        Some(point)
    } else {
        None
    }
}

fn back_substitute(point: &mut Vec<i64>, _work_vars: &[String], substs: &[(usize, Row)], orig_vars: &[String]) {
    // work retains the same variable list; substituted vars were merely
    // zeroed out of rows. Recompute them from their defining equalities,
    // most recent substitution first.
    let _ = orig_vars;
    use num_traits::ToPrimitive;
    for (idx, row) in substs.iter().rev() {
        // row = 0 with +-1 coefficient at idx: solve
        let sign = if row.coeffs[*idx].is_negative() { 1i64 } else { -1i64 };
        let mut acc = row.constant.clone();
        for (j, c) in row.coeffs.iter().enumerate() {
            if j == *idx || c.is_zero() {
                continue;
            }
            acc += c * BigInt::from(point[j]);
        }
        point[*idx] = (acc * BigInt::from(sign)).to_i64().unwrap_or(0);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sys(vars: &[&str]) -> LinearSystem {
        LinearSystem::new(vars.iter().map(|s| s.to_string()).collect())
    }

    #[test]
    fn equal_and_strictly_less_is_unsat() {
        // i = ip and i + 1 <= ip
        let mut s = sys(&["i", "ip"]);
        let eq = s.row_from(&[(1, "i"), (-1, "ip")], 0);
        s.push_eq(eq);
        let lt = s.row_from(&[(-1, "i"), (1, "ip")], -1);
        s.push_geq(lt);
        assert!(s.check().is_unsat());
    }

    #[test]
    fn crossing_strict_bounds_are_unsat() {
        // v1 + 1 <= v2 and v2 + 1 <= v1
        let mut s = sys(&["v1", "v2"]);
        let a = s.row_from(&[(-1, "v1"), (1, "v2")], -1);
        let b = s.row_from(&[(1, "v1"), (-1, "v2")], -1);
        s.push_geq(a);
        s.push_geq(b);
        assert!(s.check().is_unsat());
    }

    #[test]
    fn gcd_test_catches_parity_conflict() {
        // 0 <= i <= 5 and 2i = 3
        let mut s = sys(&["i"]);
        let lo = s.row_from(&[(1, "i")], 0);
        let hi = s.row_from(&[(-1, "i")], 5);
        let eq = s.row_from(&[(2, "i")], -3);
        s.push_geq(lo);
        s.push_geq(hi);
        s.push_eq(eq);
        assert!(s.check().is_unsat());
    }

    #[test]
    fn feasible_box_yields_witness() {
        let mut s = sys(&["i", "j"]);
        let rows = [
            s.row_from(&[(1, "i")], 0),
            s.row_from(&[(-1, "i")], 5),
            s.row_from(&[(1, "j")], 0),
            s.row_from(&[(-1, "j")], 5),
            s.row_from(&[(1, "i"), (-1, "j")], -2), // i >= j + 2
        ];
        for r in rows {
            s.push_geq(r);
        }
        match s.check() {
            SatStatus::IntegerSatWitness(p) => {
                assert!(s.satisfied_by(&p));
            }
            other => panic!("expected witness, got {:?}", other),
        }
    }

    #[test]
    fn entails_examples() {
        // {i >= 3} entails i >= 0
        let mut s = sys(&["i"]);
        let r = s.row_from(&[(1, "i")], -3);
        s.push_geq(r);
        let c = s.row_from(&[(1, "i")], 0);
        assert!(s.entails_geq(&c));

        // {i <= ip} does not entail ip <= i
        let mut s2 = sys(&["i", "ip"]);
        let r2 = s2.row_from(&[(-1, "i"), (1, "ip")], 0);
        s2.push_geq(r2);
        let c2 = s2.row_from(&[(1, "i"), (-1, "ip")], 0);
        assert!(!s2.entails_geq(&c2));

        // {2 <= 2i} entails i >= 1 (integer tightening)
        let mut s3 = sys(&["i"]);
        let r3 = s3.row_from(&[(2, "i")], -2);
        s3.push_geq(r3);
        let c3 = s3.row_from(&[(1, "i")], -1);
        assert!(s3.entails_geq(&c3));
    }

    #[test]
    fn implied_equalities_from_opposed_bounds() {
        // {i <= ip, ip <= i} -> i = ip
        let mut s = sys(&["i", "ip"]);
        let a = s.row_from(&[(-1, "i"), (1, "ip")], 0);
        let b = s.row_from(&[(1, "i"), (-1, "ip")], 0);
        s.push_geq(a);
        s.push_geq(b);
        let eqs = s.implied_equalities(false);
        assert_eq!(eqs.len(), 1);
        assert!(s.entails_eq(&eqs[0]));
    }

    #[test]
    fn implied_equality_pins_single_variable() {
        // {0 <= i <= 0} -> i = 0
        let mut s = sys(&["i"]);
        let a = s.row_from(&[(1, "i")], 0);
        let b = s.row_from(&[(-1, "i")], 0);
        s.push_geq(a);
        s.push_geq(b);
        let eqs = s.implied_equalities(false);
        assert_eq!(eqs.len(), 1);
    }

    #[test]
    fn eliminate_projects_and_flags_exactness() {
        // {0 <= j, j <= i - 1} eliminate j -> i >= 1
        let mut s = sys(&["j", "i"]);
        let a = s.row_from(&[(1, "j")], 0);
        let b = s.row_from(&[(-1, "j"), (1, "i")], -1);
        s.push_geq(a);
        s.push_geq(b);
        let (out, exact) = s.eliminate("j");
        assert!(exact);
        assert_eq!(out.vars, vec!["i".to_string()]);
        assert_eq!(out.ineqs.len(), 1);
        assert_eq!(out.ineqs[0].constant, BigInt::from(-1));

        // elimination of an absent variable is the identity
        let (out2, exact2) = s.eliminate("zz");
        assert!(exact2);
        assert_eq!(out2.ineqs.len(), s.ineqs.len());

        // {2j = i, 0 <= j <= 3}: coefficient 2 breaks the exactness condition
        let mut s3 = sys(&["j", "i"]);
        let eq = s3.row_from(&[(2, "j"), (-1, "i")], 0);
        s3.push_eq(eq);
        let lo = s3.row_from(&[(1, "j")], 0);
        let hi = s3.row_from(&[(-1, "j")], 3);
        s3.push_geq(lo);
        s3.push_geq(hi);
        let (_, exact3) = s3.eliminate("j");
        assert!(!exact3);
    }

    #[test]
    fn adding_constraints_preserves_unsat() {
        let mut s = sys(&["i", "ip"]);
        let eq = s.row_from(&[(1, "i"), (-1, "ip")], 0);
        s.push_eq(eq);
        let lt = s.row_from(&[(-1, "i"), (1, "ip")], -1);
        s.push_geq(lt);
        assert!(s.check().is_unsat());
        let extra = s.row_from(&[(1, "i")], 0);
        s.push_geq(extra);
        assert!(s.check().is_unsat());
    }
}
