//! One line per acceptance criterion. Set `BIANCHI_SLOW=1` to include the slow fields.
//! Criteria listed in `KNOWN_OPEN` are still reported as FAIL but do not fail the run.

#[path = "../../core/tests/support/mod.rs"]
mod support;

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use bianchi_cli::expected::{ExpectedTable, RankCoefficients};
use bianchi_cli::report::{compute, ComputationReport};
use bianchi_core::cellcomplex::StabiliserType;
use bianchi_core::groupcohom::AbelianGroupValue;
use bianchi_core::poly::RationalFunction;
use bianchi_core::specseq::DEFAULT_QMAX;
use bianchi_core::wallres;
use rayon::prelude::*;

const KNOWN_OPEN: &[(usize, &str)] = &[(
    6,
    "naive Euler characteristic of the quotient is 1 for m = 1 and m = 3; m = 427 census differs by one edge and one 2-cell",
)];

struct Run {
    report: ComputationReport,
    elapsed: Duration,
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(failures: Vec<String>, summary: String) -> Outcome {
    if failures.is_empty() {
        Outcome { pass: true, detail: summary }
    } else {
        Outcome { pass: false, detail: failures.join("; ") }
    }
}

fn series_failures(runs: &BTreeMap<i64, Run>, table: &ExpectedTable, ell: u64, ms: &[i64]) -> Vec<String> {
    let mut out = Vec::new();
    for &m in ms {
        let Some(run) = runs.get(&m) else {
            out.push(format!("m = {m} not computed"));
            continue;
        };
        let found = run.report.torsion_for(ell).map(|t| RationalFunction::from_record(&t.series));
        match (table.series.get(&(ell, m)), found) {
            (Some(exp), Some(Ok(f))) if &f == exp => {}
            (exp, found) => out.push(format!("m = {m}, ell = {ell}: expected {exp:?}, found {found:?}")),
        }
    }
    out
}

fn secs(d: Duration) -> String {
    format!("{:.1}s", d.as_secs_f64())
}

fn main() -> ExitCode {
    let slow = std::env::var_os("BIANCHI_SLOW").is_some_and(|v| v != "0");
    let table = ExpectedTable::bundled().expect("bundled table");
    let fast = table.suite("fast").unwrap();
    let pid = table.suite("paper-pid").unwrap();
    let slow_suite = table.suite("slow").unwrap();
    let fig = |suite: &bianchi_cli::expected::Suite, ell: u64| -> Vec<i64> {
        suite.series.iter().filter(|&&(l, m)| l == ell && m != 1 && m != 3).map(|&(_, m)| m).collect()
    };
    let (fast3, fast2) = (fig(&fast, 3), fig(&fast, 2));
    let (slow3, slow2) = (fig(&slow_suite, 3), fig(&slow_suite, 2));

    let mut fields: Vec<i64> = fast.fields().into_iter().chain(pid.fields()).collect();
    if slow {
        fields.extend(slow_suite.fields());
    }
    fields.sort();
    fields.dedup();
    let runs: BTreeMap<i64, Run> = fields
        .par_iter()
        .map(|&m| {
            let start = Instant::now();
            let report = compute(m, &[2, 3], None, DEFAULT_QMAX).unwrap_or_else(|e| panic!("m = {m}: {e}"));
            (m, Run { report, elapsed: start.elapsed() })
        })
        .collect();

    let mut results: Vec<(usize, &str, Outcome)> = Vec::new();

    // 1
    let mut fails = Vec::new();
    let betti = [(19, 1), (43, 2), (67, 3), (163, 7)];
    let h2_torsion = AbelianGroupValue::from_cyclic(&[4, 2, 3]);
    for (m, b) in betti {
        let run = &runs[&m];
        match &run.report.homology {
            Some(h) => {
                if h.betti[1] != b {
                    fails.push(format!("m = {m}: betti1 {}", h.betti[1]));
                }
                let g = bianchi_cli::expected::parse_group(&h.groups[2]).map(|mut g| {
                    g.free = 0;
                    g
                });
                if g.as_ref().ok() != Some(&h2_torsion) {
                    fails.push(format!("m = {m}: H_2 = {}", h.groups[2]));
                }
            }
            None => fails.push(format!("m = {m}: no integral homology")),
        }
        let limit = if m == 163 { 900 } else { 120 };
        if run.elapsed > Duration::from_secs(limit) {
            fails.push(format!("m = {m} took {}", secs(run.elapsed)));
        }
    }
    fails.extend(series_failures(&runs, &table, 2, &[19, 43, 67, 163]));
    fails.extend(series_failures(&runs, &table, 3, &[19, 43, 67, 163]));
    let times: Vec<String> = betti.iter().map(|(m, _)| format!("{m}: {}", secs(runs[m].elapsed))).collect();
    results.push((1, "class number one homology", outcome(fails, format!("betti1 1, 2, 3, 7; torsion of H_2 Z/4 + Z/2 + Z/3; both series ({})", times.join(", ")))));

    // 2
    let r67 = &runs[&67].report;
    let mut fails = Vec::new();
    for (d, counts) in table.census[&67].iter().enumerate() {
        for (&kind, &n) in counts {
            if r67.census_count(d, kind) != n {
                fails.push(format!("dim {d} {}: {} instead of {n}", kind.name(), r67.census_count(d, kind)));
            }
        }
        let total: usize = counts.values().sum();
        let found: usize = r67.census.iter().filter(|row| row.dim == d && row.kind != StabiliserType::Zsquare).map(|row| row.count).sum();
        if total != found {
            fails.push(format!("dim {d}: {found} orbits instead of {total}"));
        }
    }
    for ((m, ell, coeff, q), &rank) in &table.d1_ranks {
        if *m != 67 {
            continue;
        }
        let row = r67.torsion_for(*ell).and_then(|t| t.d1_ranks.iter().find(|r| r.q == *q));
        let found = row.map(|r| if *coeff == RankCoefficients::Integral { r.integral } else { r.modular });
        if found != Some(rank) {
            fails.push(format!("d1 rank ell = {ell}, q = {q}: {found:?} instead of {rank}"));
        }
    }
    if r67.euler_value != "0" {
        fails.push(format!("Euler value {}", r67.euler_value));
    }
    results.push((2, "m = 67 census, d1 ranks, Euler value", outcome(fails, "census, ranks 8/7 (ell = 3) and 6/5 (ell = 2), Euler value 0".into())));

    // 3 and 4
    for (n, ell, fast_ms, slow_ms) in [(3, 3u64, &fast3, &slow3), (4, 2, &fast2, &slow2)] {
        let mut fails = series_failures(&runs, &table, ell, fast_ms);
        for m in fast_ms.iter() {
            if runs[m].elapsed > Duration::from_secs(300) {
                fails.push(format!("m = {m} took {}", secs(runs[m].elapsed)));
            }
        }
        let mut summary = format!("{} fast fields", fast_ms.len());
        if slow {
            fails.extend(series_failures(&runs, &table, ell, slow_ms));
            summary += &format!(", {} slow fields", slow_ms.len());
        } else {
            summary += " (slow fields skipped)";
        }
        let name = if ell == 3 { "3-torsion series" } else { "2-torsion series" };
        results.push((n, name, outcome(fails, summary)));
    }

    // 5
    let mut fails = series_failures(&runs, &table, 2, &[1, 3]);
    fails.extend(series_failures(&runs, &table, 3, &[1, 3]));
    for (m, ell) in [(1, 2), (3, 3)] {
        if !runs[&m].report.torsion_for(ell).is_some_and(|t| t.exceptional) {
            fails.push(format!("m = {m}, ell = {ell} not on the exceptional path"));
        }
    }
    results.push((5, "Gaussian and Eisenstein series", outcome(fails, "four fractions".into())));

    // 6
    let mut fails = Vec::new();
    for (m, run) in &runs {
        if run.report.euler_value != "0" {
            fails.push(format!("m = {m}: Euler value {}", run.report.euler_value));
        }
        if run.report.naive_euler != 0 {
            fails.push(format!("m = {m}: naive Euler {}", run.report.naive_euler));
        }
    }
    let mut summary = format!("{} fields", runs.len());
    if slow {
        let r = &runs[&427];
        for (d, counts) in table.census[&427].iter().enumerate() {
            let total: usize = counts.values().sum();
            let found: usize = r.report.census.iter().filter(|row| row.dim == d && row.kind != StabiliserType::Zsquare).map(|row| row.count).sum();
            let types_ok = counts.iter().all(|(&k, &n)| r.report.census_count(d, k) == n);
            if total != found || !types_ok {
                let row: Vec<String> = r.report.census.iter().filter(|row| row.dim == d && row.kind != StabiliserType::Zsquare).map(|row| format!("{}:{}", row.kind.name(), row.count)).collect();
                fails.push(format!("m = 427 dim {d}: {}", row.join(" ")));
            }
        }
        if r.elapsed > Duration::from_secs(45 * 60) {
            fails.push(format!("m = 427 took {}", secs(r.elapsed)));
        }
        summary += &format!(", m = 427 in {}", secs(r.elapsed));
    } else {
        summary += " (m = 427 skipped)";
    }
    results.push((6, "mass formulas", outcome(fails, summary)));

    // 7 and 8
    let mut degree = Vec::new();
    let mut agree = Vec::new();
    let mut pairs = 0;
    for (m, run) in &runs {
        for t in run.report.torsion.iter().filter(|t| !t.exceptional) {
            pairs += 1;
            if !t.degree_violations.is_empty() {
                degree.push(format!("m = {m}, ell = {}: {} violations", t.ell, t.degree_violations.len()));
            }
            if t.reduction_agrees != Some(true) || t.classification_agrees != Some(true) {
                agree.push(format!("m = {m}, ell = {}", t.ell));
            }
        }
    }
    results.push((7, "degree table", outcome(degree, format!("{pairs} (m, ell) pairs"))));
    results.push((8, "reduced, unreduced and classified series agree", outcome(agree, format!("{pairs} (m, ell) pairs"))));

    // 9
    let start = Instant::now();
    let wall = wallres::construct().and_then(|w| w.verify());
    let elapsed = start.elapsed();
    let mut fails = Vec::new();
    match &wall {
        Ok(r) => {
            if !r.passed() {
                fails.push(format!("{r:?}"));
            }
            let expected = [AbelianGroupValue::free(1), AbelianGroupValue::from_cyclic(&[3]), AbelianGroupValue::from_cyclic(&[2])];
            if r.homology != expected {
                fails.push(format!("homology {:?}", r.homology.iter().map(ToString::to_string).collect::<Vec<_>>()));
            }
        }
        Err(e) => fails.push(e.to_string()),
    }
    if elapsed > Duration::from_secs(1) {
        fails.push(format!("took {}", secs(elapsed)));
    }
    results.push((9, "resolution for A4", outcome(fails, format!("d1 d2 = 0, d2 d3 = 0, Z, Z/3, Z/2 in {:.0}ms", elapsed.as_secs_f64() * 1000.0))));

    // 10
    let mut fails = Vec::new();
    let mismatches = support::class_number_mismatches(500);
    if !mismatches.is_empty() {
        fails.push(format!("class numbers differ for {mismatches:?}"));
    }
    let floor_fields = fast.fields();
    fails.extend(floor_fields.par_iter().filter_map(|&m| support::check_floor(m, 10_000, m as u64).err()).collect::<Vec<_>>());
    if let Err(e) = support::action_property(1000) {
        fails.push(format!("action: {e}"));
    }
    if let Err(e) = support::uct_property(1000) {
        fails.push(format!("universal coefficients: {e}"));
    }
    results.push((10, "oracles", outcome(fails, format!("class numbers to 500, floor at 10^4 points for {} fields, 1000 cases per property", floor_fields.len()))));

    let mut unexpected = 0;
    for (n, name, o) in &results {
        let known = KNOWN_OPEN.iter().find(|(k, _)| k == n);
        let status = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {n:>2} {status} {name}: {}", o.detail);
        if !o.pass {
            match known {
                Some((_, why)) => println!("             known open: {why}"),
                None => unexpected += 1,
            }
        }
    }
    if unexpected > 0 {
        println!("{unexpected} unexpected failure(s)");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
