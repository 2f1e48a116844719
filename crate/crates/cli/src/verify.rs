//! Comparing computed reports with the expected table.

use std::path::Path;

use bianchi_core::cellcomplex::StabiliserType;
use bianchi_core::poly::RationalFunction;
use bianchi_core::{Error, Result};
use rayon::prelude::*;
use serde::Serialize;

use crate::expected::{parse_group, ExpectedTable, RankCoefficients, Suite};
use crate::report::{compute, ComputationReport};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Check {
    pub m: i64,
    pub item: String,
    pub expected: String,
    pub found: String,
    pub pass: bool,
}

impl Check {
    fn new(m: i64, item: impl Into<String>, expected: impl ToString, found: impl ToString, pass: bool) -> Check {
        Check { m, item: item.into(), expected: expected.to_string(), found: found.to_string(), pass }
    }
}

/// What to compare for one field.
#[derive(Clone, Debug, Default)]
pub struct Selection {
    pub ells: Vec<u64>,
    pub census: bool,
}

/// Every check the table supports for this report, restricted to the selection.
pub fn check_report(r: &ComputationReport, table: &ExpectedTable, sel: &Selection) -> Vec<Check> {
    let m = r.m;
    let mut out = Vec::new();
    out.push(Check::new(m, "equivariant Euler value", "0", &r.euler_value, r.euler_value == "0"));
    out.push(Check::new(m, "naive Euler characteristic", 0, r.naive_euler, r.naive_euler == 0));
    for t in &r.torsion {
        if !sel.ells.contains(&t.ell) {
            continue;
        }
        let ell = t.ell;
        if let Some(exp) = table.series.get(&(ell, m)) {
            let found = RationalFunction::from_record(&t.series);
            let pass = found.as_ref().is_ok_and(|f| f == exp);
            let shown = found.map(|f| bianchi_core::specseq::negated_form(&f)).unwrap_or_else(|e| e.to_string());
            out.push(Check::new(m, format!("series ell={ell}"), exp, shown, pass));
        }
        if !t.exceptional {
            out.push(Check::new(m, format!("degree table ell={ell}"), "0 violations", format!("{} violations", t.degree_violations.len()), t.degree_violations.is_empty()));
            let agree = t.reduction_agrees == Some(true) && t.classification_agrees == Some(true);
            out.push(Check::new(
                m,
                format!("reduction and classification ell={ell}"),
                "agree",
                format!("reduced {:?}, classified {:?}", t.reduction_agrees, t.classification_agrees),
                agree,
            ));
        }
        for ((tm, tell, coeff, q), &rank) in &table.d1_ranks {
            if *tm != m || *tell != ell {
                continue;
            }
            let found = t.d1_ranks.iter().find(|row| row.q == *q).map(|row| if *coeff == RankCoefficients::Integral { row.integral } else { row.modular });
            let shown = found.map_or_else(|| "not computed".to_string(), |r| r.to_string());
            out.push(Check::new(m, format!("d1 rank ell={ell} q={q} {coeff:?}"), rank, shown, found == Some(rank)));
        }
    }
    if let Some(h) = &r.homology {
        if let Some(&b) = table.betti1.get(&m) {
            out.push(Check::new(m, "betti1", b, h.betti[1], h.betti[1] == b));
        }
        for ((tm, q), g) in &table.homology {
            if *tm == m {
                let found = h.groups.get(*q).cloned().unwrap_or_default();
                let pass = parse_group(&found).is_ok_and(|f| &f == g);
                out.push(Check::new(m, format!("H_{q}"), g, found, pass));
            }
        }
        for ((tm, q), g) in &table.torsion {
            if *tm == m {
                let found = h.groups.get(*q).and_then(|s| parse_group(s).ok()).map(|mut f| {
                    f.free = 0;
                    f
                });
                let pass = found.as_ref() == Some(g);
                out.push(Check::new(m, format!("torsion of H_{q}"), g, found.map(|f| f.to_string()).unwrap_or_default(), pass));
            }
        }
    }
    if sel.census {
        if let Some(exp) = table.census.get(&m) {
            for (d, counts) in exp.iter().enumerate() {
                let kinds: Vec<StabiliserType> = StabiliserType::FINITE.to_vec();
                let fmt_row = |f: &dyn Fn(StabiliserType) -> usize| kinds.iter().filter(|&&k| f(k) > 0).map(|&k| format!("{}:{}", k.name(), f(k))).collect::<Vec<_>>().join(" ");
                let want = fmt_row(&|k| counts.get(&k).copied().unwrap_or(0));
                let got = fmt_row(&|k| r.census_count(d, k));
                out.push(Check::new(m, format!("census dim {d}"), &want, &got, want == got));
            }
        }
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct FieldOutcome {
    pub m: i64,
    pub checks: Vec<Check>,
    /// Set when the pipeline failed for this field.
    pub error: Option<String>,
    #[serde(skip)]
    pub error_kind: Option<ErrorKind>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorKind {
    Input,
    Internal,
}

fn classify(e: &Error) -> ErrorKind {
    match e {
        Error::Input(_) => ErrorKind::Input,
        _ => ErrorKind::Internal,
    }
}

/// Computes and checks every field of a suite, in parallel; outcomes are sorted by `m`.
pub fn run_suite(suite: &Suite, table: &ExpectedTable, cache: Option<&Path>, qmax: usize) -> Vec<FieldOutcome> {
    let fields = suite.fields();
    let mut out: Vec<FieldOutcome> = fields
        .par_iter()
        .map(|&m| {
            let ells: Vec<u64> = suite.series.iter().filter(|&&(_, sm)| sm == m).map(|&(ell, _)| ell).collect();
            let sel = Selection { ells, census: suite.census.contains(&m) };
            match compute(m, &[2, 3], cache, qmax) {
                Ok(r) => FieldOutcome { m, checks: check_report(&r, table, &sel), error: None, error_kind: None },
                Err(e) => FieldOutcome { m, checks: Vec::new(), error: Some(e.to_string()), error_kind: Some(classify(&e)) },
            }
        })
        .collect();
    out.sort_by_key(|o| o.m);
    out
}

/// Exit status: 0 all pass, 1 mismatch, 2 input error, 3 internal failure.
pub fn exit_code(outcomes: &[FieldOutcome]) -> i32 {
    if outcomes.iter().any(|o| o.error_kind == Some(ErrorKind::Internal)) {
        3
    } else if outcomes.iter().any(|o| o.error_kind == Some(ErrorKind::Input)) {
        2
    } else if outcomes.iter().flat_map(|o| &o.checks).any(|c| !c.pass) {
        1
    } else {
        0
    }
}

/// A plain-text table, one line per check.
pub fn render(outcomes: &[FieldOutcome]) -> String {
    let mut s = String::new();
    for o in outcomes {
        if let Some(e) = &o.error {
            s.push_str(&format!("FAIL m={:<4} pipeline error: {e}\n", o.m));
        }
        for c in &o.checks {
            let status = if c.pass { "ok  " } else { "FAIL" };
            if c.pass {
                s.push_str(&format!("{status} m={:<4} {}: {}\n", c.m, c.item, c.found));
            } else {
                s.push_str(&format!("{status} m={:<4} {}: expected {}, found {}\n", c.m, c.item, c.expected, c.found));
            }
        }
    }
    s
}

/// A suite for explicitly listed fields: their series for the given primes, and their census
/// when the table has one.
pub fn adhoc_suite(ms: &[i64], ells: &[u64], table: &ExpectedTable) -> Result<Suite> {
    if ms.is_empty() {
        return Err(Error::Input("no fields given".into()));
    }
    let mut s = Suite::default();
    for &m in ms {
        for &ell in ells {
            s.series.push((ell, m));
        }
        if table.census.contains_key(&m) {
            s.census.push(m);
        }
    }
    // fields without an expected series are still computed for the invariant checks
    s.series.retain(|k| table.series.contains_key(k) || !table.series.keys().any(|(_, m)| *m == k.1));
    Ok(s)
}
