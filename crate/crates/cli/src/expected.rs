//! The bundled table of expected values.

use std::collections::BTreeMap;

use bianchi_core::cellcomplex::StabiliserType;
use bianchi_core::groupcohom::AbelianGroupValue;
use bianchi_core::poly::RationalFunction;
use bianchi_core::{Error, Result};

pub const BUNDLED: &str = include_str!("../data/expected.txt");

/// `[dim] -> type -> count`.
pub type CensusCounts = [BTreeMap<StabiliserType, usize>; 3];

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RankCoefficients {
    Integral,
    Modular,
}

#[derive(Clone, Debug, Default)]
pub struct ExpectedTable {
    /// `(ell, m) -> series`.
    pub series: BTreeMap<(u64, i64), RationalFunction>,
    pub betti1: BTreeMap<i64, usize>,
    /// `(m, q) -> H_q`.
    pub homology: BTreeMap<(i64, usize), AbelianGroupValue>,
    /// `(m, q) -> torsion of H_q`.
    pub torsion: BTreeMap<(i64, usize), AbelianGroupValue>,
    /// `(m, ell, coefficients, q) -> rank`.
    pub d1_ranks: BTreeMap<(i64, u64, RankCoefficients, usize), usize>,
    pub census: BTreeMap<i64, CensusCounts>,
    /// `suite -> (series checks (ell, m), census checks m)`.
    pub suites: BTreeMap<String, Suite>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Suite {
    pub series: Vec<(u64, i64)>,
    pub census: Vec<i64>,
}

impl Suite {
    /// All fields involved, sorted.
    pub fn fields(&self) -> Vec<i64> {
        let mut ms: Vec<i64> = self.series.iter().map(|&(_, m)| m).chain(self.census.iter().copied()).collect();
        ms.sort();
        ms.dedup();
        ms
    }
}

fn bad(line: usize, msg: &str) -> Error {
    Error::Input(format!("expected table, line {line}: {msg}"))
}

fn ints<T: std::str::FromStr>(words: &[&str], line: usize) -> Result<Vec<T>> {
    words.iter().map(|w| w.parse().map_err(|_| bad(line, &format!("not a number: {w}")))).collect()
}

/// Parses `Z^2 + (Z/2)^3 + Z/4` and `0`.
pub fn parse_group(s: &str) -> Result<AbelianGroupValue> {
    let s = s.trim();
    if s == "0" {
        return Ok(AbelianGroupValue::zero());
    }
    let mut orders = Vec::new();
    for part in s.split('+') {
        let part = part.trim();
        let (base, exp) = match part.rsplit_once(")^") {
            Some((b, e)) => (b.trim_start_matches('('), e),
            None => match part.split_once('^') {
                Some((b, e)) if !b.contains('/') => (b, e),
                _ => (part, "1"),
            },
        };
        let n: usize = exp.parse().map_err(|_| Error::Input(format!("bad exponent in {part:?}")))?;
        let order: u64 = match base.strip_prefix("Z/") {
            Some(d) => d.parse().map_err(|_| Error::Input(format!("bad cyclic group {part:?}")))?,
            None if base == "Z" => 0,
            None => return Err(Error::Input(format!("bad group {part:?}"))),
        };
        orders.extend(std::iter::repeat_n(order, n));
    }
    Ok(AbelianGroupValue::from_cyclic(&orders))
}

fn parse_kind(s: &str) -> Option<StabiliserType> {
    StabiliserType::FINITE.iter().chain([StabiliserType::Zsquare].iter()).copied().find(|k| k.name() == s)
}

/// Parses `Trivial:4 Z2:3 | Trivial:17 | Trivial:15`.
pub fn parse_census(s: &str) -> Result<CensusCounts> {
    let parts: Vec<&str> = s.split('|').collect();
    if parts.len() != 3 {
        return Err(Error::Input(format!("census needs three dimensions: {s:?}")));
    }
    let mut out: CensusCounts = Default::default();
    for (d, part) in parts.iter().enumerate() {
        for item in part.split_whitespace() {
            let (k, n) = item.split_once(':').ok_or_else(|| Error::Input(format!("bad census item {item:?}")))?;
            let kind = parse_kind(k).ok_or_else(|| Error::Input(format!("unknown stabiliser type {k:?}")))?;
            out[d].insert(kind, n.parse().map_err(|_| Error::Input(format!("bad count {item:?}")))?);
        }
    }
    Ok(out)
}

impl ExpectedTable {
    pub fn bundled() -> Result<Self> {
        Self::parse(BUNDLED)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut t = ExpectedTable::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let l = raw.trim();
            if l.is_empty() || l.starts_with('#') {
                continue;
            }
            let (lhs, rhs) = match l.split_once('=') {
                Some((a, b)) => (a.trim(), Some(b.trim())),
                None => (l, None),
            };
            let words: Vec<&str> = lhs.split_whitespace().collect();
            let need_rhs = || rhs.ok_or_else(|| bad(line, "missing '='"));
            match words.as_slice() {
                ["series", ell, ms @ ..] if !ms.is_empty() => {
                    let ell: u64 = ell.parse().map_err(|_| bad(line, "bad prime"))?;
                    let f = RationalFunction::parse(need_rhs()?)?;
                    for m in ints::<i64>(ms, line)? {
                        if t.series.insert((ell, m), f.clone()).is_some() {
                            return Err(bad(line, &format!("duplicate series for m = {m}, ell = {ell}")));
                        }
                    }
                }
                ["betti1", m] => {
                    t.betti1.insert(ints(&[m], line)?[0], need_rhs()?.parse().map_err(|_| bad(line, "bad Betti number"))?);
                }
                ["homology", m, q] => {
                    t.homology.insert((ints(&[m], line)?[0], ints(&[q], line)?[0]), parse_group(need_rhs()?)?);
                }
                ["torsion", m, q] => {
                    t.torsion.insert((ints(&[m], line)?[0], ints(&[q], line)?[0]), parse_group(need_rhs()?)?);
                }
                ["d1rank", m, ell, coeff, qs @ ..] if !qs.is_empty() => {
                    let m: i64 = ints(&[m], line)?[0];
                    let ell: u64 = ints(&[ell], line)?[0];
                    let coeff = match *coeff {
                        "Z" => RankCoefficients::Integral,
                        "F" => RankCoefficients::Modular,
                        _ => return Err(bad(line, "coefficients are Z or F")),
                    };
                    let rank: usize = need_rhs()?.parse().map_err(|_| bad(line, "bad rank"))?;
                    for q in ints::<usize>(qs, line)? {
                        t.d1_ranks.insert((m, ell, coeff.clone(), q), rank);
                    }
                }
                ["census", m] => {
                    t.census.insert(ints(&[m], line)?[0], parse_census(need_rhs()?)?);
                }
                ["suite", name, "census", ms @ ..] => {
                    t.suites.entry(name.to_string()).or_default().census.extend(ints::<i64>(ms, line)?);
                }
                ["suite", name, ell, ms @ ..] => {
                    let ell: u64 = ell.parse().map_err(|_| bad(line, "bad prime"))?;
                    let s = t.suites.entry(name.to_string()).or_default();
                    s.series.extend(ints::<i64>(ms, line)?.into_iter().map(|m| (ell, m)));
                }
                _ => return Err(bad(line, &format!("unrecognised entry {l:?}"))),
            }
        }
        for (name, s) in &t.suites {
            if let Some(k) = s.series.iter().find(|k| !t.series.contains_key(k)) {
                return Err(Error::Input(format!("suite {name} checks m = {}, ell = {} without an expected series", k.1, k.0)));
            }
        }
        Ok(t)
    }

    /// The union of two suites, e.g. `fast` and `slow`.
    pub fn suite(&self, name: &str) -> Result<Suite> {
        let names: Vec<&str> = if name == "all" { self.suites.keys().map(String::as_str).collect() } else { vec![name] };
        let mut out = Suite::default();
        for n in names {
            let s = self.suites.get(n).ok_or_else(|| Error::Input(format!("unknown suite {n:?}; known: {}", self.suites.keys().cloned().collect::<Vec<_>>().join(", "))))?;
            out.series.extend(s.series.iter().copied());
            out.census.extend(s.census.iter().copied());
        }
        out.series.sort();
        out.series.dedup();
        out.census.sort();
        out.census.dedup();
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_table_parses() {
        let t = ExpectedTable::bundled().unwrap();
        assert_eq!(t.series[&(3, 2)], RationalFunction::parse("2t^3/(1-t)").unwrap());
        assert_eq!(t.betti1[&163], 7);
        assert_eq!(t.census[&67][1][&StabiliserType::Trivial], 17);
        assert_eq!(t.d1_ranks[&(67, 3, RankCoefficients::Integral, 7)], 8);
        assert!(t.suite("fast").unwrap().fields().contains(&39));
    }

    #[test]
    fn groups_parse() {
        assert_eq!(parse_group("Z/4 + Z/2 + Z/3").unwrap(), AbelianGroupValue::from_cyclic(&[4, 2, 3]));
        assert_eq!(parse_group("(Z/2)^2").unwrap(), AbelianGroupValue::elementary(2, 2));
        assert_eq!(parse_group("Z^3 + Z/2").unwrap(), AbelianGroupValue::from_cyclic(&[0, 0, 0, 2]));
        assert!(parse_group("Q").is_err());
    }
}
