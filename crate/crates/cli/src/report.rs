//! Running the pipeline for one field, the JSON report, and the complex cache.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use bianchi_core::cellcomplex::{euler_check, floege_complex, naive_euler, ComplexRecord, EquivariantComplex, StabiliserType};
use bianchi_core::groupcohom::Coefficients;
use bianchi_core::iqfield::{class_group, make_field};
use bianchi_core::poly::SeriesRecord;
use bianchi_core::specseq::{assemble_integral_pid, build_d1, classification_series, negated_form, poincare_series, E2Entry};
use bianchi_core::torsion::{degree_table_check, extract, reduce, signature, DegreeViolation};
use bianchi_core::{Error, Result};
use serde::{Deserialize, Serialize};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const SCHEMA_VERSION: u32 = 1;
/// How the ring of integers is presented; part of the cache key.
pub const OMEGA_CONVENTION: &str = "omega^2 = t omega - n, t = omega + conj(omega)";
pub const CACHE_ENV: &str = "BIANCHI_CACHE";

/// Highest degree listed in the d1 rank and homology tables of a report.
pub const TABLE_QMAX: usize = 16;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CensusRow {
    pub dim: usize,
    pub kind: StabiliserType,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankRow {
    pub q: usize,
    /// Rank of d1 on the ℓ-primary parts of integral homology.
    pub integral: usize,
    /// Rank of d1 with F_ℓ coefficients.
    pub modular: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorsionReport {
    pub ell: u64,
    pub exceptional: bool,
    pub vertices: usize,
    pub edges: usize,
    /// Component signatures of the reduced subcomplex; empty for exceptional cases.
    pub signature: Vec<String>,
    pub series: SeriesRecord,
    pub series_text: String,
    pub degree_violations: Vec<DegreeViolation>,
    pub d1_ranks: Vec<RankRow>,
    /// Series of the reduced subcomplex agrees with the unreduced one.
    pub reduction_agrees: Option<bool>,
    /// Series from the component signatures agrees with the unreduced one.
    pub classification_agrees: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HomologyReport {
    pub betti: [usize; 3],
    pub e2: Vec<E2Entry>,
    /// `H_q(Γ; Z)` for `q = 0..`, as text.
    pub groups: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub complex_ms: u128,
    pub torsion_ms: u128,
    pub from_cache: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComputationReport {
    pub schema: u32,
    pub tool_version: String,
    pub m: i64,
    pub class_number: usize,
    pub census: Vec<CensusRow>,
    pub euler_value: String,
    pub naive_euler: i64,
    pub torsion: Vec<TorsionReport>,
    pub homology: Option<HomologyReport>,
    pub timings: Timings,
}

impl ComputationReport {
    pub fn census_count(&self, dim: usize, kind: StabiliserType) -> usize {
        self.census.iter().find(|r| r.dim == dim && r.kind == kind).map_or(0, |r| r.count)
    }

    pub fn torsion_for(&self, ell: u64) -> Option<&TorsionReport> {
        self.torsion.iter().find(|t| t.ell == ell)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct CacheEntry {
    schema: u32,
    tool_version: String,
    omega_convention: String,
    complex: ComplexRecord,
}

/// Cache directory from the argument or, failing that, the environment.
pub fn cache_dir(arg: Option<&Path>) -> Option<PathBuf> {
    arg.map(Path::to_path_buf).or_else(|| std::env::var_os(CACHE_ENV).map(PathBuf::from))
}

fn cache_file(dir: &Path, m: i64) -> PathBuf {
    dir.join(format!("complex-m{m}.json"))
}

fn load_cached(dir: &Path, m: i64) -> Option<EquivariantComplex> {
    let path = cache_file(dir, m);
    let text = fs::read_to_string(&path).ok()?;
    let entry: CacheEntry = match serde_json::from_str(&text) {
        Ok(e) => e,
        Err(e) => {
            eprintln!("warning: ignoring corrupt cache file {}: {e}", path.display());
            return None;
        }
    };
    if entry.schema != SCHEMA_VERSION || entry.tool_version != TOOL_VERSION || entry.omega_convention != OMEGA_CONVENTION || entry.complex.m != m {
        return None;
    }
    match EquivariantComplex::from_record(&entry.complex) {
        Ok(c) => Some(c),
        Err(e) => {
            eprintln!("warning: ignoring invalid cache file {}: {e}", path.display());
            None
        }
    }
}

fn store_cached(dir: &Path, complex: &EquivariantComplex) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Input(format!("cannot create cache directory {}: {e}", dir.display())))?;
    let entry = CacheEntry {
        schema: SCHEMA_VERSION,
        tool_version: TOOL_VERSION.into(),
        omega_convention: OMEGA_CONVENTION.into(),
        complex: complex.to_record(),
    };
    let path = cache_file(dir, complex.field.m);
    let text = serde_json::to_string(&entry).map_err(|e| Error::Invariant(format!("cannot serialise complex: {e}")))?;
    fs::write(&path, text).map_err(|e| Error::Input(format!("cannot write {}: {e}", path.display())))
}

/// The refined complex for `m`, from the cache when possible.
pub fn complex_for(m: i64, cache: Option<&Path>) -> Result<(EquivariantComplex, bool)> {
    let field = make_field(m)?;
    if let Some(dir) = cache {
        if let Some(c) = load_cached(dir, m) {
            return Ok((c, true));
        }
    }
    let c = floege_complex(&field)?;
    if let Some(dir) = cache {
        store_cached(dir, &c)?;
    }
    Ok((c, false))
}

/// Torsion subcomplexes, series and d1 ranks for one prime.
pub fn torsion_report(complex: &EquivariantComplex, ell: u64, qmax: usize) -> Result<TorsionReport> {
    let g = extract(complex, ell)?;
    let series = poincare_series(&g, qmax)?;
    let (signature_text, violations, reduction_agrees, classification_agrees) = if g.exceptional {
        (Vec::new(), Vec::new(), None, None)
    } else {
        let r = reduce(&g)?;
        let sig = signature(&r).iter().map(ToString::to_string).collect();
        let reduced = poincare_series(&r, qmax)?;
        let classified = classification_series(&r, qmax)?;
        (sig, degree_table_check(&g, complex), Some(reduced == series), Some(classified == series))
    };
    let d1_ranks = (1..=TABLE_QMAX)
        .map(|q| {
            Ok(RankRow {
                q,
                integral: build_d1(&g, Coefficients::Integers, q)?.rank(),
                modular: build_d1(&g, Coefficients::Mod(ell), q)?.rank(),
            })
        })
        .collect::<Result<_>>()?;
    Ok(TorsionReport {
        ell,
        exceptional: g.exceptional,
        vertices: g.vertices.len(),
        edges: g.edges.len(),
        signature: signature_text,
        series_text: negated_form(&series),
        series: series.to_record(),
        degree_violations: violations,
        d1_ranks,
        reduction_agrees,
        classification_agrees,
    })
}

/// Runs the whole pipeline for one field.
pub fn compute(m: i64, ells: &[u64], cache: Option<&Path>, qmax: usize) -> Result<ComputationReport> {
    let start = Instant::now();
    let (complex, from_cache) = complex_for(m, cache)?;
    let complex_ms = start.elapsed().as_millis();
    let start = Instant::now();
    let census = complex.census();
    let mut rows = Vec::new();
    for (dim, counts) in census.counts.iter().enumerate() {
        for (&kind, &count) in counts {
            rows.push(CensusRow { dim, kind, count });
        }
    }
    let torsion = ells.iter().map(|&ell| torsion_report(&complex, ell, qmax)).collect::<Result<Vec<_>>>()?;
    let class_number = class_group(&complex.field).class_number;
    let homology = if class_number == 1 {
        let graphs = [extract(&complex, 2)?, extract(&complex, 3)?];
        let h = assemble_integral_pid(&complex, &graphs, TABLE_QMAX)?;
        Some(HomologyReport { betti: h.betti, e2: h.e2, groups: h.groups.iter().map(ToString::to_string).collect() })
    } else {
        None
    };
    Ok(ComputationReport {
        schema: SCHEMA_VERSION,
        tool_version: TOOL_VERSION.into(),
        m,
        class_number,
        census: rows,
        euler_value: euler_check(&complex).to_string(),
        naive_euler: naive_euler(&complex),
        torsion,
        homology,
        timings: Timings { complex_ms, torsion_ms: start.elapsed().as_millis(), from_cache },
    })
}

/// Report JSON with timings zeroed, for comparing runs.
pub fn canonical_json(report: &ComputationReport) -> String {
    let mut r = report.clone();
    r.timings = Timings::default();
    serde_json::to_string_pretty(&r).expect("report serialises")
}
