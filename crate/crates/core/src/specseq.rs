//! The equivariant spectral sequence of the action on the cell complex: d¹ on the torsion
//! subcomplex, mod-ℓ dimensions, Poincaré series, and integral homology in the class
//! number one cases.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::cellcomplex::{EquivariantComplex, StabiliserType};
use crate::error::{Error, Result};
use crate::groupcohom::{image_column, mod_dim, primary_dim, AbelianGroupValue, Coefficients};
use crate::linalg::{chain_homology, chain_homology_mod, mul, rank_mod, zeros, Matrix};
use crate::poly::{Poly, RationalFunction};
use crate::torsion::{signature, ComponentSignature, EdgeEnd, ReducedGraph, TorsionGraph};

/// Series `Σ_q dim H_q(Γ; F_ℓ) t^q` over `q >= 3`.
pub type PoincareSeries = RationalFunction;

/// Default highest degree used for fitting series.
pub const DEFAULT_QMAX: usize = 40;

/// d¹ from the edge row to the vertex row in degree `q`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DifferentialMatrix {
    pub ell: u64,
    pub coeff: Coefficients,
    pub q: usize,
    /// Basis size of `H_q(Γ_v)` for each torsion vertex, in graph order.
    pub row_blocks: Vec<usize>,
    /// One column per edge when `H_q(Z/ℓ; coeff)` is non-zero, otherwise none.
    pub columns: usize,
    pub matrix: Matrix,
}

impl DifferentialMatrix {
    pub fn rows(&self) -> usize {
        self.row_blocks.iter().sum()
    }

    pub fn cols(&self) -> usize {
        self.columns
    }

    /// Rank over F_ℓ; for integral coefficients this is the rank on the ℓ-primary parts,
    /// which are elementary abelian.
    pub fn rank(&self) -> usize {
        rank_mod(&self.matrix, self.ell as i64)
    }

    /// `dim E²_{0,q}`.
    pub fn cokernel_dim(&self) -> usize {
        self.rows() - self.rank()
    }

    /// `dim E²_{1,q}`.
    pub fn kernel_dim(&self) -> usize {
        self.cols() - self.rank()
    }
}

fn block_dim(kind: StabiliserType, ell: u64, coeff: Coefficients, q: usize) -> usize {
    match coeff {
        Coefficients::Integers => primary_dim(kind, ell, q),
        Coefficients::Mod(_) => mod_dim(kind, ell, q),
    }
}

fn source_nonzero(coeff: Coefficients, q: usize) -> bool {
    match coeff {
        Coefficients::Integers => q % 2 == 1,
        Coefficients::Mod(_) => true,
    }
}

/// d¹_{1,q} on the ℓ-torsion subcomplex.
pub fn build_d1(g: &TorsionGraph, coeff: Coefficients, q: usize) -> Result<DifferentialMatrix> {
    if q == 0 {
        return Err(Error::Contract("d1 is built for q >= 1".into()));
    }
    if let Coefficients::Mod(p) = coeff {
        if p != g.ell {
            return Err(Error::Contract(format!("mod-{p} coefficients on a {}-torsion graph", g.ell)));
        }
    }
    let row_blocks: Vec<usize> = g.vertices.iter().map(|v| block_dim(v.kind, g.ell, coeff, q)).collect();
    let mut offset = vec![0; row_blocks.len()];
    for i in 1..row_blocks.len() {
        offset[i] = offset[i - 1] + row_blocks[i - 1];
    }
    let rows: usize = row_blocks.iter().sum();
    let ncols = if source_nonzero(coeff, q) { g.edges.len() } else { 0 };
    let mut matrix = zeros(rows, ncols);
    for (k, e) in g.edges.iter().enumerate().take(ncols) {
        for end in &e.ends {
            let kind = g.vertices[end.vertex].kind;
            let col = image_column(g.ell, kind, coeff, q, end.slot, end.inverted)?;
            for (i, x) in col.iter().enumerate() {
                let r = &mut matrix[offset[end.vertex] + i][k];
                *r = (*r + end.sign * x).rem_euclid(g.ell as i64);
            }
        }
    }
    Ok(DifferentialMatrix { ell: g.ell, coeff, q, row_blocks, columns: ncols, matrix })
}

/// `dim H_q(Γ; F_ℓ)` for `q = 3..=qmax`.
pub fn mod_ell_dims(g: &TorsionGraph, qmax: usize) -> Result<Vec<usize>> {
    if qmax < 3 {
        return Err(Error::Contract("qmax must be at least 3".into()));
    }
    let coeff = Coefficients::Mod(g.ell);
    let mut prev = build_d1(g, coeff, 2)?;
    let mut out = Vec::with_capacity(qmax - 2);
    for q in 3..=qmax {
        let d = build_d1(g, coeff, q)?;
        out.push(d.cokernel_dim() + prev.kernel_dim());
        prev = d;
    }
    Ok(out)
}

/// Ranks of d¹_{1,q} for `q` in `qs`.
pub fn d1_rank_table(g: &TorsionGraph, coeff: Coefficients, qs: impl IntoIterator<Item = usize>) -> Result<Vec<(usize, usize)>> {
    qs.into_iter().map(|q| Ok((q, build_d1(g, coeff, q)?.rank()))).collect()
}

const PERIODS: [usize; 6] = [1, 2, 3, 4, 6, 12];

/// Exact rational function for a sequence `dims[i] = d_(start_q + i)` that is eventually
/// linear on residue classes modulo a period dividing 12.
pub fn fit_series(dims: &[usize], start_q: usize) -> Result<PoincareSeries> {
    let d: Vec<i64> = dims.iter().map(|&x| x as i64).collect();
    let period = PERIODS.iter().copied().find(|&p| {
        d.len() >= 3 * p && (0..d.len() - 2 * p).all(|i| d[i + 2 * p] - 2 * d[i + p] + d[i] == 0)
    });
    let Some(p) = period else {
        return Err(Error::Invariant(format!("no quasi-linear fit for {} dimensions", d.len())));
    };
    let mut n1 = vec![0i64; start_q + p];
    let mut na = vec![0i64; start_q + p];
    for i in 0..p {
        n1[start_q + i] = d[i];
        na[start_q + i] = d[i + p] - d[i];
    }
    let (n1, na) = (Poly::from_i64(&n1), Poly::from_i64(&na));
    let one_minus = &Poly::one() - &Poly::monomial(1, p);
    let num = &(&n1 * &one_minus) + &(&Poly::monomial(1, p) * &na);
    let f = RationalFunction::new(num, one_minus.pow(2))?;
    let check = f.integer_series(start_q + d.len())?;
    if check[start_q..].iter().zip(&d).any(|(a, b)| a != b) || check[..start_q].iter().any(|&x| x != 0) {
        return Err(Error::Invariant("fitted series does not reproduce the dimensions".into()));
    }
    Ok(f)
}

/// Poincaré series of the mod-ℓ homology in degrees `>= 3`, fitted on `q <= qmax` and
/// retried once on a doubled window.
pub fn poincare_series(g: &TorsionGraph, qmax: usize) -> Result<PoincareSeries> {
    match fit_series(&mod_ell_dims(g, qmax)?, 3) {
        Ok(f) => Ok(f),
        Err(_) => fit_series(&mod_ell_dims(g, 2 * qmax)?, 3),
    }
}

/// A one-component graph with the shape of the given component, canonical signs and
/// Z/ℓ at the base point of a loop.
fn synthetic_component(g: &TorsionGraph, sig: &ComponentSignature) -> TorsionGraph {
    let mut s = g.clone();
    for e in s.edges.iter_mut() {
        let [a, b] = &e.ends;
        e.ends = [
            EdgeEnd { vertex: a.vertex, sign: -1, slot: a.slot, inverted: false },
            EdgeEnd { vertex: b.vertex, sign: 1, slot: b.slot, inverted: false },
        ];
    }
    if sig.is_loop() {
        s.vertices[0].kind = if g.ell == 2 { StabiliserType::Z2 } else { StabiliserType::Z3 };
    }
    s
}

/// Sum over connected components of the series attached to each component signature.
pub fn classification_series(g: &ReducedGraph, qmax: usize) -> Result<PoincareSeries> {
    if g.exceptional {
        return Err(Error::Contract("no classification for the exceptional torsion subcomplexes".into()));
    }
    let mut cache: BTreeMap<ComponentSignature, PoincareSeries> = BTreeMap::new();
    let mut total = RationalFunction::zero();
    for (vs, es) in g.components() {
        let sub = g.subgraph(&vs, &es);
        let sig = signature(&sub).pop().expect("one component");
        let f = match cache.get(&sig) {
            Some(f) => f.clone(),
            None => {
                let f = poincare_series(&synthetic_component(&sub, &sig), qmax)?;
                cache.insert(sig, f.clone());
                f
            }
        };
        total = total.add(&f);
    }
    Ok(total)
}

/// Renders `p/q` as `-(−p)/(−q)`, the form with a negated numerator in which such series are
/// usually printed.
pub fn negated_form(f: &PoincareSeries) -> String {
    if f.num.is_zero() {
        return "0".into();
    }
    format!("-({})/({})", -&f.num, -&f.den)
}

/// Integer boundary matrices of the quotient cell complex: `(D1, D2)` with `D1` vertices by
/// edges and `D2` edges by 2-cells.
pub fn quotient_chain_matrices(complex: &EquivariantComplex) -> Result<(Matrix, Matrix)> {
    let [v, e, f] = [0, 1, 2].map(|d| complex.cells[d].len());
    let mut d1 = zeros(v, e);
    for (k, o) in complex.cells[1].iter().enumerate() {
        for inc in &o.boundary {
            d1[inc.orbit][k] += inc.sign;
        }
    }
    let mut d2 = zeros(e, f);
    for (k, o) in complex.cells[2].iter().enumerate() {
        for inc in &o.boundary {
            d2[inc.orbit][k] += inc.sign;
        }
    }
    if e > 0 && f > 0 && mul(&d1, &d2).iter().flatten().any(|&x| x != 0) {
        return Err(Error::Invariant("quotient boundary maps do not compose to zero".into()));
    }
    Ok((d1, d2))
}

/// Betti numbers of the quotient.
pub fn quotient_betti(complex: &EquivariantComplex) -> Result<[usize; 3]> {
    let (d1, d2) = quotient_chain_matrices(complex)?;
    let [v, e, f] = [0, 1, 2].map(|d| complex.cells[d].len());
    Ok([
        chain_homology(&zeros(0, v), &d1, v).0,
        chain_homology(&d1, &d2, e).0,
        chain_homology(&d2, &zeros(f, 0), f).0,
    ])
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct E2Entry {
    pub p: usize,
    pub q: usize,
    pub value: AbelianGroupValue,
}

/// Integral homology of a Bianchi group of class number one.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntegralHomology {
    pub m: i64,
    /// Betti numbers of the quotient.
    pub betti: [usize; 3],
    /// Low rows of the integral E² page.
    pub e2: Vec<E2Entry>,
    /// `H_q(Γ; Z)` for `q = 0..=qmax`.
    pub groups: Vec<AbelianGroupValue>,
}

impl IntegralHomology {
    pub fn h(&self, q: usize) -> &AbelianGroupValue {
        &self.groups[q]
    }

    /// Torsion subgroup of `H_q`.
    pub fn torsion(&self, q: usize) -> AbelianGroupValue {
        AbelianGroupValue { free: 0, torsion: self.groups[q].torsion.clone() }
    }
}

/// Integral homology `H_0..H_qmax` for class number one, from the E² page, which degenerates
/// there. `graphs` holds the unreduced 2- and 3-torsion subcomplexes.
pub fn assemble_integral_pid(complex: &EquivariantComplex, graphs: &[TorsionGraph], qmax: usize) -> Result<IntegralHomology> {
    if complex.cells[0].iter().any(|o| o.kind == StabiliserType::Zsquare) {
        return Err(Error::Contract(format!("m = {} has singular cusps", complex.field.m)));
    }
    let graph = |ell: u64| {
        graphs.iter().find(|g| g.ell == ell).ok_or_else(|| Error::Contract(format!("missing {ell}-torsion subcomplex")))
    };
    let (g2, g3) = (graph(2)?, graph(3)?);
    let (d1, d2) = quotient_chain_matrices(complex)?;
    let [nv, ne, nf] = [0, 1, 2].map(|d| complex.cells[d].len());
    let (b0, h1_quot) = (chain_homology(&zeros(0, nv), &d1, nv).0, chain_homology(&d1, &d2, ne));
    let b2 = chain_homology(&d2, &zeros(nf, 0), nf).0;
    if b0 != 1 {
        return Err(Error::Invariant(format!("quotient has {b0} components")));
    }
    let betti = [b0, h1_quot.0, b2];
    let mut e2 = vec![
        E2Entry { p: 0, q: 0, value: AbelianGroupValue::free(1) },
        E2Entry { p: 1, q: 0, value: AbelianGroupValue::from_cyclic(&[vec![0; h1_quot.0], h1_quot.1.clone()].concat()) },
        E2Entry { p: 2, q: 0, value: AbelianGroupValue::free(b2) },
    ];

    // integral ℓ-primary rows q >= 1
    let mut e0 = BTreeMap::new();
    let mut e1 = BTreeMap::new();
    for g in [g2, g3] {
        for q in 1..=qmax.max(2) {
            let d = build_d1(g, Coefficients::Integers, q)?;
            if g.ell == 3 && q % 2 == 0 && d.rank() != 0 {
                return Err(Error::Invariant("integral 3-primary d1 is non-zero in even degree".into()));
            }
            e0.insert((g.ell, q), d.cokernel_dim());
            e1.insert((g.ell, q), d.kernel_dim());
        }
    }
    for q in 1..=qmax.max(2) {
        for (p, tab) in [(0, &e0), (1, &e1)] {
            let value = AbelianGroupValue::elementary(2, tab[&(2, q)]).direct_sum(&AbelianGroupValue::elementary(3, tab[&(3, q)]));
            e2.push(E2Entry { p, q, value });
        }
    }
    let e2_at = |p: usize, q: usize| e2.iter().find(|x| x.p == p && x.q == q).map(|x| x.value.clone()).unwrap_or_default();

    // H1
    let e01 = e2_at(0, 1);
    if !e01.is_zero() && b2 > 0 {
        return Err(Error::Invariant("d2 from E2_{2,0} to E2_{0,1} is not determined".into()));
    }
    if !e01.is_zero() && !h1_quot.1.is_empty() {
        return Err(Error::Invariant("extension in degree one is not determined".into()));
    }
    let h1 = e2_at(1, 0).direct_sum(&e01);

    // H2: order from the integral page, number of cyclic factors from mod-ℓ dimensions
    let mut h2 = AbelianGroupValue::free(b2);
    for g in [g2, g3] {
        let ell = g.ell;
        let a = e0[&(ell, 2)] + e1[&(ell, 1)];
        let m1 = build_d1(g, Coefficients::Mod(ell), 1)?;
        let m2 = build_d1(g, Coefficients::Mod(ell), 2)?;
        let e20_mod = chain_homology_mod(&d2, &zeros(nf, 0), nf, ell as i64);
        if m1.cokernel_dim() != 0 && e20_mod != 0 {
            return Err(Error::Invariant(format!("mod-{ell} spectral sequence may not degenerate in degree two")));
        }
        let dim = m2.cokernel_dim() + m1.kernel_dim() + e20_mod;
        let s = (dim as i64) - (b2 as i64) - (h1.tor_dim(ell) as i64);
        let part: Vec<u64> = if s == a as i64 {
            vec![ell; a]
        } else if a >= 2 && s == a as i64 - 1 {
            [vec![ell * ell], vec![ell; a - 2]].concat()
        } else {
            return Err(Error::Invariant(format!("{ell}-part of H2: order {ell}^{a} with {s} cyclic factors")));
        };
        h2 = h2.direct_sum(&AbelianGroupValue::from_cyclic(&part));
    }

    let mut groups = vec![AbelianGroupValue::free(1), h1, h2];
    for q in 3..=qmax {
        let mut h = AbelianGroupValue::zero();
        for ell in [2, 3] {
            h = h.direct_sum(&AbelianGroupValue::elementary(ell, e0[&(ell, q)] + e1[&(ell, q - 1)]));
        }
        groups.push(h);
    }
    groups.truncate(qmax + 1);
    Ok(IntegralHomology { m: complex.field.m, betti, e2, groups })
}

/// `Σ_{k>=0} (a k + b) t^(i k + j)` in closed form.
pub fn quasi_linear_series(a: i64, b: i64, i: usize, j: usize) -> PoincareSeries {
    let one_minus = &Poly::one() - &Poly::monomial(1, i);
    let num = &Poly::monomial(b, j) + &Poly::monomial(a - b, i + j);
    RationalFunction::new(num, one_minus.pow(2)).expect("non-zero denominator")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torsion::{TorsionEdge, TorsionVertex};

    fn loop_graph(ell: u64) -> TorsionGraph {
        let kind = if ell == 2 { StabiliserType::Z2 } else { StabiliserType::Z3 };
        TorsionGraph {
            ell,
            vertices: vec![TorsionVertex { orbit: 0, kind }],
            edges: vec![TorsionEdge {
                orbits: vec![0],
                ends: [EdgeEnd { vertex: 0, sign: -1, slot: 0, inverted: false }, EdgeEnd { vertex: 0, sign: 1, slot: 0, inverted: false }],
            }],
            exceptional: false,
        }
    }

    #[test]
    fn loop_gives_constant_two() {
        for ell in [2, 3] {
            let g = loop_graph(ell);
            assert!(mod_ell_dims(&g, 20).unwrap().iter().all(|&d| d == 2));
            let f = poincare_series(&g, 40).unwrap();
            assert_eq!(f, RationalFunction::parse("-2t^3/(t-1)").unwrap());
        }
    }

    #[test]
    fn empty_graph_has_zero_series() {
        let g = TorsionGraph { ell: 3, vertices: vec![], edges: vec![], exceptional: false };
        assert!(mod_ell_dims(&g, 12).unwrap().iter().all(|&d| d == 0));
        assert!(poincare_series(&g, 40).unwrap().num.is_zero());
    }

    #[test]
    fn fit_reproduces_quasi_linear_sequences() {
        // 4k+3, 4k+1, 4k+3, 4k+5, 4k+3, 4k+5 from q = 6k+3
        let dims: Vec<usize> = (0..38).map(|i| 4 * (i / 6) + [3, 1, 3, 5, 3, 5][i % 6]).collect();
        let f = fit_series(&dims, 3).unwrap();
        assert_eq!(f, RationalFunction::parse("-t^3(t^3-2t^2+2t-3)/((t-1)^2(t^2+t+1))").unwrap());
        assert!(fit_series(&[1, 5, 2, 9, 4, 4, 7, 1, 0, 3], 3).is_err());
    }

    #[test]
    fn closed_form_matches_expansion() {
        let f = quasi_linear_series(3, 2, 4, 1);
        let s = f.integer_series(30).unwrap();
        for (n, c) in s.iter().enumerate() {
            let expected = if n >= 1 && (n - 1) % 4 == 0 { 3 * ((n - 1) / 4) as i64 + 2 } else { 0 };
            assert_eq!(*c, expected, "t^{n}");
        }
    }
}
