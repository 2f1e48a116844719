//! Low-degree terms of a free resolution of Z over Z[A4], assembled from resolutions of the
//! Klein four-group and of Z/3 by Wall's double complex, and the homology it computes.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::groupcohom::AbelianGroupValue;
use crate::linalg::{chain_homology, solve_integer, Matrix};

/// An even permutation of {1, 2, 3, 4}, stored as the images of 0..4.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Perm([u8; 4]);

impl Perm {
    pub fn identity() -> Perm {
        Perm([0, 1, 2, 3])
    }

    /// Parses cycle notation such as `(12)(34)` or `(142)`; the empty string and `1` give the
    /// identity.
    pub fn parse(s: &str) -> Result<Perm> {
        let s = s.trim();
        let mut p = Perm::identity();
        if s.is_empty() || s == "1" {
            return Ok(p);
        }
        let mut rest = s;
        while !rest.is_empty() {
            let body = rest.strip_prefix('(').and_then(|r| r.split_once(')')).ok_or_else(|| Error::Input(format!("bad cycle notation {s:?}")))?;
            let pts: Vec<u8> = body
                .0
                .chars()
                .map(|c| c.to_digit(10).filter(|d| (1..=4).contains(d)).map(|d| d as u8 - 1))
                .collect::<Option<_>>()
                .ok_or_else(|| Error::Input(format!("bad cycle {s:?}")))?;
            let mut c = Perm::identity();
            for (i, &x) in pts.iter().enumerate() {
                c.0[x as usize] = pts[(i + 1) % pts.len()];
            }
            p = p * c;
            rest = body.1;
        }
        if !p.is_even() {
            return Err(Error::Input(format!("{s} is not in A4")));
        }
        Ok(p)
    }

    pub fn apply(&self, i: u8) -> u8 {
        self.0[i as usize]
    }

    pub fn inverse(&self) -> Perm {
        let mut q = [0; 4];
        for i in 0..4 {
            q[self.0[i] as usize] = i as u8;
        }
        Perm(q)
    }

    fn is_even(&self) -> bool {
        let mut inv = 0;
        for i in 0..4 {
            for j in i + 1..4 {
                if self.0[i] > self.0[j] {
                    inv += 1;
                }
            }
        }
        inv % 2 == 0
    }

    /// All twelve elements, sorted.
    pub fn a4() -> Vec<Perm> {
        let mut out = Vec::new();
        for a in 0..4u8 {
            for b in 0..4u8 {
                for c in 0..4u8 {
                    for d in 0..4u8 {
                        let p = Perm([a, b, c, d]);
                        let mut s = p.0;
                        s.sort();
                        if s == [0, 1, 2, 3] && p.is_even() {
                            out.push(p);
                        }
                    }
                }
            }
        }
        out
    }
}

/// Composition with the right factor applied first.
impl Mul for Perm {
    type Output = Perm;
    fn mul(self, o: Perm) -> Perm {
        Perm([0, 1, 2, 3].map(|i| self.0[o.0[i] as usize]))
    }
}

impl fmt::Display for Perm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut seen = [false; 4];
        let mut out = String::new();
        for i in 0..4u8 {
            if seen[i as usize] || self.apply(i) == i {
                continue;
            }
            out.push('(');
            let mut j = i;
            while !seen[j as usize] {
                seen[j as usize] = true;
                out.push(char::from(b'1' + j));
                j = self.apply(j);
            }
            out.push(')');
        }
        if out.is_empty() {
            out.push('1');
        }
        write!(f, "{out}")
    }
}

/// An element of the integral group ring Z[A4].
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GroupRingElement(BTreeMap<Perm, i64>);

impl GroupRingElement {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::from_perm(Perm::identity(), 1)
    }

    pub fn from_perm(p: Perm, c: i64) -> Self {
        let mut m = BTreeMap::new();
        if c != 0 {
            m.insert(p, c);
        }
        GroupRingElement(m)
    }

    /// Parses sums like `(132) + (123) + 1`, `-1 -(123) +(134)` or `2(12)(34)`.
    pub fn parse(s: &str) -> Result<Self> {
        let s: String = s.chars().filter(|c| !c.is_whitespace()).collect::<String>().replace('−', "-");
        let mut out = GroupRingElement::zero();
        let bytes: Vec<char> = s.chars().collect();
        let mut i = 0;
        if bytes.is_empty() {
            return Err(Error::Input("empty group ring element".into()));
        }
        while i < bytes.len() {
            let mut sign = 1;
            if bytes[i] == '+' || bytes[i] == '-' {
                sign = if bytes[i] == '-' { -1 } else { 1 };
                i += 1;
            }
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            let coeff: Option<i64> = (i > start).then(|| bytes[start..i].iter().collect::<String>().parse().expect("digits"));
            let pstart = i;
            while i < bytes.len() && bytes[i] == '(' {
                while i < bytes.len() && bytes[i] != ')' {
                    i += 1;
                }
                i += 1;
            }
            let cycles: String = bytes[pstart..i.min(bytes.len())].iter().collect();
            if coeff.is_none() && cycles.is_empty() {
                return Err(Error::Input(format!("bad group ring element {s:?}")));
            }
            let perm = Perm::parse(&cycles)?;
            out = &out + &GroupRingElement::from_perm(perm, sign * coeff.unwrap_or(1));
        }
        Ok(out)
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    /// Image under `Z[A4] -> Z`.
    pub fn augmentation(&self) -> i64 {
        self.0.values().sum()
    }

    /// Image under `Z[A4] -> Z[A4/D2] = Z[t]/(t^3 - 1)`, with `(123)` mapped to `t`, as the
    /// coefficients of `1, t, t^2`.
    pub fn to_quotient(&self) -> [i64; 3] {
        let t = Perm::parse("(123)").expect("valid");
        let klein: Vec<Perm> = ["1", "(12)(34)", "(13)(24)", "(14)(23)"].iter().map(|s| Perm::parse(s).expect("valid")).collect();
        let mut out = [0; 3];
        for (p, c) in &self.0 {
            let k = (0..3).find(|&k| {
                let tk = (0..k).fold(Perm::identity(), |acc, _| acc * t);
                klein.contains(&(tk.inverse() * *p))
            });
            out[k.expect("coset")] += c;
        }
        out
    }

    /// Coordinates in the basis `Perm::a4()`.
    pub fn coordinates(&self) -> Vec<i64> {
        Perm::a4().iter().map(|p| self.0.get(p).copied().unwrap_or(0)).collect()
    }

    pub fn from_coordinates(c: &[i64]) -> Self {
        Perm::a4().into_iter().zip(c).fold(Self::zero(), |acc, (p, &x)| &acc + &Self::from_perm(p, x))
    }
}

impl Add for &GroupRingElement {
    type Output = GroupRingElement;
    fn add(self, o: &GroupRingElement) -> GroupRingElement {
        let mut m = self.0.clone();
        for (p, c) in &o.0 {
            *m.entry(*p).or_insert(0) += c;
        }
        m.retain(|_, c| *c != 0);
        GroupRingElement(m)
    }
}

impl Neg for &GroupRingElement {
    type Output = GroupRingElement;
    fn neg(self) -> GroupRingElement {
        GroupRingElement(self.0.iter().map(|(p, c)| (*p, -c)).collect())
    }
}

impl Sub for &GroupRingElement {
    type Output = GroupRingElement;
    fn sub(self, o: &GroupRingElement) -> GroupRingElement {
        self + &(-o)
    }
}

impl Mul for &GroupRingElement {
    type Output = GroupRingElement;
    fn mul(self, o: &GroupRingElement) -> GroupRingElement {
        let mut m: BTreeMap<Perm, i64> = BTreeMap::new();
        for (p, a) in &self.0 {
            for (q, b) in &o.0 {
                *m.entry(*p * *q).or_insert(0) += a * b;
            }
        }
        m.retain(|_, c| *c != 0);
        GroupRingElement(m)
    }
}

impl fmt::Display for GroupRingElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (p, &c) in &self.0 {
            let body = if *p == Perm::identity() {
                c.abs().to_string()
            } else if c.abs() == 1 {
                p.to_string()
            } else {
                format!("{}{}", c.abs(), p)
            };
            match (first, c < 0) {
                (true, true) => write!(f, "-{body}")?,
                (true, false) => write!(f, "{body}")?,
                (false, true) => write!(f, " - {body}")?,
                (false, false) => write!(f, " + {body}")?,
            }
            first = false;
        }
        Ok(())
    }
}

/// Matrix over Z[A4] describing a map of free modules of ranks `cols -> rows`; composition
/// is the ordinary matrix product.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupRingMatrix {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<Vec<GroupRingElement>>,
}

impl GroupRingMatrix {
    pub fn zero(rows: usize, cols: usize) -> Self {
        GroupRingMatrix { rows, cols, entries: vec![vec![GroupRingElement::zero(); cols]; rows] }
    }

    pub fn parse(rows: &[&[&str]]) -> Result<Self> {
        let entries: Vec<Vec<GroupRingElement>> = rows.iter().map(|r| r.iter().map(|s| GroupRingElement::parse(s)).collect()).collect::<Result<_>>()?;
        let cols = entries.first().map_or(0, |r| r.len());
        if entries.iter().any(|r| r.len() != cols) {
            return Err(Error::Input("ragged group ring matrix".into()));
        }
        Ok(GroupRingMatrix { rows: entries.len(), cols, entries })
    }

    pub fn compose(&self, o: &GroupRingMatrix) -> Result<GroupRingMatrix> {
        if self.cols != o.rows {
            return Err(Error::Contract(format!("cannot compose {}x{} with {}x{}", self.rows, self.cols, o.rows, o.cols)));
        }
        let mut out = GroupRingMatrix::zero(self.rows, o.cols);
        for i in 0..self.rows {
            for j in 0..o.cols {
                for k in 0..self.cols {
                    out.entries[i][j] = &out.entries[i][j] + &(&self.entries[i][k] * &o.entries[k][j]);
                }
            }
        }
        Ok(out)
    }

    pub fn add(&self, o: &GroupRingMatrix) -> GroupRingMatrix {
        let mut out = self.clone();
        for (r, orow) in out.entries.iter_mut().zip(&o.entries) {
            for (x, y) in r.iter_mut().zip(orow) {
                *x = &*x + y;
            }
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().flatten().all(|x| x.is_zero())
    }

    /// Integer matrix of the map after applying `Z ⊗_{Z[A4]} -`.
    pub fn augmented(&self) -> Matrix {
        self.entries.iter().map(|r| r.iter().map(|x| x.augmentation()).collect()).collect()
    }

    /// Places blocks of a block matrix; `None` is a zero block.
    pub fn from_blocks(row_sizes: &[usize], col_sizes: &[usize], blocks: &[Vec<Option<&GroupRingMatrix>>]) -> Result<Self> {
        let mut out = GroupRingMatrix::zero(row_sizes.iter().sum(), col_sizes.iter().sum());
        let mut r0 = 0;
        for (bi, &rs) in row_sizes.iter().enumerate() {
            let mut c0 = 0;
            for (bj, &cs) in col_sizes.iter().enumerate() {
                if let Some(b) = blocks[bi][bj] {
                    if (b.rows, b.cols) != (rs, cs) {
                        return Err(Error::Contract(format!("block ({bi}, {bj}) is {}x{}, expected {rs}x{cs}", b.rows, b.cols)));
                    }
                    for i in 0..rs {
                        for j in 0..cs {
                            out.entries[r0 + i][c0 + j] = b.entries[i][j].clone();
                        }
                    }
                }
                c0 += cs;
            }
            r0 += rs;
        }
        Ok(out)
    }
}

impl fmt::Display for GroupRingMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.entries {
            let cells: Vec<String> = r.iter().map(|x| x.to_string()).collect();
            writeln!(f, "[{}]", cells.join(", "))?;
        }
        Ok(())
    }
}

/// The maps `d^k_{r,s}` used in total degrees up to three.
#[derive(Clone, Debug)]
pub struct WallBlocks {
    /// Resolution of the Klein four-group: `d^0_{r}` for `r = 1, 2, 3`.
    pub d0: [GroupRingMatrix; 3],
    /// `d^1_{0,s}` for even and odd `s`.
    pub d1_0_even: GroupRingMatrix,
    pub d1_0_odd: GroupRingMatrix,
    pub d1_1_1: GroupRingMatrix,
    pub d1_1_2: GroupRingMatrix,
    pub d1_2_1: GroupRingMatrix,
    /// Solved from the second Wall identity.
    pub d2_1_2: GroupRingMatrix,
}

#[derive(Clone, Debug)]
pub struct WallResolution {
    pub blocks: WallBlocks,
    /// `d_1: Z[A4]^3 -> Z[A4]`, `d_2: Z[A4]^6 -> Z[A4]^3`, `d_3: Z[A4]^10 -> Z[A4]^6`.
    pub d: [GroupRingMatrix; 3],
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WallReport {
    pub d1_d2_zero: bool,
    pub d2_d3_zero: bool,
    /// `ε_{s-1} ∘ d^1_{0,s} = d^C_s ∘ ε_s` for `s = 1, 2, 3`.
    pub augmentation_condition: bool,
    /// `Σ_i d^{k-i} d^i = 0` for `k = 0, 1, 2` on the blocks in total degree at most three.
    pub wall_identities: bool,
    pub homology: Vec<AbelianGroupValue>,
}

impl WallReport {
    pub fn passed(&self) -> bool {
        self.d1_d2_zero && self.d2_d3_zero && self.augmentation_condition && self.wall_identities
    }
}

const X: &str = "(12)(34)";
const Y: &str = "(14)(23)";

fn blocks_without_d2() -> Result<WallBlocks> {
    let (xm, xp, ym, yp) = (format!("{X}-1"), format!("{X}+1"), format!("{Y}-1"), format!("{Y}+1"));
    let one_minus_y = format!("1-{Y}");
    // the middle row is the Koszul sign of the tensor product differential
    let neg_y_m = format!("-{Y}-1");
    let d0 = [
        GroupRingMatrix::parse(&[&[&xm, &ym]])?,
        GroupRingMatrix::parse(&[&[&xp, &one_minus_y, "0"], &["0", &xm, &yp]])?,
        GroupRingMatrix::parse(&[&[&xm, &ym, "0", "0"], &["0", &xp, &neg_y_m, "0"], &["0", "0", &xm, &ym]])?,
    ];
    Ok(WallBlocks {
        d0,
        d1_0_even: GroupRingMatrix::parse(&[&["(132) + (123) + 1"]])?,
        d1_0_odd: GroupRingMatrix::parse(&[&["(123) - 1"]])?,
        d1_1_1: GroupRingMatrix::parse(&[&["1", "(142)"], &["-(123)", "(134) + 1"]])?,
        d1_1_2: GroupRingMatrix::parse(&[&["-1 - (123) + (134) - (124)", "(234) - (123)"], &["(142) - (132)", "(142) - 1 + (124) + (143)"]])?,
        d1_2_1: GroupRingMatrix::parse(&[&["-1", "0", "-(123)"], &["0", "(142) - 1", "(243)"], &["(134)", "0", "-(123) - 1"]])?,
        d2_1_2: GroupRingMatrix::zero(3, 2),
    })
}

/// Solves `d^0_2 ∘ X = -d^1_{1,1} ∘ d^1_{1,2}` for a 3x2 matrix `X` over Z[A4].
fn solve_d2(b: &WallBlocks) -> Result<GroupRingMatrix> {
    let target = b.d1_1_1.compose(&b.d1_1_2)?;
    let n = Perm::a4().len();
    let (xr, xc) = (3, 2);
    let mut a: Matrix = vec![Vec::new(); 2 * xc * n];
    for i in 0..xr {
        for j in 0..xc {
            for p in Perm::a4() {
                let mut x = GroupRingMatrix::zero(xr, xc);
                x.entries[i][j] = GroupRingElement::from_perm(p, 1);
                let img = b.d0[1].compose(&x)?;
                let coords: Vec<i64> = img.entries.iter().flatten().flat_map(|e| e.coordinates()).collect();
                for (row, c) in a.iter_mut().zip(coords) {
                    row.push(c);
                }
            }
        }
    }
    let rhs: Vec<i64> = target.entries.iter().flatten().flat_map(|e| e.coordinates()).map(|c| -c).collect();
    let sol = solve_integer(&a, &rhs).ok_or_else(|| Error::Invariant("no integral solution for d^2_{1,2}".into()))?;
    let mut x = GroupRingMatrix::zero(xr, xc);
    for i in 0..xr {
        for j in 0..xc {
            let k = (i * xc + j) * n;
            x.entries[i][j] = GroupRingElement::from_coordinates(&sol[k..k + n]);
        }
    }
    Ok(x)
}

/// The resolution in degrees up to three.
pub fn construct() -> Result<WallResolution> {
    let mut b = blocks_without_d2()?;
    b.d2_1_2 = solve_d2(&b)?;
    let d1 = GroupRingMatrix::from_blocks(&[1], &[1, 2], &[vec![Some(&b.d1_0_odd), Some(&b.d0[0])]])?;
    let d2 = GroupRingMatrix::from_blocks(
        &[1, 2],
        &[1, 2, 3],
        &[vec![Some(&b.d1_0_even), Some(&b.d0[0]), None], vec![None, Some(&b.d1_1_1), Some(&b.d0[1])]],
    )?;
    let d3 = GroupRingMatrix::from_blocks(
        &[1, 2, 3],
        &[1, 2, 3, 4],
        &[
            vec![Some(&b.d1_0_odd), Some(&b.d0[0]), None, None],
            vec![None, Some(&b.d1_1_2), Some(&b.d0[1]), None],
            vec![None, Some(&b.d2_1_2), Some(&b.d1_2_1), Some(&b.d0[2])],
        ],
    )?;
    Ok(WallResolution { blocks: b, d: [d1, d2, d3] })
}

/// The 3x6 matrix for `d_2` as it is usually printed, with the lower right block written
/// as a staircase of Klein four-group differences instead of `d^0_2`. It does not compose
/// to zero with `d_1` and is kept only for comparison.
pub fn printed_d2() -> Result<GroupRingMatrix> {
    let (xm, ym) = (format!("{X}-1"), format!("{Y}-1"));
    GroupRingMatrix::parse(&[
        &["(132) + (123) + 1", &xm, &ym, "0", "0", "0"],
        &["0", "1", "(142)", &xm, &ym, "0"],
        &["0", "-(123)", "(134) + 1", "0", &xm, &ym],
    ])
}

fn quotient_eq(a: [i64; 3], b: [i64; 3]) -> bool {
    a == b
}

impl WallResolution {
    pub fn verify(&self) -> Result<WallReport> {
        let b = &self.blocks;
        let [d1, d2, d3] = &self.d;
        let d1_d2_zero = d1.compose(d2)?.is_zero();
        let d2_d3_zero = d2.compose(d3)?.is_zero();

        // in Z[t]/(t^3 - 1): d^C alternates t - 1 and t^2 + t + 1
        let t_minus_1 = [-1, 1, 0];
        let norm = [1, 1, 1];
        let augmentation_condition = quotient_eq(b.d1_0_odd.entries[0][0].to_quotient(), t_minus_1)
            && quotient_eq(b.d1_0_even.entries[0][0].to_quotient(), norm);

        let sum_zero = |terms: &[(&GroupRingMatrix, &GroupRingMatrix)]| -> Result<bool> {
            let mut acc: Option<GroupRingMatrix> = None;
            for (f, g) in terms {
                let c = f.compose(g)?;
                acc = Some(match acc {
                    None => c,
                    Some(a) => a.add(&c),
                });
            }
            Ok(acc.is_none_or(|a| a.is_zero()))
        };
        let wall_identities = sum_zero(&[(&b.d0[0], &b.d0[1])])?
            && sum_zero(&[(&b.d0[1], &b.d0[2])])?
            // k = 1 on A_{1,1}, A_{1,2}, A_{2,1}
            && sum_zero(&[(&b.d0[0], &b.d1_1_1), (&b.d1_0_odd, &b.d0[0])])?
            && sum_zero(&[(&b.d0[0], &b.d1_1_2), (&b.d1_0_even, &b.d0[0])])?
            && sum_zero(&[(&b.d0[1], &b.d1_2_1), (&b.d1_1_1, &b.d0[1])])?
            // k = 2 on A_{1,2}
            && sum_zero(&[(&b.d0[1], &b.d2_1_2), (&b.d1_1_1, &b.d1_1_2)])?;

        Ok(WallReport { d1_d2_zero, d2_d3_zero, augmentation_condition, wall_identities, homology: self.homology() })
    }

    /// `H_0, H_1, H_2` of A4 with integer coefficients.
    pub fn homology(&self) -> Vec<AbelianGroupValue> {
        let [e1, e2, e3] = [0, 1, 2].map(|i| self.d[i].augmented());
        let to_group = |(free, torsion): (usize, Vec<u64>)| AbelianGroupValue { free, torsion };
        vec![
            to_group(chain_homology(&Vec::new(), &e1, 1)),
            to_group(chain_homology(&e1, &e2, 3)),
            to_group(chain_homology(&e2, &e3, 6)),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cycle_notation_round_trip() {
        for p in Perm::a4() {
            assert_eq!(Perm::parse(&p.to_string()).unwrap(), p);
        }
        assert_eq!(Perm::a4().len(), 12);
        assert!(Perm::parse("(12)").is_err());
        let r = Perm::parse("(123)").unwrap();
        assert_eq!(r * r * r, Perm::identity());
        assert_eq!(r * r, Perm::parse("(132)").unwrap());
    }

    #[test]
    fn group_ring_parsing() {
        let e = GroupRingElement::parse("-1 -(123) +(134) -(124)").unwrap();
        assert_eq!(e.augmentation(), -2);
        assert_eq!(GroupRingElement::parse("(132)+(123)+1").unwrap().to_quotient(), [1, 1, 1]);
        let x = GroupRingElement::parse(X).unwrap();
        assert_eq!(&x * &x, GroupRingElement::one());
    }

    #[test]
    fn resolution_checks() {
        let w = construct().unwrap();
        let r = w.verify().unwrap();
        assert!(r.passed(), "{r:?}");
        let h: Vec<String> = r.homology.iter().map(|g| g.to_string()).collect();
        assert_eq!(h, ["Z", "Z/3", "Z/2"]);
    }

    #[test]
    fn printed_staircase_is_not_a_differential() {
        let w = construct().unwrap();
        assert!(!w.d[0].compose(&printed_d2().unwrap()).unwrap().is_zero());
    }
}
