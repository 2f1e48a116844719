//! Homology of the finite stabiliser groups with trivial coefficients, and the maps induced
//! by inclusions of cyclic subgroups.

use std::fmt;

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::cellcomplex::StabiliserType;
use crate::error::{Error, Result};
use crate::linalg::invariant_factors;

/// A finitely generated abelian group `Z^free ⊕ Z/d_1 ⊕ ... ⊕ Z/d_k` with `d_i | d_(i+1)`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AbelianGroupValue {
    pub free: usize,
    pub torsion: Vec<u64>,
}

impl AbelianGroupValue {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn free(n: usize) -> Self {
        AbelianGroupValue { free: n, torsion: Vec::new() }
    }

    /// From arbitrary cyclic orders; `0` stands for `Z`, `1` is dropped.
    pub fn from_cyclic(orders: &[u64]) -> Self {
        let free = orders.iter().filter(|&&d| d == 0).count();
        let t: Vec<BigInt> = orders.iter().filter(|&&d| d != 0).map(|&d| BigInt::from(d)).collect();
        let torsion = invariant_factors(t).iter().map(|x| x.to_u64().expect("small")).collect();
        AbelianGroupValue { free, torsion }
    }

    pub fn elementary(ell: u64, rank: usize) -> Self {
        Self::from_cyclic(&vec![ell; rank])
    }

    pub fn direct_sum(&self, o: &Self) -> Self {
        let mut c: Vec<u64> = self.torsion.iter().chain(o.torsion.iter()).copied().collect();
        c.extend(std::iter::repeat_n(0, self.free + o.free));
        Self::from_cyclic(&c)
    }

    pub fn is_zero(&self) -> bool {
        self.free == 0 && self.torsion.is_empty()
    }

    /// `dim_{F_ell}(A ⊗ F_ell)`.
    pub fn tensor_dim(&self, ell: u64) -> usize {
        self.free + self.torsion.iter().filter(|&&d| d % ell == 0).count()
    }

    /// `dim_{F_ell} Tor(A, F_ell)`.
    pub fn tor_dim(&self, ell: u64) -> usize {
        self.torsion.iter().filter(|&&d| d % ell == 0).count()
    }

    /// Rank of the `ell`-primary part when it is elementary abelian.
    pub fn primary_rank(&self, ell: u64) -> usize {
        self.tor_dim(ell)
    }

    /// The `ell`-primary part as cyclic orders.
    pub fn primary_part(&self, ell: u64) -> Vec<u64> {
        let mut out = Vec::new();
        for &d in &self.torsion {
            let mut p = 1;
            let mut x = d;
            while x % ell == 0 {
                x /= ell;
                p *= ell;
            }
            if p > 1 {
                out.push(p);
            }
        }
        out
    }
}

impl fmt::Display for AbelianGroupValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = Vec::new();
        if self.free > 0 {
            parts.push(if self.free == 1 { "Z".into() } else { format!("Z^{}", self.free) });
        }
        let mut i = 0;
        while i < self.torsion.len() {
            let d = self.torsion[i];
            let n = self.torsion[i..].iter().take_while(|&&x| x == d).count();
            parts.push(if n == 1 { format!("Z/{d}") } else { format!("(Z/{d})^{n}") });
            i += n;
        }
        if parts.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", parts.join(" + "))
        }
    }
}

/// Trivial coefficient modules.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Coefficients {
    Integers,
    Mod(u64),
}

/// `H_q(t; coeff)`.
pub fn homology(t: StabiliserType, coeff: Coefficients, q: usize) -> Result<AbelianGroupValue> {
    use StabiliserType::*;
    let z = |orders: &[u64]| AbelianGroupValue::from_cyclic(orders);
    match coeff {
        Coefficients::Integers => {
            if q == 0 {
                return Ok(z(&[0]));
            }
            Ok(match t {
                Trivial => z(&[]),
                Z2 | Z3 => {
                    let n = t.order().expect("finite");
                    if q % 2 == 1 {
                        z(&[n as u64])
                    } else {
                        z(&[])
                    }
                }
                D2 => {
                    let k = if q % 2 == 1 { (q + 3) / 2 } else { q / 2 };
                    AbelianGroupValue::elementary(2, k)
                }
                S3 => match q % 4 {
                    1 => z(&[2]),
                    3 => z(&[6]),
                    _ => z(&[]),
                },
                A4 => {
                    let k = (q - 1) / 6;
                    let r = (q - 1) % 6 + 1;
                    let mut c = vec![2u64; k];
                    match r {
                        1 => c.push(3),
                        2 => c.push(2),
                        3 => c.push(6),
                        4 => {}
                        5 => c.extend([2, 6]),
                        _ => c.push(2),
                    }
                    z(&c)
                }
                Zsquare => match q {
                    1 => z(&[0, 0]),
                    2 => z(&[0]),
                    _ => z(&[]),
                },
            })
        }
        Coefficients::Mod(ell) => {
            if ell != 2 && ell != 3 {
                return Err(Error::Contract(format!("coefficients Z/{ell} are not tabulated")));
            }
            let dim = mod_dim(t, ell, q);
            Ok(AbelianGroupValue::elementary(ell, dim))
        }
    }
}

/// `dim H_q(t; Z/ell)` for `ell` in {2, 3}, transcribed per group.
pub fn mod_dim(t: StabiliserType, ell: u64, q: usize) -> usize {
    use StabiliserType::*;
    if q == 0 {
        return 1;
    }
    match (t, ell) {
        (Trivial, _) => 0,
        (Z2, 2) | (Z3, 3) => 1,
        (Z2, _) | (Z3, _) => 0,
        (D2, 2) => q + 1,
        (D2, _) => 0,
        (S3, 2) => 1,
        (S3, _) => usize::from(q % 4 == 3 || q.is_multiple_of(4)),
        (A4, 3) => 1,
        (A4, _) => {
            let k = (q - 1) / 6;
            match (q - 1) % 6 + 1 {
                1 => 2 * k,
                2 => 2 * k + 1,
                3 => 2 * k + 2,
                4 => 2 * k + 1,
                5 => 2 * k + 2,
                _ => 2 * k + 3,
            }
        }
        (Zsquare, _) => match q {
            1 => 2,
            2 => 1,
            _ => 0,
        },
    }
}

/// `dim_{F_ell}` of the `ell`-primary part of `H_q(t; Z)`; every such part is elementary
/// abelian for the finite stabiliser types.
pub fn primary_dim(t: StabiliserType, ell: u64, q: usize) -> usize {
    if q == 0 || t == StabiliserType::Zsquare {
        return 0;
    }
    homology(t, Coefficients::Integers, q).map(|h| h.primary_rank(ell)).unwrap_or(0)
}

/// Behaviour of a map on homology.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum InducedMap {
    Injective,
    Zero,
}

/// The map `H_q(Z/ell; coeff) -> H_q(target; coeff)` induced by an inclusion, for `q >= 1`.
pub fn induced_rank(ell: u64, target: StabiliserType, coeff: Coefficients, q: usize) -> Result<InducedMap> {
    use StabiliserType::*;
    if q == 0 {
        return Err(Error::Contract("induced maps are tabulated for q >= 1".into()));
    }
    let target_dim = match coeff {
        Coefficients::Integers => primary_dim(target, ell, q),
        Coefficients::Mod(p) if p == ell => mod_dim(target, ell, q),
        Coefficients::Mod(_) => 0,
    };
    let injective = match (ell, target) {
        (2, Z2) | (3, Z3) => true,
        (2, S3) => true,
        (3, S3) => q % 4 == 3 || q.is_multiple_of(4),
        (2, D2) => true,
        (3, A4) => true,
        (2, A4) => q > 1,
        _ => return Err(Error::Contract(format!("Z/{ell} is not a subgroup of {}", target.name()))),
    };
    // a map into zero is recorded as zero
    let source_nonzero = match coeff {
        Coefficients::Integers => q % 2 == 1,
        Coefficients::Mod(p) => p == ell,
    };
    Ok(if injective && target_dim > 0 && source_nonzero { InducedMap::Injective } else { InducedMap::Zero })
}

/// Sign by which inversion of a generator acts on `H_q(Z/3)`.
pub fn inversion_sign(q: usize) -> i64 {
    if q.div_ceil(2).is_multiple_of(2) {
        1
    } else {
        -1
    }
}

/// Image of the generator of `H_q(Z/ell)` in a fixed basis of `H_q(target)` (mod-`ell` or
/// `ell`-primary integral), as a column of length `dim`.
///
/// `slot` selects the involution of a Klein four-group: 0 and 1 are the basis involutions,
/// 2 their product. `inverted` marks a Z/3 generator that is conjugate to the inverse of the
/// reference element of the target.
pub fn image_column(ell: u64, target: StabiliserType, coeff: Coefficients, q: usize, slot: usize, inverted: bool) -> Result<Vec<i64>> {
    let dim = match coeff {
        Coefficients::Integers => primary_dim(target, ell, q),
        Coefficients::Mod(_) => mod_dim(target, ell, q),
    };
    let mut col = vec![0i64; dim];
    if induced_rank(ell, target, coeff, q)? == InducedMap::Zero || dim == 0 {
        return Ok(col);
    }
    match (ell, target) {
        (2, StabiliserType::D2) => match slot {
            0 => col[0] = 1,
            1 => col[dim - 1] = 1,
            _ => col.iter_mut().for_each(|x| *x = 1),
        },
        (3, _) => col[0] = if inverted { inversion_sign(q) } else { 1 },
        _ => col[0] = 1,
    }
    Ok(col)
}

#[cfg(test)]
mod tests {
    use super::*;
    use StabiliserType::*;

    #[test]
    fn tabulated_values() {
        let h = homology(A4, Coefficients::Integers, 3).unwrap();
        assert_eq!(h.torsion, vec![6]);
        let h = homology(D2, Coefficients::Mod(2), 2).unwrap();
        assert_eq!(h, AbelianGroupValue::elementary(2, 3));
        for t in StabiliserType::FINITE {
            assert_eq!(homology(t, Coefficients::Integers, 0).unwrap(), AbelianGroupValue::free(1));
        }
        assert_eq!(homology(A4, Coefficients::Integers, 1).unwrap().torsion, vec![3]);
        assert_eq!(homology(A4, Coefficients::Integers, 2).unwrap().torsion, vec![2]);
        assert_eq!(homology(A4, Coefficients::Integers, 11).unwrap().to_string(), "(Z/2)^2 + Z/6");
    }

    #[test]
    fn universal_coefficients() {
        for t in StabiliserType::FINITE {
            for ell in [2u64, 3] {
                for q in 1..=24 {
                    let hq = homology(t, Coefficients::Integers, q).unwrap();
                    let hq1 = homology(t, Coefficients::Integers, q - 1).unwrap();
                    assert_eq!(mod_dim(t, ell, q), hq.tensor_dim(ell) + hq1.tor_dim(ell), "{t:?} ell={ell} q={q}");
                }
            }
        }
    }

    #[test]
    fn induced_maps() {
        assert_eq!(induced_rank(2, A4, Coefficients::Integers, 1).unwrap(), InducedMap::Zero);
        assert_eq!(induced_rank(3, S3, Coefficients::Integers, 5).unwrap(), InducedMap::Zero);
        assert_eq!(induced_rank(2, D2, Coefficients::Mod(2), 7).unwrap(), InducedMap::Injective);
        assert_eq!(induced_rank(3, S3, Coefficients::Integers, 7).unwrap(), InducedMap::Injective);
        assert!(induced_rank(3, D2, Coefficients::Integers, 1).is_err());
    }

    #[test]
    fn klein_four_columns() {
        for q in [3usize, 5, 7] {
            let cols: Vec<Vec<i64>> = (0..3).map(|s| image_column(2, D2, Coefficients::Integers, q, s, false).unwrap()).collect();
            let m: Vec<Vec<i64>> = (0..cols[0].len()).map(|i| cols.iter().map(|c| c[i]).collect()).collect();
            assert_eq!(crate::linalg::rank_mod(&m, 2), 3);
        }
        let cols: Vec<Vec<i64>> = (0..3).map(|s| image_column(2, D2, Coefficients::Integers, 1, s, false).unwrap()).collect();
        let m: Vec<Vec<i64>> = (0..2).map(|i| cols.iter().map(|c| c[i]).collect()).collect();
        assert_eq!(crate::linalg::rank_mod(&m, 2), 2);
    }
}
