//! 2x2 matrices over the ring of integers acting on upper half-space.
//!
//! The action of `(a, b; c, d)` is the one given by
//! `D = N(cz - d) + hsq*N(c)`, `z' = (conj(d - cz)(az - b) - hsq*conj(c)*a)/D`,
//! `hsq' = N(det)*hsq/D^2`. It coincides with the usual Poincaré extension of the
//! Möbius transformation of `(a, -b; -c, d)`.

use std::fmt;
use std::ops::Mul;

use num_traits::Signed;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::iqfield::{rat, AlgebraicInteger, FieldElement, QuadraticField, Rational};

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct GroupElement {
    pub a: AlgebraicInteger,
    pub b: AlgebraicInteger,
    pub c: AlgebraicInteger,
    pub d: AlgebraicInteger,
}

impl fmt::Debug for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}; {}, {})", self.a, self.b, self.c, self.d)
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Entries stored as `[a, b]` integer pairs in the basis `{1, w}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupElementRecord(pub [[i64; 2]; 4]);

impl GroupElement {
    pub fn new(a: AlgebraicInteger, b: AlgebraicInteger, c: AlgebraicInteger, d: AlgebraicInteger) -> GroupElement {
        GroupElement { a, b, c, d }
    }

    /// Builds an element from `(a0, a1)` pairs meaning `a0 + a1*w`.
    pub fn from_pairs(field: &QuadraticField, e: [(i64, i64); 4]) -> GroupElement {
        let f = |p: (i64, i64)| field.int(p.0, p.1);
        GroupElement::new(f(e[0]), f(e[1]), f(e[2]), f(e[3]))
    }

    pub fn identity(field: &QuadraticField) -> GroupElement {
        GroupElement::from_pairs(field, [(1, 0), (0, 0), (0, 0), (1, 0)])
    }

    pub fn field(&self) -> QuadraticField {
        self.a.field
    }

    pub fn determinant(&self) -> AlgebraicInteger {
        self.a * self.d - self.b * self.c
    }

    pub fn trace(&self) -> AlgebraicInteger {
        self.a + self.d
    }

    /// Inverse of a determinant-one element.
    pub fn inverse(&self) -> GroupElement {
        GroupElement::new(self.d, -self.b, -self.c, self.a)
    }

    pub fn neg(&self) -> GroupElement {
        GroupElement::new(-self.a, -self.b, -self.c, -self.d)
    }

    /// Representative of `{g, -g}` whose first non-zero entry has positive lexicographic sign.
    pub fn normalized(&self) -> GroupElement {
        for e in [self.a, self.b, self.c, self.d] {
            match e.lex_sign() {
                1 => return *self,
                -1 => return self.neg(),
                _ => {}
            }
        }
        *self
    }

    pub fn is_identity_psl(&self) -> bool {
        self.b.is_zero() && self.c.is_zero() && self.a == self.d && (self.a.a.abs() == 1 && self.a.b == 0)
    }

    pub fn psl_eq(&self, other: &GroupElement) -> bool {
        self.normalized() == other.normalized()
    }

    pub fn record(&self) -> GroupElementRecord {
        let p = |x: AlgebraicInteger| [x.a, x.b];
        GroupElementRecord([p(self.a), p(self.b), p(self.c), p(self.d)])
    }

    pub fn from_record(field: &QuadraticField, r: &GroupElementRecord) -> GroupElement {
        let e = r.0;
        GroupElement::from_pairs(field, [(e[0][0], e[0][1]), (e[1][0], e[1][1]), (e[2][0], e[2][1]), (e[3][0], e[3][1])])
    }

    /// Order of the image in PSL2 when finite and at most 6, otherwise `None`.
    pub fn psl_order(&self) -> Option<usize> {
        let mut g = *self;
        for k in 1..=6 {
            if g.is_identity_psl() {
                return Some(k);
            }
            g = g * *self;
        }
        None
    }
}

impl Mul for GroupElement {
    type Output = GroupElement;
    fn mul(self, o: GroupElement) -> GroupElement {
        GroupElement::new(
            self.a * o.a + self.b * o.c,
            self.a * o.b + self.b * o.d,
            self.c * o.a + self.d * o.c,
            self.c * o.b + self.d * o.d,
        )
    }
}

/// A point `(z, zeta)` of upper half-space stored with `hsq = zeta^2`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct UHSPoint {
    pub z: FieldElement,
    pub hsq: Rational,
}

impl UHSPoint {
    pub fn new(z: FieldElement, hsq: Rational) -> UHSPoint {
        UHSPoint { z, hsq }
    }

    pub fn is_interior(&self) -> bool {
        self.hsq.is_positive()
    }
}

/// A boundary point of upper half-space in `K ∪ {∞}`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Cusp {
    Infinity,
    Finite(FieldElement),
}

pub fn act(gamma: &GroupElement, p: &UHSPoint) -> UHSPoint {
    let (a, b, c, d) = (gamma.a.to_field(), gamma.b.to_field(), gamma.c.to_field(), gamma.d.to_field());
    let cz = &c * &p.z;
    let dcz = &d - &cz;
    let den = dcz.norm() + &p.hsq * c.norm();
    let az_b = &(&a * &p.z) - &b;
    let num = &(&dcz.conj() * &az_b) - &(&c.conj() * &a).scale(&p.hsq);
    let z = num.scale(&den.recip());
    let det = gamma.determinant().norm();
    let hsq = &p.hsq * rat(det) / (&den * &den);
    UHSPoint { z, hsq }
}

pub fn act_cusp(gamma: &GroupElement, p: &Cusp) -> Cusp {
    let (a, b, c, d) = (gamma.a.to_field(), gamma.b.to_field(), gamma.c.to_field(), gamma.d.to_field());
    // the boundary action is z -> (a z - b)/(-c z + d)
    match p {
        Cusp::Infinity => {
            if c.is_zero() {
                Cusp::Infinity
            } else {
                Cusp::Finite((-&a).div(&c).expect("non-zero"))
            }
        }
        Cusp::Finite(z) => {
            let den = &d - &(&c * z);
            if den.is_zero() {
                Cusp::Infinity
            } else {
                Cusp::Finite((&(&a * z) - &b).div(&den).expect("non-zero"))
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ElementClass {
    Identity,
    Parabolic,
    Elliptic,
    Hyperbolic,
    Loxodromic,
}

pub fn classify(gamma: &GroupElement) -> ElementClass {
    if gamma.is_identity_psl() {
        return ElementClass::Identity;
    }
    let t = gamma.trace();
    if t.b != 0 {
        return ElementClass::Loxodromic;
    }
    match t.a.abs() {
        2 => ElementClass::Parabolic,
        x if x > 2 => ElementClass::Hyperbolic,
        _ => ElementClass::Elliptic,
    }
}

pub fn elliptic_order(gamma: &GroupElement) -> Result<usize> {
    if classify(gamma) != ElementClass::Elliptic {
        return Err(Error::Contract(format!("{gamma} is not elliptic")));
    }
    match gamma.trace().a {
        0 => Ok(2),
        1 | -1 => Ok(3),
        t => Err(Error::Invariant(format!("elliptic trace {t} cannot occur"))),
    }
}

/// An interior fixed point of an elliptic element.
pub fn fixed_point_in_h(gamma: &GroupElement) -> Result<UHSPoint> {
    if classify(gamma) != ElementClass::Elliptic {
        return Err(Error::Contract(format!("{gamma} is not elliptic")));
    }
    let field = gamma.field();
    let (a, b, c, d) = (gamma.a.to_field(), gamma.b.to_field(), gamma.c.to_field(), gamma.d.to_field());
    if c.is_zero() {
        // z -> a^2 z - a b, rotation about a vertical axis
        let one = field.elem(rat(1), rat(0));
        let a2 = &a * &a;
        let z = (-&(&a * &b)).div(&(&one - &a2)).expect("a^2 != 1 for elliptic");
        return Ok(UHSPoint::new(z, rat(1)));
    }
    let t = rat(gamma.trace().a);
    let z = (&d - &a).div(&c.scale(&rat(2))).expect("c != 0");
    let hsq = (rat(4) - &t * &t) / (rat(4) * c.norm());
    Ok(UHSPoint::new(z, hsq))
}

/// Sanity helper: true when `gamma` fixes `p`.
pub fn fixes(gamma: &GroupElement, p: &UHSPoint) -> bool {
    &act(gamma, p) == p
}
