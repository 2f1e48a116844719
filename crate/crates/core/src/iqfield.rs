//! Arithmetic in an imaginary quadratic field `Q(sqrt(-m))` and its ring of integers.
//!
//! Elements are written `a + b*omega` where `omega = sqrt(-m)` for `m = 1, 2 (mod 4)` and
//! `omega = (1 + sqrt(-m))/2` for `m = 3 (mod 4)`. In both cases `omega^2 = t*omega - n`
//! with `t = omega_trace` and `n = omega_norm`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Rational = BigRational;

pub fn rat(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QuadraticField {
    pub m: i64,
    pub omega_trace: i64,
    pub omega_norm: i64,
}

pub fn is_squarefree(m: i64) -> bool {
    if m < 1 {
        return false;
    }
    let mut k = 2i64;
    while k * k <= m {
        if m % (k * k) == 0 {
            return false;
        }
        k += 1;
    }
    true
}

pub fn make_field(m: i64) -> Result<QuadraticField> {
    if m < 1 || !is_squarefree(m) {
        return Err(Error::Input(format!("m = {m} is not a positive squarefree integer")));
    }
    Ok(if m % 4 == 3 {
        QuadraticField { m, omega_trace: 1, omega_norm: (1 + m) / 4 }
    } else {
        QuadraticField { m, omega_trace: 0, omega_norm: m }
    })
}

impl QuadraticField {
    /// Discriminant of the field.
    pub fn discriminant(&self) -> i64 {
        if self.m % 4 == 3 {
            -self.m
        } else {
            -4 * self.m
        }
    }

    pub fn int(&self, a: i64, b: i64) -> AlgebraicInteger {
        AlgebraicInteger { a, b, field: *self }
    }

    pub fn elem(&self, a: Rational, b: Rational) -> FieldElement {
        FieldElement { a, b, field: *self }
    }

    pub fn zero(&self) -> FieldElement {
        self.elem(Rational::zero(), Rational::zero())
    }

    pub fn omega(&self) -> AlgebraicInteger {
        self.int(0, 1)
    }

    /// Integer quadratic form `N(x + y*omega) = x^2 + t*x*y + n*y^2`.
    pub fn norm_form(&self, x: i64, y: i64) -> i64 {
        x * x + self.omega_trace * x * y + self.omega_norm * y * y
    }

    /// `4n - t^2 = |D|`, the determinant-like constant of the norm form.
    pub fn abs_disc(&self) -> i64 {
        4 * self.omega_norm - self.omega_trace * self.omega_trace
    }

    pub fn units(&self) -> Vec<AlgebraicInteger> {
        units(self)
    }

    /// All algebraic integers with `1 <= N(x) <= bound`.
    pub fn integers_up_to_norm(&self, bound: i64) -> Vec<AlgebraicInteger> {
        let mut out = Vec::new();
        // N(x + y w) = (x + t y/2)^2 + |D| y^2 / 4
        let d = self.abs_disc();
        let ymax = ((4 * bound) as f64 / d as f64).sqrt().floor() as i64 + 1;
        for y in -ymax..=ymax {
            if d * y * y > 4 * bound {
                continue;
            }
            let rest = (4 * bound - d * y * y) as f64;
            let half = rest.sqrt() / 2.0;
            let centre = -(self.omega_trace * y) as f64 / 2.0;
            let lo = (centre - half).floor() as i64 - 1;
            let hi = (centre + half).ceil() as i64 + 1;
            for x in lo..=hi {
                let n = self.norm_form(x, y);
                if n >= 1 && n <= bound {
                    out.push(self.int(x, y));
                }
            }
        }
        out
    }
}

pub fn units(field: &QuadraticField) -> Vec<AlgebraicInteger> {
    let f = *field;
    match f.m {
        1 => vec![f.int(1, 0), f.int(0, 1), f.int(-1, 0), f.int(0, -1)],
        // omega is a primitive sixth root of unity
        3 => {
            let w = f.omega();
            let mut out = Vec::with_capacity(6);
            let mut u = f.int(1, 0);
            for _ in 0..6 {
                out.push(u);
                u = u * w;
            }
            out
        }
        _ => vec![f.int(1, 0), f.int(-1, 0)],
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct AlgebraicInteger {
    pub a: i64,
    pub b: i64,
    pub field: QuadraticField,
}

impl fmt::Debug for AlgebraicInteger {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for AlgebraicInteger {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.a, self.b) {
            (a, 0) => write!(f, "{a}"),
            (0, 1) => write!(f, "w"),
            (0, -1) => write!(f, "-w"),
            (0, b) => write!(f, "{b}w"),
            (a, 1) => write!(f, "{a}+w"),
            (a, -1) => write!(f, "{a}-w"),
            (a, b) if b > 0 => write!(f, "{a}+{b}w"),
            (a, b) => write!(f, "{a}{b}w"),
        }
    }
}

fn ck(x: Option<i64>) -> i64 {
    x.expect("algebraic integer overflow")
}

impl AlgebraicInteger {
    pub fn is_zero(&self) -> bool {
        self.a == 0 && self.b == 0
    }

    pub fn norm(&self) -> i64 {
        let f = &self.field;
        let aa = ck(self.a.checked_mul(self.a));
        let ab = ck(ck(self.a.checked_mul(self.b)).checked_mul(f.omega_trace));
        let bb = ck(ck(self.b.checked_mul(self.b)).checked_mul(f.omega_norm));
        ck(ck(aa.checked_add(ab)).checked_add(bb))
    }

    pub fn trace(&self) -> i64 {
        ck(ck(2i64.checked_mul(self.a)).checked_add(ck(self.field.omega_trace.checked_mul(self.b))))
    }

    pub fn conj(&self) -> AlgebraicInteger {
        self.field.int(ck(self.a.checked_add(self.field.omega_trace * self.b)), -self.b)
    }

    pub fn to_field(&self) -> FieldElement {
        self.field.elem(rat(self.a), rat(self.b))
    }

    pub fn is_unit(&self) -> bool {
        self.norm() == 1
    }

    /// Exact quotient `self / other` when it lies in the ring.
    pub fn div_exact(&self, other: &AlgebraicInteger) -> Option<AlgebraicInteger> {
        let q = self.to_field().div(&other.to_field())?;
        q.to_integer()
    }

    /// Sign used for projective normalisation: compare `a` first, then `b`.
    pub fn lex_sign(&self) -> i32 {
        if self.a > 0 || (self.a == 0 && self.b > 0) {
            1
        } else if self.a == 0 && self.b == 0 {
            0
        } else {
            -1
        }
    }
}

impl Add for AlgebraicInteger {
    type Output = AlgebraicInteger;
    fn add(self, o: AlgebraicInteger) -> AlgebraicInteger {
        self.field.int(ck(self.a.checked_add(o.a)), ck(self.b.checked_add(o.b)))
    }
}

impl Sub for AlgebraicInteger {
    type Output = AlgebraicInteger;
    fn sub(self, o: AlgebraicInteger) -> AlgebraicInteger {
        self.field.int(ck(self.a.checked_sub(o.a)), ck(self.b.checked_sub(o.b)))
    }
}

impl Neg for AlgebraicInteger {
    type Output = AlgebraicInteger;
    fn neg(self) -> AlgebraicInteger {
        self.field.int(-self.a, -self.b)
    }
}

impl Mul for AlgebraicInteger {
    type Output = AlgebraicInteger;
    fn mul(self, o: AlgebraicInteger) -> AlgebraicInteger {
        let f = self.field;
        let (x1, y1, x2, y2) = (self.a as i128, self.b as i128, o.a as i128, o.b as i128);
        let t = f.omega_trace as i128;
        let n = f.omega_norm as i128;
        let a = x1 * x2 - n * y1 * y2;
        let b = x1 * y2 + x2 * y1 + t * y1 * y2;
        f.int(
            i64::try_from(a).expect("algebraic integer overflow"),
            i64::try_from(b).expect("algebraic integer overflow"),
        )
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct FieldElement {
    pub a: Rational,
    pub b: Rational,
    pub field: QuadraticField,
}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.b.is_zero() {
            write!(f, "{}", self.a)
        } else if self.a.is_zero() {
            write!(f, "({})w", self.b)
        } else {
            write!(f, "{} + ({})w", self.a, self.b)
        }
    }
}

impl FieldElement {
    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    pub fn norm(&self) -> Rational {
        let f = &self.field;
        &self.a * &self.a + &self.a * &self.b * rat(f.omega_trace) + &self.b * &self.b * rat(f.omega_norm)
    }

    pub fn trace(&self) -> Rational {
        &self.a * rat(2) + &self.b * rat(self.field.omega_trace)
    }

    pub fn conj(&self) -> FieldElement {
        self.field.elem(&self.a + &self.b * rat(self.field.omega_trace), -&self.b)
    }

    pub fn scale(&self, r: &Rational) -> FieldElement {
        self.field.elem(&self.a * r, &self.b * r)
    }

    pub fn inv(&self) -> Option<FieldElement> {
        if self.is_zero() {
            return None;
        }
        let n = self.norm();
        Some(self.conj().scale(&n.recip()))
    }

    pub fn div(&self, other: &FieldElement) -> Option<FieldElement> {
        Some(self * &other.inv()?)
    }

    pub fn is_integral(&self) -> bool {
        self.a.is_integer() && self.b.is_integer()
    }

    pub fn to_integer(&self) -> Option<AlgebraicInteger> {
        if !self.is_integral() {
            return None;
        }
        Some(self.field.int(self.a.to_integer().to_i64()?, self.b.to_integer().to_i64()?))
    }

    /// Real part of the complex embedding.
    pub fn re(&self) -> Rational {
        &self.a + &self.b * ratio(self.field.omega_trace, 2)
    }

    /// Approximate complex embedding, for filtering and display only.
    pub fn approx(&self) -> (f64, f64) {
        let a = self.a.to_f64().unwrap_or(f64::NAN);
        let b = self.b.to_f64().unwrap_or(f64::NAN);
        let f = &self.field;
        let im = (f.abs_disc() as f64).sqrt() / 2.0;
        (a + b * f.omega_trace as f64 / 2.0, b * im)
    }

    /// Splits into an integer translate and a remainder with coordinates in `[0, 1)`.
    pub fn reduce_mod_lattice(&self) -> (FieldElement, AlgebraicInteger) {
        let fa = self.a.floor();
        let fb = self.b.floor();
        let tr = self.field.int(fa.to_integer().to_i64().expect("overflow"), fb.to_integer().to_i64().expect("overflow"));
        (self.field.elem(&self.a - fa, &self.b - fb), tr)
    }
}

impl<'a> Add<&'a FieldElement> for &'a FieldElement {
    type Output = FieldElement;
    fn add(self, o: &FieldElement) -> FieldElement {
        self.field.elem(&self.a + &o.a, &self.b + &o.b)
    }
}

impl<'a> Sub<&'a FieldElement> for &'a FieldElement {
    type Output = FieldElement;
    fn sub(self, o: &FieldElement) -> FieldElement {
        self.field.elem(&self.a - &o.a, &self.b - &o.b)
    }
}

impl Neg for &FieldElement {
    type Output = FieldElement;
    fn neg(self) -> FieldElement {
        self.field.elem(-&self.a, -&self.b)
    }
}

impl<'a> Mul<&'a FieldElement> for &'a FieldElement {
    type Output = FieldElement;
    fn mul(self, o: &FieldElement) -> FieldElement {
        let f = &self.field;
        let yy = &self.b * &o.b;
        let a = &self.a * &o.a - &yy * rat(f.omega_norm);
        let b = &self.a * &o.b + &o.a * &self.b + yy * rat(f.omega_trace);
        f.elem(a, b)
    }
}

/// Reduced positive definite binary quadratic form `a x^2 + b x y + c y^2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BinaryForm {
    pub a: i64,
    pub b: i64,
    pub c: i64,
}

impl BinaryForm {
    pub fn discriminant(&self) -> i64 {
        self.b * self.b - 4 * self.a * self.c
    }

    pub fn is_reduced(&self) -> bool {
        let (a, b, c) = (self.a, self.b, self.c);
        b.abs() <= a && a <= c && (b >= 0 || (b.abs() != a && a != c))
    }

    pub fn reduce(mut self) -> BinaryForm {
        loop {
            let (a, b, c) = (self.a, self.b, self.c);
            if b.abs() > a || (b == -a) {
                // translate x -> x + k y to bring b into (-a, a]
                let two_a = 2 * a;
                let mut nb = b.rem_euclid(two_a);
                if nb > a {
                    nb -= two_a;
                }
                let k = (nb - b) / two_a;
                let nc = a * k * k + b * k + c;
                self = BinaryForm { a, b: nb, c: nc };
                continue;
            }
            if a > c {
                self = BinaryForm { a: c, b: -b, c: a };
                continue;
            }
            if a == c && b < 0 {
                self = BinaryForm { a, b: -b, c };
                continue;
            }
            return self;
        }
    }
}

/// All reduced forms of discriminant `d < 0`.
pub fn reduced_forms(d: i64) -> Vec<BinaryForm> {
    let mut out = Vec::new();
    let mut a = 1i64;
    while 3 * a * a <= -d {
        for b in -a + 1..=a {
            let num = b * b - d;
            if num % (4 * a) != 0 {
                continue;
            }
            let c = num / (4 * a);
            let f = BinaryForm { a, b, c };
            if f.is_reduced() && Integer::gcd(&Integer::gcd(&a, &b), &c) == 1 {
                out.push(f);
            }
        }
        a += 1;
    }
    out.sort();
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdealClassDatum {
    pub class_number: usize,
    /// Each representative ideal as a pair of generators.
    pub representatives: Vec<(AlgebraicInteger, AlgebraicInteger)>,
    pub forms: Vec<BinaryForm>,
}

/// The ideal `(a, (-b + sqrt(D))/2)` attached to a form of discriminant `D`.
fn form_ideal(field: &QuadraticField, f: &BinaryForm) -> (AlgebraicInteger, AlgebraicInteger) {
    let second = if field.m % 4 == 3 {
        // sqrt(D) = 2w - 1
        field.int(-(f.b + 1) / 2, 1)
    } else {
        // sqrt(D) = 2w
        field.int(-f.b / 2, 1)
    };
    (field.int(f.a, 0), second)
}

pub fn class_group(field: &QuadraticField) -> IdealClassDatum {
    let forms = reduced_forms(field.discriminant());
    let representatives = forms.iter().map(|f| form_ideal(field, f)).collect();
    IdealClassDatum { class_number: forms.len(), representatives, forms }
}

/// Hermite basis `(p, q; 0, r)` of the Z-lattice spanned by the given integers:
/// the lattice is `Z*(p + q w) + Z*(r w)` with `p, r > 0`.
fn lattice_hnf(gens: &[AlgebraicInteger]) -> Option<(i64, i64, i64)> {
    let mut rows: Vec<(i128, i128)> = gens.iter().map(|g| (g.a as i128, g.b as i128)).collect();
    // column 0 gcd via Euclid on rows
    let mut pivot: Option<(i128, i128)> = None;
    loop {
        rows.retain(|r| r.0 != 0 || r.1 != 0);
        let nz: Vec<usize> = (0..rows.len()).filter(|&i| rows[i].0 != 0).collect();
        if nz.len() <= 1 {
            if let Some(&i) = nz.first() {
                let mut r = rows.remove(i);
                if r.0 < 0 {
                    r = (-r.0, -r.1);
                }
                pivot = Some(r);
            }
            break;
        }
        let (imin, _) = nz.iter().map(|&i| (i, rows[i].0.abs())).min_by_key(|x| x.1).unwrap();
        let pr = rows[imin];
        for &i in &nz {
            if i != imin {
                let q = rows[i].0.div_euclid(pr.0);
                rows[i] = (rows[i].0 - q * pr.0, rows[i].1 - q * pr.1);
            }
        }
    }
    let (p, q) = pivot?;
    let mut r: i128 = 0;
    for row in &rows {
        r = Integer::gcd(&r, &row.1);
    }
    if r == 0 {
        return None;
    }
    let q = q.rem_euclid(r);
    Some((p as i64, q as i64, r as i64))
}

/// Norm of the ideal generated by `gens`, i.e. the index of the lattice it spans.
pub fn ideal_norm(gens: &[AlgebraicInteger]) -> Option<i64> {
    let field = gens.first()?.field;
    let mut all = Vec::new();
    for g in gens {
        all.push(*g);
        all.push(*g * field.omega());
    }
    let (p, _, r) = lattice_hnf(&all)?;
    Some(p * r)
}

/// True when `lambda` and `mu` generate the unit ideal.
pub fn coprime(lambda: &AlgebraicInteger, mu: &AlgebraicInteger) -> bool {
    ideal_norm(&[*lambda, *mu]) == Some(1)
}

/// Reduced form attached to the ideal generated by `gens`.
pub fn ideal_form(gens: &[AlgebraicInteger]) -> Option<BinaryForm> {
    let field = gens.first()?.field;
    let mut all = Vec::new();
    for g in gens {
        all.push(*g);
        all.push(*g * field.omega());
    }
    let (p, q, r) = lattice_hnf(&all)?;
    let alpha = field.int(p, q);
    let beta = field.int(0, r);
    let n = p * r;
    // N(x alpha + y beta) / N(ideal)
    let na = alpha.norm();
    let nb = beta.norm();
    let cross = (alpha * beta.conj()).trace();
    if na % n != 0 || nb % n != 0 || cross % n != 0 {
        return None;
    }
    Some(BinaryForm { a: na / n, b: cross / n, c: nb / n }.reduce())
}

pub fn is_principal(lambda: &AlgebraicInteger, mu: &AlgebraicInteger) -> Result<bool> {
    if lambda.is_zero() && mu.is_zero() {
        return Err(Error::Input("the zero ideal has no class".into()));
    }
    let f = ideal_form(&[*lambda, *mu]).ok_or_else(|| Error::Invariant("ideal form computation failed".into()))?;
    Ok(f.a == 1)
}

/// Bezout coefficients: `x, y` with `x*lambda + y*mu = 1`, when the ideal is the unit ideal.
pub fn bezout(lambda: &AlgebraicInteger, mu: &AlgebraicInteger) -> Option<(AlgebraicInteger, AlgebraicInteger)> {
    let field = lambda.field;
    let w = field.omega();
    // generators with their coefficient vectors in Z^4 (coefficients of 1, w on lambda and mu)
    let gens = [(*lambda, [1i128, 0, 0, 0]), (*lambda * w, [0, 1, 0, 0]), (*mu, [0, 0, 1, 0]), (*mu * w, [0, 0, 0, 1])];
    let mut rows: Vec<((i128, i128), [i128; 4])> = gens.iter().map(|(g, c)| ((g.a as i128, g.b as i128), *c)).collect();
    let sub = |r: &mut ((i128, i128), [i128; 4]), s: &((i128, i128), [i128; 4]), q: i128| {
        r.0 .0 -= q * s.0 .0;
        r.0 .1 -= q * s.0 .1;
        for k in 0..4 {
            r.1[k] -= q * s.1[k];
        }
    };
    // eliminate the first coordinate
    loop {
        let nz: Vec<usize> = (0..rows.len()).filter(|&i| rows[i].0 .0 != 0).collect();
        if nz.len() <= 1 {
            break;
        }
        let imin = *nz.iter().min_by_key(|&&i| rows[i].0 .0.abs()).unwrap();
        let pr = rows[imin];
        for &i in &nz {
            if i != imin {
                let q = rows[i].0 .0.div_euclid(pr.0 .0);
                sub(&mut rows[i], &pr, q);
            }
        }
    }
    let pi = (0..rows.len()).find(|&i| rows[i].0 .0 != 0)?;
    let mut pivot = rows.remove(pi);
    // now remaining rows have first coordinate zero; gcd their second coordinates
    loop {
        let nz: Vec<usize> = (0..rows.len()).filter(|&i| rows[i].0 .1 != 0).collect();
        if nz.len() <= 1 {
            break;
        }
        let imin = *nz.iter().min_by_key(|&&i| rows[i].0 .1.abs()).unwrap();
        let pr = rows[imin];
        for &i in &nz {
            if i != imin {
                let q = rows[i].0 .1.div_euclid(pr.0 .1);
                sub(&mut rows[i], &pr, q);
            }
        }
    }
    if pivot.0 .0.abs() != 1 {
        return None;
    }
    if pivot.0 .0 < 0 {
        pivot.0 = (-pivot.0 .0, -pivot.0 .1);
        for k in 0..4 {
            pivot.1[k] = -pivot.1[k];
        }
    }
    if pivot.0 .1 != 0 {
        let second = rows.iter().find(|r| r.0 .1 != 0)?;
        if pivot.0 .1 % second.0 .1 != 0 {
            return None;
        }
        let q = pivot.0 .1 / second.0 .1;
        let s = *second;
        sub(&mut pivot, &s, q);
    }
    let c = pivot.1;
    let x = field.int(c[0] as i64, c[1] as i64);
    let y = field.int(c[2] as i64, c[3] as i64);
    debug_assert!((x * *lambda + y * *mu) == field.int(1, 0));
    Some((x, y))
}

pub fn rational_sqrt(q: &Rational) -> Option<Rational> {
    if q.is_negative() {
        return None;
    }
    let n = q.numer().sqrt();
    let d = q.denom().sqrt();
    if &(&n * &n) == q.numer() && &(&d * &d) == q.denom() {
        Some(Rational::new(n, d))
    } else {
        None
    }
}

pub fn one() -> Rational {
    Rational::one()
}
