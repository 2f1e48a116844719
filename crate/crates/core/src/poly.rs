//! Integer polynomials in `t` and rational functions with integer coefficients.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coefficients from the constant term upwards, without trailing zeros.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Poly(Vec<BigInt>);

impl Poly {
    pub fn new(mut c: Vec<BigInt>) -> Poly {
        while c.last().is_some_and(|x| x.is_zero()) {
            c.pop();
        }
        Poly(c)
    }

    pub fn from_i64(c: &[i64]) -> Poly {
        Poly::new(c.iter().map(|&x| BigInt::from(x)).collect())
    }

    pub fn constant(c: i64) -> Poly {
        Poly::from_i64(&[c])
    }

    pub fn one() -> Poly {
        Poly::constant(1)
    }

    /// `c t^k`.
    pub fn monomial(c: i64, k: usize) -> Poly {
        let mut v = vec![BigInt::zero(); k + 1];
        v[k] = BigInt::from(c);
        Poly::new(v)
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.0
    }

    pub fn coeff(&self, k: usize) -> BigInt {
        self.0.get(k).cloned().unwrap_or_default()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    /// Degree; the zero polynomial has none.
    pub fn degree(&self) -> Option<usize> {
        self.0.len().checked_sub(1)
    }

    pub fn leading(&self) -> BigInt {
        self.0.last().cloned().unwrap_or_default()
    }

    pub fn scale(&self, c: &BigInt) -> Poly {
        Poly::new(self.0.iter().map(|x| x * c).collect())
    }

    pub fn pow(&self, e: u32) -> Poly {
        (0..e).fold(Poly::one(), |acc, _| &acc * self)
    }

    /// Gcd of the coefficients, non-negative.
    pub fn content(&self) -> BigInt {
        self.0.iter().fold(BigInt::zero(), |g, x| g.gcd(x))
    }

    pub fn primitive(&self) -> Poly {
        let c = self.content();
        if c.is_zero() {
            return self.clone();
        }
        let p = Poly::new(self.0.iter().map(|x| x / &c).collect());
        if p.leading().is_negative() {
            -&p
        } else {
            p
        }
    }

    /// Exact division over Z; `None` when `other` does not divide `self`.
    pub fn div_exact(&self, other: &Poly) -> Option<Poly> {
        let d = other.degree()?;
        if self.is_zero() {
            return Some(Poly::default());
        }
        let n = self.degree()?;
        if n < d {
            return None;
        }
        let mut rem = self.0.clone();
        let mut q = vec![BigInt::zero(); n - d + 1];
        let lead = other.leading();
        for k in (0..=n - d).rev() {
            let (qq, r) = rem[k + d].div_rem(&lead);
            if !r.is_zero() {
                return None;
            }
            for (j, c) in other.0.iter().enumerate() {
                rem[k + j] -= &qq * c;
            }
            q[k] = qq;
        }
        rem.iter().all(|x| x.is_zero()).then(|| Poly::new(q))
    }

    /// Pseudo-remainder of `self` by `other`.
    fn pseudo_rem(&self, other: &Poly) -> Poly {
        let d = other.degree().expect("non-zero divisor");
        let lead = other.leading();
        let mut r = self.clone();
        while let Some(n) = r.degree() {
            if n < d {
                break;
            }
            let c = r.leading();
            r = &r.scale(&lead) - &(other * &Poly::monomial(1, n - d)).scale(&c);
        }
        r
    }

    /// Primitive gcd with positive leading coefficient.
    pub fn gcd(&self, other: &Poly) -> Poly {
        let (mut a, mut b) = (self.primitive(), other.primitive());
        while !b.is_zero() {
            let r = a.pseudo_rem(&b).primitive();
            a = b;
            b = r;
        }
        let content = self.content().gcd(&other.content());
        a.scale(&content)
    }

    pub fn eval_rational(&self, t: &BigRational) -> BigRational {
        self.0.iter().rev().fold(BigRational::zero(), |acc, c| acc * t + BigRational::from_integer(c.clone()))
    }

    pub fn to_i64(&self) -> Option<Vec<i64>> {
        self.0.iter().map(|x| x.to_i64()).collect()
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, o: &Poly) -> Poly {
        let n = self.0.len().max(o.0.len());
        Poly::new((0..n).map(|k| self.coeff(k) + o.coeff(k)).collect())
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, o: &Poly) -> Poly {
        let n = self.0.len().max(o.0.len());
        Poly::new((0..n).map(|k| self.coeff(k) - o.coeff(k)).collect())
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        Poly::new(self.0.iter().map(|x| -x).collect())
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, o: &Poly) -> Poly {
        if self.is_zero() || o.is_zero() {
            return Poly::default();
        }
        let mut v = vec![BigInt::zero(); self.0.len() + o.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in o.0.iter().enumerate() {
                v[i + j] += a * b;
            }
        }
        Poly::new(v)
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for k in (0..self.0.len()).rev() {
            let c = &self.0[k];
            if c.is_zero() {
                continue;
            }
            let neg = c.is_negative();
            let a = c.abs();
            match (first, neg) {
                (true, true) => write!(f, "-")?,
                (false, true) => write!(f, " - ")?,
                (false, false) => write!(f, " + ")?,
                (true, false) => {}
            }
            first = false;
            let coef = if a.is_one() && k > 0 { String::new() } else { a.to_string() };
            match k {
                0 => write!(f, "{a}")?,
                1 => write!(f, "{coef}t")?,
                _ => write!(f, "{coef}t^{k}")?,
            }
        }
        Ok(())
    }
}

/// A quotient of integer polynomials, kept in lowest terms with a positive leading
/// coefficient in the denominator.
#[derive(Clone, Debug)]
pub struct RationalFunction {
    pub num: Poly,
    pub den: Poly,
}

impl RationalFunction {
    pub fn new(num: Poly, den: Poly) -> Result<RationalFunction> {
        if den.is_zero() {
            return Err(Error::Input("zero denominator".into()));
        }
        if num.is_zero() {
            return Ok(RationalFunction { num, den: Poly::one() });
        }
        let g = num.gcd(&den);
        let (mut n, mut d) = (num.div_exact(&g).expect("gcd divides"), den.div_exact(&g).expect("gcd divides"));
        let c = n.content().gcd(&d.content());
        if !c.is_one() {
            n = Poly::new(n.0.iter().map(|x| x / &c).collect());
            d = Poly::new(d.0.iter().map(|x| x / &c).collect());
        }
        if d.leading().is_negative() {
            n = -&n;
            d = -&d;
        }
        Ok(RationalFunction { num: n, den: d })
    }

    pub fn zero() -> RationalFunction {
        RationalFunction { num: Poly::default(), den: Poly::one() }
    }

    pub fn from_poly(p: Poly) -> RationalFunction {
        RationalFunction::new(p, Poly::one()).expect("non-zero denominator")
    }

    pub fn add(&self, o: &RationalFunction) -> RationalFunction {
        let num = &(&self.num * &o.den) + &(&o.num * &self.den);
        RationalFunction::new(num, &self.den * &o.den).expect("non-zero denominator")
    }

    pub fn mul(&self, o: &RationalFunction) -> RationalFunction {
        RationalFunction::new(&self.num * &o.num, &self.den * &o.den).expect("non-zero denominator")
    }

    pub fn div(&self, o: &RationalFunction) -> Result<RationalFunction> {
        RationalFunction::new(&self.num * &o.den, &self.den * &o.num)
    }

    pub fn scale(&self, c: i64) -> RationalFunction {
        RationalFunction::new(self.num.scale(&BigInt::from(c)), self.den.clone()).expect("non-zero denominator")
    }

    pub fn neg(&self) -> RationalFunction {
        self.scale(-1)
    }

    /// Equality as rational functions, by cross-multiplication.
    pub fn same_as(&self, o: &RationalFunction) -> bool {
        &self.num * &o.den == &o.num * &self.den
    }

    /// Taylor coefficients at `t = 0` up to `t^(n-1)`. Fails if the denominator vanishes at 0.
    pub fn series(&self, n: usize) -> Result<Vec<BigRational>> {
        let d0 = self.den.coeff(0);
        if d0.is_zero() {
            return Err(Error::Input("denominator vanishes at t = 0".into()));
        }
        let d0 = BigRational::from_integer(d0);
        let mut out: Vec<BigRational> = Vec::with_capacity(n);
        for k in 0..n {
            let mut s = BigRational::from_integer(self.num.coeff(k));
            for j in 1..=k {
                let dj = self.den.coeff(j);
                if !dj.is_zero() {
                    s -= BigRational::from_integer(dj) * &out[k - j];
                }
            }
            out.push(s / &d0);
        }
        Ok(out)
    }

    /// Integer Taylor coefficients; fails when some coefficient is not an integer.
    pub fn integer_series(&self, n: usize) -> Result<Vec<i64>> {
        self.series(n)?
            .into_iter()
            .map(|c| {
                c.is_integer()
                    .then(|| c.to_integer().to_i64())
                    .flatten()
                    .ok_or_else(|| Error::Invariant(format!("series coefficient {c} is not a small integer")))
            })
            .collect()
    }

    /// Parses expressions in `t` such as `-t^3(t^2 - t + 2)/((t-1)(t^2+1))` or
    /// `2(-2t^3/(t-1)) + 3`. Juxtaposition multiplies; the minus sign may be `-` or `−`.
    pub fn parse(s: &str) -> Result<RationalFunction> {
        let tokens = tokenize(s)?;
        let mut p = Parser { tokens, pos: 0 };
        let r = p.expr()?;
        if p.pos != p.tokens.len() {
            return Err(Error::Input(format!("trailing input in {s:?}")));
        }
        Ok(r)
    }

    pub fn to_record(&self) -> SeriesRecord {
        SeriesRecord {
            numerator: self.num.0.iter().map(|x| x.to_string()).collect(),
            denominator: self.den.0.iter().map(|x| x.to_string()).collect(),
        }
    }

    pub fn from_record(r: &SeriesRecord) -> Result<RationalFunction> {
        let parse = |v: &[String]| -> Result<Poly> {
            v.iter()
                .map(|x| x.parse::<BigInt>().map_err(|e| Error::Input(format!("bad coefficient {x:?}: {e}"))))
                .collect::<Result<Vec<_>>>()
                .map(Poly::new)
        };
        RationalFunction::new(parse(&r.numerator)?, parse(&r.denominator)?)
    }
}

impl PartialEq for RationalFunction {
    fn eq(&self, o: &Self) -> bool {
        self.same_as(o)
    }
}

impl fmt::Display for RationalFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == Poly::one() {
            write!(f, "{}", self.num)
        } else {
            write!(f, "({}) / ({})", self.num, self.den)
        }
    }
}

/// Coefficient lists (constant term first) as decimal strings.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeriesRecord {
    pub numerator: Vec<String>,
    pub denominator: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(i64),
    T,
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    Open,
    Close,
}

fn tokenize(s: &str) -> Result<Vec<Tok>> {
    let mut out = Vec::new();
    let chars: Vec<char> = s.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            ' ' | '\t' => {}
            't' => out.push(Tok::T),
            '+' => out.push(Tok::Plus),
            '-' | '−' => out.push(Tok::Minus),
            '*' | '·' => out.push(Tok::Star),
            '/' => out.push(Tok::Slash),
            '^' => out.push(Tok::Caret),
            '(' => out.push(Tok::Open),
            ')' => out.push(Tok::Close),
            d if d.is_ascii_digit() => {
                let start = i;
                while i + 1 < chars.len() && chars[i + 1].is_ascii_digit() {
                    i += 1;
                }
                let text: String = chars[start..=i].iter().collect();
                out.push(Tok::Num(text.parse().map_err(|_| Error::Input(format!("bad number {text}")))?));
            }
            other => return Err(Error::Input(format!("unexpected character {other:?}"))),
        }
        i += 1;
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos)
    }

    fn expr(&mut self) -> Result<RationalFunction> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    acc = acc.add(&self.term()?);
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    acc = acc.add(&self.term()?.neg());
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<RationalFunction> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.pos += 1;
                    acc = acc.mul(&self.unary()?);
                }
                Some(Tok::Slash) => {
                    self.pos += 1;
                    acc = acc.div(&self.unary()?)?;
                }
                Some(Tok::Open) | Some(Tok::T) | Some(Tok::Num(_)) => acc = acc.mul(&self.power()?),
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> Result<RationalFunction> {
        if self.peek() == Some(&Tok::Minus) {
            self.pos += 1;
            return Ok(self.unary()?.neg());
        }
        self.power()
    }

    fn power(&mut self) -> Result<RationalFunction> {
        let base = self.atom()?;
        if self.peek() == Some(&Tok::Caret) {
            self.pos += 1;
            match self.peek().cloned() {
                Some(Tok::Num(e)) if (0..=64).contains(&e) => {
                    self.pos += 1;
                    return RationalFunction::new(base.num.pow(e as u32), base.den.pow(e as u32));
                }
                _ => return Err(Error::Input("exponent must be a small non-negative integer".into())),
            }
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<RationalFunction> {
        let tok = self.peek().cloned();
        self.pos += 1;
        match tok {
            Some(Tok::Num(n)) => Ok(RationalFunction::from_poly(Poly::constant(n))),
            Some(Tok::T) => Ok(RationalFunction::from_poly(Poly::monomial(1, 1))),
            Some(Tok::Open) => {
                let e = self.expr()?;
                if self.peek() != Some(&Tok::Close) {
                    return Err(Error::Input("missing closing parenthesis".into()));
                }
                self.pos += 1;
                Ok(e)
            }
            other => Err(Error::Input(format!("unexpected token {other:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gcd_and_reduction() {
        let a = Poly::from_i64(&[-1, 0, 1]); // t^2 - 1
        let b = Poly::from_i64(&[-1, 1]); // t - 1
        assert_eq!(a.gcd(&b), b);
        let r = RationalFunction::new(a, b).unwrap();
        assert_eq!(r.num, Poly::from_i64(&[1, 1]));
        assert_eq!(r.den, Poly::one());
    }

    #[test]
    fn parse_and_expand() {
        let r = RationalFunction::parse("-2t^3/(t-1)").unwrap();
        assert_eq!(r.integer_series(7).unwrap(), vec![0, 0, 0, 2, 2, 2, 2]);
        let s = RationalFunction::parse("−t^3(t^2 − t + 2)/((t−1)(t^2+1))").unwrap();
        assert_eq!(s.integer_series(11).unwrap(), vec![0, 0, 0, 2, 1, 0, 1, 2, 1, 0, 1]);
        let twice = RationalFunction::parse("2(-2t^3/(t-1))").unwrap();
        assert!(twice.same_as(&r.scale(2)));
    }

    #[test]
    fn sign_normalisation() {
        let a = RationalFunction::parse("-2t^3/(t-1)").unwrap();
        let b = RationalFunction::parse("2t^3/(1-t)").unwrap();
        assert_eq!(a.num, b.num);
        assert_eq!(a.den, b.den);
        assert!(a.den.leading().is_positive());
    }

    #[test]
    fn record_round_trip() {
        let a = RationalFunction::parse("-t^3(3t-5)/(t-1)^2").unwrap();
        let back = RationalFunction::from_record(&a.to_record()).unwrap();
        assert!(a.same_as(&back));
    }
}
