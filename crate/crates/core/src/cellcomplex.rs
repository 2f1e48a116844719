//! The cell structure induced on hyperbolic space by the floor of the fundamental
//! polyhedron, its refinement to pointwise stabilised cells, orbits and stabilisers.
//!
//! Cells are handled through their vertex sets, with exact coordinates. All subdivision
//! points are rational: edges and chords project to straight segments, and a fixed point of
//! a half-turn on a segment solves a linear equation. Cells are compared modulo the lattice
//! of translations by normalising their coordinates.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::iqfield::{bezout, rat, rational_sqrt, units, AlgebraicInteger, FieldElement, QuadraticField, Rational};
use crate::moebius::{act, fixed_point_in_h, GroupElement, GroupElementRecord, UHSPoint};
use crate::swan::{Hemisphere, Polyhedron};

// ---------------------------------------------------------------------------------------
// identification search

/// All integers `d` with `N(d - p) = r` exactly.
fn integers_at_distance(field: &QuadraticField, p: &FieldElement, r: &Rational) -> Vec<AlgebraicInteger> {
    let mut out = Vec::new();
    if r.is_negative() {
        return out;
    }
    let t = rat(field.omega_trace);
    let n = rat(field.omega_norm);
    let absd = field.abs_disc() as f64;
    let rf = r.to_f64().unwrap_or(0.0);
    // |y - p_y|^2 <= 4 r / |D|
    let ry = (4.0 * rf / absd).sqrt() + 1e-9;
    let py = p.b.to_f64().unwrap_or(0.0);
    let y0 = (py - ry).floor() as i64 - 1;
    let y1 = (py + ry).ceil() as i64 + 1;
    for y in y0..=y1 {
        let s = rat(y) - &p.b;
        // u^2 + t s u + n s^2 - r = 0 with u = x - p_x
        let disc = &t * &t * &s * &s - rat(4) * (&n * &s * &s - r);
        if disc.is_negative() {
            continue;
        }
        let Some(root) = rational_sqrt(&disc) else { continue };
        let mut sols = vec![(-&t * &s + &root) / rat(2)];
        if !root.is_zero() {
            sols.push((-&t * &s - &root) / rat(2));
        }
        for u in sols {
            let x = &p.a + u;
            if x.is_integer() {
                out.push(field.int(x.to_integer().to_i64().expect("overflow"), y));
            }
        }
    }
    out
}

/// Every `g` in PSL2 with `g.v = w`, each in normalised form.
pub fn find_identifications(v: &UHSPoint, w: &UHSPoint) -> Vec<GroupElement> {
    let field = v.z.field;
    let mut out: BTreeSet<Key> = BTreeSet::new();
    let mut res = Vec::new();
    let mut push = |g: GroupElement, res: &mut Vec<GroupElement>| {
        let g = g.normalized();
        if out.insert(Key::of(&g)) {
            res.push(g);
        }
    };
    if !v.hsq.is_positive() || !w.hsq.is_positive() {
        return res;
    }
    let Some(dd) = rational_sqrt(&(&v.hsq / &w.hsq)) else { return res };
    if dd.is_one() {
        for a in units(&field) {
            // z' = a^2 z - a b
            let af = a.to_field();
            let lhs = &(&(&af * &af) * &v.z) - &w.z;
            let Some(b) = lhs.div(&af).and_then(|x| x.to_integer()) else { continue };
            let ainv = a.conj();
            push(GroupElement::new(a, b, field.int(0, 0), ainv), &mut res);
        }
    }
    // N(c) <= D / hsq_v
    let cmax = (&dd / &v.hsq).floor().to_integer().to_i64().expect("overflow");
    for c in field.integers_up_to_norm(cmax) {
        let cf = c.to_field();
        let r = &dd - &v.hsq * rat(c.norm());
        let p = &cf * &v.z;
        for d in integers_at_distance(&field, &p, &r) {
            let df = d.to_field();
            let y = (&df - &p).conj();
            let x = &(&y * &v.z) - &cf.conj().scale(&v.hsq);
            let dw = w.z.scale(&dd);
            let inv = dd.recip();
            let a = (&y - &(&cf * &dw)).scale(&inv);
            let b = (&x - &(&df * &dw)).scale(&inv);
            let (Some(a), Some(b)) = (a.to_integer(), b.to_integer()) else { continue };
            let g = GroupElement::new(a, b, c, d);
            debug_assert!(g.determinant() == field.int(1, 0));
            debug_assert!(&act(&g, v) == w);
            push(g, &mut res);
        }
    }
    res
}

pub fn find_identification(v: &UHSPoint, w: &UHSPoint) -> Option<GroupElement> {
    find_identifications(v, w).into_iter().next()
}

// ---------------------------------------------------------------------------------------
// finite groups

/// Hashable, ordered image of a normalised group element.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct Key([i64; 8]);

impl Key {
    fn of(g: &GroupElement) -> Key {
        let g = g.normalized();
        Key([g.a.a, g.a.b, g.b.a, g.b.b, g.c.a, g.c.b, g.d.a, g.d.b])
    }
}

/// The finite group generated by `gens`; fails beyond 12 elements.
pub fn closure(field: &QuadraticField, gens: &[GroupElement]) -> Result<Vec<GroupElement>> {
    let id = GroupElement::identity(field);
    let mut seen: BTreeMap<Key, GroupElement> = BTreeMap::new();
    seen.insert(Key::of(&id), id);
    let mut frontier = vec![id];
    while let Some(x) = frontier.pop() {
        for g in gens {
            let y = (x * *g).normalized();
            let k = Key::of(&y);
            if !seen.contains_key(&k) {
                if seen.len() >= 12 {
                    return Err(Error::Invariant("stabiliser larger than 12 elements".into()));
                }
                seen.insert(k, y);
                frontier.push(y);
            }
        }
    }
    Ok(seen.into_values().collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StabiliserType {
    Trivial,
    Z2,
    Z3,
    D2,
    S3,
    A4,
    Zsquare,
}

impl StabiliserType {
    pub fn order(&self) -> Option<usize> {
        match self {
            StabiliserType::Trivial => Some(1),
            StabiliserType::Z2 => Some(2),
            StabiliserType::Z3 => Some(3),
            StabiliserType::D2 => Some(4),
            StabiliserType::S3 => Some(6),
            StabiliserType::A4 => Some(12),
            StabiliserType::Zsquare => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            StabiliserType::Trivial => "Trivial",
            StabiliserType::Z2 => "Z2",
            StabiliserType::Z3 => "Z3",
            StabiliserType::D2 => "D2",
            StabiliserType::S3 => "S3",
            StabiliserType::A4 => "A4",
            StabiliserType::Zsquare => "Zsquare",
        }
    }

    pub const FINITE: [StabiliserType; 6] =
        [StabiliserType::Trivial, StabiliserType::Z2, StabiliserType::Z3, StabiliserType::D2, StabiliserType::S3, StabiliserType::A4];
}

pub fn recognize(elements: &[GroupElement]) -> Result<StabiliserType> {
    let orders: Vec<usize> = elements
        .iter()
        .map(|g| g.psl_order().ok_or_else(|| Error::Invariant(format!("{g} has infinite order"))))
        .collect::<Result<_>>()?;
    let count = |k: usize| orders.iter().filter(|&&o| o == k).count();
    Ok(match (elements.len(), count(2), count(3)) {
        (1, _, _) => StabiliserType::Trivial,
        (2, 1, _) => StabiliserType::Z2,
        (3, _, 2) => StabiliserType::Z3,
        (4, 3, _) => StabiliserType::D2,
        (6, 3, 2) => StabiliserType::S3,
        (12, 3, 8) => StabiliserType::A4,
        (n, _, _) => return Err(Error::Invariant(format!("finite group of order {n} with element orders {orders:?} is not of Klein type"))),
    })
}

// ---------------------------------------------------------------------------------------
// cells

/// A point of the complex in lattice coordinates `z = x + y w`, with `h = zeta^2`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pt {
    pub x: Rational,
    pub y: Rational,
    pub h: Rational,
}

impl Pt {
    pub fn from_point(p: &UHSPoint) -> Pt {
        Pt { x: p.z.a.clone(), y: p.z.b.clone(), h: p.hsq.clone() }
    }

    pub fn to_point(&self, field: &QuadraticField) -> UHSPoint {
        UHSPoint::new(self.z(field), self.h.clone())
    }

    pub fn z(&self, field: &QuadraticField) -> FieldElement {
        field.elem(self.x.clone(), self.y.clone())
    }

    pub fn is_cusp(&self) -> bool {
        self.h.is_zero()
    }

    pub fn shifted(&self, s: (i64, i64)) -> Pt {
        Pt { x: &self.x + rat(s.0), y: &self.y + rat(s.1), h: self.h.clone() }
    }

    fn cell_shift(&self) -> (i64, i64) {
        (self.x.floor().to_integer().to_i64().expect("overflow"), self.y.floor().to_integer().to_i64().expect("overflow"))
    }

    /// Translate with coordinates in `[0, 1)`.
    pub fn canonical(&self) -> Pt {
        let s = self.cell_shift();
        self.shifted((-s.0, -s.1))
    }
}

/// A cell given by its sorted vertex list.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cell {
    pub dim: u8,
    pub verts: Vec<Pt>,
}

impl Cell {
    pub fn new(dim: u8, mut verts: Vec<Pt>) -> Cell {
        verts.sort();
        Cell { dim, verts }
    }

    fn map(&self, f: &dyn Fn(&Pt) -> Pt) -> Cell {
        Cell::new(self.dim, self.verts.iter().map(f).collect())
    }

    pub fn shifted(&self, s: (i64, i64)) -> Cell {
        self.map(&|p: &Pt| p.shifted(s))
    }

    /// Canonical translate and the shift `s` with `self = normalised + s`.
    pub fn normalize(&self) -> (Cell, (i64, i64)) {
        let mut anchors: Vec<(i64, i64)> = self.verts.iter().map(Pt::cell_shift).collect();
        anchors.sort();
        anchors.dedup();
        let mut best: Option<(Cell, (i64, i64))> = None;
        for s in anchors {
            let c = self.shifted((-s.0, -s.1));
            if best.as_ref().is_none_or(|b| c < b.0) {
                best = Some((c, s));
            }
        }
        best.expect("cell without vertices")
    }
}

fn translation(field: &QuadraticField, s: (i64, i64)) -> GroupElement {
    // (1, -tau; 0, 1) maps z to z + tau
    GroupElement::new(field.int(1, 0), field.int(-s.0, -s.1), field.int(0, 0), field.int(1, 0))
}

pub fn act_pt(field: &QuadraticField, g: &GroupElement, p: &Pt) -> Pt {
    Pt::from_point(&act(g, &p.to_point(field)))
}

pub fn act_cell(field: &QuadraticField, g: &GroupElement, c: &Cell) -> Cell {
    c.map(&|p: &Pt| act_pt(field, g, p))
}

// ---------------------------------------------------------------------------------------
// plane geometry in lattice coordinates

#[derive(Clone)]
struct Plane {
    t: Rational,
    n: Rational,
}

impl Plane {
    fn new(field: &QuadraticField) -> Plane {
        Plane { t: rat(field.omega_trace), n: rat(field.omega_norm) }
    }

    /// The real inner product with `<z, z> = N(z)`.
    fn dot(&self, u: (&Rational, &Rational), v: (&Rational, &Rational)) -> Rational {
        u.0 * v.0 + &self.t * (u.0 * v.1 + u.1 * v.0) / rat(2) + &self.n * u.1 * v.1
    }
}

fn cross(u: (&Rational, &Rational), v: (&Rational, &Rational)) -> Rational {
    u.0 * v.1 - u.1 * v.0
}

fn diff(a: &Pt, b: &Pt) -> (Rational, Rational) {
    (&b.x - &a.x, &b.y - &a.y)
}

fn pair(v: &(Rational, Rational)) -> (&Rational, &Rational) {
    (&v.0, &v.1)
}

/// The point of the hemisphere above `(x, y)`.
fn on_hemisphere(plane: &Plane, hemi: &Hemisphere, x: Rational, y: Rational) -> Pt {
    let d = (&x - &hemi.center.a, &y - &hemi.center.b);
    let h = &hemi.radius_sq - plane.dot(pair(&d), pair(&d));
    Pt { x, y, h }
}

/// Parameter of `p` on the segment `ab` when `p` lies on its projection.
fn segment_param(a: &Pt, b: &Pt, p: &Pt) -> Option<Rational> {
    let ab = diff(a, b);
    let ap = diff(a, p);
    if !cross(pair(&ab), pair(&ap)).is_zero() {
        return None;
    }
    let t = if !ab.0.is_zero() { &ap.0 / &ab.0 } else { &ap.1 / &ab.1 };
    Some(t)
}

fn strictly_inside(a: &Pt, b: &Pt, p: &Pt) -> Option<Rational> {
    // the floor is a graph over the plane, so the projection decides
    segment_param(a, b, p).filter(|t| t.is_positive() && t < &Rational::one())
}

fn lerp(plane: &Plane, hemi: &Hemisphere, a: &Pt, b: &Pt, t: &Rational) -> Pt {
    let x = &a.x + t * (&b.x - &a.x);
    let y = &a.y + t * (&b.y - &a.y);
    on_hemisphere(plane, hemi, x, y)
}

/// The point of the segment `ab` (inside the hemisphere `hemi`) fixed by the elliptic `g`.
fn fixed_on_segment(field: &QuadraticField, g: &GroupElement, hemi: &Hemisphere, a: &Pt, b: &Pt) -> Option<Pt> {
    let plane = Plane::new(field);
    let fp = fixed_point_in_h(g).ok()?;
    let t = if g.c.is_zero() {
        let z = Pt { x: fp.z.a.clone(), y: fp.z.b.clone(), h: rat(0) };
        segment_param(a, b, &z)?
    } else {
        // N(p - z0) + hsq(p) = rho^2 is linear in p along the hemisphere
        let w = (&hemi.center.a - &fp.z.a, &hemi.center.b - &fp.z.b);
        let z0 = (fp.z.a.clone(), fp.z.b.clone());
        let c = (hemi.center.a.clone(), hemi.center.b.clone());
        let rhs = &fp.hsq - &hemi.radius_sq - plane.dot(pair(&z0), pair(&z0)) + plane.dot(pair(&c), pair(&c));
        let ab = diff(a, b);
        let den = rat(2) * plane.dot(pair(&ab), pair(&w));
        if !den.is_zero() {
            (rhs - rat(2) * plane.dot((&a.x, &a.y), pair(&w))) / den
        } else {
            // the segment lies on the sphere of the axis; the axis also lies in the vertical
            // plane Re((z - z0) c) = 0
            let cz = g.c.to_field();
            let re = |p: &Pt| (&(&p.z(field) - &fp.z) * &cz).re();
            let (ra, rb) = (re(a), re(b));
            if ra != rb {
                &ra / &(&ra - &rb)
            } else {
                equidistant_param(&plane, hemi, a, b)?
            }
        }
    };
    if !t.is_positive() || t >= Rational::one() {
        return None;
    }
    let p = lerp(&plane, hemi, a, b, &t);
    (p.h.is_positive() && act_pt(field, g, &p) == p).then_some(p)
}

/// Parameter of the hyperbolic midpoint of `ab` on the hemisphere, when it is rational.
fn equidistant_param(plane: &Plane, hemi: &Hemisphere, a: &Pt, b: &Pt) -> Option<Rational> {
    // cosh d(p, q) = (N(z_p - z_q) + h_p + h_q) / (2 zeta_p zeta_q); along the hemisphere the
    // numerator is affine in z_p
    if b.h.is_zero() {
        return None;
    }
    let k = rational_sqrt(&(&a.h / &b.h))?;
    let c = (hemi.center.a.clone(), hemi.center.b.clone());
    let affine = |q: &Pt, z: (&Rational, &Rational)| {
        let zq = (q.x.clone(), q.y.clone());
        rat(2) * plane.dot(z, (&(&c.0 - &zq.0), &(&c.1 - &zq.1))) + plane.dot(pair(&zq), pair(&zq)) - plane.dot(pair(&c), pair(&c))
            + &hemi.radius_sq
            + &q.h
    };
    // affine_a(P(t)) = k affine_b(P(t))
    let fa0 = affine(a, (&a.x, &a.y));
    let fa1 = affine(a, (&b.x, &b.y));
    let fb0 = affine(b, (&a.x, &a.y));
    let fb1 = affine(b, (&b.x, &b.y));
    let den = (&fa1 - &fa0) - &k * (&fb1 - &fb0);
    if den.is_zero() {
        return None;
    }
    Some((&k * &fb0 - &fa0) / den)
}

fn direction_less(u: &(Rational, Rational), v: &(Rational, Rational)) -> std::cmp::Ordering {
    let half = |d: &(Rational, Rational)| if d.1.is_positive() || (d.1.is_zero() && d.0.is_positive()) { 0 } else { 1 };
    half(u).cmp(&half(v)).then_with(|| {
        let c = cross(pair(u), pair(v));
        if c.is_positive() {
            std::cmp::Ordering::Less
        } else if c.is_negative() {
            std::cmp::Ordering::Greater
        } else {
            std::cmp::Ordering::Equal
        }
    })
}

fn signed_area2(cycle: &[Pt]) -> Rational {
    let n = cycle.len();
    (0..n).fold(Rational::zero(), |acc, i| {
        let (p, q) = (&cycle[i], &cycle[(i + 1) % n]);
        acc + (&p.x * &q.y - &q.x * &p.y)
    })
}

/// Crossing point of the segments `ab` and `cd` strictly inside both.
fn crossing(plane: &Plane, hemi: &Hemisphere, a: &Pt, b: &Pt, c: &Pt, d: &Pt) -> Option<Pt> {
    let r = diff(a, b);
    let s = diff(c, d);
    let den = cross(pair(&r), pair(&s));
    if den.is_zero() {
        return None;
    }
    let ac = diff(a, c);
    let t = cross(pair(&ac), pair(&s)) / &den;
    let u = cross(pair(&ac), pair(&r)) / &den;
    let one = Rational::one();
    if t.is_positive() && t < one && u.is_positive() && u < one {
        Some(lerp(plane, hemi, a, b, &t))
    } else {
        None
    }
}

/// Faces of the subdivision of a convex polygon by chords.
fn planar_faces(plane: &Plane, hemi: &Hemisphere, cycle: &[Pt], chords: &[(Pt, Pt)]) -> Result<Vec<Vec<Pt>>> {
    if chords.is_empty() {
        return Ok(vec![cycle.to_vec()]);
    }
    let mut verts: BTreeSet<Pt> = cycle.iter().cloned().collect();
    for (p, q) in chords {
        verts.insert(p.clone());
        verts.insert(q.clone());
    }
    for i in 0..chords.len() {
        for j in i + 1..chords.len() {
            if let Some(x) = crossing(plane, hemi, &chords[i].0, &chords[i].1, &chords[j].0, &chords[j].1) {
                verts.insert(x);
            }
        }
    }
    let mut adj: BTreeMap<Pt, BTreeSet<Pt>> = BTreeMap::new();
    let mut link = |p: &Pt, q: &Pt| {
        adj.entry(p.clone()).or_default().insert(q.clone());
        adj.entry(q.clone()).or_default().insert(p.clone());
    };
    let n = cycle.len();
    for i in 0..n {
        link(&cycle[i], &cycle[(i + 1) % n]);
    }
    for (p, q) in chords {
        let mut on: Vec<(Rational, Pt)> = verts
            .iter()
            .filter_map(|v| {
                let t = segment_param(p, q, v)?;
                (!t.is_negative() && t <= Rational::one()).then(|| (t, v.clone()))
            })
            .collect();
        on.sort();
        for w in on.windows(2) {
            link(&w[0].1, &w[1].1);
        }
    }
    let mut order: BTreeMap<Pt, Vec<Pt>> = BTreeMap::new();
    for (v, nb) in &adj {
        let mut list: Vec<Pt> = nb.iter().cloned().collect();
        list.sort_by(|a, b| direction_less(&diff(v, a), &diff(v, b)));
        order.insert(v.clone(), list);
    }
    let mut used: BTreeSet<(Pt, Pt)> = BTreeSet::new();
    let mut faces = Vec::new();
    for (v, nb) in &order {
        for w in nb {
            if used.contains(&(v.clone(), w.clone())) {
                continue;
            }
            let mut face = Vec::new();
            let (mut u, mut x) = (v.clone(), w.clone());
            loop {
                used.insert((u.clone(), x.clone()));
                face.push(u.clone());
                let list = &order[&x];
                let k = list.iter().position(|y| y == &u).expect("symmetric adjacency");
                let next = list[(k + list.len() - 1) % list.len()].clone();
                u = x;
                x = next;
                if &u == v && &x == w {
                    break;
                }
                if face.len() > 4 * verts.len() {
                    return Err(Error::Invariant("face traversal did not close".into()));
                }
            }
            if signed_area2(&face).is_positive() {
                faces.push(face);
            }
        }
    }
    Ok(faces)
}

// ---------------------------------------------------------------------------------------
// faces and their subdivision

/// A floor face together with its current decomposition into pieces.
#[derive(Clone, Debug)]
pub struct FaceInstance {
    pub hemisphere: Hemisphere,
    /// Element mapping this face onto its partner face.
    pub pairing: GroupElement,
    /// Counter-clockwise boundary of the floor face.
    pub boundary: Vec<Pt>,
    /// Counter-clockwise vertex cycles of the pieces.
    pub pieces: Vec<Vec<Pt>>,
}

fn cycle_edges(cycle: &[Pt]) -> impl Iterator<Item = (&Pt, &Pt)> {
    let n = cycle.len();
    (0..n).map(move |i| (&cycle[i], &cycle[(i + 1) % n]))
}

/// The element with isometric sphere the given hemisphere.
pub fn pairing_element(h: &Hemisphere) -> Result<GroupElement> {
    let (x, y) = bezout(&h.lambda, &h.mu).ok_or_else(|| Error::Invariant("hemisphere with non-coprime (lambda, mu)".into()))?;
    // a lambda - b mu = 1 with c = mu, d = lambda
    let g = GroupElement::new(x, -y, h.mu, h.lambda);
    if g.determinant() != h.lambda.field.int(1, 0) {
        return Err(Error::Invariant("pairing element has determinant != 1".into()));
    }
    Ok(g)
}

/// Additional vertices and segments imposed on the floor.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Refinement {
    /// New vertices on floor edges, modulo translations.
    pub points: BTreeSet<Pt>,
    /// Segments inside faces, in the coordinates of the face with the given index.
    pub chords: BTreeSet<(usize, Pt, Pt)>,
}

impl Refinement {
    fn add_chord(&mut self, face: usize, p: Pt, q: Pt) -> bool {
        let (p, q) = if p <= q { (p, q) } else { (q, p) };
        let new = self.chords.insert((face, p.clone(), q.clone()));
        self.points.insert(p.canonical());
        self.points.insert(q.canonical());
        new
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty() && self.chords.is_empty()
    }
}

fn insert_points(cycle: &[Pt], points: &BTreeSet<Pt>) -> Vec<Pt> {
    let mut out = Vec::new();
    for (a, b) in cycle_edges(cycle) {
        out.push(a.clone());
        let lo = (a.x.clone().min(b.x.clone()), a.y.clone().min(b.y.clone()));
        let hi = (a.x.clone().max(b.x.clone()), a.y.clone().max(b.y.clone()));
        let range = |l: &Rational, h: &Rational| {
            (l.floor().to_integer().to_i64().expect("overflow") - 1)..=(h.ceil().to_integer().to_i64().expect("overflow"))
        };
        let mut found: Vec<(Rational, Pt)> = Vec::new();
        for q in points {
            for sx in range(&(&lo.0 - &q.x), &(&hi.0 - &q.x)) {
                for sy in range(&(&lo.1 - &q.y), &(&hi.1 - &q.y)) {
                    let p = q.shifted((sx, sy));
                    if let Some(t) = strictly_inside(a, b, &p) {
                        found.push((t, p));
                    }
                }
            }
        }
        found.sort();
        found.dedup();
        out.extend(found.into_iter().map(|(_, p)| p));
    }
    out
}

fn subdivide_faces(field: &QuadraticField, faces: &mut [FaceInstance], refinement: &Refinement) -> Result<()> {
    let plane = Plane::new(field);
    for (i, f) in faces.iter_mut().enumerate() {
        let cycle = insert_points(&f.boundary, &refinement.points);
        let mut chords: Vec<(Pt, Pt)> = Vec::new();
        for c in refinement.chords.range((i, min_pt(), min_pt())..).take_while(|c| c.0 == i) {
            // split chords at the refinement points lying on them
            let path = insert_points(&[c.1.clone(), c.2.clone()], &refinement.points);
            let end = path.iter().position(|p| p == &c.2).expect("chord end");
            chords.extend(path[..=end].windows(2).map(|w| (w[0].clone(), w[1].clone())));
        }
        f.pieces = planar_faces(&plane, &f.hemisphere, &cycle, &chords)?;
    }
    Ok(())
}

fn min_pt() -> Pt {
    // only used as a range bound; every real point compares greater
    let m = Rational::from_integer((-(1i64 << 62)).into());
    Pt { x: m.clone(), y: m.clone(), h: m }
}

fn faces_from_polyhedron(poly: &Polyhedron) -> Result<Vec<FaceInstance>> {
    poly.faces
        .iter()
        .map(|f| {
            let cycle: Vec<Pt> = f.boundary.iter().map(|r| Pt::from_point(&poly.vertex_point(r))).collect();
            Ok(FaceInstance { hemisphere: f.hemisphere.clone(), pairing: pairing_element(&f.hemisphere)?, boundary: cycle.clone(), pieces: vec![cycle] })
        })
        .collect()
}

// ---------------------------------------------------------------------------------------
// orbit engine

#[derive(Clone, Debug, Default)]
pub struct OrbitData {
    /// Canonical cells (modulo translations), sorted, per dimension.
    pub cells: [Vec<Cell>; 3],
    pub index: [HashMap<Cell, usize>; 3],
    /// Orbit representative index for each cell.
    pub rep: [Vec<usize>; 3],
    /// Element mapping the representative exactly onto the cell.
    pub transport: [Vec<GroupElement>; 3],
    /// Setwise stabilisers of representatives (full element lists).
    pub setwise: [BTreeMap<usize, Vec<GroupElement>>; 3],
    /// A face containing each cell, with the shift placing the canonical cell in it.
    pub anchor: [Vec<(usize, (i64, i64))>; 3],
}

fn cell_instances(face: &FaceInstance) -> Vec<Cell> {
    let mut out = Vec::new();
    for cyc in &face.pieces {
        for p in cyc {
            out.push(Cell::new(0, vec![p.clone()]));
        }
        for (a, b) in cycle_edges(cyc) {
            out.push(Cell::new(1, vec![a.clone(), b.clone()]));
        }
        out.push(Cell::new(2, cyc.clone()));
    }
    out.sort();
    out.dedup();
    out
}

/// Unit rotations `z -> u^2 z` other than the identity.
fn rotations(field: &QuadraticField) -> Vec<GroupElement> {
    units(field)
        .into_iter()
        .filter(|u| !(u.b == 0 && u.a.abs() == 1))
        .map(|u| GroupElement::new(u, field.int(0, 0), field.int(0, 0), u.conj()))
        .collect()
}

fn compute_orbits(field: &QuadraticField, faces: &[FaceInstance]) -> Result<OrbitData> {
    let mut all: [BTreeMap<Cell, (usize, (i64, i64))>; 3] = Default::default();
    let mut moves: [Vec<(Cell, Cell, GroupElement)>; 3] = Default::default();
    for (fi, face) in faces.iter().enumerate() {
        for inst in cell_instances(face) {
            let d = inst.dim as usize;
            let (k, s) = inst.normalize();
            let (k2, s2) = act_cell(field, &face.pairing, &inst).normalize();
            let g = translation(field, (-s2.0, -s2.1)) * face.pairing * translation(field, s);
            all[d].entry(k.clone()).or_insert((fi, s));
            moves[d].push((k, k2, g));
        }
    }
    let rots = rotations(field);
    for d in 0..3 {
        let keys: Vec<Cell> = all[d].keys().cloned().collect();
        for rot in &rots {
            for k in &keys {
                let (k2, s2) = act_cell(field, rot, k).normalize();
                moves[d].push((k.clone(), k2, translation(field, (-s2.0, -s2.1)) * *rot));
            }
        }
    }
    let mut data = OrbitData {
        cells: Default::default(),
        index: Default::default(),
        rep: Default::default(),
        transport: Default::default(),
        setwise: Default::default(),
        anchor: Default::default(),
    };
    for d in 0..3 {
        let cells: Vec<Cell> = all[d].keys().cloned().collect();
        let index: HashMap<Cell, usize> = cells.iter().enumerate().map(|(i, c)| (c.clone(), i)).collect();
        let n = cells.len();
        let mut adj: Vec<Vec<(usize, GroupElement)>> = vec![Vec::new(); n];
        for (a, b, g) in &moves[d] {
            let ia = index[a];
            let ib = *index
                .get(b)
                .ok_or_else(|| Error::Invariant(format!("image of a {d}-cell under a face pairing is not a cell of the floor: {a:?} -> {b:?} by {g}")))?;
            adj[ia].push((ib, *g));
            adj[ib].push((ia, g.inverse()));
        }
        let mut rep = vec![usize::MAX; n];
        let mut transport = vec![GroupElement::identity(field); n];
        let mut setwise = BTreeMap::new();
        for start in 0..n {
            if rep[start] != usize::MAX {
                continue;
            }
            rep[start] = start;
            let mut gens: Vec<GroupElement> = Vec::new();
            let mut queue = VecDeque::from([start]);
            while let Some(x) = queue.pop_front() {
                for (y, g) in &adj[x] {
                    let t = *g * transport[x];
                    if rep[*y] == usize::MAX {
                        rep[*y] = start;
                        transport[*y] = t;
                        queue.push_back(*y);
                    } else {
                        let s = transport[*y].inverse() * t;
                        if !s.is_identity_psl() {
                            gens.push(s.normalized());
                        }
                    }
                }
            }
            gens.sort_by_key(Key::of);
            gens.dedup();
            let cusp = d == 0 && cells[start].verts[0].is_cusp();
            let group = if cusp { vec![GroupElement::identity(field)] } else { closure(field, &gens)? };
            setwise.insert(start, group);
        }
        data.anchor[d] = cells.iter().map(|c| all[d][c]).collect();
        data.cells[d] = cells;
        data.index[d] = index;
        data.rep[d] = rep;
        data.transport[d] = transport;
        data.setwise[d] = setwise;
    }
    Ok(data)
}

impl OrbitData {
    pub fn orbit_reps(&self, d: usize) -> Vec<usize> {
        (0..self.cells[d].len()).filter(|&i| self.rep[d][i] == i).collect()
    }

    pub fn lookup(&self, c: &Cell) -> Option<(usize, (i64, i64))> {
        let (k, s) = c.normalize();
        self.index[c.dim as usize].get(&k).map(|&i| (i, s))
    }
}

// ---------------------------------------------------------------------------------------
// the complex

#[derive(Clone, Debug)]
pub struct Incidence {
    /// Orbit index in the next lower dimension.
    pub orbit: usize,
    pub sign: i64,
    /// Element mapping the boundary cell, in its position on the representative, onto the
    /// representative of its orbit.
    pub transport: GroupElement,
}

#[derive(Clone, Debug)]
pub struct CellOrbit {
    pub dim: usize,
    pub cell: Cell,
    pub stabiliser: Vec<GroupElement>,
    pub generators: Vec<GroupElement>,
    pub kind: StabiliserType,
    /// For edges `[source, target]`; for 2-cells the boundary edges in cyclic order.
    pub boundary: Vec<Incidence>,
    /// Number of cells modulo translations in the orbit.
    pub size: usize,
}

#[derive(Clone, Debug)]
pub struct EquivariantComplex {
    pub field: QuadraticField,
    pub faces: Vec<FaceInstance>,
    pub refinement: Refinement,
    pub orbits: OrbitData,
    /// Orbit representatives per dimension.
    pub cells: [Vec<CellOrbit>; 3],
    /// Orbit number of every canonical cell.
    pub orbit_of: [Vec<usize>; 3],
}

fn minimal_generators(field: &QuadraticField, elements: &[GroupElement]) -> Vec<GroupElement> {
    let mut gens: Vec<GroupElement> = Vec::new();
    let mut size = 1;
    for g in elements {
        if size == elements.len() {
            break;
        }
        let mut trial = gens.clone();
        trial.push(*g);
        let n = closure(field, &trial).map(|c| c.len()).unwrap_or(0);
        if n > size {
            gens = trial;
            size = n;
        }
    }
    gens
}

fn build_complex(field: &QuadraticField, mut faces: Vec<FaceInstance>, refinement: Refinement) -> Result<EquivariantComplex> {
    subdivide_faces(field, &mut faces, &refinement)?;
    let orbits = compute_orbits(field, &faces)?;
    let mut cells: [Vec<CellOrbit>; 3] = Default::default();
    let mut orbit_of: [Vec<usize>; 3] = Default::default();
    for d in 0..3 {
        let reps = orbits.orbit_reps(d);
        let pos: HashMap<usize, usize> = reps.iter().enumerate().map(|(k, &r)| (r, k)).collect();
        orbit_of[d] = orbits.rep[d].iter().map(|r| pos[r]).collect();
        let mut sizes = vec![0usize; reps.len()];
        for r in &orbits.rep[d] {
            sizes[pos[r]] += 1;
        }
        for (k, &r) in reps.iter().enumerate() {
            let cell = orbits.cells[d][r].clone();
            let setwise = &orbits.setwise[d][&r];
            let cusp = d == 0 && cell.verts[0].is_cusp();
            let stabiliser: Vec<GroupElement> =
                setwise.iter().filter(|g| cell.verts.iter().all(|p| &act_pt(field, g, p) == p)).copied().collect();
            let kind = if cusp { StabiliserType::Zsquare } else { recognize(&stabiliser)? };
            let generators = if cusp { Vec::new() } else { minimal_generators(field, &stabiliser) };
            cells[d].push(CellOrbit { dim: d, cell, stabiliser, generators, kind, boundary: Vec::new(), size: sizes[k] });
        }
    }
    for d in 1..3 {
        for k in 0..cells[d].len() {
            let cell = cells[d][k].cell.clone();
            let mut inc = Vec::new();
            if d == 1 {
                for (j, p) in cell.verts.iter().enumerate() {
                    let (i, s) = orbits.lookup(&Cell::new(0, vec![p.clone()])).ok_or_else(|| Error::Invariant("edge endpoint is not a vertex".into()))?;
                    let g = (translation(field, s) * orbits.transport[0][i]).inverse();
                    inc.push(Incidence { orbit: orbit_of[0][i], sign: if j == 0 { -1 } else { 1 }, transport: g });
                }
            } else {
                let ordered = face_cycle(&faces, &orbits, &cell)?;
                for (a, b) in cycle_edges(&ordered) {
                    let (i, s) = orbits
                        .lookup(&Cell::new(1, vec![a.clone(), b.clone()]))
                        .ok_or_else(|| Error::Invariant("2-cell boundary segment is not an edge".into()))?;
                    // t maps the representative edge onto this boundary edge
                    let t = translation(field, s) * orbits.transport[1][i];
                    let erep = &orbits.cells[1][orbits.rep[1][i]];
                    let first = act_pt(field, &t, &erep.verts[0]);
                    let sign = if &first == a { 1 } else { -1 };
                    inc.push(Incidence { orbit: orbit_of[1][i], sign, transport: t.inverse() });
                }
            }
            cells[d][k].boundary = inc;
        }
    }
    Ok(EquivariantComplex { field: *field, faces, refinement, orbits, cells, orbit_of })
}

/// Ordered boundary cycle of a canonical 2-cell.
fn face_cycle(faces: &[FaceInstance], orbits: &OrbitData, cell: &Cell) -> Result<Vec<Pt>> {
    let i = orbits.index[2][cell];
    let (fi, s) = orbits.anchor[2][i];
    let target = cell.shifted(s);
    for cyc in &faces[fi].pieces {
        if Cell::new(2, cyc.clone()) == target {
            return Ok(cyc.iter().map(|p| p.shifted((-s.0, -s.1))).collect());
        }
    }
    Err(Error::Invariant("2-cell cycle not found".into()))
}

/// The cell structure induced by the floor, before refinement.
pub fn induce_cell_structure(poly: &Polyhedron) -> Result<EquivariantComplex> {
    let faces = faces_from_polyhedron(poly)?;
    build_complex(&poly.field, faces, Refinement::default())
}

// ---------------------------------------------------------------------------------------
// refinement

/// Translation-invariant cut lines imposed before refinement, modelling the boundary of a
/// fundamental rectangle for the translations. Offsets are in units of the rectangle sides.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RectangleCut {
    /// Real part of the vertical sides, as a fraction of 1.
    pub real_offset: Rational,
    /// Height of the horizontal sides, as a fraction of the row height.
    pub imag_offset: Rational,
}

#[derive(Clone, Debug)]
pub struct RefineOptions {
    pub cut: Option<RectangleCut>,
}

impl Default for RefineOptions {
    /// Cuts along `Re z = 0` and `Im z = 0` and their translates.
    fn default() -> Self {
        RefineOptions { cut: Some(RectangleCut { real_offset: Rational::zero(), imag_offset: Rational::zero() }) }
    }
}

impl RefineOptions {
    /// No cut lines: only the subdivisions forced by stabilisers.
    pub fn uncut() -> Self {
        RefineOptions { cut: None }
    }
}

/// Hemisphere of face `fi`, translated by `s`.
fn face_hemisphere(faces: &[FaceInstance], fi: usize, s: (i64, i64)) -> Hemisphere {
    let h = &faces[fi].hemisphere;
    h.translate(&h.lambda.field.int(s.0, s.1))
}

/// Maps `face` by `g` and locates the image face.
fn image_face(field: &QuadraticField, faces: &[FaceInstance], fi: usize, g: &GroupElement) -> Option<(usize, (i64, i64))> {
    let b = &faces[fi].boundary;
    let imgs: Vec<Pt> = b.iter().take(3).map(|p| act_pt(field, g, p)).collect();
    // the circumcentre of three boundary points of a face is its hemisphere centre
    faces.iter().enumerate().find_map(|(j, f)| {
        let c = f.hemisphere.center.clone();
        let plane = Plane::new(field);
        let ok = |s: (i64, i64)| {
            imgs.iter().all(|p| {
                let d = (&p.x - &c.a - rat(s.0), &p.y - &c.b - rat(s.1));
                &f.hemisphere.radius_sq - plane.dot(pair(&d), pair(&d)) == p.h
            })
        };
        let p0 = &imgs[0];
        let base = (
            (&p0.x - &c.a).floor().to_integer().to_i64().expect("overflow"),
            (&p0.y - &c.b).floor().to_integer().to_i64().expect("overflow"),
        );
        for dx in -2..=2 {
            for dy in -2..=2 {
                let s = (base.0 + dx, base.1 + dy);
                if ok(s) {
                    return Some((j, s));
                }
            }
        }
        None
    })
}

fn cut_chords(field: &QuadraticField, faces: &[FaceInstance], cut: &RectangleCut) -> Refinement {
    let plane = Plane::new(field);
    let mut r = Refinement::default();
    let stepped = field.omega_trace == 1;
    for (fi, f) in faces.iter().enumerate() {
        let b = &f.boundary;
        let (ymin, ymax) = (b.iter().map(|p| p.y.clone()).min().unwrap(), b.iter().map(|p| p.y.clone()).max().unwrap());
        let real = |p: &Pt| if stepped { &p.x + &p.y / rat(2) } else { p.x.clone() };
        let (rmin, rmax) = (b.iter().map(real).min().unwrap(), b.iter().map(real).max().unwrap());
        // horizontal lines y = offset + k
        let mut lines: Vec<(Rational, Rational, Rational, Option<(Rational, Rational)>)> = Vec::new();
        let k0 = (&ymin - &cut.imag_offset).floor().to_integer().to_i64().unwrap();
        let k1 = (&ymax - &cut.imag_offset).ceil().to_integer().to_i64().unwrap();
        for k in k0..=k1 {
            lines.push((rat(0), rat(1), &cut.imag_offset + rat(k), None));
        }
        // vertical sides; in the stepped case each row is shifted by a half
        for k in k0 - 1..=k1 {
            let row = (&cut.imag_offset + rat(k), &cut.imag_offset + rat(k + 1));
            let shift = if stepped { Rational::new(k.into(), 2.into()) } else { rat(0) };
            let j0 = (&rmin - &cut.real_offset - &shift).floor().to_integer().to_i64().unwrap() - 1;
            let j1 = (&rmax - &cut.real_offset - &shift).ceil().to_integer().to_i64().unwrap() + 1;
            for j in j0..=j1 {
                let c = &cut.real_offset + &shift + rat(j);
                let a = if stepped { (rat(1), ratio_half()) } else { (rat(1), rat(0)) };
                lines.push((a.0, a.1, c, Some(row.clone())));
            }
        }
        for (a, bb, c, row) in lines {
            if let Some(seg) = clip_line(&plane, &f.hemisphere, b, &a, &bb, &c, row.as_ref()) {
                if seg.0 != seg.1 {
                    r.add_chord(fi, seg.0, seg.1);
                }
            }
        }
    }
    r
}

fn ratio_half() -> Rational {
    Rational::new(1.into(), 2.into())
}

/// Part of the line `a x + b y = c` (restricted to `lo <= y <= hi`) inside the convex polygon,
/// unless it runs along the boundary or misses the interior.
fn clip_line(plane: &Plane, hemi: &Hemisphere, poly: &[Pt], a: &Rational, b: &Rational, c: &Rational, row: Option<&(Rational, Rational)>) -> Option<(Pt, Pt)> {
    let val = |p: &Pt| a * &p.x + b * &p.y - c;
    let vals: Vec<Rational> = poly.iter().map(val).collect();
    if vals.iter().all(|v| !v.is_negative()) || vals.iter().all(|v| !v.is_positive()) {
        return None;
    }
    let mut hits: Vec<Pt> = Vec::new();
    let n = poly.len();
    for i in 0..n {
        let (p, q) = (&poly[i], &poly[(i + 1) % n]);
        let (vp, vq) = (&vals[i], &vals[(i + 1) % n]);
        if vp.is_zero() {
            hits.push(p.clone());
        } else if (vp.is_positive() && vq.is_negative()) || (vp.is_negative() && vq.is_positive()) {
            let t = vp / (vp - vq);
            hits.push(lerp(plane, hemi, p, q, &t));
        }
    }
    hits.sort();
    hits.dedup();
    if hits.len() != 2 {
        return None;
    }
    let (mut p, mut q) = (hits[0].clone(), hits[1].clone());
    if let Some((lo, hi)) = row {
        if p.y > q.y {
            std::mem::swap(&mut p, &mut q);
        }
        if &q.y <= lo || &p.y >= hi {
            return None;
        }
        let clamp = |from: &Pt, to: &Pt, y: &Rational| {
            let t = (y - &from.y) / (&to.y - &from.y);
            lerp(plane, hemi, from, to, &t)
        };
        let (p0, q0) = (p.clone(), q.clone());
        if &p.y < lo {
            p = clamp(&p0, &q0, lo);
        }
        if &q.y > hi {
            q = clamp(&p0, &q0, hi);
        }
        if p == q {
            return None;
        }
    }
    Some((p, q))
}

/// Closes a refinement under the face pairings and unit rotations.
fn close_refinement(field: &QuadraticField, faces: &[FaceInstance], mut r: Refinement) -> Result<Refinement> {
    let rots = rotations(field);
    loop {
        let before = r.clone();
        for (fi, p, q) in before.chords.iter() {
            let mut gs: Vec<GroupElement> = vec![faces[*fi].pairing];
            gs.extend(rots.iter().copied());
            for g in gs {
                let (j, s) = image_face(field, faces, *fi, &g).ok_or_else(|| Error::Invariant("image of a face is not a face".into()))?;
                let p2 = act_pt(field, &g, p).shifted((-s.0, -s.1));
                let q2 = act_pt(field, &g, q).shifted((-s.0, -s.1));
                r.add_chord(j, p2, q2);
            }
        }
        // images of new edge points under the pairings of every face through them
        for q in before.points.iter() {
            for (fi, f) in faces.iter().enumerate() {
                let cycle = insert_points(&f.boundary, &BTreeSet::from([q.clone()]));
                for p in cycle.iter().filter(|p| p.canonical() == *q) {
                    r.points.insert(act_pt(field, &f.pairing, p).canonical());
                    let _ = fi;
                }
            }
            for g in &rots {
                r.points.insert(act_pt(field, g, q).canonical());
            }
        }
        if r == before {
            return Ok(r);
        }
    }
}

/// Refines the induced structure until all stabilisers fix their cells pointwise.
pub fn refine(complex: &EquivariantComplex) -> Result<EquivariantComplex> {
    refine_with(complex, &RefineOptions::default())
}

pub fn refine_with(complex: &EquivariantComplex, options: &RefineOptions) -> Result<EquivariantComplex> {
    let field = complex.field;
    let faces: Vec<FaceInstance> = complex.faces.clone();
    let mut r = complex.refinement.clone();
    if let Some(cut) = &options.cut {
        let c = cut_chords(&field, &faces, cut);
        r.points.extend(c.points);
        r.chords.extend(c.chords);
        r = close_refinement(&field, &faces, r)?;
    }
    let mut cx = build_complex(&field, faces.clone(), r.clone())?;
    for _ in 0..5 {
        let extra = refinement_step(&cx)?;
        if extra.is_empty() {
            check_pointwise(&cx)?;
            return Ok(cx);
        }
        r.points.extend(extra.points);
        r.chords.extend(extra.chords);
        cx = build_complex(&field, faces.clone(), r.clone())?;
    }
    Err(Error::Invariant("subdivision did not terminate within 4 rounds".into()))
}

/// The subdivisions required by the current structure.
fn refinement_step(cx: &EquivariantComplex) -> Result<Refinement> {
    let field = cx.field;
    let plane = Plane::new(&field);
    let o = &cx.orbits;
    let mut out = Refinement::default();
    for (k, orb) in cx.cells[1].iter().enumerate() {
        let r = o.orbit_reps(1)[k];
        let (a, b) = (&orb.cell.verts[0], &orb.cell.verts[1]);
        if cx.vertex_orbit(a) != cx.vertex_orbit(b) {
            continue;
        }
        let (fi, s) = o.anchor[1][r];
        let hemi = face_hemisphere(&cx.faces, fi, (-s.0, -s.1));
        let flip = o.setwise[1][&r].iter().find(|g| &act_pt(&field, g, a) == b).copied();
        let p = match flip {
            Some(g) => fixed_on_segment(&field, &g, &hemi, a, b)
                .ok_or_else(|| Error::Invariant(format!("no fixed point on a reversed edge {a:?} {b:?} by {g} in {hemi:?}")))?,
            None => lerp(&plane, &hemi, a, b, &ratio_half()),
        };
        for (i, &rr) in o.rep[1].iter().enumerate() {
            if rr == r {
                out.points.insert(act_pt(&field, &o.transport[1][i], &p).canonical());
            }
        }
    }
    for (k, orb) in cx.cells[2].iter().enumerate() {
        let r = o.orbit_reps(2)[k];
        let setwise = &o.setwise[2][&r];
        if setwise.len() == 1 {
            continue;
        }
        let (fi, s) = o.anchor[2][r];
        let hemi = face_hemisphere(&cx.faces, fi, (-s.0, -s.1));
        let cyc = face_cycle(&cx.faces, o, &orb.cell)?;
        let plane = Plane::new(&field);
        let mut segments: Vec<(Pt, Pt)> = Vec::new();
        let mut normal: Vec<GroupElement> = Vec::new();
        for g in setwise.iter().filter(|g| !g.is_identity_psl()) {
            let mut fixed: Vec<Pt> = cyc.iter().filter(|p| &act_pt(&field, g, p) == *p).cloned().collect();
            for (a, b) in cycle_edges(&cyc) {
                if let Some(p) = fixed_on_segment(&field, g, &hemi, a, b) {
                    fixed.push(p);
                }
            }
            fixed.sort();
            fixed.dedup();
            match fixed.len() {
                // a half-turn about an axis inside the 2-cell
                2 => segments.push((fixed[0].clone(), fixed[1].clone())),
                // a rotation about the normal line
                0 => normal.push(*g),
                n => return Err(Error::Invariant(format!("an element of a 2-cell stabiliser fixes {n} boundary points"))),
            }
        }
        if segments.is_empty() {
            let g = normal[0];
            if !g.c.is_zero() {
                return Err(Error::Invariant("rotation about a 2-cell normal with a non-vertical axis".into()));
            }
            let fp = fixed_point_in_h(&g)?;
            let centre = on_hemisphere(&plane, &hemi, fp.z.a.clone(), fp.z.b.clone());
            segments.extend(cyc.iter().map(|p| (centre.clone(), p.clone())));
        }
        for (i, &rr) in o.rep[2].iter().enumerate() {
            if rr == r {
                let t = o.transport[2][i];
                let (fj, sj) = o.anchor[2][i];
                for (p, q) in &segments {
                    out.add_chord(fj, act_pt(&field, &t, p).shifted(sj), act_pt(&field, &t, q).shifted(sj));
                }
            }
        }
    }
    Ok(out)
}

/// Pointwise stabilisation and the three-unique-vertices criterion.
fn check_pointwise(cx: &EquivariantComplex) -> Result<()> {
    for d in 1..3 {
        for (k, orb) in cx.cells[d].iter().enumerate() {
            let r = cx.orbits.orbit_reps(d)[k];
            if cx.orbits.setwise[d][&r].len() != orb.stabiliser.len() {
                return Err(Error::Invariant(format!("a {d}-cell is not fixed pointwise by its stabiliser")));
            }
        }
    }
    Ok(())
}

/// Vertex stabilisers from the exhaustive search.
pub fn stabiliser_by_search(p: &UHSPoint) -> Vec<GroupElement> {
    find_identifications(p, p)
}

impl EquivariantComplex {
    pub fn census(&self) -> Census {
        let mut c = Census::default();
        for d in 0..3 {
            for o in &self.cells[d] {
                *c.counts[d].entry(o.kind).or_insert(0) += 1;
            }
        }
        c
    }

    pub fn vertex_orbit(&self, p: &Pt) -> Option<usize> {
        self.orbits.lookup(&Cell::new(0, vec![p.clone()])).map(|(i, _)| self.orbit_of[0][i])
    }

    /// Number of vertices of a cell whose orbit occurs only once among the cell's vertices.
    pub fn unique_vertices(&self, cell: &Cell) -> usize {
        let orbs: Vec<Option<usize>> = cell.verts.iter().map(|p| self.vertex_orbit(p)).collect();
        orbs.iter().filter(|o| orbs.iter().filter(|p| p == o).count() == 1).count()
    }

    pub fn cusp_orbits(&self) -> usize {
        self.cells[0].iter().filter(|o| o.kind == StabiliserType::Zsquare).count()
    }

    /// Stabiliser of a canonical vertex, conjugated from its orbit representative.
    pub fn vertex_stabiliser(&self, i: usize) -> Vec<GroupElement> {
        let k = self.orbit_of[0][i];
        let t = self.orbits.transport[0][i];
        self.cells[0][k].stabiliser.iter().map(|g| (t * *g * t.inverse()).normalized()).collect()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Census {
    pub counts: [BTreeMap<StabiliserType, usize>; 3],
}

impl Census {
    pub fn get(&self, d: usize, t: StabiliserType) -> usize {
        self.counts[d].get(&t).copied().unwrap_or(0)
    }

    pub fn total(&self, d: usize) -> usize {
        self.counts[d].values().sum()
    }

    pub fn finite_total(&self, d: usize) -> usize {
        self.counts[d].iter().filter(|(k, _)| **k != StabiliserType::Zsquare).map(|(_, v)| v).sum()
    }
}

pub fn euler_check(complex: &EquivariantComplex) -> BigRational {
    let mut s = BigRational::zero();
    for d in 0..3 {
        for o in &complex.cells[d] {
            if let Some(n) = o.kind.order() {
                let term = BigRational::new(1.into(), (n as i64).into());
                if d % 2 == 0 {
                    s += term;
                } else {
                    s -= term;
                }
            }
        }
    }
    s
}

/// `V - E + F` of the quotient, with the cusp vertices left out.
pub fn naive_euler(complex: &EquivariantComplex) -> i64 {
    let c = complex.census();
    c.finite_total(0) as i64 - c.total(1) as i64 + c.total(2) as i64
}

/// The cocompact retract with singular cusps attached. The complex built here is already
/// carried by the floor, so this checks that the cusp vertices are exactly the singular
/// cusps, one orbit per non-trivial ideal class, and returns a copy.
pub fn floege_retract(complex: &EquivariantComplex) -> Result<EquivariantComplex> {
    let h = crate::iqfield::class_group(&complex.field).class_number;
    let cusps = complex.cusp_orbits();
    if cusps + 1 != h {
        return Err(Error::Invariant(format!("{cusps} singular cusp orbits for class number {h}")));
    }
    for o in &complex.cells[0] {
        if o.cell.verts[0].is_cusp() != (o.kind == StabiliserType::Zsquare) {
            return Err(Error::Invariant(format!("vertex orbit with stabiliser {} at height {}", o.kind.name(), o.cell.verts[0].h)));
        }
    }
    Ok(complex.clone())
}

/// Polyhedron, induced cells, refinement and retract for one field.
pub fn floege_complex(field: &QuadraticField) -> Result<EquivariantComplex> {
    let poly = crate::swan::compute_polyhedron(field)?;
    floege_retract(&refine(&induce_cell_structure(&poly)?)?)
}

/// Stabiliser of an arbitrary cell of the complex, conjugated from its orbit representative.
pub fn stabiliser(complex: &EquivariantComplex, cell: &Cell) -> Option<Vec<GroupElement>> {
    let d = cell.dim as usize;
    let (i, s) = complex.orbits.lookup(cell)?;
    let k = complex.orbit_of[d][i];
    let t = translation(&complex.field, s) * complex.orbits.transport[d][i];
    Some(complex.cells[d][k].stabiliser.iter().map(|g| (t * *g * t.inverse()).normalized()).collect())
}

// ---------------------------------------------------------------------------------------
// persistence

/// Exact point coordinates as decimal fractions.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PtRecord {
    pub x: String,
    pub y: String,
    pub h: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IncidenceRecord {
    pub orbit: usize,
    pub sign: i64,
    pub transport: GroupElementRecord,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellOrbitRecord {
    pub vertices: Vec<PtRecord>,
    pub kind: StabiliserType,
    pub stabiliser: Vec<GroupElementRecord>,
    pub generators: Vec<GroupElementRecord>,
    pub boundary: Vec<IncidenceRecord>,
    pub size: usize,
}

/// The orbit data of a complex: everything downstream of the cell structure needs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplexRecord {
    pub m: i64,
    pub cells: [Vec<CellOrbitRecord>; 3],
}

fn parse_rational(s: &str) -> Result<Rational> {
    s.parse().map_err(|_| Error::Input(format!("bad rational {s:?}")))
}

impl EquivariantComplex {
    pub fn to_record(&self) -> ComplexRecord {
        let cells = [0, 1, 2].map(|d| {
            self.cells[d]
                .iter()
                .map(|o| CellOrbitRecord {
                    vertices: o.cell.verts.iter().map(|p| PtRecord { x: p.x.to_string(), y: p.y.to_string(), h: p.h.to_string() }).collect(),
                    kind: o.kind,
                    stabiliser: o.stabiliser.iter().map(GroupElement::record).collect(),
                    generators: o.generators.iter().map(GroupElement::record).collect(),
                    boundary: o.boundary.iter().map(|i| IncidenceRecord { orbit: i.orbit, sign: i.sign, transport: i.transport.record() }).collect(),
                    size: o.size,
                })
                .collect()
        });
        ComplexRecord { m: self.field.m, cells }
    }

    /// Rebuilds the orbit representatives. The floor faces and the orbit lookup tables are
    /// not stored, so the result answers questions about orbits only.
    pub fn from_record(r: &ComplexRecord) -> Result<EquivariantComplex> {
        let field = crate::iqfield::make_field(r.m)?;
        let mut cells: [Vec<CellOrbit>; 3] = Default::default();
        for d in 0..3 {
            for o in &r.cells[d] {
                let verts = o
                    .vertices
                    .iter()
                    .map(|p| Ok(Pt { x: parse_rational(&p.x)?, y: parse_rational(&p.y)?, h: parse_rational(&p.h)? }))
                    .collect::<Result<Vec<_>>>()?;
                let elements = |v: &[GroupElementRecord]| v.iter().map(|g| GroupElement::from_record(&field, g)).collect::<Vec<_>>();
                let stabiliser = elements(&o.stabiliser);
                if o.kind != StabiliserType::Zsquare && recognize(&stabiliser)? != o.kind {
                    return Err(Error::Input(format!("stored stabiliser does not have type {}", o.kind.name())));
                }
                cells[d].push(CellOrbit {
                    dim: d,
                    cell: Cell::new(d as u8, verts),
                    stabiliser,
                    generators: elements(&o.generators),
                    kind: o.kind,
                    boundary: o
                        .boundary
                        .iter()
                        .map(|i| Incidence { orbit: i.orbit, sign: i.sign, transport: GroupElement::from_record(&field, &i.transport) })
                        .collect(),
                    size: o.size,
                });
            }
        }
        for d in 1..3 {
            for o in &cells[d] {
                if o.boundary.iter().any(|i| i.orbit >= cells[d - 1].len()) {
                    return Err(Error::Input("incidence refers to a missing orbit".into()));
                }
            }
        }
        Ok(EquivariantComplex {
            field,
            faces: Vec::new(),
            refinement: Refinement::default(),
            orbits: OrbitData::default(),
            cells,
            orbit_of: Default::default(),
        })
    }
}
