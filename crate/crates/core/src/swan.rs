//! The floor of the hemisphere arrangement over a fundamental domain for the translations
//! `z -> z + 1`, `z -> z + w`.
//!
//! Heights of hemispheres are compared through their power functions
//! `pow_h(z) = N(z - c_h) - r_h^2 = -hsq_h(z)`. The floor is the upper envelope of the
//! hemispheres, i.e. the lower envelope of the power functions, whose regions of dominance
//! form a power diagram. Its cells are convex polygons cut out by linear inequalities with
//! rational coefficients, so the whole construction stays exact.

use std::collections::HashMap;

use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::iqfield::{coprime, is_principal, rat, AlgebraicInteger, FieldElement, QuadraticField, Rational};
use crate::moebius::UHSPoint;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Hemisphere {
    pub lambda: AlgebraicInteger,
    pub mu: AlgebraicInteger,
    pub center: FieldElement,
    pub radius_sq: Rational,
}

impl Hemisphere {
    pub fn new(lambda: AlgebraicInteger, mu: AlgebraicInteger) -> Hemisphere {
        let center = lambda.to_field().div(&mu.to_field()).expect("mu != 0");
        let radius_sq = Rational::new(1.into(), mu.norm().into());
        Hemisphere { lambda, mu, center, radius_sq }
    }

    /// The same hemisphere moved by the translation `z -> z + tau`.
    pub fn translate(&self, tau: &AlgebraicInteger) -> Hemisphere {
        let lambda = self.lambda + *tau * self.mu;
        Hemisphere { lambda, mu: self.mu, center: &self.center + &tau.to_field(), radius_sq: self.radius_sq.clone() }
    }

    /// `hsq_h(z) = r^2 - N(z - c)`, negative outside the disc.
    pub fn height_sq(&self, z: &FieldElement) -> Rational {
        &self.radius_sq - (z - &self.center).norm()
    }

    pub fn power(&self, z: &FieldElement) -> Rational {
        (z - &self.center).norm() - &self.radius_sq
    }
}

/// The parallelogram `{x + y w : x in real_range, y in omega_range}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FundamentalRectangle {
    pub real_range: (Rational, Rational),
    pub omega_range: (Rational, Rational),
}

impl FundamentalRectangle {
    pub fn unit() -> FundamentalRectangle {
        FundamentalRectangle { real_range: (rat(0), rat(1)), omega_range: (rat(0), rat(1)) }
    }

    pub fn contains(&self, z: &FieldElement) -> bool {
        z.a >= self.real_range.0 && z.a <= self.real_range.1 && z.b >= self.omega_range.0 && z.b <= self.omega_range.1
    }
}

/// A reference to a vertex: the canonical vertex plus a lattice translation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VRef {
    pub vertex: usize,
    pub shift: (i64, i64),
}

#[derive(Clone, Debug)]
pub struct FloorVertex {
    /// Point with `z` reduced into `[0, 1)^2`.
    pub point: UHSPoint,
    pub singular: bool,
}

#[derive(Clone, Debug)]
pub struct FloorEdge {
    /// First end has zero shift.
    pub ends: [VRef; 2],
}

#[derive(Clone, Debug)]
pub struct FloorFace {
    /// Hemisphere with center reduced into `[0, 1)^2`.
    pub hemisphere: Hemisphere,
    /// Counter-clockwise boundary cycle in actual coordinates.
    pub boundary: Vec<VRef>,
    /// `(edge index, orientation, shift)` for consecutive boundary pairs: orientation `+1`
    /// when the edge's stored direction matches the boundary direction.
    pub edges: Vec<(usize, i32, (i64, i64))>,
}

#[derive(Clone, Debug)]
pub struct Polyhedron {
    pub field: QuadraticField,
    pub vertices: Vec<FloorVertex>,
    pub edges: Vec<FloorEdge>,
    pub faces: Vec<FloorFace>,
    pub norm_bound: i64,
}

impl Polyhedron {
    pub fn vertex_point(&self, r: &VRef) -> UHSPoint {
        let p = &self.vertices[r.vertex].point;
        let z = &p.z + &self.field.int(r.shift.0, r.shift.1).to_field();
        UHSPoint::new(z, p.hsq.clone())
    }

    pub fn min_interior_hsq(&self) -> Option<Rational> {
        self.vertices.iter().filter(|v| !v.singular).map(|v| v.point.hsq.clone()).min()
    }

    pub fn singular_vertices(&self) -> Vec<usize> {
        (0..self.vertices.len()).filter(|&i| self.vertices[i].singular).collect()
    }

    /// Locates a point of the floor among the canonical vertices.
    pub fn locate_vertex(&self, z: &FieldElement) -> Option<VRef> {
        let (red, shift) = z.reduce_mod_lattice();
        self.vertices.iter().position(|v| v.point.z == red).map(|vertex| VRef { vertex, shift: (shift.a, shift.b) })
    }
}

/// Hemispheres with `1 <= N(mu) <= norm_bound`, centers in `[0, 1)^2` (and, when `margin`
/// is positive, their translates with centers in the enlarged square), deduplicated.
pub fn enumerate_hemispheres(field: &QuadraticField, norm_bound: i64) -> Vec<Hemisphere> {
    let mut out: Vec<Hemisphere> = Vec::new();
    for k in 1..=norm_bound {
        out.extend(hemispheres_of_norm(field, k));
    }
    out
}

fn hemispheres_of_norm(field: &QuadraticField, k: i64) -> Vec<Hemisphere> {
    let mut seen: HashMap<FieldElement, ()> = HashMap::new();
    let mut out = Vec::new();
    let mus: Vec<AlgebraicInteger> = field.integers_up_to_norm(k).into_iter().filter(|x| x.norm() == k).collect();
    for mu in mus {
        // lambda = mu * (x + y w) with (x, y) in [0,1)^2; the image of the unit square under
        // multiplication by mu has corners 0, mu, mu*w, mu*(1+w)
        let w = field.omega();
        let corners = [field.int(0, 0), mu, mu * w, mu * (w + field.int(1, 0))];
        let amin = corners.iter().map(|c| c.a).min().unwrap();
        let amax = corners.iter().map(|c| c.a).max().unwrap();
        let bmin = corners.iter().map(|c| c.b).min().unwrap();
        let bmax = corners.iter().map(|c| c.b).max().unwrap();
        let muf = mu.to_field();
        for a in amin..=amax {
            for b in bmin..=bmax {
                let lambda = field.int(a, b);
                let c = lambda.to_field().div(&muf).unwrap();
                if c.a.is_negative() || c.b.is_negative() || c.a >= Rational::one() || c.b >= Rational::one() {
                    continue;
                }
                if seen.contains_key(&c) || !coprime(&lambda, &mu) {
                    continue;
                }
                seen.insert(c, ());
                out.push(Hemisphere::new(lambda, mu));
            }
        }
    }
    out.sort_by_key(|x| (x.center.a.clone(), x.center.b.clone()));
    out
}

/// Exact helpers for the norm form in `{1, w}` coordinates.
#[derive(Clone)]
struct Geom {
    field: QuadraticField,
    t: Rational,
    n: Rational,
}

impl Geom {
    fn new(field: &QuadraticField) -> Geom {
        Geom { field: *field, t: rat(field.omega_trace), n: rat(field.omega_norm) }
    }

    /// Half-plane `alpha x + beta y <= gamma` on which `pow_h <= pow_k`.
    fn bisector(&self, h: &Hemisphere, k: &Hemisphere) -> (Rational, Rational, Rational) {
        let dx = &k.center.a - &h.center.a;
        let dy = &k.center.b - &h.center.b;
        let alpha = &dx * rat(2) + &self.t * &dy;
        let beta = &self.t * &dx + &self.n * &dy * rat(2);
        let gamma = k.center.norm() - &k.radius_sq - h.center.norm() + &h.radius_sq;
        (alpha, beta, gamma)
    }

    /// Rational upper bounds on `|x|` and `|y|` over `N(x + y w) <= r2`.
    fn box_halfwidths(&self, r2: &Rational) -> (Rational, Rational) {
        let d = rat(self.field.abs_disc());
        let sy = r2 * rat(4) / &d;
        let sx = r2 * rat(4) * &self.n / &d;
        (sqrt_upper(&sx), sqrt_upper(&sy))
    }
}

/// A rational `w >= sqrt(s)` close to it.
fn sqrt_upper(s: &Rational) -> Rational {
    let f = s.to_f64().unwrap_or(0.0).max(0.0).sqrt();
    let mut w = Rational::new(((f * 4096.0).ceil() as i64 + 1).into(), 4096.into());
    while &(&w * &w) < s {
        w *= rat(2);
    }
    w
}

fn clip(poly: &[FieldElement], alpha: &Rational, beta: &Rational, gamma: &Rational) -> Vec<FieldElement> {
    if poly.is_empty() {
        return Vec::new();
    }
    let s: Vec<Rational> = poly.iter().map(|p| gamma - alpha * &p.a - beta * &p.b).collect();
    if s.iter().all(|x| !x.is_negative()) {
        return poly.to_vec();
    }
    let mut out = Vec::with_capacity(poly.len() + 1);
    let n = poly.len();
    for i in 0..n {
        let j = (i + 1) % n;
        let (p, q) = (&poly[i], &poly[j]);
        let (sp, sq) = (&s[i], &s[j]);
        if !sp.is_negative() {
            out.push(p.clone());
        }
        if (sp.is_positive() && sq.is_negative()) || (sp.is_negative() && sq.is_positive()) {
            let tt = sp / (sp - sq);
            let z = &(q - p).scale(&tt) + p;
            out.push(z);
        }
    }
    out.dedup();
    while out.len() > 1 && out.first() == out.last() {
        out.pop();
    }
    out
}

fn doubled_area(poly: &[FieldElement]) -> Rational {
    let n = poly.len();
    let mut s = Rational::zero();
    for i in 0..n {
        let j = (i + 1) % n;
        s += &poly[i].a * &poly[j].b - &poly[j].a * &poly[i].b;
    }
    s
}

#[derive(Clone, Debug)]
struct Approx {
    cx: f64,
    cy: f64,
    wx: f64,
    wy: f64,
}

/// Exact periodic power diagram of a growing set of hemispheres.
struct Arrangement {
    geom: Geom,
    hemis: Vec<Hemisphere>,
    cells: Vec<Vec<FieldElement>>,
    approx: Vec<Approx>,
    /// Upper bound on the maximal floor power (clamped at zero).
    pbound: Rational,
    vertices: Vec<(FieldElement, Rational)>,
    vapprox: Vec<(f64, f64, f64)>,
}

const EPS: f64 = 1e-7;

fn f(x: &Rational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

impl Arrangement {
    fn new(field: &QuadraticField) -> Arrangement {
        let geom = Geom::new(field);
        // the unit hemispheres alone cover up to the covering radius of the lattice
        let pbound = covering_radius_sq(field);
        Arrangement { geom, hemis: Vec::new(), cells: Vec::new(), approx: Vec::new(), pbound, vertices: Vec::new(), vapprox: Vec::new() }
    }

    fn approx_of(&self, h: &Hemisphere) -> Approx {
        let r2 = &h.radius_sq + &self.pbound;
        let (wx, wy) = self.geom.box_halfwidths(&r2);
        Approx { cx: f(&h.center.a), cy: f(&h.center.b), wx: f(&wx), wy: f(&wy) }
    }

    /// Translates of stored hemisphere `k` whose bounding box meets the box `b`.
    fn shifts_meeting(b: &Approx, k: &Approx) -> Vec<(i64, i64)> {
        let x0 = (b.cx - b.wx - k.cx - k.wx - EPS).ceil() as i64;
        let x1 = (b.cx + b.wx - k.cx + k.wx + EPS).floor() as i64;
        let y0 = (b.cy - b.wy - k.cy - k.wy - EPS).ceil() as i64;
        let y1 = (b.cy + b.wy - k.cy + k.wy + EPS).floor() as i64;
        let mut out = Vec::new();
        for x in x0..=x1 {
            for y in y0..=y1 {
                out.push((x, y));
            }
        }
        out
    }

    fn compute_cell(&self, i: usize) -> Vec<FieldElement> {
        let h = &self.hemis[i];
        let field = &self.geom.field;
        let r2 = &h.radius_sq + &self.pbound;
        let (wx, wy) = self.geom.box_halfwidths(&r2);
        let c = &h.center;
        let mut poly = vec![
            field.elem(&c.a - &wx, &c.b - &wy),
            field.elem(&c.a + &wx, &c.b - &wy),
            field.elem(&c.a + &wx, &c.b + &wy),
            field.elem(&c.a - &wx, &c.b + &wy),
        ];
        let ai = &self.approx[i];
        for (k, ak) in self.approx.iter().enumerate() {
            for s in Self::shifts_meeting(ai, ak) {
                if k == i && s == (0, 0) {
                    continue;
                }
                let other = self.hemis[k].translate(&field.int(s.0, s.1));
                let (alpha, beta, gamma) = self.geom.bisector(h, &other);
                poly = clip(&poly, &alpha, &beta, &gamma);
                if poly.len() < 3 {
                    return Vec::new();
                }
            }
        }
        if doubled_area(&poly).is_positive() {
            poly
        } else {
            Vec::new()
        }
    }

    fn rebuild_vertices(&mut self) {
        let mut map: HashMap<FieldElement, Rational> = HashMap::new();
        for (i, cell) in self.cells.iter().enumerate() {
            for p in cell {
                let (red, _) = p.reduce_mod_lattice();
                map.entry(red).or_insert_with(|| self.hemis[i].power(p));
            }
        }
        let mut v: Vec<(FieldElement, Rational)> = map.into_iter().collect();
        v.sort_by(|x, y| (&x.0.a, &x.0.b).cmp(&(&y.0.a, &y.0.b)));
        self.vapprox = v.iter().map(|(p, pw)| (f(&p.a), f(&p.b), f(pw))).collect();
        self.vertices = v;
    }

    fn max_power(&self) -> Option<Rational> {
        self.vertices.iter().map(|v| v.1.clone()).max()
    }

    /// True when the hemisphere lies strictly above the current floor somewhere.
    fn is_relevant(&self, h: &Hemisphere) -> bool {
        if self.hemis.is_empty() {
            return true;
        }
        if let Some(maxp) = self.max_power() {
            // every vertex has height >= -maxp; r^2 <= that height means never strictly above
            if !maxp.is_positive() && h.radius_sq <= -maxp.clone() {
                return false;
            }
        }
        let field = &self.geom.field;
        let ah = self.approx_of(h);
        let hr2 = f(&h.radius_sq);
        for (vi, (p, pw)) in self.vertices.iter().enumerate() {
            let (vx, vy, vpw) = self.vapprox[vi];
            if vpw < -hr2 - EPS {
                continue;
            }
            let pa = Approx { cx: vx, cy: vy, wx: 0.0, wy: 0.0 };
            for s in Self::shifts_meeting(&ah, &pa) {
                let q = p + &field.int(s.0, s.1).to_field();
                if &h.power(&q) < pw {
                    return true;
                }
            }
        }
        false
    }

    /// Adds a batch of hemispheres and recomputes the affected cells.
    fn insert(&mut self, new: Vec<Hemisphere>) {
        if new.is_empty() {
            return;
        }
        let start = self.hemis.len();
        for h in new {
            let a = self.approx_of(&h);
            self.hemis.push(h);
            self.approx.push(a);
            self.cells.push(Vec::new());
        }
        // refresh boxes of old hemispheres with the current bound
        for i in 0..start {
            self.approx[i] = self.approx_of(&self.hemis[i].clone());
        }
        let mut affected = vec![false; self.hemis.len()];
        for i in start..self.hemis.len() {
            affected[i] = true;
        }
        for i in 0..start {
            for j in start..self.hemis.len() {
                if !Self::shifts_meeting(&self.approx[j], &self.approx[i]).is_empty() {
                    affected[i] = true;
                    break;
                }
            }
        }
        for i in 0..self.hemis.len() {
            if affected[i] {
                self.cells[i] = self.compute_cell(i);
            }
        }
        self.prune();
        self.rebuild_vertices();
        if let Some(p) = self.max_power() {
            self.pbound = if p.is_positive() { p } else { Rational::zero() };
            let approx: Vec<Approx> = self.hemis.iter().map(|h| self.approx_of(h)).collect();
            self.approx = approx;
        }
    }

    /// Drops hemispheres whose cell became empty.
    fn prune(&mut self) {
        let keep: Vec<bool> = self.cells.iter().map(|c| !c.is_empty()).collect();
        let mut k = 0;
        self.hemis.retain(|_| {
            k += 1;
            keep[k - 1]
        });
        k = 0;
        self.approx.retain(|_| {
            k += 1;
            keep[k - 1]
        });
        self.cells.retain(|c| !c.is_empty());
    }

    fn recompute_all(&mut self) {
        let approx: Vec<Approx> = self.hemis.iter().map(|h| self.approx_of(h)).collect();
        self.approx = approx;
        for i in 0..self.hemis.len() {
            self.cells[i] = self.compute_cell(i);
        }
        self.prune();
        self.rebuild_vertices();
    }

    /// Coverage status: `Ok(min height)` when every vertex is covered or a singular cusp.
    fn coverage(&self) -> std::result::Result<Option<Rational>, ()> {
        let mut min: Option<Rational> = None;
        for (p, pw) in &self.vertices {
            if pw.is_positive() {
                return Err(());
            }
            if pw.is_zero() {
                if !is_singular_point(p) {
                    return Err(());
                }
                continue;
            }
            let h = -pw.clone();
            if min.as_ref().is_none_or(|m| &h < m) {
                min = Some(h);
            }
        }
        Ok(min)
    }
}

/// Square of the covering radius of the lattice of integers.
fn covering_radius_sq(field: &QuadraticField) -> Rational {
    // circumcentre of the acute triangle 0, 1, w (the basis {1, w} is reduced)
    let t = rat(field.omega_trace);
    let n = rat(field.omega_norm);
    // p = x + y w with N(p) = N(p - 1) = N(p - w):
    // 2x + t y = 1 and t x + 2 n y = n
    let det = rat(4) * &n - &t * &t;
    let x = (rat(2) * &n - &t * &n) / &det;
    let y = (rat(2) * &n - &t) / &det;
    let p = field.elem(x, y);
    p.norm()
}

/// A boundary point `z` is a singular cusp when `z = lambda/mu` with `(lambda, mu)` non-principal.
pub fn is_singular_point(z: &FieldElement) -> bool {
    let (lambda, mu) = cusp_pair(z);
    !is_principal(&lambda, &mu).unwrap_or(true)
}

/// Writes `z = lambda/mu` with `mu` a positive rational integer.
pub fn cusp_pair(z: &FieldElement) -> (AlgebraicInteger, AlgebraicInteger) {
    let field = z.field;
    let den = num_integer::Integer::lcm(z.a.denom(), z.b.denom());
    let a = (&z.a * Rational::from_integer(den.clone())).to_integer().to_i64().expect("overflow");
    let b = (&z.b * Rational::from_integer(den.clone())).to_integer().to_i64().expect("overflow");
    (field.int(a, b), field.int(den.to_i64().expect("overflow"), 0))
}

/// True iff no hemisphere of norm above `norm_bound` can rise above the floor.
pub fn swan_terminated(floor: &Polyhedron, norm_bound: i64) -> bool {
    if floor.vertices.iter().any(|v| v.point.hsq.is_negative() || (v.point.hsq.is_zero() && !v.singular)) {
        return false;
    }
    match floor.min_interior_hsq() {
        Some(h) => h * rat(norm_bound + 1) >= Rational::one(),
        None => false,
    }
}

/// Floor of the given hemispheres. Hemispheres are inserted in order of increasing `N(mu)`.
pub fn compute_floor(hemispheres: &[Hemisphere], _rectangle: &FundamentalRectangle) -> Result<Polyhedron> {
    let field = hemispheres.first().ok_or_else(|| Error::Input("no hemispheres".into()))?.lambda.field;
    let mut by_norm: Vec<&Hemisphere> = hemispheres.iter().collect();
    by_norm.sort_by_key(|h| h.mu.norm());
    let mut arr = Arrangement::new(&field);
    let mut i = 0;
    let mut bound = 0;
    while i < by_norm.len() {
        let k = by_norm[i].mu.norm();
        let mut level = Vec::new();
        while i < by_norm.len() && by_norm[i].mu.norm() == k {
            let (c, _) = by_norm[i].center.reduce_mod_lattice();
            if !level.iter().any(|h: &Hemisphere| h.center == c) && !arr.hemis.iter().any(|h| h.center == c && h.radius_sq == by_norm[i].radius_sq) {
                let tau = &c - &by_norm[i].center;
                let h = by_norm[i].translate(&tau.to_integer().expect("lattice shift"));
                if arr.is_relevant(&h) {
                    level.push(h);
                }
            }
            i += 1;
        }
        arr.insert(level);
        bound = k;
    }
    arr.pbound = Rational::zero();
    arr.recompute_all();
    assemble(&field, &arr, bound)
}

/// Runs the hemisphere insertion level by level until the floor is complete and no smaller
/// hemisphere can rise above it.
pub fn compute_polyhedron(field: &QuadraticField) -> Result<Polyhedron> {
    let mut arr = Arrangement::new(field);
    let mut k = 0i64;
    loop {
        k += 1;
        if k > 100_000 {
            return Err(Error::Invariant("hemisphere insertion did not terminate".into()));
        }
        let cands = hemispheres_of_norm(field, k);
        if cands.is_empty() {
            continue;
        }
        let level: Vec<Hemisphere> = cands.into_iter().filter(|h| arr.is_relevant(h)).collect();
        arr.insert(level);
        if let Ok(Some(minh)) = arr.coverage() {
            if minh * rat(k + 1) >= Rational::one() {
                break;
            }
        }
    }
    arr.pbound = Rational::zero();
    arr.recompute_all();
    if arr.coverage().is_err() {
        return Err(Error::Invariant("floor coverage lost after final recomputation".into()));
    }
    let poly = assemble(field, &arr, k)?;
    if !swan_terminated(&poly, k) {
        return Err(Error::Invariant("termination criterion failed on assembled floor".into()));
    }
    Ok(poly)
}

fn assemble(field: &QuadraticField, arr: &Arrangement, norm_bound: i64) -> Result<Polyhedron> {
    // canonical vertices
    let mut vindex: HashMap<FieldElement, usize> = HashMap::new();
    let mut vertices: Vec<FloorVertex> = Vec::new();
    for (p, pw) in &arr.vertices {
        let hsq = -pw.clone();
        let singular = hsq.is_zero();
        vindex.insert(p.clone(), vertices.len());
        vertices.push(FloorVertex { point: UHSPoint::new(p.clone(), hsq), singular });
    }
    let vref = |p: &FieldElement| -> VRef {
        let (red, s) = p.reduce_mod_lattice();
        VRef { vertex: vindex[&red], shift: (s.a, s.b) }
    };
    let vapprox: Vec<(f64, f64)> = arr.vertices.iter().map(|(p, _)| (f(&p.a), f(&p.b))).collect();

    let mut faces: Vec<FloorFace> = Vec::new();
    let mut edge_index: HashMap<(VRef, VRef), usize> = HashMap::new();
    let mut edges: Vec<FloorEdge> = Vec::new();
    let mut edge_uses: Vec<usize> = Vec::new();
    for (hi, cell) in arr.cells.iter().enumerate() {
        if cell.is_empty() {
            continue;
        }
        // insert floor vertices lying inside polygon sides
        let mut full: Vec<FieldElement> = Vec::new();
        let n = cell.len();
        for i in 0..n {
            let p = &cell[i];
            let q = &cell[(i + 1) % n];
            full.push(p.clone());
            let (px, py) = (f(&p.a), f(&p.b));
            let (qx, qy) = (f(&q.a), f(&q.b));
            let bx = Approx { cx: (px + qx) / 2.0, cy: (py + qy) / 2.0, wx: (px - qx).abs() / 2.0, wy: (py - qy).abs() / 2.0 };
            let mut inner: Vec<(Rational, FieldElement)> = Vec::new();
            for (vi, (v, _)) in arr.vertices.iter().enumerate() {
                let pa = Approx { cx: vapprox[vi].0, cy: vapprox[vi].1, wx: 0.0, wy: 0.0 };
                for s in Arrangement::shifts_meeting(&bx, &pa) {
                    let z = v + &field.int(s.0, s.1).to_field();
                    if &z == p || &z == q {
                        continue;
                    }
                    let d1 = &z - p;
                    let d2 = q - p;
                    let cross = &d1.a * &d2.b - &d1.b * &d2.a;
                    if !cross.is_zero() {
                        continue;
                    }
                    let len = &d2.a * &d2.a + &d2.b * &d2.b;
                    let tt = (&d1.a * &d2.a + &d1.b * &d2.b) / len;
                    if tt.is_positive() && tt < Rational::one() {
                        inner.push((tt, z));
                    }
                }
            }
            inner.sort_by(|x, y| x.0.cmp(&y.0));
            inner.dedup_by(|x, y| x.1 == y.1);
            full.extend(inner.into_iter().map(|x| x.1));
        }
        let boundary: Vec<VRef> = full.iter().map(&vref).collect();
        let mut fedges = Vec::new();
        let nb = boundary.len();
        for i in 0..nb {
            let a = boundary[i];
            let b = boundary[(i + 1) % nb];
            let fwd = (VRef { vertex: a.vertex, shift: (0, 0) }, VRef { vertex: b.vertex, shift: (b.shift.0 - a.shift.0, b.shift.1 - a.shift.1) });
            let bwd = (VRef { vertex: b.vertex, shift: (0, 0) }, VRef { vertex: a.vertex, shift: (a.shift.0 - b.shift.0, a.shift.1 - b.shift.1) });
            let (key, orient, shift) = if fwd <= bwd { (fwd, 1, a.shift) } else { (bwd, -1, b.shift) };
            let ei = *edge_index.entry(key).or_insert_with(|| {
                edges.push(FloorEdge { ends: [key.0, key.1] });
                edge_uses.push(0);
                edges.len() - 1
            });
            edge_uses[ei] += 1;
            fedges.push((ei, orient, shift));
        }
        let (c, _) = arr.hemis[hi].center.reduce_mod_lattice();
        let _ = c;
        faces.push(FloorFace { hemisphere: arr.hemis[hi].clone(), boundary, edges: fedges });
    }
    if let Some(bad) = edge_uses.iter().position(|&u| u != 2) {
        return Err(Error::Invariant(format!("floor edge {bad} bounds {} faces", edge_uses[bad])));
    }
    Ok(Polyhedron { field: *field, vertices, edges, faces, norm_bound })
}
