//! Independent oracles, shared by the core tests and the acceptance run.
#![allow(dead_code)]

use bianchi_core::cellcomplex::StabiliserType;
use bianchi_core::groupcohom::{homology, mod_dim, Coefficients};
use bianchi_core::iqfield::{class_group, is_squarefree, make_field, AlgebraicInteger, QuadraticField, Rational};
use bianchi_core::moebius::{act, GroupElement, UHSPoint};
use bianchi_core::swan::compute_polyhedron;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rand::{Rng, SeedableRng};

/// Kronecker symbol `(d/n)` for `n > 0`, by reciprocity.
fn kronecker(d: i64, n: i64) -> i64 {
    let mut n = n;
    let mut sign = 1;
    while n % 2 == 0 {
        n /= 2;
        match d.rem_euclid(8) {
            1 | 7 => {}
            3 | 5 => sign = -sign,
            _ => return 0,
        }
    }
    // Jacobi symbol (d/n) for odd n
    let mut a = d.rem_euclid(n);
    while a != 0 {
        while a % 2 == 0 {
            a /= 2;
            if matches!(n % 8, 3 | 5) {
                sign = -sign;
            }
        }
        std::mem::swap(&mut a, &mut n);
        if a % 4 == 3 && n % 4 == 3 {
            sign = -sign;
        }
        a %= n;
    }
    if n == 1 {
        sign
    } else {
        0
    }
}

/// `h(D) = -(w / 2|D|) Σ_{a<|D|} (D/a) a`.
pub fn dirichlet_class_number(m: i64) -> i64 {
    let d = if m % 4 == 3 { -m } else { -4 * m };
    let w = match d {
        -3 => 6,
        -4 => 4,
        _ => 2,
    };
    let s: i64 = (1..-d).map(|a| kronecker(d, a) * a).sum();
    let num = -w * s;
    assert_eq!(num % (-2 * d), 0, "m = {m}");
    num / (-2 * d)
}

fn norm(f: &QuadraticField, x: i64, y: i64) -> i64 {
    x * x + f.omega_trace * x * y + f.omega_norm * y * y
}

/// `λO + μO = O`: the gcd of the 2x2 minors of the Z-span of `λ, λω, μ, μω` is 1.
fn unimodular(l: AlgebraicInteger, mu: AlgebraicInteger) -> bool {
    let w = l.field.omega();
    let v: Vec<(i64, i64)> = [l, l * w, mu, mu * w].iter().map(|x| (x.a, x.b)).collect();
    let mut g = 0i64;
    for i in 0..4 {
        for j in i + 1..4 {
            g = num_integer::gcd(g, v[i].0 * v[j].1 - v[i].1 * v[j].0);
        }
    }
    g == 1
}

/// `r^2 - N(z - λ/μ) = (1 - N(μz - λ))/N(μ)` at `z = (za + zb ω)/den`, scaled by `den^2`, as
/// `(numerator, N(μ))`.
fn height(l: AlgebraicInteger, mu: AlgebraicInteger, (za, zb): (i64, i64), den: i64) -> (i128, i128) {
    let f = l.field;
    let w = mu * f.int(za, zb);
    let gap = norm(&f, w.a - l.a * den, w.b - l.b * den) as i128;
    ((den as i128).pow(2) - gap, mu.norm() as i128)
}

fn higher(a: (i128, i128), b: (i128, i128)) -> bool {
    a.0 * b.1 > b.0 * a.1
}

/// Highest positive height over unimodular pairs with `N(μ) <= bound`, in integer arithmetic.
fn brute_floor(f: &QuadraticField, z: (i64, i64), den: i64, bound: i64) -> Option<(i128, i128)> {
    let d = (f.omega_trace * f.omega_trace - 4 * f.omega_norm).abs();
    let ymax = ((4 * bound) as f64 / d as f64).sqrt() as i64 + 1;
    let xmax = (bound as f64).sqrt() as i64 + ymax * f.omega_trace.abs() + 1;
    let mut best = None;
    for y in -ymax..=ymax {
        for x in -xmax..=xmax {
            let n = norm(f, x, y);
            if n < 1 || n > bound {
                continue;
            }
            let mu = f.int(x, y);
            let w = mu * f.int(z.0, z.1);
            // N(z - λ/μ) < 1/N(μ) iff N(μz - λ) < 1, so λ is next to μz
            for i in -1..=2 {
                for j in -1..=2 {
                    let l = f.int(w.a.div_euclid(den) + i, w.b.div_euclid(den) + j);
                    let h = height(l, mu, z, den);
                    if h.0 > 0 && best.is_none_or(|b| higher(h, b)) && unimodular(l, mu) {
                        best = Some(h);
                    }
                }
            }
        }
    }
    best
}

/// Squarefree `m <= bound` where the reduced-form count differs from the analytic class number.
pub fn class_number_mismatches(bound: i64) -> Vec<i64> {
    (1..=bound).filter(|&m| is_squarefree(m)).filter(|&m| class_group(&make_field(m).unwrap()).class_number as i64 != dirichlet_class_number(m)).collect()
}

/// Compares the floor with the brute-force upper envelope at `samples` random points.
pub fn check_floor(m: i64, samples: usize, seed: u64) -> Result<(), String> {
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    let den = 997;
    let f = make_field(m).map_err(|e| e.to_string())?;
    let poly = compute_polyhedron(&f).map_err(|e| e.to_string())?;
    let hemis: Vec<_> = poly
        .faces
        .iter()
        .flat_map(|face| (-2..=2).flat_map(move |a| (-2..=2).map(move |b| face.hemisphere.translate(&f.int(a, b)))))
        .collect();
    let check_bound = 2 * poly.norm_bound + 2;
    for _ in 0..samples {
        let z = (rng.gen_range(0..den), rng.gen_range(0..den));
        let floor = hemis.iter().map(|h| height(h.lambda, h.mu, z, den)).reduce(|a, b| if higher(b, a) { b } else { a }).ok_or("empty floor")?;
        if floor.0 <= 0 {
            return Err(format!("m = {m}: floor does not cover {z:?}/{den}"));
        }
        let brute = brute_floor(&f, z, den, check_bound).ok_or_else(|| format!("m = {m}: nothing covers {z:?}/{den}"))?;
        if higher(floor, brute) || higher(brute, floor) {
            return Err(format!("m = {m}, z = {z:?}/{den}: floor {floor:?}, envelope {brute:?}"));
        }
    }
    Ok(())
}

const FIELDS: [i64; 8] = [1, 2, 3, 5, 7, 15, 19, 163];

pub fn field() -> impl Strategy<Value = QuadraticField> {
    prop::sample::select(FIELDS.to_vec()).prop_map(|m| make_field(m).unwrap())
}

/// Products of elementary matrices, so always in SL2.
pub fn element(f: QuadraticField) -> impl Strategy<Value = GroupElement> {
    prop::collection::vec((any::<bool>(), -3i64..=3, -2i64..=2), 1..5).prop_map(move |steps| {
        let (one, zero) = (f.int(1, 0), f.int(0, 0));
        steps.into_iter().fold(GroupElement::identity(&f), |g, (upper, a, b)| {
            let x = f.int(a, b);
            let e = if upper { GroupElement::new(one, x, zero, one) } else { GroupElement::new(one, zero, x, one) };
            g * e
        })
    })
}

pub fn point(f: QuadraticField) -> impl Strategy<Value = UHSPoint> {
    (-20i64..20, -20i64..20, 1i64..20, 1i64..10).prop_map(move |(a, b, h, d)| {
        UHSPoint::new(f.elem(Rational::new(a.into(), 7.into()), Rational::new(b.into(), 5.into())), Rational::new(h.into(), d.into()))
    })
}

fn runner(cases: u32) -> TestRunner {
    TestRunner::new(Config { cases, failure_persistence: None, ..Config::default() })
}

/// `(gh)p = g(hp)` and `g g^-1 p = p` on random points.
pub fn action_property(cases: u32) -> Result<(), String> {
    runner(cases)
        .run(&field().prop_flat_map(|f| (element(f), element(f), point(f))), |(g, h, p)| {
            prop_assert_eq!(act(&(g * h), &p), act(&g, &act(&h, &p)));
            prop_assert_eq!(act(&(g * g.inverse()), &p), p.clone());
            prop_assert!(act(&g, &p).is_interior());
            Ok(())
        })
        .map_err(|e| e.to_string())
}

/// `H_q(G; F_ℓ) = H_q(G; Z) ⊗ F_ℓ ⊕ Tor(H_{q-1}(G; Z), F_ℓ)` for the finite stabilisers.
pub fn uct_property(cases: u32) -> Result<(), String> {
    let strategy = (prop::sample::select(StabiliserType::FINITE.to_vec()), 1usize..60, prop::sample::select(vec![2u64, 3]));
    runner(cases)
        .run(&strategy, |(t, q, ell)| {
            let hq = homology(t, Coefficients::Integers, q).unwrap();
            let hq1 = homology(t, Coefficients::Integers, q - 1).unwrap();
            let expected = hq.tensor_dim(ell) + hq1.tor_dim(ell);
            prop_assert_eq!(mod_dim(t, ell, q), expected);
            let direct = homology(t, Coefficients::Mod(ell), q).unwrap();
            prop_assert_eq!(direct.tensor_dim(ell), expected);
            Ok(())
        })
        .map_err(|e| e.to_string())
}
