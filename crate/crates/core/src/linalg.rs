//! Exact linear algebra over Z and F_p: ranks, Smith normal form, chain homology.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Row-major integer matrix; a map `Z^cols -> Z^rows`.
pub type Matrix = Vec<Vec<i64>>;

pub fn zeros(rows: usize, cols: usize) -> Matrix {
    vec![vec![0; cols]; rows]
}

pub fn cols(m: &Matrix) -> usize {
    m.first().map_or(0, |r| r.len())
}

/// `a * b`.
pub fn mul(a: &Matrix, b: &Matrix) -> Matrix {
    let n = cols(b);
    a.iter()
        .map(|row| (0..n).map(|j| row.iter().zip(b.iter()).map(|(x, r)| x * r[j]).sum()).collect())
        .collect()
}

/// Rank over F_p by Gaussian elimination.
pub fn rank_mod(m: &Matrix, p: i64) -> usize {
    let mut a: Vec<Vec<i64>> = m.iter().map(|r| r.iter().map(|x| x.rem_euclid(p)).collect()).collect();
    let (nr, nc) = (a.len(), cols(m));
    let mut rank = 0;
    for c in 0..nc {
        let Some(pr) = (rank..nr).find(|&r| a[r][c] != 0) else { continue };
        a.swap(rank, pr);
        let inv = inverse_mod(a[rank][c], p);
        for x in a[rank].iter_mut() {
            *x = *x * inv % p;
        }
        for r in 0..nr {
            if r != rank && a[r][c] != 0 {
                let f = a[r][c];
                for j in c..nc {
                    a[r][j] = (a[r][j] - f * a[rank][j]).rem_euclid(p);
                }
            }
        }
        rank += 1;
        if rank == nr {
            break;
        }
    }
    rank
}

fn inverse_mod(x: i64, p: i64) -> i64 {
    let e = x.extended_gcd(&p);
    e.x.rem_euclid(p)
}

/// Non-zero invariant factors other than 1, in divisibility order.
pub fn smith_invariants(m: &Matrix) -> Vec<BigInt> {
    invariant_factors(smith_diagonal(m))
}

/// Absolute values of the non-zero entries of some diagonal form of `m`.
pub fn smith_diagonal(m: &Matrix) -> Vec<BigInt> {
    let mut a: Vec<Vec<BigInt>> = m.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect();
    let (nr, nc) = (a.len(), cols(m));
    let mut diag = Vec::new();
    let mut t = 0;
    while t < nr.min(nc) {
        // smallest non-zero entry as pivot
        let mut best: Option<(usize, usize)> = None;
        for (i, row) in a.iter().enumerate().skip(t) {
            for (j, x) in row.iter().enumerate().skip(t) {
                if !x.is_zero() && best.is_none_or(|(bi, bj)| x.abs() < a[bi][bj].abs()) {
                    best = Some((i, j));
                }
            }
        }
        let Some((pi, pj)) = best else { break };
        a.swap(t, pi);
        for row in a.iter_mut() {
            row.swap(t, pj);
        }
        let mut clean = true;
        for i in t + 1..nr {
            if a[i][t].is_zero() {
                continue;
            }
            let q = a[i][t].div_floor(&a[t][t]);
            for j in t..nc {
                let v = &a[t][j] * &q;
                a[i][j] -= v;
            }
            clean &= a[i][t].is_zero();
        }
        for j in t + 1..nc {
            if a[t][j].is_zero() {
                continue;
            }
            let q = a[t][j].div_floor(&a[t][t]);
            for i in t..nr {
                let v = &a[i][t] * &q;
                a[i][j] -= v;
            }
            clean &= a[t][j].is_zero();
        }
        if clean {
            diag.push(a[t][t].abs());
            t += 1;
        }
    }
    diag
}

/// Rewrites a list of cyclic orders as invariant factors, each dividing the next. Units
/// are dropped; zero stands for an infinite cyclic factor and is kept at the end.
pub fn invariant_factors(mut d: Vec<BigInt>) -> Vec<BigInt> {
    d.retain(|x| !x.is_one());
    let zeros = d.iter().filter(|x| x.is_zero()).count();
    d.retain(|x| !x.is_zero());
    loop {
        d.sort();
        let mut changed = false;
        for i in 0..d.len() {
            for j in i + 1..d.len() {
                if !(&d[j] % &d[i]).is_zero() {
                    let g = d[i].gcd(&d[j]);
                    let l = d[i].lcm(&d[j]);
                    d[i] = g;
                    d[j] = l;
                    changed = true;
                }
            }
        }
        d.retain(|x| !x.is_one());
        if !changed {
            break;
        }
    }
    d.extend(std::iter::repeat_n(BigInt::zero(), zeros));
    d
}

/// Rank over Q.
pub fn rank(m: &Matrix) -> usize {
    smith_diagonal(m).len()
}

/// Homology `ker(d_in) / im(d_out)` at a chain group of rank `n`, where `d_in` leaves it and
/// `d_out` arrives in it. Returns the free rank and the torsion invariant factors.
pub fn chain_homology(d_in: &Matrix, d_out: &Matrix, n: usize) -> (usize, Vec<u64>) {
    let r_in = if n == 0 { 0 } else { rank(d_in) };
    let diag = if n == 0 { Vec::new() } else { smith_diagonal(d_out) };
    let torsion: Vec<u64> = invariant_factors(diag.clone()).iter().map(|x| x.to_u64().expect("small torsion")).collect();
    (n - r_in - diag.len(), torsion)
}

/// Dimension of `ker(d_in) / im(d_out)` over F_p.
pub fn chain_homology_mod(d_in: &Matrix, d_out: &Matrix, n: usize, p: i64) -> usize {
    if n == 0 {
        return 0;
    }
    n - rank_mod(d_in, p) - rank_mod(d_out, p)
}

/// An integer solution of `a x = b`, if one exists.
pub fn solve_integer(a: &Matrix, b: &[i64]) -> Option<Vec<i64>> {
    let (nr, nc) = (a.len(), cols(a));
    let mut m: Vec<Vec<i128>> = a.iter().map(|r| r.iter().map(|&x| x as i128).collect()).collect();
    let mut rhs: Vec<i128> = b.iter().map(|&x| x as i128).collect();
    // column operations are recorded in v, so that a v is in diagonal form
    let mut v: Vec<Vec<i128>> = (0..nc).map(|i| (0..nc).map(|j| i128::from(i == j)).collect()).collect();
    let mut t = 0;
    while t < nr.min(nc) {
        let mut best: Option<(usize, usize)> = None;
        for (i, row) in m.iter().enumerate().skip(t) {
            for (j, x) in row.iter().enumerate().skip(t) {
                if *x != 0 && best.is_none_or(|(bi, bj)| x.abs() < m[bi][bj].abs()) {
                    best = Some((i, j));
                }
            }
        }
        let Some((pi, pj)) = best else { break };
        m.swap(t, pi);
        rhs.swap(t, pi);
        for row in m.iter_mut().chain(v.iter_mut()) {
            row.swap(t, pj);
        }
        let mut clean = true;
        for i in t + 1..nr {
            let q = m[i][t].div_euclid(m[t][t]);
            if q != 0 {
                for j in t..nc {
                    m[i][j] -= q * m[t][j];
                }
                rhs[i] -= q * rhs[t];
            }
            clean &= m[i][t] == 0;
        }
        for j in t + 1..nc {
            let q = m[t][j].div_euclid(m[t][t]);
            if q != 0 {
                for row in m.iter_mut().chain(v.iter_mut()) {
                    row[j] -= q * row[t];
                }
            }
            clean &= m[t][j] == 0;
        }
        if clean {
            t += 1;
        }
    }
    let mut y = vec![0i128; nc];
    for i in 0..nr {
        if i < t {
            if rhs[i] % m[i][i] != 0 {
                return None;
            }
            y[i] = rhs[i] / m[i][i];
        } else if rhs[i] != 0 {
            return None;
        }
    }
    (0..nc).map(|i| i64::try_from((0..nc).map(|j| v[i][j] * y[j]).sum::<i128>()).ok()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_over_prime_fields() {
        let m = vec![vec![1, 1], vec![1, -1]];
        assert_eq!(rank_mod(&m, 2), 1);
        assert_eq!(rank_mod(&m, 3), 2);
        assert_eq!(rank(&m), 2);
    }

    #[test]
    fn smith_form_of_small_matrices() {
        let m = vec![vec![2, 0], vec![0, 3]];
        assert_eq!(smith_invariants(&m), vec![BigInt::from(6)]);
        let m = vec![vec![2, 4, 4], vec![-6, 6, 12], vec![10, -4, -16]];
        let d: Vec<i64> = smith_invariants(&m).iter().map(|x| x.to_i64().unwrap()).collect();
        assert_eq!(d, vec![2, 6, 12]);
    }

    #[test]
    fn circle_homology() {
        // two vertices, two edges forming a circle
        let d1 = vec![vec![-1, 1], vec![1, -1]];
        let (free0, tors0) = chain_homology(&zeros(0, 2), &d1, 2);
        assert_eq!((free0, tors0), (1, vec![]));
        let (free1, _) = chain_homology(&d1, &zeros(2, 0), 2);
        assert_eq!(free1, 1);
    }

    #[test]
    fn integer_solutions() {
        let a = vec![vec![2, 4], vec![6, 8]];
        let x = solve_integer(&a, &[2, 2]).unwrap();
        assert_eq!(mul(&a, &x.iter().map(|&v| vec![v]).collect()), vec![vec![2], vec![2]]);
        assert!(solve_integer(&vec![vec![2, 4]], &[1]).is_none());
        assert!(solve_integer(&vec![vec![1, 1], vec![1, 1]], &[1, 2]).is_none());
    }

    #[test]
    fn projective_plane_torsion() {
        // one vertex, one edge, one 2-cell attached by degree 2
        let d1 = vec![vec![0]];
        let d2 = vec![vec![2]];
        assert_eq!(chain_homology(&d1, &d2, 1), (0, vec![2]));
        assert_eq!(chain_homology_mod(&d1, &d2, 1, 2), 1);
    }
}
