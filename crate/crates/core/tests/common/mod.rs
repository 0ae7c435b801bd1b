//! Independent oracles and instance helpers shared by the integration tests.
//!
//! The oracles deliberately avoid the library's decompositions: eigenvalues
//! come from cyclic Jacobi on the real embedding of a Hermitian matrix,
//! norms from power iteration, inverses from Gauss-Jordan elimination.
#![allow(dead_code)]

use gmult::gframe::{random_gframe_with, GFrame};
use gmult::opspace::{c64, CMatrix, SpaceLayout, C64};
use gmult::symbol::Symbol;
use proptest::test_runner::Config;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Property-test configuration without on-disk failure persistence.
pub fn config(cases: u32) -> Config {
    Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Eigenvalues of a real symmetric matrix by cyclic Jacobi, ascending.
pub fn sym_jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    let scale: f64 = a.iter().flatten().map(|x| x * x).sum();
    for _ in 0..200 {
        let mut off = 0.0;
        for (i, row) in a.iter().enumerate() {
            for (j, x) in row.iter().enumerate() {
                if i != j {
                    off += x * x;
                }
            }
        }
        if off <= 1e-32 * scale || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q] == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for row in a.iter_mut() {
                    let (akp, akq) = (row[p], row[q]);
                    row[p] = c * akp - s * akq;
                    row[q] = s * akp + c * akq;
                }
                let (head, tail) = a.split_at_mut(q);
                for (xp, xq) in head[p].iter_mut().zip(tail[0].iter_mut()) {
                    let (apk, aqk) = (*xp, *xq);
                    *xp = c * apk - s * aqk;
                    *xq = s * apk + c * aqk;
                }
            }
        }
    }
    let mut d: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    d.sort_by(f64::total_cmp);
    d
}

/// Eigenvalues of a Hermitian matrix, ascending, through the real embedding
/// `[[X, −Y], [Y, X]]` whose spectrum repeats each eigenvalue twice.
pub fn herm_eigenvalues(h: &CMatrix) -> Vec<f64> {
    let n = h.nrows();
    let mut r = vec![vec![0.0; 2 * n]; 2 * n];
    for i in 0..n {
        for j in 0..n {
            let z = h[(i, j)];
            r[i][j] = z.re;
            r[i + n][j + n] = z.re;
            r[i][j + n] = -z.im;
            r[i + n][j] = z.im;
        }
    }
    sym_jacobi_eigenvalues(r).into_iter().step_by(2).collect()
}

pub fn naive_mul(a: &CMatrix, b: &CMatrix) -> CMatrix {
    assert_eq!(a.ncols(), b.nrows());
    CMatrix::from_fn(a.nrows(), b.ncols(), |i, j| {
        (0..a.ncols()).fold(C64::new(0.0, 0.0), |acc, k| acc + a[(i, k)] * b[(k, j)])
    })
}

pub fn naive_adjoint(a: &CMatrix) -> CMatrix {
    CMatrix::from_fn(a.ncols(), a.nrows(), |i, j| a[(j, i)].conj())
}

/// Singular values, descending, as square roots of the eigenvalues of `A*A`
/// (or `AA*`, whichever is smaller).
pub fn singular_values(a: &CMatrix) -> Vec<f64> {
    let g = if a.nrows() >= a.ncols() {
        naive_mul(&naive_adjoint(a), a)
    } else {
        naive_mul(a, &naive_adjoint(a))
    };
    let mut s: Vec<f64> = herm_eigenvalues(&g).into_iter().map(|x| x.max(0.0).sqrt()).collect();
    s.reverse();
    s
}

/// Spectral norm by power iteration on `A*A`.
pub fn power_norm(a: &CMatrix) -> f64 {
    let n = a.ncols();
    if n == 0 || a.nrows() == 0 {
        return 0.0;
    }
    let g = naive_mul(&naive_adjoint(a), a);
    let mut v: Vec<C64> = (0..n).map(|i| c64(1.0 + 0.37 * i as f64, 0.11 * i as f64)).collect();
    let mut estimate = 0.0;
    for _ in 0..20_000 {
        let w: Vec<C64> = (0..n)
            .map(|i| (0..n).fold(C64::new(0.0, 0.0), |acc, k| acc + g[(i, k)] * v[k]))
            .collect();
        let norm = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        v = w.into_iter().map(|z| z / norm).collect();
        let next = norm;
        if (next - estimate).abs() <= 1e-16 * next {
            estimate = next;
            break;
        }
        estimate = next;
    }
    estimate.sqrt()
}

/// Frobenius-free spectral norm through the Jacobi oracle.
pub fn norm(a: &CMatrix) -> f64 {
    singular_values(a).first().copied().unwrap_or(0.0)
}

/// Inverse by Gauss-Jordan elimination with partial pivoting.
pub fn gauss_jordan_inverse(a: &CMatrix) -> Option<CMatrix> {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    let mut m: Vec<Vec<C64>> = (0..n)
        .map(|i| {
            (0..2 * n)
                .map(|j| {
                    if j < n {
                        a[(i, j)]
                    } else if j - n == i {
                        c64(1.0, 0.0)
                    } else {
                        c64(0.0, 0.0)
                    }
                })
                .collect()
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).max_by(|&x, &y| m[x][col].norm().total_cmp(&m[y][col].norm()))?;
        if m[pivot][col].norm() == 0.0 {
            return None;
        }
        m.swap(col, pivot);
        let p = m[col][col];
        for x in m[col].iter_mut() {
            *x /= p;
        }
        for r in 0..n {
            if r != col {
                let f = m[r][col];
                let pivot_row = m[col].clone();
                for (x, y) in m[r].iter_mut().zip(pivot_row) {
                    *x -= f * y;
                }
            }
        }
    }
    Some(CMatrix::from_fn(n, n, |i, j| m[i][j + n]))
}

/// `Σ Λᵢ* uᵢ Γᵢ` by explicit block loops.
pub fn blockwise_multiplier(lambda: &GFrame, u: &Symbol, gamma: &GFrame) -> CMatrix {
    let n = lambda.ambient_dim();
    let mut acc = CMatrix::zeros(n, n);
    for i in 0..lambda.len() {
        let term = naive_mul(&naive_mul(&naive_adjoint(lambda.block(i)), u.block(i)), gamma.block(i));
        acc += term;
    }
    acc
}

/// `Σ Λᵢ* Λᵢ` by explicit block loops.
pub fn blockwise_frame_operator(f: &GFrame) -> CMatrix {
    let n = f.ambient_dim();
    let mut acc = CMatrix::zeros(n, n);
    for b in f.blocks() {
        acc += naive_mul(&naive_adjoint(b), b);
    }
    acc
}

/// Optimal bounds `(A, B)` from the Jacobi oracle.
pub fn bounds(f: &GFrame) -> (f64, f64) {
    let e = herm_eigenvalues(&blockwise_frame_operator(f));
    (e[0], e[e.len() - 1])
}

pub fn dist(a: &CMatrix, b: &CMatrix) -> f64 {
    norm(&(a - b))
}

pub fn id_dist(a: &CMatrix) -> f64 {
    dist(a, &CMatrix::identity(a.nrows(), a.ncols()))
}

pub fn onb2() -> GFrame {
    GFrame::new(
        2,
        vec![
            gmult::opspace::from_real_rows(&[&[1.0, 0.0]]),
            gmult::opspace::from_real_rows(&[&[0.0, 1.0]]),
        ],
    )
    .unwrap()
}

pub fn merc() -> GFrame {
    let h = 3f64.sqrt() / 2.0;
    GFrame::new(
        2,
        vec![
            gmult::opspace::from_real_rows(&[&[1.0, 0.0]]),
            gmult::opspace::from_real_rows(&[&[-0.5, h]]),
            gmult::opspace::from_real_rows(&[&[-0.5, -h]]),
        ],
    )
    .unwrap()
}

pub fn diag3() -> GFrame {
    GFrame::new(
        3,
        vec![
            gmult::opspace::from_real_rows(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]]),
            gmult::opspace::from_real_rows(&[&[0.0, 0.0, 1.0], &[0.0, 1.0, 0.0]]),
        ],
    )
    .unwrap()
}

/// Desk-scale shape: `n ≤ 8`, at most six blocks of size at most four, `K ≥ n`.
pub fn random_shape<R: Rng>(rng: &mut R, riesz: bool) -> (usize, SpaceLayout) {
    let n = rng.random_range(1..=8);
    if riesz {
        let mut sizes = Vec::new();
        let mut left = n;
        while left > 0 {
            let k = rng.random_range(1..=left.min(4));
            sizes.push(k);
            left -= k;
        }
        return (n, SpaceLayout::new(sizes).unwrap());
    }
    loop {
        let m = rng.random_range(1..=6);
        let sizes: Vec<usize> = (0..m).map(|_| rng.random_range(1..=4)).collect();
        if sizes.iter().sum::<usize>() >= n {
            return (n, SpaceLayout::new(sizes).unwrap());
        }
    }
}

pub fn random_frame<R: Rng>(n: usize, layout: &SpaceLayout, cap: f64, rng: &mut R) -> GFrame {
    random_gframe_with(n, layout, cap, rng).unwrap()
}

/// Lambda, Gamma and a semi-normalized symbol on one random shape.
pub fn random_triple<R: Rng>(rng: &mut R, riesz: bool) -> (GFrame, Symbol, GFrame) {
    let (n, layout) = random_shape(rng, riesz);
    let lambda = random_frame(n, &layout, 10.0, rng);
    let gamma = random_frame(n, &layout, 10.0, rng);
    let u = Symbol::random_with(&layout, 10.0, rng);
    (lambda, u, gamma)
}

pub fn random_unit_vector<R: Rng>(n: usize, rng: &mut R) -> CMatrix {
    let v = gmult::opspace::random_gaussian(n, 1, rng);
    let nv = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v / c64(nv, 0.0)
}
