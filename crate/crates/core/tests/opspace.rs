mod common;

use common::*;
use gmult::opspace::{self, c64, from_real_rows, real_diag, CMatrix, SpaceLayout};
use gmult::Error;
use proptest::prelude::*;

#[test]
fn svd_identity_and_zero() {
    let s = opspace::svd(&CMatrix::identity(3, 3)).unwrap();
    assert_eq!(s.singular_values, vec![1.0, 1.0, 1.0]);
    let z = opspace::svd(&CMatrix::zeros(2, 4)).unwrap();
    assert_eq!(z.singular_values, vec![0.0, 0.0]);
}

#[test]
fn svd_gaussian_matches_jacobi_oracle() {
    let mut r = rng(11);
    let a = opspace::random_gaussian(5, 3, &mut r);
    let s = opspace::svd(&a).unwrap();
    let oracle = singular_values(&a);
    for (x, y) in s.singular_values.iter().zip(&oracle) {
        assert!((x - y).abs() <= 1e-9 * y, "{x} vs {y}");
    }
    let resid = norm(&(s.reconstruct() - &a));
    assert!(resid <= 1e-12 * s.sigma_max() * 5.0);
}

#[test]
fn svd_rejects_non_finite() {
    let mut a = CMatrix::identity(2, 2);
    a[(0, 1)] = c64(f64::NAN, 0.0);
    assert!(matches!(opspace::svd(&a), Err(Error::InvalidInput(_))));
}

#[test]
fn herm_eig_examples() {
    let e = opspace::herm_eig(&real_diag(&[1.0, 2.0, 1.0])).unwrap();
    assert!((e.values[0] - 1.0).abs() < 1e-14 && (e.values[1] - 1.0).abs() < 1e-14);
    assert!((e.values[2] - 2.0).abs() < 1e-14);
    let e = opspace::herm_eig(&from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]])).unwrap();
    assert!((e.values[0] + 1.0).abs() < 1e-14 && (e.values[1] - 1.0).abs() < 1e-14);
}

#[test]
fn herm_eig_rejects_non_hermitian() {
    let a = from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
    assert!(matches!(opspace::herm_eig(&a), Err(Error::NotHermitian { .. })));
}

#[test]
fn frame_operator_spectrum_is_squared_synthesis_spectrum() {
    let mut r = rng(12);
    let (n, layout) = random_shape(&mut r, false);
    let f = random_frame(n, &layout, 20.0, &mut r);
    let e = opspace::herm_eig(&f.frame_operator()).unwrap();
    let mut sq: Vec<f64> = singular_values(&f.synthesis_matrix()).iter().map(|s| s * s).collect();
    sq.reverse();
    for (x, y) in e.values.iter().zip(&sq) {
        assert!((x - y).abs() <= 1e-9 * y.max(1e-300), "{x} vs {y}");
    }
}

#[test]
fn pinv_examples() {
    let id = CMatrix::identity(3, 3);
    assert!(dist(&opspace::pinv(&id, 1e-10).unwrap(), &id) < 1e-14);
    let z = opspace::pinv(&CMatrix::zeros(2, 3), 1e-10).unwrap();
    assert_eq!(z.shape(), (3, 2));
    assert_eq!(opspace::frobenius(&z), 0.0);
}

#[test]
fn pinv_of_surjective_synthesis() {
    let mut r = rng(13);
    let layout = SpaceLayout::new(vec![2, 1, 3]).unwrap();
    let f = random_frame(4, &layout, 30.0, &mut r);
    let t = f.synthesis_matrix();
    let s_inv = gauss_jordan_inverse(&blockwise_frame_operator(&f)).unwrap();
    let oracle = naive_mul(&naive_adjoint(&t), &s_inv);
    let p = opspace::pinv(&t, 1e-10).unwrap();
    assert!(dist(&p, &oracle) <= 1e-9 * norm(&oracle));
}

#[test]
fn proj_kernel_examples() {
    let a = from_real_rows(&[&[1.0, 0.0], &[0.0, 2.0], &[1.0, 1.0]]);
    assert!(opspace::frobenius(&opspace::proj_kernel(&a, 1e-10).unwrap()) < 1e-14);
    let p = opspace::proj_kernel(&CMatrix::zeros(3, 3), 1e-10).unwrap();
    assert!(id_dist(&p) < 1e-14);
    let t = merc().synthesis_matrix();
    let p = opspace::proj_kernel(&t, 1e-10).unwrap();
    assert_eq!(opspace::rank(&p, 1e-10).unwrap(), 1);
}

#[test]
fn norm_examples() {
    assert_eq!(opspace::op_norm(&CMatrix::identity(4, 4)), 1.0);
    assert!((opspace::op_norm(&real_diag(&[2.0, 3.0])) - 3.0).abs() < 1e-15);
    assert!((opspace::cond(&real_diag(&[2.0, 3.0])) - 1.5).abs() < 1e-15);
    assert!(opspace::cond(&real_diag(&[1.0, 0.0])).is_infinite());
    let mut r = rng(14);
    for _ in 0..10 {
        let a = opspace::random_gaussian(4, 6, &mut r);
        let p = power_norm(&a);
        assert!((opspace::op_norm(&a) - p).abs() <= 1e-8 * p);
    }
}

#[test]
fn embed_extract_examples() {
    let l = SpaceLayout::new(vec![1, 1]).unwrap();
    let x = l.embed(0, &from_real_rows(&[&[5.0]])).unwrap();
    assert_eq!(x, from_real_rows(&[&[5.0], &[0.0]]));
    let l = SpaceLayout::new(vec![2, 2]).unwrap();
    let v = from_real_rows(&[&[1.0], &[2.0], &[3.0], &[4.0]]);
    assert_eq!(l.extract(1, &v).unwrap(), from_real_rows(&[&[3.0], &[4.0]]));
    assert!(matches!(
        l.extract(2, &v),
        Err(Error::IndexOutOfRange { index: 2, count: 2 })
    ));
}

#[test]
fn layout_offsets() {
    let l = SpaceLayout::new(vec![2, 1, 3]).unwrap();
    assert_eq!(l.offsets(), &[0, 2, 3, 6]);
    assert_eq!(l.total(), 6);
    assert!(SpaceLayout::new(vec![]).is_err());
    assert!(SpaceLayout::new(vec![1, 0]).is_err());
}

fn matrix_strategy(max: usize) -> impl Strategy<Value = CMatrix> {
    (1..=max, 1..=max, any::<u64>()).prop_map(|(r, c, seed)| {
        let mut g = rng(seed);
        let a = opspace::random_gaussian(r, c, &mut g);
        // Rank-deficient half the time.
        if seed % 2 == 0 && c > 1 {
            let b = opspace::random_gaussian(c, 1, &mut g);
            let w = opspace::random_gaussian(1, c, &mut g);
            return &a * &b * &w;
        }
        a
    })
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn adjoint_is_an_involution(a in matrix_strategy(6)) {
        prop_assert_eq!(a.adjoint().adjoint(), a);
    }

    #[test]
    fn penrose_identities(a in matrix_strategy(8)) {
        let p = opspace::pinv(&a, 1e-10).unwrap();
        let na = opspace::op_norm(&a).max(1e-300);
        let np = opspace::op_norm(&p).max(1e-300);
        prop_assert!(opspace::op_norm(&(&a * &p * &a - &a)) <= 1e-9 * na);
        prop_assert!(opspace::op_norm(&(&p * &a * &p - &p)) <= 1e-9 * np);
        let ap = &a * &p;
        let pa = &p * &a;
        prop_assert!(opspace::op_norm(&(&ap - ap.adjoint())) <= 1e-9);
        prop_assert!(opspace::op_norm(&(&pa - pa.adjoint())) <= 1e-9);
    }

    #[test]
    fn kernel_and_coimage_projectors_split_identity(a in matrix_strategy(8)) {
        let k = opspace::proj_kernel(&a, 1e-10).unwrap();
        let r = opspace::proj_range_adjoint(&a, 1e-10).unwrap();
        prop_assert!(id_dist(&(&k + &r)) <= 1e-9);
        prop_assert!(opspace::op_norm(&(&k * &k - &k)) <= 1e-9);
        prop_assert!(opspace::op_norm(&(&k - k.adjoint())) <= 1e-9);
        prop_assert!(opspace::op_norm(&(&a * &k)) <= 1e-9 * opspace::op_norm(&a).max(1.0));
        let rank_a = opspace::rank(&a, 1e-10).unwrap();
        let ones = opspace::singular_values(&k).unwrap().iter().filter(|&&x| x > 0.5).count();
        prop_assert_eq!(ones, a.ncols() - rank_a);
    }

    #[test]
    fn gram_eigenvalues_are_squared_singular_values(rows in 1usize..=32, cols in 1usize..=32, seed in any::<u64>()) {
        let a = opspace::random_gaussian(rows, cols, &mut rng(seed));
        let e = opspace::herm_eig(&(a.adjoint() * &a)).unwrap();
        let s = opspace::singular_values(&a).unwrap();
        let top = s[0] * s[0];
        // Eigenvalues of A*A beyond min(rows, cols) are zero.
        for (j, &lam) in e.values.iter().rev().enumerate() {
            let want = s.get(j).map_or(0.0, |x| x * x);
            prop_assert!((lam - want).abs() <= 1e-9 * top.max(1.0), "{} vs {}", lam, want);
        }
    }

    #[test]
    fn herm_eig_vectors_are_orthonormal(n in 1usize..=10, seed in any::<u64>()) {
        let g = opspace::random_gaussian(n, n, &mut rng(seed));
        let h = &g + g.adjoint();
        let e = opspace::herm_eig(&h).unwrap();
        prop_assert!(id_dist(&(e.vectors.adjoint() * &e.vectors)) <= 1e-12 * n as f64 * 10.0);
        let lhs = &h * &e.vectors;
        let rhs = &e.vectors * real_diag(&e.values);
        prop_assert!(opspace::op_norm(&(lhs - rhs)) <= 1e-12 * opspace::op_norm(&h) * n as f64 * 10.0);
        for w in e.values.windows(2) {
            prop_assert!(w[0] <= w[1]);
        }
    }

    #[test]
    fn blocks_partition_identity(sizes in prop::collection::vec(1usize..=4, 1..=6), seed in any::<u64>()) {
        let l = SpaceLayout::new(sizes).unwrap();
        let x = opspace::random_gaussian(l.total(), 2, &mut rng(seed));
        let mut sum = CMatrix::zeros(l.total(), 2);
        for i in 0..l.len() {
            let xi = l.extract(i, &x).unwrap();
            prop_assert_eq!(&l.extract(i, &l.embed(i, &xi).unwrap()).unwrap(), &xi);
            for j in 0..l.len() {
                if j != i {
                    prop_assert_eq!(opspace::frobenius(&l.extract(j, &l.embed(i, &xi).unwrap()).unwrap()), 0.0);
                }
            }
            sum += l.embed(i, &xi).unwrap();
        }
        prop_assert_eq!(sum, x);
    }
}
