mod common;

use common::*;
use gmult::opspace::{self, c64, from_real_rows, real_diag, CMatrix, SpaceLayout};
use gmult::symbol::Symbol;
use gmult::Error;
use proptest::prelude::*;

fn pair() -> SpaceLayout {
    SpaceLayout::new(vec![1, 1]).unwrap()
}

#[test]
fn as_operator_examples() {
    let u = Symbol::from_real_weights(&pair(), &[2.0, 3.0]).unwrap();
    assert_eq!(u.as_operator(), real_diag(&[2.0, 3.0]));
    let l = SpaceLayout::new(vec![2, 3]).unwrap();
    assert_eq!(Symbol::identity(&l).as_operator(), CMatrix::identity(5, 5));
    let u = Symbol::new(vec![
        from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]),
        from_real_rows(&[&[-1.0]]),
    ])
    .unwrap();
    let want = from_real_rows(&[&[0.0, 1.0, 0.0], &[1.0, 0.0, 0.0], &[0.0, 0.0, -1.0]]);
    assert_eq!(u.as_operator(), want);
    let l = u.layout().clone();
    for i in 0..2 {
        for j in 0..2 {
            let e = l.embed(j, &CMatrix::identity(l.size(j), l.size(j))).unwrap();
            let block = l.extract(i, &(u.as_operator() * e)).unwrap();
            if i == j {
                assert_eq!(&block, u.block(i));
            } else {
                assert_eq!(opspace::frobenius(&block), 0.0);
            }
        }
    }
}

#[test]
fn semi_normalization_examples() {
    let s = Symbol::from_real_weights(&pair(), &[2.0, 3.0])
        .unwrap()
        .semi_normalization(1e-10);
    assert!(s.semi_normalized);
    assert!((s.norm - 3.0).abs() < 1e-15 && (s.inverse_norm - 0.5).abs() < 1e-15);
    let s = Symbol::from_real_weights(&pair(), &[1.0, 0.0])
        .unwrap()
        .semi_normalization(1e-10);
    assert!(!s.semi_normalized);
    assert_eq!(s.norm, 1.0);
    assert!(s.inverse_norm.is_infinite());
}

#[test]
fn inverse_norm_matches_blockwise_inversion() {
    let mut r = rng(31);
    let l = SpaceLayout::new(vec![3, 1, 2]).unwrap();
    let u = Symbol::random_with(&l, 20.0, &mut r);
    let oracle = u
        .blocks()
        .iter()
        .map(|b| norm(&gauss_jordan_inverse(b).unwrap()))
        .fold(0.0, f64::max);
    let s = u.semi_normalization(1e-10);
    assert!((s.inverse_norm - oracle).abs() <= 1e-9 * oracle);
}

#[test]
fn invert_examples() {
    let u = Symbol::from_real_weights(&pair(), &[2.0, 3.0])
        .unwrap()
        .invert()
        .unwrap();
    assert!(dist(&u.as_operator(), &real_diag(&[0.5, 1.0 / 3.0])) < 1e-15);
    let mut r = rng(32);
    let l = SpaceLayout::new(vec![2, 3]).unwrap();
    let q = Symbol::random_unitary_with(&l, &mut r);
    assert!(dist(&q.invert().unwrap().as_operator(), &q.adjoint().as_operator()) < 1e-13);
    let u = Symbol::random_with(&l, 50.0, &mut r);
    let cond = opspace::cond(&u.as_operator());
    let prod = naive_mul(&u.invert().unwrap().as_operator(), &u.as_operator());
    assert!(id_dist(&prod) <= 1e-9 * cond);
    let bad = Symbol::from_real_weights(&pair(), &[1.0, 0.0]).unwrap();
    assert!(matches!(bad.invert(), Err(Error::NotSemiNormalized { .. })));
}

#[test]
fn factor_positive_examples() {
    let v = Symbol::from_real_weights(&pair(), &[4.0, 9.0])
        .unwrap()
        .factor_positive()
        .unwrap();
    assert!(dist(&v.as_operator(), &real_diag(&[2.0, 3.0])) < 1e-14);
    let l = SpaceLayout::new(vec![2, 2]).unwrap();
    let v = Symbol::identity(&l).factor_positive().unwrap();
    assert!(id_dist(&v.as_operator()) < 1e-14);
    let neg = Symbol::from_real_weights(&pair(), &[1.0, -1.0]).unwrap();
    assert!(matches!(
        neg.factor_positive(),
        Err(Error::Factorization { block: 1, .. })
    ));
    let skew = Symbol::new(vec![from_real_rows(&[&[1.0, 1.0], &[0.0, 1.0]])]).unwrap();
    assert!(matches!(
        skew.factor_positive(),
        Err(Error::Factorization { block: 0, .. })
    ));
}

#[test]
fn factor_positive_of_singular_gram() {
    let mut r = rng(33);
    let g = opspace::random_gaussian(1, 3, &mut r);
    let u = Symbol::new(vec![g.adjoint() * &g]).unwrap();
    let v = u.factor_positive().unwrap();
    let back = naive_mul(&naive_adjoint(v.block(0)), v.block(0));
    assert!(dist(&back, u.block(0)) <= 1e-9 * norm(u.block(0)));
}

#[test]
fn column_sup_examples() {
    assert_eq!(
        Symbol::from_real_weights(&pair(), &[2.0, 3.0]).unwrap().column_sup(),
        3.0
    );
    let mut r = rng(34);
    let l = SpaceLayout::new(vec![3, 2]).unwrap();
    let q = Symbol::random_unitary_with(&l, &mut r);
    assert!((q.column_sup() - 1.0).abs() < 1e-14);
    let u = Symbol::random_with(&l, 10.0, &mut r);
    let op = u.as_operator();
    let scan = (0..op.ncols())
        .map(|j| (0..op.nrows()).map(|i| op[(i, j)].norm_sqr()).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    assert!((u.column_sup() - scan).abs() < 1e-15 * scan.max(1.0) * 4.0);
}

#[test]
fn complex_weights() {
    let u = Symbol::from_weights(&pair(), &[c64(0.0, 2.0), c64(-1.0, 0.0)]).unwrap();
    assert_eq!(u.as_operator()[(0, 0)], c64(0.0, 2.0));
    assert!(!u.is_unitary(1e-12));
    assert!(Symbol::from_weights(&pair(), &[c64(1.0, 0.0)]).is_err());
}

fn symbol_strategy() -> impl Strategy<Value = Symbol> {
    (prop::collection::vec(1usize..=4, 1..=6), 1.0f64..100.0, any::<u64>()).prop_map(|(sizes, cap, seed)| {
        let l = SpaceLayout::new(sizes).unwrap();
        Symbol::random_with(&l, cap, &mut rng(seed))
    })
}

proptest! {
    #![proptest_config(config(128))]

    #[test]
    fn symbol_bounds_every_vector(u in symbol_strategy(), seed in any::<u64>()) {
        let s = u.semi_normalization(1e-10);
        let a = u.blocks().iter().map(|b| *singular_values(b).last().unwrap()).fold(f64::INFINITY, f64::min);
        let b = u.blocks().iter().map(|b| singular_values(b)[0]).fold(0.0, f64::max);
        prop_assert!((s.lower - a).abs() <= 1e-9 * a && (s.norm - b).abs() <= 1e-9 * b);
        let op = u.as_operator();
        let mut r = rng(seed);
        for _ in 0..200 {
            let x = random_unit_vector(op.ncols(), &mut r);
            let ux = opspace::frobenius(&(&op * x));
            prop_assert!(a - 1e-9 <= ux && ux <= b + 1e-9);
        }
    }

    #[test]
    fn column_sup_below_norm(u in symbol_strategy()) {
        prop_assert!(u.column_sup() <= u.norm() * (1.0 + 1e-12));
    }

    #[test]
    fn column_sup_equals_norm_for_weights(w in prop::collection::vec(-10.0f64..10.0, 1..=8)) {
        let l = SpaceLayout::uniform(w.len(), 1).unwrap();
        let u = Symbol::from_real_weights(&l, &w).unwrap();
        prop_assert!((u.column_sup() - u.norm()).abs() <= 1e-12 * u.norm().max(1.0));
    }

    #[test]
    fn positive_factor_squares_back(sizes in prop::collection::vec(1usize..=4, 1..=6), seed in any::<u64>()) {
        let l = SpaceLayout::new(sizes).unwrap();
        let u = Symbol::random_positive_with(&l, 50.0, &mut rng(seed));
        let v = u.factor_positive().unwrap();
        for (vi, ui) in v.blocks().iter().zip(u.blocks()) {
            prop_assert!(dist(&naive_mul(&naive_adjoint(vi), vi), ui) <= 1e-9 * norm(ui));
            prop_assert!(dist(vi, &naive_adjoint(vi)) <= 1e-12 * norm(vi));
        }
    }

    #[test]
    fn inverse_multiplies_back(u in symbol_strategy()) {
        let cond = opspace::cond(&u.as_operator());
        prop_assert!(id_dist(&(u.invert().unwrap().as_operator() * u.as_operator())) <= 1e-9 * cond);
    }
}
