mod common;

use common::*;
use gmult::dualizer;
use gmult::gframe::GFrame;
use gmult::opspace::{self, c64, from_real_rows, CMatrix, SpaceLayout};
use gmult::perturb::{self, transfer_gamma};
use gmult::symbol::Symbol;
use gmult::Error;
use proptest::prelude::*;
use rand::Rng;

fn rotated_onb2(theta: f64) -> GFrame {
    let (s, c) = theta.sin_cos();
    GFrame::new(2, vec![from_real_rows(&[&[c, -s]]), from_real_rows(&[&[s, c]])]).unwrap()
}

fn unit_weights(layout: &SpaceLayout, rng: &mut impl Rng) -> Symbol {
    let w: Vec<_> = (0..layout.len())
        .map(|_| {
            let t: f64 = rng.random::<f64>() * std::f64::consts::TAU;
            c64(t.cos(), t.sin())
        })
        .collect();
    Symbol::from_weights(layout, &w).unwrap()
}

#[test]
fn distance_examples() {
    let mut g = rng(71);
    let (n, layout) = random_shape(&mut g, false);
    let lambda = random_frame(n, &layout, 10.0, &mut g);
    assert_eq!(perturb::perturbation_distance(&lambda, &lambda).unwrap(), 0.0);

    let eps = 0.03;
    let i = g.random_range(0..lambda.len());
    let mut blocks = lambda.blocks().to_vec();
    blocks[i] = blocks[i].scale(1.0 + eps);
    let scaled = GFrame::with_layout(layout.clone(), n, blocks).unwrap();
    let mu = perturb::perturbation_distance(&lambda, &scaled).unwrap();
    assert!((mu - eps * norm(lambda.block(i))).abs() <= 1e-12);

    let other = random_frame(n, &layout, 10.0, &mut g);
    let mu = perturb::perturbation_distance(&lambda, &other).unwrap();
    let oracle = norm(&(lambda.synthesis_matrix() - other.synthesis_matrix()));
    assert!((mu - oracle).abs() <= 1e-10 * oracle);
}

#[test]
fn lower_bound_examples() {
    assert_eq!(perturb::perturbed_lower_bound(1.7, 0.0).unwrap(), 1.7);
    assert_eq!(perturb::perturbed_lower_bound(1.0, 0.5).unwrap(), 0.25);
    assert!(matches!(
        perturb::perturbed_lower_bound(1.0, 1.5),
        Err(Error::PerturbationTooLarge { .. })
    ));
    let mut g = rng(72);
    for _ in 0..20 {
        let (n, layout) = random_shape(&mut g, false);
        let lambda = random_frame(n, &layout, 10.0, &mut g);
        let (a, _) = bounds(&lambda);
        let target = g.random_range(0.0..0.95) * a.sqrt();
        let prime = perturb::random_perturbation(&lambda, target, g.random()).unwrap();
        let mu = perturb::perturbation_distance(&lambda, &prime).unwrap();
        let (ap, _) = bounds(&prime);
        assert!(ap >= perturb::perturbed_lower_bound(a, mu).unwrap() - 1e-9);
    }
}

#[test]
fn transfer_with_unperturbed_frame_is_identity() {
    let mut g = rng(73);
    let (lambda, u, gamma) = random_triple(&mut g, false);
    let r = transfer_gamma(&lambda, &u, &gamma, &lambda).unwrap();
    assert_eq!(r.gamma_prime, gamma);
    assert_eq!((r.mu, r.transfer_distance, r.multiplier_residual), (0.0, 0.0, 0.0));
}

#[test]
fn transfer_under_rotation() {
    let theta = 0.2;
    let id = Symbol::identity(&SpaceLayout::uniform(2, 1).unwrap());
    let prime = rotated_onb2(theta);
    let r = transfer_gamma(&onb2(), &id, &onb2(), &prime).unwrap();
    // With S_{Λ′} = Id the transferred frame is the rotated basis itself.
    assert!(dist(&r.gamma_prime.analysis_matrix(), &prime.analysis_matrix()) < 1e-15);
    let chord = 2.0 * (theta / 2.0).sin();
    assert!((r.mu - chord).abs() < 1e-15);
    assert!((r.lambda_const - 1.0 / (1.0 - chord)).abs() < 1e-14);
    assert!(r.multiplier_residual < 1e-15 && r.distance_ok() && r.identity_ok());
}

#[test]
fn transfer_on_random_four_dimensional_instance() {
    let mut g = rng(74);
    let layout = SpaceLayout::new(vec![2, 1, 2, 1]).unwrap();
    let lambda = random_frame(4, &layout, 10.0, &mut g);
    let gamma = random_frame(4, &layout, 10.0, &mut g);
    let u = Symbol::random_with(&layout, 10.0, &mut g);
    let (a, _) = bounds(&lambda);
    let prime = perturb::random_perturbation(&lambda, 0.1 * a.sqrt(), 5).unwrap();
    let r = transfer_gamma(&lambda, &u, &gamma, &prime).unwrap();
    let m = blockwise_multiplier(&lambda, &u, &gamma);
    let mp = blockwise_multiplier(&prime, &u, &r.gamma_prime);
    let (pa, pb) = bounds(&prime);
    assert!(dist(&m, &mp) <= 1e-8 * norm(&m) * pb / pa);
    let (_, gb) = bounds(&gamma);
    let ua = 1.0 / u.invert().unwrap().norm();
    let lambda_const = u.norm() * gb.sqrt() / (ua * (a.sqrt() - r.mu));
    assert!((r.lambda_const - lambda_const).abs() <= 1e-9 * lambda_const);
    let d = norm(&(r.gamma_prime.synthesis_matrix() - gamma.synthesis_matrix()));
    assert!(d <= lambda_const * r.mu + 1e-10);
    assert!(r.identity_ok());
}

#[test]
fn transfer_rejects_large_perturbation() {
    let mut g = rng(75);
    let (lambda, u, gamma) = random_triple(&mut g, false);
    let (a, _) = bounds(&lambda);
    let prime = perturb::random_perturbation(&lambda, 1.01 * a.sqrt(), 1).unwrap();
    assert!(matches!(
        transfer_gamma(&lambda, &u, &gamma, &prime),
        Err(Error::PerturbationTooLarge { .. })
    ));
}

#[test]
fn best_approximation_examples() {
    let mut g = rng(76);
    let (lambda, u, gamma) = random_triple(&mut g, true);
    let (a, _) = bounds(&lambda);
    let prime = perturb::random_perturbation(&lambda, 0.2 * a.sqrt(), 2).unwrap();
    let r = transfer_gamma(&lambda, &u, &gamma, &prime).unwrap();
    let rec = perturb::best_approx_check(&lambda, &u, &gamma, &prime, &r, 10, 3).unwrap();
    assert_eq!(rec.kernel_dim, 0);
    assert!(rec.min_margin.is_infinite() && rec.holds);

    let layout = SpaceLayout::uniform(3, 1).unwrap();
    let gamma = random_frame(2, &layout, 10.0, &mut g);
    let u = unit_weights(&layout, &mut g);
    let prime = perturb::random_perturbation(&merc(), 0.1 * 1.5f64.sqrt(), 4).unwrap();
    let r = transfer_gamma(&merc(), &u, &gamma, &prime).unwrap();
    let rec = perturb::best_approx_check(&merc(), &u, &gamma, &prime, &r, 200, 5).unwrap();
    assert!(rec.asserted && rec.holds && rec.kernel_dim == 1);
    assert!(rec.min_margin >= -1e-10);

    let zero = CMatrix::zeros(3, 2);
    assert_eq!(perturb::alternative_margin(&gamma, &r, &zero).unwrap(), 0.0);
}

#[test]
fn sufficient_condition_examples() {
    let mut g = rng(77);
    let (n, layout) = random_shape(&mut g, false);
    let lambda = random_frame(n, &layout, 10.0, &mut g);
    let canonical = lambda.canonical_dual().unwrap();
    let id = Symbol::identity(&layout);
    let r = perturb::sufficient_condition(&lambda, &canonical, &lambda, &id).unwrap();
    assert_eq!((r.lambda_sum, r.mu_sum), (0.0, 0.0));
    assert!(r.singular_values.iter().all(|s| (s - 1.0).abs() < 1e-12));
    assert_eq!((r.inv_norm_lo, r.inv_norm_hi), (1.0, 1.0));
    assert!(r.holds());

    let eps = 1e-3;
    let i = g.random_range(0..lambda.len());
    let e = opspace::random_gaussian(layout.size(i), n, &mut g);
    let mut blocks = lambda.blocks().to_vec();
    blocks[i] = &blocks[i] + e.scale(eps);
    let gamma = GFrame::with_layout(layout.clone(), n, blocks).unwrap();
    let r = perturb::sufficient_condition(&lambda, &canonical, &gamma, &id).unwrap();
    let want = eps * norm(&e) * norm(canonical.block(i));
    assert!((r.mu_sum - want).abs() <= 1e-12 * want.max(1e-12) * 10.0);
    assert!(r.holds());

    let u = Symbol::random_with(&layout, 10.0, &mut g);
    let dual = dualizer::random_dual(&lambda, &mut g).unwrap();
    let gamma = perturb::near_sequence(&lambda, &dual, &u, 0.5, 8).unwrap();
    let r = perturb::sufficient_condition(&lambda, &dual, &gamma, &u).unwrap();
    assert!((r.mu_sum - 0.5).abs() < 1e-12);
    let m = blockwise_multiplier(&gamma, &u, &dual);
    let inv_norm = norm(&gauss_jordan_inverse(&m).unwrap());
    assert!(inv_norm <= 2.0 + 1e-9);
    assert!((r.inv_sigma_max - inv_norm).abs() <= 1e-9 * inv_norm);
    assert!(r.holds());
}

#[test]
fn sufficient_condition_errors() {
    let mut g = rng(78);
    let (n, layout) = random_shape(&mut g, false);
    let lambda = random_frame(n, &layout, 10.0, &mut g);
    let id = Symbol::identity(&layout);
    let e = perturb::sufficient_condition(&lambda, &lambda.scaled(3.0), &lambda, &id);
    assert!(matches!(e, Err(Error::NotDual { .. })));
    let dual = lambda.canonical_dual().unwrap();
    let far = perturb::near_sequence(&lambda, &dual, &id, 1.5, 1).unwrap();
    assert!(matches!(
        perturb::sufficient_condition(&lambda, &dual, &far, &id),
        Err(Error::ConditionNotMet { .. })
    ));
}

#[test]
fn random_perturbation_examples() {
    let mut g = rng(79);
    let (n, layout) = random_shape(&mut g, false);
    let lambda = random_frame(n, &layout, 10.0, &mut g);
    assert_eq!(perturb::random_perturbation(&lambda, 0.0, 1).unwrap(), lambda);
    assert_eq!(
        perturb::random_perturbation(&lambda, 0.3, 9).unwrap(),
        perturb::random_perturbation(&lambda, 0.3, 9).unwrap()
    );
    for seed in 0..20 {
        let target = 0.05 * (seed + 1) as f64;
        let p = perturb::random_perturbation(&lambda, target, seed).unwrap();
        let mu = norm(&(lambda.synthesis_matrix() - p.synthesis_matrix()));
        assert!((mu - target).abs() <= 1e-6 * target);
    }
    assert!(perturb::random_perturbation(&lambda, -1.0, 0).is_err());
}

proptest! {
    #![proptest_config(config(96))]

    #[test]
    fn transfer_certificates(seed in any::<u64>(), frac in 0.0f64..0.9) {
        let mut g = rng(seed);
        let (lambda, u, gamma) = random_triple(&mut g, false);
        let (a, _) = bounds(&lambda);
        let prime = perturb::random_perturbation(&lambda, frac * a.sqrt(), g.random()).unwrap();
        let r = transfer_gamma(&lambda, &u, &gamma, &prime).unwrap();
        let (pa, pb) = bounds(&prime);
        let m = blockwise_multiplier(&lambda, &u, &gamma);
        let mp = blockwise_multiplier(&prime, &u, &r.gamma_prime);
        prop_assert!(dist(&m, &mp) <= 1e-8 * norm(&m) * pb / pa);
        prop_assert!(r.transfer_distance <= r.lambda_const * r.mu + 1e-10);
        // Analysis-side form of the identity, built from the inverse symbol and Λ̃′.
        let u_op = u.as_operator();
        let u_inv = gauss_jordan_inverse(&u_op).unwrap();
        let canonical_prime = prime.canonical_dual().unwrap().analysis_matrix();
        let rhs = naive_mul(&naive_mul(&naive_mul(&u_inv, &canonical_prime), &(lambda.synthesis_matrix() - prime.synthesis_matrix())), &naive_mul(&u_op, &gamma.analysis_matrix()));
        let lhs = r.gamma_prime.analysis_matrix() - gamma.analysis_matrix();
        prop_assert!(dist(&lhs, &rhs) <= 1e-9, "{}", dist(&lhs, &rhs));
        prop_assert!(pa >= (a.sqrt() - r.mu).powi(2) - 1e-9);
    }

    #[test]
    fn alternatives_preserve_multiplier_exactly_on_kernel(seed in any::<u64>()) {
        let mut g = rng(seed);
        let (lambda, u, gamma) = random_triple(&mut g, false);
        let (a, _) = bounds(&lambda);
        let prime = perturb::random_perturbation(&lambda, 0.3 * a.sqrt(), g.random()).unwrap();
        let r = transfer_gamma(&lambda, &u, &gamma, &prime).unwrap();
        let constraint = prime.synthesis_matrix() * u.as_operator();
        let m = blockwise_multiplier(&lambda, &u, &gamma);
        let n = lambda.ambient_dim();
        let k = lambda.stacked_dim();
        // Kernel displacement preserves M; the multiplier error of any
        // displacement is exactly its image under T_{Λ′}U.
        let basis = opspace::kernel_basis(&constraint, 1e-10).unwrap();
        let kernel_delta = &basis * opspace::random_gaussian(basis.ncols(), n, &mut g);
        let generic = opspace::random_gaussian(k, n, &mut g);
        for delta in [kernel_delta, generic] {
            let alt = GFrame::from_analysis(lambda.layout(), &(r.gamma_prime.analysis_matrix() + &delta)).unwrap();
            let err = dist(&blockwise_multiplier(&prime, &u, &alt), &m);
            let image = norm(&naive_mul(&constraint, &delta));
            let scale = 1e-9 * (norm(&m) + norm(&constraint) * norm(&delta)).max(1.0);
            prop_assert!((err - image).abs() <= scale);
            let in_kernel = image <= scale;
            let projected = norm(&(opspace::proj_kernel(&constraint, 1e-10).unwrap() * &delta - &delta));
            prop_assert_eq!(in_kernel, projected <= 1e-9 * norm(&delta).max(1.0));
        }
    }

    #[test]
    fn sufficient_bracket(seed in any::<u64>(), mu in 0.0f64..0.95) {
        let mut g = rng(seed);
        let (lambda, u, _) = random_triple(&mut g, false);
        let dual = dualizer::random_dual(&lambda, &mut g).unwrap();
        let gamma = perturb::near_sequence(&lambda, &dual, &u, mu, g.random()).unwrap();
        let r = perturb::sufficient_condition(&lambda, &dual, &gamma, &u).unwrap();
        let sv = singular_values(&blockwise_multiplier(&gamma, &u, &dual));
        for s in &sv {
            prop_assert!(1.0 - r.mu_sum - 1e-9 <= *s && *s <= 1.0 + r.mu_sum + 1e-9);
        }
        prop_assert!(r.holds());
    }
}
