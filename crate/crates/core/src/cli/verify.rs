//! The invariant suite run by `gmult verify`, one group per library module.
//! Each group returns pass/fail checks with the measured value and its bound.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::instance::Instance;
use super::report::Check;
use crate::dualizer;
use crate::error::Result;
use crate::gframe::{Classification, GFrame};
use crate::multiplier;
use crate::opspace::{self, CMatrix};
use crate::perturb;
use crate::symbol::Symbol;

/// Competitors per uniqueness check in the suite.
pub const UNIQUENESS_TRIALS: usize = 20;
/// Alternatives per best-approximation check in the suite.
pub const ALTERNATIVE_TRIALS: usize = 20;
/// Random vectors per pointwise identity check.
const PROBES: usize = 8;

fn scale(x: f64) -> f64 {
    x.max(1.0)
}

/// Unitary polar factor of every block.
pub fn unitary_part(u: &Symbol) -> Result<Symbol> {
    let blocks = u
        .blocks()
        .iter()
        .map(|b| opspace::svd(b).map(|d| &d.u * d.v.adjoint()))
        .collect::<Result<Vec<_>>>()?;
    Symbol::with_layout(u.layout().clone(), blocks)
}

/// `{uᵢ*uᵢ}`: positive definite whenever `U` is semi-normalized.
pub fn gram_symbol(u: &Symbol) -> Result<Symbol> {
    let blocks = u.blocks().iter().map(|b| b.adjoint() * b).collect();
    Symbol::with_layout(u.layout().clone(), blocks)
}

pub fn frame_checks(name: &str, frame: &GFrame, seed: u64) -> Result<Vec<Check>> {
    let bounds = frame.frame_bounds()?;
    let mut out = vec![];
    if !bounds.classification.is_frame() {
        return Ok(out);
    }
    let n = frame.ambient_dim();
    let dual = frame.canonical_dual()?;
    let recon = frame.synthesis_matrix() * dual.analysis_matrix() - opspace::identity(n);
    out.push(Check::at_most(
        format!("{name}.reconstruction"),
        opspace::op_norm(&recon),
        1e-9 * opspace::cond(&frame.frame_operator()),
    ));
    let db = dual.frame_bounds()?;
    let rel = ((db.lower - 1.0 / bounds.upper) * bounds.upper)
        .abs()
        .max(((db.upper - 1.0 / bounds.lower) * bounds.lower).abs());
    out.push(Check::at_most(format!("{name}.canonical_bounds"), rel, 1e-9));
    let excess = frame.excess()? as f64;
    out.push(Check::at_most(
        format!("{name}.excess"),
        (excess - (frame.stacked_dim() - n) as f64).abs(),
        0.0,
    ));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let other = dualizer::random_dual(frame, &mut rng)?;
    let d = frame.is_dual_pair(&other)?;
    out.push(Check::at_most(format!("{name}.random_dual"), d.residual, d.tolerance));
    Ok(out)
}

pub fn multiplier_checks(lambda: &GFrame, u: &Symbol, gamma: &GFrame) -> Result<Vec<Check>> {
    let mut out = vec![];
    let report = multiplier::assemble(lambda, u, gamma)?;
    let size = opspace::op_norm(&lambda.synthesis_matrix()) * u.norm() * opspace::op_norm(&gamma.analysis_matrix());
    out.push(Check::at_most(
        "multiplier.assembly",
        report.assembly_residual,
        1e-12 * scale(size),
    ));
    let nc = multiplier::necessary_conditions(lambda, u, gamma, &report)?;
    out.push(Check::holds("multiplier.necessary_conditions", nc.consistent));
    if report.invertible && u.is_semi_normalized() {
        out.push(Check::holds(
            "multiplier.excess_match",
            multiplier::excess_match(lambda, gamma)?.matches,
        ));
    }
    let lambda_riesz = lambda.frame_bounds()?.classification == Classification::GRieszBasis;
    let gamma_riesz = gamma.frame_bounds()?.classification == Classification::GRieszBasis;
    if lambda_riesz && u.is_semi_normalized() {
        out.push(Check::holds(
            "multiplier.riesz_characterization",
            report.invertible == gamma_riesz,
        ));
    }
    if let Some(b) = report.bracket {
        out.push(Check::at_least(
            "multiplier.bracket_lower",
            report.sigma_max,
            b.lower - 1e-9,
        ));
        out.push(Check::at_most(
            "multiplier.bracket_upper",
            report.sigma_max,
            b.upper + 1e-9,
        ));
        let rec = multiplier::recover_symbol(lambda, gamma, &report.matrix)?;
        let tol = 1e-8
            * opspace::cond(&lambda.synthesis_matrix())
            * opspace::cond(&gamma.synthesis_matrix())
            * scale(u.norm());
        out.push(Check::at_most(
            "multiplier.symbol_recovery",
            opspace::op_norm(&(&rec.matrix - u.as_operator())),
            tol,
        ));
        out.push(Check::at_most(
            "multiplier.symbol_off_block",
            rec.off_block_residual,
            tol,
        ));
        if report.invertible && u.is_semi_normalized() {
            let inv = multiplier::riesz_inverse(lambda, u, gamma)?;
            let k = lambda.ambient_dim();
            out.push(Check::at_most(
                "multiplier.riesz_inverse",
                opspace::op_norm(&(inv * &report.matrix - opspace::identity(k))),
                1e-8 * report.cond,
            ));
        }
    }
    Ok(out)
}

/// Checks around the `Γ` family realizing a prescribed multiplier `T`.
pub fn construct_gamma_checks(
    lambda: &GFrame,
    u: &Symbol,
    gamma: Option<&GFrame>,
    t: &CMatrix,
    phi: &CMatrix,
    seed: u64,
) -> Result<Vec<Check>> {
    let mut out = vec![];
    let n = lambda.ambient_dim();
    let a_lambda = lambda.ensure_frame()?.lower;
    let cond_scale = opspace::cond(&lambda.synthesis_matrix())
        * u.semi_normalization(opspace::rank_tol()).norm
        * u.ensure_semi_normalized()?.inverse_norm;
    let tol = 1e-9 * cond_scale * scale(opspace::op_norm(t));

    let built = multiplier::construct_gamma(lambda, u, t, phi)?;
    let m = multiplier::multiplier_matrix(lambda, u, &built)?;
    out.push(Check::at_most("construct.gamma", opspace::op_norm(&(&m - t)), tol));

    let g0 = multiplier::minimal_norm_gamma(lambda, u, t)?;
    let a0 = u.apply(&g0)?.analysis_matrix();
    let a1 = u.apply(&built)?.analysis_matrix();
    let p_phi = opspace::proj_kernel(&lambda.synthesis_matrix(), opspace::rank_tol())? * phi;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..PROBES {
        let x = opspace::random_gaussian(n, 1, &mut rng);
        let lhs = opspace::frobenius(&(&a1 * &x)).powi(2);
        let rhs = opspace::frobenius(&(&a0 * &x)).powi(2) + opspace::frobenius(&(&p_phi * &x)).powi(2);
        worst = worst.max((lhs - rhs).abs() / lhs.max(f64::MIN_POSITIVE));
    }
    out.push(Check::at_most("construct.pythagorean", worst, 1e-8));

    let t_inv_norm = opspace::op_norm(&opspace::inverse(t, "T")?);
    out.push(Check::at_least(
        "construct.minimal_norm_floor",
        opspace::op_norm(&a1).powi(2) * t_inv_norm.powi(2),
        1.0 / a_lambda - 1e-8,
    ));

    let id = opspace::identity(n);
    let gid = multiplier::minimal_norm_gamma(lambda, u, &id)?;
    let norm_sq = opspace::op_norm(&u.apply(&gid)?.analysis_matrix()).powi(2);
    out.push(Check::at_most(
        "construct.identity_minimal_norm",
        (norm_sq * a_lambda - 1.0).abs(),
        1e-8,
    ));

    if let Some(gamma) = gamma {
        let report = multiplier::assemble(lambda, u, gamma)?;
        if report.invertible {
            let extracted = multiplier::extract_phi(lambda, u, gamma, &report.matrix)?;
            let ua = u.apply(gamma)?.analysis_matrix();
            out.push(Check::at_most(
                "construct.phi_in_kernel",
                opspace::op_norm(&(lambda.synthesis_matrix() * &extracted)),
                1e-9 * scale(opspace::op_norm(&lambda.synthesis_matrix()) * opspace::op_norm(&ua)),
            ));
            let rebuilt = multiplier::construct_gamma(lambda, u, &report.matrix, &extracted)?;
            let ga = gamma.analysis_matrix();
            out.push(Check::at_most(
                "construct.reproduces_gamma",
                opspace::op_norm(&(rebuilt.analysis_matrix() - &ga)),
                1e-8 * cond_scale * scale(opspace::op_norm(&ga)),
            ));
            let m_inv = opspace::inverse(&report.matrix, "multiplier")?;
            out.push(Check::at_least(
                "construct.minimal_norm_floor_gamma",
                opspace::op_norm(&ua).powi(2) * opspace::op_norm(&m_inv).powi(2),
                1.0 / a_lambda - 1e-8,
            ));
        }
    }
    Ok(out)
}

/// Checks for the `Λ` built from `Γ` and a positive symbol.
pub fn construct_lambda_checks(
    gamma: &GFrame,
    u: &Symbol,
    psi: &CMatrix,
    t1: &CMatrix,
    t2: &CMatrix,
) -> Result<Vec<Check>> {
    let mut out = vec![];
    let p = gram_symbol(u)?;
    let built = multiplier::construct_lambda(gamma, &p, psi, t1, t2)?;
    let m = multiplier::multiplier_matrix(&built, &p, gamma)?;
    let m_gg = multiplier::multiplier_matrix(gamma, &p, gamma)?;
    let t2_inv = opspace::inverse(t2, "T2")?;
    let size = scale(opspace::op_norm(t1))
        * opspace::cond(&m_gg)
        * (1.0
            + opspace::op_norm(&t2_inv)
                * opspace::op_norm(psi)
                * p.norm()
                * opspace::op_norm(&gamma.analysis_matrix()));
    out.push(Check::at_most(
        "construct.lambda",
        opspace::op_norm(&(m - t1)),
        1e-8 * size,
    ));
    let v = p.factor_positive()?;
    let s_vg = v.apply(gamma)?.frame_operator();
    out.push(Check::at_most(
        "construct.positive_symbol",
        opspace::op_norm(&(&m_gg - &s_vg)),
        1e-9 * scale(opspace::op_norm(&s_vg)),
    ));
    Ok(out)
}

pub fn dual_checks(lambda: &GFrame, u: &Symbol, gamma: &GFrame, trials: usize, seed: u64) -> Result<Vec<Check>> {
    let mut out = vec![];
    let diag = dualizer::canonical_inverse_diagnostics(lambda, u, gamma)?;
    let r = &diag.report;
    let cond_m = opspace::cond(&r.multiplier);
    let cond_s = opspace::cond(&gamma.frame_operator());
    out.push(Check::at_most(
        "dual.duality",
        r.duality_residual,
        1e-8 * cond_m * cond_s,
    ));

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = dualizer::representation_residual(r, u, &lambda.canonical_dual()?)?;
    for _ in 0..dualizer::RANDOM_DUALS {
        let d = dualizer::random_dual(lambda, &mut rng)?;
        worst = worst.max(dualizer::representation_residual(r, u, &d)?);
    }
    out.push(Check::at_most("dual.representation", worst, 1e-8 * cond_m));

    let dagger_norm = opspace::op_norm(&r.gamma_dagger.analysis_matrix());
    out.push(Check::at_most(
        "dual.psi_in_kernel",
        r.kernel_residual,
        1e-9 * scale(opspace::op_norm(&gamma.synthesis_matrix()) * dagger_norm),
    ));
    out.push(Check::at_least(
        "dual.sandwich_lower",
        r.upper_opt_dagger,
        r.inv_lower_gamma - diag.sandwich_slack,
    ));
    out.push(Check::at_most(
        "dual.sandwich_upper",
        r.upper_opt_dagger,
        diag.sandwich_upper + diag.sandwich_slack,
    ));
    if trials > 0 {
        let rec = dualizer::verify_uniqueness(lambda, u, gamma, r, trials, seed.wrapping_add(1))?;
        out.push(Check::at_least(
            "dual.uniqueness",
            rec.min_exposure,
            dualizer::EXPOSURE_THRESHOLD,
        ));
    }
    Ok(out)
}

/// Canonical flag on a `UΓ` equivalent to `Λ` (unitary `U`, so it must be set)
/// and, when `Λ` is redundant, on a member of the family with a kernel term
/// (so it must be clear).
pub fn canonical_flag_checks(lambda: &GFrame, u: &Symbol, t: &CMatrix, phi: &CMatrix) -> Result<Vec<Check>> {
    let mut out = vec![];
    let w = unitary_part(u)?;
    let g = multiplier::minimal_norm_gamma(lambda, &w, t)?;
    let d = dualizer::gamma_dagger(lambda, &w, &g)?;
    out.push(Check::holds("dual.equivalent_is_canonical", d.canonical_flag));
    let p_phi = opspace::proj_kernel(&lambda.synthesis_matrix(), opspace::rank_tol())? * phi;
    if opspace::op_norm(&p_phi) > 1e-6 * scale(opspace::op_norm(phi)) {
        let g = multiplier::construct_gamma(lambda, &w, t, phi)?;
        let d = dualizer::gamma_dagger(lambda, &w, &g)?;
        out.push(Check::holds("dual.kernel_term_not_canonical", !d.canonical_flag));
    }
    Ok(out)
}

pub fn transfer_checks(
    lambda: &GFrame,
    u: &Symbol,
    gamma: &GFrame,
    lambda_prime: &GFrame,
    trials: usize,
    seed: u64,
) -> Result<Vec<Check>> {
    let mut out = vec![];
    let r = perturb::transfer_gamma(lambda, u, gamma, lambda_prime)?;
    out.push(Check::at_most(
        "perturb.preservation",
        r.multiplier_residual,
        r.multiplier_tolerance,
    ));
    out.push(Check::at_most(
        "perturb.distance",
        r.transfer_distance,
        r.distance_bound() + perturb::DISTANCE_SLACK,
    ));
    out.push(Check::at_most("perturb.identity", r.identity_residual, 1e-9));
    out.push(Check::at_least(
        "perturb.lower_bound",
        r.measured_lower_prime,
        r.guaranteed_lower_prime - perturb::BRACKET_SLACK,
    ));
    if trials > 0 {
        let w = unitary_part(u)?;
        let rw = perturb::transfer_gamma(lambda, &w, gamma, lambda_prime)?;
        let rec = perturb::best_approx_check(lambda, &w, gamma, lambda_prime, &rw, trials, seed)?;
        out.push(Check::at_least(
            "perturb.best_approximation",
            rec.min_margin,
            -perturb::MARGIN_SLACK,
        ));
        out.push(Check::at_most(
            "perturb.alternatives_preserve",
            rec.max_multiplier_residual,
            rw.multiplier_tolerance,
        ));
    }
    Ok(out)
}

pub fn sufficiency_checks(lambda: &GFrame, lambda_dual: &GFrame, gamma: &GFrame, u: &Symbol) -> Result<Vec<Check>> {
    let r = perturb::sufficient_condition(lambda, lambda_dual, gamma, u)?;
    let lo = 1.0 - r.mu_sum - perturb::BRACKET_SLACK;
    let hi = 1.0 + r.mu_sum + perturb::BRACKET_SLACK;
    let s_min = *r.singular_values.last().unwrap();
    Ok(vec![
        Check::at_least("sufficient.sigma_min", s_min, lo),
        Check::at_most("sufficient.sigma_max", r.singular_values[0], hi),
        Check::at_most(
            "sufficient.inverse_norm",
            r.inv_sigma_max,
            r.inv_norm_hi + perturb::BRACKET_SLACK,
        ),
        Check::at_least(
            "sufficient.inverse_floor",
            r.inv_sigma_min,
            r.inv_norm_lo - perturb::BRACKET_SLACK,
        ),
        Check::at_least(
            "sufficient.gamma_lower",
            r.measured_gamma_lower,
            r.gamma_lower - perturb::BRACKET_SLACK,
        ),
        Check::at_most(
            "sufficient.gamma_upper",
            r.measured_gamma_upper,
            r.gamma_upper + perturb::BRACKET_SLACK,
        ),
    ])
}

/// Outcome of the suite on one instance: checks plus errors by group.
#[derive(Debug, Clone, Default)]
pub struct SuiteOutcome {
    pub checks: Vec<Check>,
    pub errors: BTreeMap<String, String>,
}

impl SuiteOutcome {
    fn absorb(&mut self, group: &str, r: Result<Vec<Check>>) {
        match r {
            Ok(c) => self.checks.extend(c),
            Err(e) => {
                self.errors.insert(group.to_string(), e.to_string());
                self.checks.push(Check::holds(format!("{group}.error"), false));
            }
        }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Every group whose inputs are present in the instance.
pub fn run_suite(inst: &Instance, seed: u64) -> SuiteOutcome {
    let mut out = SuiteOutcome::default();
    for (i, (name, frame)) in inst.frames.iter().enumerate() {
        if name == "GammaNear" {
            continue;
        }
        out.absorb(name, frame_checks(name, frame, seed.wrapping_add(i as u64)));
    }
    let lambda = inst.frames.get("Lambda");
    let gamma = inst.frames.get("Gamma");
    let u = inst.symbol.as_ref();
    let op = |k: &str| inst.operators.get(k);
    if let (Some(l), Some(u), Some(g)) = (lambda, u, gamma) {
        out.absorb("multiplier", multiplier_checks(l, u, g));
        let invertible = multiplier::assemble(l, u, g).map(|r| r.invertible).unwrap_or(false);
        if invertible && u.is_semi_normalized() && l.frame_bounds().is_ok_and(|b| b.classification.is_frame()) {
            out.absorb("dual", dual_checks(l, u, g, UNIQUENESS_TRIALS, seed));
        }
    }
    if let (Some(l), Some(u), Some(t)) = (lambda, u, op("T")) {
        let zero = CMatrix::zeros(l.stacked_dim(), l.ambient_dim());
        let phi = op("Phi").unwrap_or(&zero);
        out.absorb("construct", construct_gamma_checks(l, u, gamma, t, phi, seed));
        out.absorb("canonical", canonical_flag_checks(l, u, t, phi));
    }
    if let (Some(g), Some(u), Some(psi), Some(t1), Some(t2)) = (gamma, u, op("Psi"), op("T1"), op("T2")) {
        out.absorb("construct_lambda", construct_lambda_checks(g, u, psi, t1, t2));
    }
    if let (Some(l), Some(u), Some(g), Some(lp)) = (lambda, u, gamma, inst.frames.get("LambdaPrime")) {
        out.absorb("perturb", transfer_checks(l, u, g, lp, ALTERNATIVE_TRIALS, seed));
    }
    if let (Some(l), Some(u), Some(d)) = (lambda, u, inst.frames.get("LambdaDual")) {
        if let Some(g) = inst.frames.get("GammaNear").or(gamma) {
            match perturb::sufficient_condition(l, d, g, u) {
                Err(crate::Error::ConditionNotMet { .. }) => {}
                _ => out.absorb("sufficient", sufficiency_checks(l, d, g, u)),
            }
        }
    }
    out
}
