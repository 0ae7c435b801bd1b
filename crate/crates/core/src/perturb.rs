//! Perturbations of `Λ`: the multiplier-preserving transfer `Γ ↦ Γ′`, its
//! best-approximation property, and the sufficient condition for invertibility
//! of `M_{U,Γ,Λᵈ}` when `Γ` is close to `Λ`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gframe::GFrame;
use crate::multiplier;
use crate::opspace::{self, CMatrix};
use crate::symbol::Symbol;

/// Slack on the transfer-distance bound.
pub const DISTANCE_SLACK: f64 = 1e-10;
/// Slack on spectral brackets.
pub const BRACKET_SLACK: f64 = 1e-9;
/// Slack on the best-approximation margin.
pub const MARGIN_SLACK: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbReport {
    /// `‖T_Λ − T_{Λ′}‖`.
    pub mu: f64,
    /// `√A_Λ`.
    pub sqrt_lower: f64,
    /// `a = 1/‖U⁻¹‖`.
    pub a: f64,
    /// `b = ‖U‖`.
    pub b: f64,
    /// `B_Γ`.
    pub gamma_upper: f64,
    /// `b√B_Γ / (a(√A_Λ − μ))`.
    pub lambda_const: f64,
    pub gamma_prime: GFrame,
    /// `‖M_{U,Λ′,Γ′} − M_{U,Λ,Γ}‖`.
    pub multiplier_residual: f64,
    /// `10⁻⁸ σ_max(M) cond(S_{Λ′})`.
    pub multiplier_tolerance: f64,
    /// `‖T_{Γ′} − T_Γ‖`.
    pub transfer_distance: f64,
    /// `‖(T_{Γ′} − T_Γ) − T_Γ U*(T_Λ* − T_{Λ′}*) T_{Λ̃′} (U*)⁻¹‖`.
    pub identity_residual: f64,
    /// `(√A_Λ − μ)²`.
    pub guaranteed_lower_prime: f64,
    /// `λ_min(S_{Λ′})`.
    pub measured_lower_prime: f64,
}

impl PerturbReport {
    /// `λμ`.
    pub fn distance_bound(&self) -> f64 {
        self.lambda_const * self.mu
    }

    pub fn multiplier_preserved(&self) -> bool {
        self.multiplier_residual <= self.multiplier_tolerance
    }

    pub fn distance_ok(&self) -> bool {
        self.transfer_distance <= self.distance_bound() + DISTANCE_SLACK
    }

    pub fn identity_ok(&self) -> bool {
        self.identity_residual <= 1e-9
    }

    pub fn lower_ok(&self) -> bool {
        self.measured_lower_prime >= self.guaranteed_lower_prime - BRACKET_SLACK
    }
}

/// Outcome of sampling alternatives `Γ″` that preserve the multiplier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BestApproxRecord {
    pub trials: usize,
    /// `dim ker(T_{Λ′} U)`; zero means `Γ′` is the only choice.
    pub kernel_dim: usize,
    /// `min(‖T_{Γ″} − T_Γ‖ − ‖T_{Γ′} − T_Γ‖)`; `∞` when no alternative exists.
    pub min_margin: f64,
    /// Largest `‖M_{U,Λ′,Γ″} − M_{U,Λ,Γ}‖` over the samples.
    pub max_multiplier_residual: f64,
    /// Minimality is only claimed for unitary blocks.
    pub asserted: bool,
    /// `min_margin ≥ −10⁻¹⁰`, or vacuous when not asserted.
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SufficiencyReport {
    /// `Σ‖Λᵢ − Γᵢ‖²`.
    pub lambda_sum: f64,
    /// `Σ‖Λᵢ − uᵢ*Γᵢ‖ ‖Λᵢᵈ‖`.
    pub mu_sum: f64,
    pub invertible: bool,
    /// `1/(1+μ)`.
    pub inv_norm_lo: f64,
    /// `1/(1−μ)`.
    pub inv_norm_hi: f64,
    /// `(1−μ)² / (‖U‖² B_{Λᵈ})`.
    pub gamma_lower: f64,
    /// `(√B_Λ + √λ)²`.
    pub gamma_upper: f64,
    /// Singular values of `M = M_{U,Γ,Λᵈ}`, descending.
    pub singular_values: Vec<f64>,
    /// `σ_max(M⁻¹) = 1/σ_min(M)`.
    pub inv_sigma_max: f64,
    /// `σ_min(M⁻¹) = 1/σ_max(M)`.
    pub inv_sigma_min: f64,
    pub measured_gamma_lower: f64,
    pub measured_gamma_upper: f64,
}

impl SufficiencyReport {
    pub fn spectrum_ok(&self) -> bool {
        let lo = 1.0 - self.mu_sum - BRACKET_SLACK;
        let hi = 1.0 + self.mu_sum + BRACKET_SLACK;
        self.singular_values.iter().all(|&s| lo <= s && s <= hi)
    }

    pub fn inverse_ok(&self) -> bool {
        self.inv_sigma_max <= self.inv_norm_hi + BRACKET_SLACK && self.inv_sigma_min >= self.inv_norm_lo - BRACKET_SLACK
    }

    pub fn gamma_bounds_ok(&self) -> bool {
        self.measured_gamma_lower >= self.gamma_lower - BRACKET_SLACK
            && self.measured_gamma_upper <= self.gamma_upper + BRACKET_SLACK
    }

    pub fn holds(&self) -> bool {
        self.spectrum_ok() && self.inverse_ok() && self.gamma_bounds_ok()
    }
}

/// `‖T_Λ − T_{Λ′}‖`, the smallest `μ` for which `Λ′` is a `μ`-perturbation of `Λ`.
pub fn perturbation_distance(lambda: &GFrame, lambda_prime: &GFrame) -> Result<f64> {
    lambda.ensure_same_shape(lambda_prime, "perturbation")?;
    Ok(opspace::op_norm(
        &(lambda.analysis_matrix() - lambda_prime.analysis_matrix()),
    ))
}

/// `(√A_Λ − μ)²`, a lower frame bound for every `μ`-perturbation of `Λ`.
pub fn perturbed_lower_bound(lower: f64, mu: f64) -> Result<f64> {
    if lower.is_nan() || mu.is_nan() || lower < 0.0 || mu < 0.0 {
        return Err(Error::InvalidInput(format!(
            "bound and distance must be non-negative, got A = {lower}, μ = {mu}"
        )));
    }
    let sqrt_lower = lower.sqrt();
    if mu >= sqrt_lower {
        return Err(Error::PerturbationTooLarge { mu, sqrt_lower });
    }
    if mu == 0.0 {
        return Ok(lower);
    }
    Ok((sqrt_lower - mu).powi(2))
}

/// `Γ′` with `T_{Γ′}* = T_Γ* + U⁻¹ T_{Λ′}* S_{Λ′}⁻¹ (T_Λ − T_{Λ′}) U T_Γ*`,
/// which keeps `M_{U,Λ′,Γ′} = M_{U,Λ,Γ}`.
pub fn transfer_gamma(lambda: &GFrame, u: &Symbol, gamma: &GFrame, lambda_prime: &GFrame) -> Result<PerturbReport> {
    lambda.ensure_same_shape(gamma, "transfer frames")?;
    let sn = u.ensure_semi_normalized()?;
    let lambda_bounds = lambda.ensure_frame()?;
    let gamma_bounds = gamma.ensure_frame()?;
    let mu = perturbation_distance(lambda, lambda_prime)?;
    let guaranteed_lower_prime = perturbed_lower_bound(lambda_bounds.lower, mu)?;
    let sqrt_lower = lambda_bounds.lower.sqrt();

    let u_op = u.as_operator();
    let u_inv = u.invert()?;
    let u_inv_op = u_inv.as_operator();
    let a = 1.0 / u_inv.norm();
    let b = sn.norm;
    let lambda_const = b * gamma_bounds.upper.sqrt() / (a * (sqrt_lower - mu));

    let s_prime_inv = lambda_prime.frame_operator_inverse()?;
    let t_lambda = lambda.synthesis_matrix();
    let t_prime = lambda_prime.synthesis_matrix();
    let a_gamma = gamma.analysis_matrix();
    let correction =
        &u_inv_op * lambda_prime.analysis_matrix() * &s_prime_inv * (&t_lambda - &t_prime) * &u_op * &a_gamma;
    let gamma_prime = GFrame::from_analysis(gamma.layout(), &(&a_gamma + &correction))?;

    let m = multiplier::multiplier_matrix(lambda, u, gamma)?;
    let m_prime = multiplier::multiplier_matrix(lambda_prime, u, &gamma_prime)?;
    let multiplier_residual = opspace::op_norm(&(&m_prime - &m));
    let cond_s_prime = opspace::cond(&lambda_prime.frame_operator());
    let multiplier_tolerance = 1e-8 * opspace::op_norm(&m).max(f64::MIN_POSITIVE) * cond_s_prime;

    let synthesis_diff = gamma_prime.synthesis_matrix() - gamma.synthesis_matrix();
    let transfer_distance = opspace::op_norm(&synthesis_diff);
    // Synthesis-side form, assembled independently from the canonical dual of Λ′.
    let canonical_prime = lambda_prime.canonical_dual()?;
    let rhs = gamma.synthesis_matrix()
        * u_op.adjoint()
        * (t_lambda.adjoint() - t_prime.adjoint())
        * canonical_prime.synthesis_matrix()
        * u_inv_op.adjoint();
    let identity_residual = opspace::op_norm(&(&synthesis_diff - rhs));
    let measured_lower_prime = lambda_prime.frame_bounds()?.lower;

    Ok(PerturbReport {
        mu,
        sqrt_lower,
        a,
        b,
        gamma_upper: gamma_bounds.upper,
        lambda_const,
        gamma_prime,
        multiplier_residual,
        multiplier_tolerance,
        transfer_distance,
        identity_residual,
        guaranteed_lower_prime,
        measured_lower_prime,
    })
}

/// `‖T_{Γ′+Δ} − T_Γ‖ − ‖T_{Γ′} − T_Γ‖` for an analysis-side displacement `Δ`.
pub fn alternative_margin(gamma: &GFrame, report: &PerturbReport, delta: &CMatrix) -> Result<f64> {
    let base = report.gamma_prime.analysis_matrix() - gamma.analysis_matrix();
    if delta.shape() != base.shape() {
        return Err(Error::ShapeMismatch(format!(
            "displacement must be {}×{}, got {}×{}",
            base.nrows(),
            base.ncols(),
            delta.nrows(),
            delta.ncols()
        )));
    }
    Ok(opspace::op_norm(&(&base + delta)) - opspace::op_norm(&base))
}

/// Sample `Γ″ = Γ′ + Δ` with the columns of `Δ` in `ker(T_{Λ′} U)` (exactly the
/// multiplier-preserving alternatives) and record how close they come to `Γ`.
pub fn best_approx_check(
    lambda: &GFrame,
    u: &Symbol,
    gamma: &GFrame,
    lambda_prime: &GFrame,
    report: &PerturbReport,
    trials: usize,
    seed: u64,
) -> Result<BestApproxRecord> {
    let asserted = u.is_unitary(1e-12);
    let constraint = lambda_prime.synthesis_matrix() * u.as_operator();
    let basis = opspace::kernel_basis(&constraint, opspace::rank_tol())?;
    let kernel_dim = basis.ncols();
    if kernel_dim == 0 {
        return Ok(BestApproxRecord {
            trials,
            kernel_dim,
            min_margin: f64::INFINITY,
            max_multiplier_residual: 0.0,
            asserted,
            holds: true,
        });
    }
    let m = multiplier::multiplier_matrix(lambda, u, gamma)?;
    let scale = report
        .transfer_distance
        .max(opspace::op_norm(&gamma.analysis_matrix()) * 1e-3);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_margin = f64::INFINITY;
    let mut max_multiplier_residual = 0.0f64;
    for _ in 0..trials {
        let coeffs = opspace::random_gaussian(kernel_dim, gamma.ambient_dim(), &mut rng);
        let raw = &basis * coeffs;
        let size = scale * 10f64.powf(-3.0 + 4.0 * rng.random::<f64>());
        let delta = raw.scale(size / opspace::op_norm(&raw));
        min_margin = min_margin.min(alternative_margin(gamma, report, &delta)?);
        let alt = GFrame::from_analysis(gamma.layout(), &(report.gamma_prime.analysis_matrix() + &delta))?;
        let m_alt = multiplier::multiplier_matrix(lambda_prime, u, &alt)?;
        max_multiplier_residual = max_multiplier_residual.max(opspace::op_norm(&(m_alt - &m)));
    }
    let holds = !asserted || min_margin >= -MARGIN_SLACK;
    Ok(BestApproxRecord {
        trials,
        kernel_dim,
        min_margin,
        max_multiplier_residual,
        asserted,
        holds,
    })
}

/// Closeness of `Γ` to `Λ` forcing `M_{U,Γ,Λᵈ}` to be invertible, with the
/// measured spectrum checked against the resulting brackets.
pub fn sufficient_condition(
    lambda: &GFrame,
    lambda_dual: &GFrame,
    gamma: &GFrame,
    u: &Symbol,
) -> Result<SufficiencyReport> {
    lambda.ensure_same_shape(gamma, "sufficient-condition frames")?;
    let lambda_bounds = lambda.ensure_frame()?;
    let dual = lambda.is_dual_pair(lambda_dual)?;
    if !dual.is_dual {
        return Err(Error::NotDual {
            residual: dual.residual,
        });
    }
    let u_adj = u.apply_adjoint(gamma)?;
    let mut lambda_sum = 0.0;
    let mut mu_sum = 0.0;
    for i in 0..lambda.len() {
        lambda_sum += opspace::op_norm(&(lambda.block(i) - gamma.block(i))).powi(2);
        mu_sum += opspace::op_norm(&(lambda.block(i) - u_adj.block(i))) * opspace::op_norm(lambda_dual.block(i));
    }
    if mu_sum >= 1.0 {
        return Err(Error::ConditionNotMet { mu: mu_sum });
    }
    let m = multiplier::multiplier_matrix(gamma, u, lambda_dual)?;
    let singular_values = opspace::singular_values(&m)?;
    let s_max = singular_values[0];
    let s_min = *singular_values.last().unwrap();
    let dual_upper = lambda_dual.frame_bounds()?.upper;
    let gamma_bounds = gamma.frame_bounds()?;
    Ok(SufficiencyReport {
        lambda_sum,
        mu_sum,
        invertible: true,
        inv_norm_lo: 1.0 / (1.0 + mu_sum),
        inv_norm_hi: 1.0 / (1.0 - mu_sum),
        gamma_lower: (1.0 - mu_sum).powi(2) / (u.norm().powi(2) * dual_upper),
        gamma_upper: (lambda_bounds.upper.sqrt() + lambda_sum.sqrt()).powi(2),
        singular_values,
        inv_sigma_max: 1.0 / s_min,
        inv_sigma_min: 1.0 / s_max,
        measured_gamma_lower: gamma_bounds.lower,
        measured_gamma_upper: gamma_bounds.upper,
    })
}

/// `Λ′` with `T_{Λ′}* = T_Λ* + E`, `E` a random direction scaled to `‖E‖ = target_mu`.
pub fn random_perturbation(lambda: &GFrame, target_mu: f64, seed: u64) -> Result<GFrame> {
    if !target_mu.is_finite() || target_mu < 0.0 {
        return Err(Error::InvalidInput(format!(
            "target distance must be finite and non-negative, got {target_mu}"
        )));
    }
    if target_mu == 0.0 {
        return Ok(lambda.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let e = opspace::random_gaussian(lambda.stacked_dim(), lambda.ambient_dim(), &mut rng);
    let e = e.scale(target_mu / opspace::op_norm(&e));
    GFrame::from_analysis(lambda.layout(), &(lambda.analysis_matrix() + e))
}

/// `Γ` with `Λᵢ − uᵢ*Γᵢ = −εEᵢ` for random blocks `Eᵢ`, `ε` chosen so that
/// `Σ‖Λᵢ − uᵢ*Γᵢ‖ ‖Λᵢᵈ‖ = target_mu`.
pub fn near_sequence(lambda: &GFrame, lambda_dual: &GFrame, u: &Symbol, target_mu: f64, seed: u64) -> Result<GFrame> {
    if !target_mu.is_finite() || target_mu < 0.0 {
        return Err(Error::InvalidInput(format!(
            "target μ must be finite and non-negative, got {target_mu}"
        )));
    }
    lambda.ensure_same_shape(lambda_dual, "near-sequence frames")?;
    let inv_adj = u.invert()?.adjoint();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let e: Vec<CMatrix> = lambda
        .blocks()
        .iter()
        .map(|b| opspace::random_gaussian(b.nrows(), b.ncols(), &mut rng))
        .collect();
    let weight: f64 = e
        .iter()
        .zip(lambda_dual.blocks())
        .map(|(ei, d)| opspace::op_norm(ei) * opspace::op_norm(d))
        .sum();
    let eps = if weight > 0.0 { target_mu / weight } else { 0.0 };
    let blocks = lambda
        .blocks()
        .iter()
        .zip(&e)
        .zip(inv_adj.blocks())
        .map(|((l, ei), w)| w * (l + ei.scale(eps)))
        .collect();
    GFrame::with_layout(lambda.layout().clone(), lambda.ambient_dim(), blocks)
}
