//! The dual `Γ†` of `Γ` that represents `M_{U,Λ,Γ}⁻¹` as a multiplier with
//! symbol `U⁻¹` against every dual of `Λ`, and its relation to the canonical dual.
//!
//! `Γ†ᵢ = uᵢ* Λᵢ (M⁻¹)*`. Then `T_Γ T_{Γ†}* = Id` and, for any dual `Λᵈ` of `Λ`,
//! `T_{Γ†} U⁻¹ T_{Λᵈ}* = M⁻¹ T_Λ T_{Λᵈ}* = M⁻¹`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gframe::GFrame;
use crate::multiplier;
use crate::opspace::{self, CMatrix};
use crate::symbol::Symbol;

/// Relative size of `ψ` under which `Γ†` is reported as the canonical dual.
pub const CANONICAL_TOL: f64 = 1e-8;
/// A competitor counts as exposed when some dual separates it from `M⁻¹` by more than this.
pub const EXPOSURE_THRESHOLD: f64 = 1e-6;
/// Smallest competitor perturbation norm.
pub const MIN_COMPETITOR_NORM: f64 = 1e-4;
/// Random duals of `Λ` drawn per uniqueness check.
pub const RANDOM_DUALS: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct DualReport {
    pub gamma_dagger: GFrame,
    /// `T_{Γ†}* − T_{Γ̃}*`, `K × n`; lies in `ker(T_Γ)`.
    pub psi: CMatrix,
    pub psi_norm: f64,
    /// `λ_max(S_{Γ†})`.
    pub upper_opt_dagger: f64,
    /// `1/λ_min(S_Γ) = λ_max(S_Γ⁻¹)`.
    pub inv_lower_gamma: f64,
    pub canonical_flag: bool,
    /// `‖T_Γ ψ‖`.
    pub kernel_residual: f64,
    /// `‖T_Γ T_{Γ†}* − Id‖`.
    pub duality_residual: f64,
    pub multiplier: CMatrix,
    pub multiplier_inverse: CMatrix,
}

/// Uniqueness search outcome.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UniquenessRecord {
    pub trials: usize,
    pub exposed: usize,
    /// Smallest, over competitors, of the largest separation any dual achieved.
    pub min_exposure: f64,
    pub all_exposed: bool,
}

/// Extended diagnostics relating `Γ†` to `Γ̃`.
#[derive(Debug, Clone, PartialEq)]
pub struct InverseDiagnostics {
    pub report: DualReport,
    /// `λ_max(S_Γ⁻¹) + ‖ψ‖²`.
    pub sandwich_upper: f64,
    pub sandwich_slack: f64,
    /// `λ_max(S_Γ⁻¹) ≤ λ_max(S_{Γ†}) ≤ λ_max(S_Γ⁻¹) + ‖ψ‖²` within slack.
    pub sandwich_holds: bool,
    /// `λ_max(S_{Γ†}) − λ_max(S_Γ⁻¹)`.
    pub gap: f64,
    /// `‖U T_Γ* − T_Λ* S_Λ⁻¹ M‖`: zero iff `UΓ` and `Λ` are equivalent through `Q = M`.
    pub q_residual: f64,
    pub q_equivalent: bool,
    /// `‖T_{UΓ}*‖²`.
    pub analysis_norm_sq: f64,
    /// `1/(A_Λ ‖M⁻¹‖²)`, the floor for `analysis_norm_sq`.
    pub minimal_norm_floor: f64,
}

pub fn gamma_dagger(lambda: &GFrame, u: &Symbol, gamma: &GFrame) -> Result<DualReport> {
    u.ensure_semi_normalized()?;
    let m_report = multiplier::assemble(lambda, u, gamma)?;
    if !m_report.invertible {
        return Err(Error::Singular {
            what: "multiplier",
            ratio: if m_report.sigma_max > 0.0 {
                m_report.sigma_min / m_report.sigma_max
            } else {
                0.0
            },
        });
    }
    let m = m_report.matrix;
    let m_inv = opspace::inverse(&m, "multiplier")?;
    let dagger_analysis = u.adjoint().as_operator() * lambda.analysis_matrix() * m_inv.adjoint();
    let gamma_dagger = GFrame::from_analysis(lambda.layout(), &dagger_analysis)?;

    let canonical = gamma.canonical_dual()?;
    let canonical_analysis = canonical.analysis_matrix();
    let psi = &dagger_analysis - &canonical_analysis;
    let psi_norm = opspace::op_norm(&psi);
    let t_gamma = gamma.synthesis_matrix();
    let kernel_residual = opspace::op_norm(&(&t_gamma * &psi));
    let duality_residual = opspace::op_norm(&(&t_gamma * &dagger_analysis - opspace::identity(gamma.ambient_dim())));
    let upper_opt_dagger = gamma_dagger.frame_bounds()?.upper;
    let inv_lower_gamma = 1.0 / gamma.ensure_frame()?.lower;
    let canonical_flag = psi_norm <= CANONICAL_TOL * opspace::op_norm(&canonical_analysis);
    Ok(DualReport {
        gamma_dagger,
        psi,
        psi_norm,
        upper_opt_dagger,
        inv_lower_gamma,
        canonical_flag,
        kernel_residual,
        duality_residual,
        multiplier: m,
        multiplier_inverse: m_inv,
    })
}

/// `‖M⁻¹ − T_{Γ†} U⁻¹ T_{Λᵈ}*‖` for a dual `Λᵈ` of `Λ`.
pub fn representation_residual(report: &DualReport, u: &Symbol, lambda_dual: &GFrame) -> Result<f64> {
    let u_inv = u.invert()?;
    let rep = multiplier::multiplier_matrix(&report.gamma_dagger, &u_inv, lambda_dual)?;
    Ok(opspace::op_norm(&(&report.multiplier_inverse - rep)))
}

/// Random dual `Λ̃ + πΨ` with `‖Ψ‖` comparable to `‖T_{Λ̃}‖`.
pub fn random_dual<R: Rng + ?Sized>(lambda: &GFrame, rng: &mut R) -> Result<GFrame> {
    let canonical_norm = opspace::op_norm(&lambda.canonical_dual()?.analysis_matrix());
    let raw = opspace::random_gaussian(lambda.stacked_dim(), lambda.ambient_dim(), rng);
    let scale = canonical_norm * (1.0 + 3.0 * rng.random::<f64>()) / opspace::op_norm(&raw);
    lambda.dual_frame(&raw.scale(scale))
}

/// Dual of `Λ` built to separate a discrepancy `w` (a `K × 1` coefficient
/// sequence): `Λᵈ = Λ̃ + z e*` with `z = P_{ker T_Λ} w`, so that
/// `T_{Λᵈ} w = S_Λ⁻¹ T_Λ w + ⟨w, z⟩ e` cannot vanish unless `w = 0`.
fn witness_dual(lambda: &GFrame, w: &CMatrix) -> Result<Option<GFrame>> {
    let p = opspace::proj_kernel(&lambda.synthesis_matrix(), opspace::rank_tol())?;
    let z = p * w;
    let z_norm = opspace::frobenius(&z);
    if z_norm == 0.0 {
        return Ok(None);
    }
    let n = lambda.ambient_dim();
    let c = lambda.frame_operator_inverse()? * lambda.synthesis_matrix() * w;
    let c_norm = opspace::frobenius(&c);
    let e = if c_norm > 0.0 {
        c.unscale(c_norm)
    } else {
        let mut e = CMatrix::zeros(n, 1);
        e[(0, 0)] = opspace::c64(1.0, 0.0);
        e
    };
    let scale = opspace::op_norm(&lambda.canonical_dual()?.analysis_matrix()) / z_norm;
    let psi = (z * e.adjoint()).scale(scale);
    lambda.dual_frame(&psi).map(Some)
}

/// Largest separation `maxᵈ ‖M⁻¹ − M_{U⁻¹,Γ‡,Λᵈ}‖` for the competitor
/// `T_{Γ‡}* = T_{Γ†}* + Θ`, over the canonical dual, the supplied duals and a
/// witness dual targeted at `Θ`. `None` when `Θ = 0` (no competitor).
pub fn competitor_exposure(
    lambda: &GFrame,
    u: &Symbol,
    report: &DualReport,
    theta: &CMatrix,
    duals: &[GFrame],
) -> Result<Option<f64>> {
    if opspace::op_norm(theta) == 0.0 {
        return Ok(None);
    }
    let u_inv = u.invert()?;
    let competitor = GFrame::from_analysis(lambda.layout(), &(report.gamma_dagger.analysis_matrix() + theta))?;
    let exposure = |d: &GFrame| -> Result<f64> {
        let rep = multiplier::multiplier_matrix(&competitor, &u_inv, d)?;
        Ok(opspace::op_norm(&(&report.multiplier_inverse - rep)))
    };
    let mut best = exposure(&lambda.canonical_dual()?)?;
    for d in duals {
        best = best.max(exposure(d)?);
    }
    // Discrepancy sequence w = (U⁻¹)* Θ x at the direction where it is largest.
    let w_map = u_inv.adjoint().as_operator() * theta;
    let dec = opspace::svd(&w_map)?;
    let x = dec.v.columns(0, 1).into_owned();
    if let Some(d) = witness_dual(lambda, &(w_map * x))? {
        best = best.max(exposure(&d)?);
    }
    Ok(Some(best))
}

/// Draw `trials` competitors `Γ‡ ≠ Γ†` (perturbations inside `ker(T_Γ)` when
/// it is non-trivial, so `Γ‡` stays a dual of `Γ`) and check that each is
/// separated from `M⁻¹` by more than [`EXPOSURE_THRESHOLD`].
pub fn verify_uniqueness(
    lambda: &GFrame,
    u: &Symbol,
    gamma: &GFrame,
    report: &DualReport,
    trials: usize,
    seed: u64,
) -> Result<UniquenessRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let duals = (0..RANDOM_DUALS)
        .map(|_| random_dual(lambda, &mut rng))
        .collect::<Result<Vec<_>>>()?;
    let shape = (gamma.stacked_dim(), gamma.ambient_dim());
    let p_gamma = if gamma.excess()? > 0 {
        Some(opspace::proj_kernel(&gamma.synthesis_matrix(), opspace::rank_tol())?)
    } else {
        None
    };
    let mut exposed = 0;
    let mut min_exposure = f64::INFINITY;
    for _ in 0..trials {
        let raw = opspace::random_gaussian(shape.0, shape.1, &mut rng);
        let direction = match &p_gamma {
            Some(p) => p * raw,
            None => raw,
        };
        let size = 10f64.powf(-4.0 + 4.0 * rng.random::<f64>()).max(MIN_COMPETITOR_NORM);
        let theta = direction.scale(size / opspace::op_norm(&direction));
        let e = competitor_exposure(lambda, u, report, &theta, &duals)?.unwrap_or(0.0);
        min_exposure = min_exposure.min(e);
        if e > EXPOSURE_THRESHOLD {
            exposed += 1;
        }
    }
    Ok(UniquenessRecord {
        trials,
        exposed,
        min_exposure,
        all_exposed: exposed == trials,
    })
}

pub fn canonical_inverse_diagnostics(lambda: &GFrame, u: &Symbol, gamma: &GFrame) -> Result<InverseDiagnostics> {
    let report = gamma_dagger(lambda, u, gamma)?;
    let sandwich_upper = report.inv_lower_gamma + report.psi_norm * report.psi_norm;
    let sandwich_slack = 1e-9 * report.inv_lower_gamma.max(1.0);
    let sandwich_holds = report.inv_lower_gamma <= report.upper_opt_dagger + sandwich_slack
        && report.upper_opt_dagger <= sandwich_upper + sandwich_slack;
    let gap = report.upper_opt_dagger - report.inv_lower_gamma;

    let phi = multiplier::extract_phi(lambda, u, gamma, &report.multiplier)?;
    let u_gamma = u.apply(gamma)?.analysis_matrix();
    let q_residual = opspace::op_norm(&phi);
    let q_equivalent = q_residual <= CANONICAL_TOL * opspace::op_norm(&u_gamma);
    let analysis_norm_sq = opspace::op_norm(&u_gamma).powi(2);
    let a_lambda = lambda.ensure_frame()?.lower;
    let minimal_norm_floor = 1.0 / (a_lambda * opspace::op_norm(&report.multiplier_inverse).powi(2));
    Ok(InverseDiagnostics {
        report,
        sandwich_upper,
        sandwich_slack,
        sandwich_holds,
        gap,
        q_residual,
        q_equivalent,
        analysis_norm_sq,
        minimal_norm_floor,
    })
}
