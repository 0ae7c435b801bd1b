//! Generalized multipliers `M_{U,Λ,Γ} = T_Λ U T_Γ* = Σ Λᵢ* uᵢ Γᵢ` and the
//! constructions that realize a prescribed invertible multiplier.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gframe::{Classification, GFrame};
use crate::opspace::{self, CMatrix};
use crate::symbol::Symbol;

/// Assembled multiplier with its spectrum and, for g-Riesz pairs, the norm bracket.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiplierReport {
    /// `n × n`.
    pub matrix: CMatrix,
    /// Descending.
    pub singular_values: Vec<f64>,
    pub sigma_min: f64,
    pub sigma_max: f64,
    /// `σ_min > invert_tol · σ_max`.
    pub invertible: bool,
    pub cond: f64,
    /// `‖T_Λ U T_Γ* − Σ Λᵢ*uᵢΓᵢ‖`.
    pub assembly_residual: f64,
    pub bracket: Option<NormBracket>,
}

/// `K√(A_Λ A_Γ) ≤ ‖M‖ ≤ √(B_Λ B_Γ)‖U‖` for g-Riesz pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormBracket {
    pub lower: f64,
    pub upper: f64,
}

impl NormBracket {
    pub fn contains(&self, value: f64, slack: f64) -> bool {
        self.lower - slack <= value && value <= self.upper + slack
    }
}

/// Lower frame bounds of the four sequences an invertible multiplier forces to be g-frames.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NecessaryConditions {
    pub lambda_lower: f64,
    pub gamma_lower: f64,
    /// `UΓ = {uᵢΓᵢ}`.
    pub u_gamma_lower: f64,
    /// `U*Λ = {uᵢ*Λᵢ}`.
    pub u_adjoint_lambda_lower: f64,
    pub all_frames: bool,
    /// `false` only if the multiplier is invertible while one of the four is not a g-frame.
    pub consistent: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ExcessMatch {
    pub lambda_excess: usize,
    pub gamma_excess: usize,
    pub matches: bool,
}

/// Symbol read back from a multiplier on a g-Riesz pair.
#[derive(Debug, Clone, PartialEq)]
pub struct RecoveredSymbol {
    /// Full `K × K` matrix `T_Λ⁻¹ M (T_Γ*)⁻¹`.
    pub matrix: CMatrix,
    /// Its diagonal blocks.
    pub symbol: Symbol,
    /// Spectral norm of everything outside the diagonal blocks.
    pub off_block_residual: f64,
}

fn check_triple(lambda: &GFrame, u: &Symbol, gamma: &GFrame) -> Result<()> {
    lambda.ensure_same_shape(gamma, "multiplier frames")?;
    if u.layout() != lambda.layout() {
        return Err(Error::ShapeMismatch(format!(
            "symbol layout {:?} does not match frame layout {:?}",
            u.layout().block_sizes(),
            lambda.layout().block_sizes()
        )));
    }
    Ok(())
}

/// `Σ Λᵢ* uᵢ Γᵢ`.
pub fn multiplier_matrix(lambda: &GFrame, u: &Symbol, gamma: &GFrame) -> Result<CMatrix> {
    check_triple(lambda, u, gamma)?;
    let n = lambda.ambient_dim();
    let mut m = CMatrix::zeros(n, n);
    for ((l, ui), g) in lambda.blocks().iter().zip(u.blocks()).zip(gamma.blocks()) {
        m += l.adjoint() * (ui * g);
    }
    Ok(m)
}

pub fn assemble(lambda: &GFrame, u: &Symbol, gamma: &GFrame) -> Result<MultiplierReport> {
    let matrix = multiplier_matrix(lambda, u, gamma)?;
    let product = lambda.synthesis_matrix() * u.as_operator() * gamma.analysis_matrix();
    let assembly_residual = opspace::op_norm(&(&product - &matrix));
    let singular_values = opspace::singular_values(&matrix)?;
    let sigma_max = singular_values[0];
    let sigma_min = *singular_values.last().unwrap();
    let invertible = sigma_max > 0.0 && sigma_min > opspace::invert_tol() * sigma_max;
    let cond = if invertible {
        sigma_max / sigma_min
    } else {
        f64::INFINITY
    };
    let bracket = match norm_bracket(lambda, u, gamma) {
        Ok(b) => Some(b),
        Err(Error::NotGRiesz { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok(MultiplierReport {
        matrix,
        singular_values,
        sigma_min,
        sigma_max,
        invertible,
        cond,
        assembly_residual,
        bracket,
    })
}

/// Lower bounds of `Λ`, `Γ`, `UΓ` and `U*Λ`; an invertible multiplier makes
/// all four g-frames.
pub fn necessary_conditions(
    lambda: &GFrame,
    u: &Symbol,
    gamma: &GFrame,
    report: &MultiplierReport,
) -> Result<NecessaryConditions> {
    check_triple(lambda, u, gamma)?;
    let bounds = [
        lambda.frame_bounds()?,
        gamma.frame_bounds()?,
        u.apply(gamma)?.frame_bounds()?,
        u.apply_adjoint(lambda)?.frame_bounds()?,
    ];
    let all_frames = bounds.iter().all(|b| b.classification.is_frame());
    Ok(NecessaryConditions {
        lambda_lower: bounds[0].lower,
        gamma_lower: bounds[1].lower,
        u_gamma_lower: bounds[2].lower,
        u_adjoint_lambda_lower: bounds[3].lower,
        all_frames,
        consistent: !report.invertible || all_frames,
    })
}

/// `Γ` with `uᵢΓᵢ = ΛᵢS_Λ⁻¹T + πᵢΦ`, so that `M_{U,Λ,Γ} = T`.
///
/// `Φ` (`K × n`) is projected onto `ker(T_Λ)` first; that is the condition
/// `T_ΛΦ = 0` under which the multiplier comes out as `T`.
pub fn construct_gamma(lambda: &GFrame, u: &Symbol, t: &CMatrix, phi: &CMatrix) -> Result<GFrame> {
    let n = lambda.ambient_dim();
    let k = lambda.stacked_dim();
    if t.shape() != (n, n) {
        return Err(Error::ShapeMismatch(format!(
            "T must be {n}x{n}, got {}x{}",
            t.nrows(),
            t.ncols()
        )));
    }
    if phi.shape() != (k, n) {
        return Err(Error::ShapeMismatch(format!(
            "Phi must be {k}x{n}, got {}x{}",
            phi.nrows(),
            phi.ncols()
        )));
    }
    opspace::ensure_finite(t, "T")?;
    opspace::ensure_finite(phi, "Phi")?;
    if u.layout() != lambda.layout() {
        return Err(Error::ShapeMismatch("symbol layout does not match Lambda".into()));
    }
    opspace::inverse(t, "T")?;
    let u_inv = u.invert()?;
    let s_inv = lambda.frame_operator_inverse()?;
    let p = opspace::proj_kernel(&lambda.synthesis_matrix(), opspace::rank_tol())?;
    let scaled = lambda.analysis_matrix() * s_inv * t + p * phi;
    GFrame::from_analysis(lambda.layout(), &(u_inv.as_operator() * scaled))
}

/// `Γ₀` with `uᵢΓ₀ᵢ = ΛᵢS_Λ⁻¹T`: the member of the family whose `UΓ` has
/// the smallest analysis operator (`T_{UΓ₀}* = pinv(T_Λ)·T`).
pub fn minimal_norm_gamma(lambda: &GFrame, u: &Symbol, t: &CMatrix) -> Result<GFrame> {
    let phi = CMatrix::zeros(lambda.stacked_dim(), lambda.ambient_dim());
    construct_gamma(lambda, u, t, &phi)
}

/// `Φ = U T_Γ* − T_Λ* S_Λ⁻¹ M`: the kernel component that recovers `Γ` from
/// [`construct_gamma`] with `T = M`.
pub fn extract_phi(lambda: &GFrame, u: &Symbol, gamma: &GFrame, m: &CMatrix) -> Result<CMatrix> {
    check_triple(lambda, u, gamma)?;
    let s_inv = lambda.frame_operator_inverse()?;
    Ok(u.as_operator() * gamma.analysis_matrix() - lambda.analysis_matrix() * s_inv * m)
}

/// `Λ` with `T_Λ = T₁(M_{U,Γ,Γ}⁻¹T_Γ + T₂⁻¹Ψ(Id − U T_Γ* M_{U,Γ,Γ}⁻¹ T_Γ))`,
/// so that `M_{U,Λ,Γ} = T₁`.
///
/// `U` must factor as `uᵢ = vᵢ*vᵢ` with `VΓ` a g-frame; `Ψ` is `n × K`.
pub fn construct_lambda(gamma: &GFrame, u: &Symbol, psi: &CMatrix, t1: &CMatrix, t2: &CMatrix) -> Result<GFrame> {
    let n = gamma.ambient_dim();
    let k = gamma.stacked_dim();
    if psi.shape() != (n, k) {
        return Err(Error::ShapeMismatch(format!(
            "Psi must be {n}x{k}, got {}x{}",
            psi.nrows(),
            psi.ncols()
        )));
    }
    for (name, t) in [("T1", t1), ("T2", t2)] {
        if t.shape() != (n, n) {
            return Err(Error::ShapeMismatch(format!(
                "{name} must be {n}x{n}, got {}x{}",
                t.nrows(),
                t.ncols()
            )));
        }
    }
    opspace::ensure_finite(psi, "Psi")?;
    let v = u.factor_positive()?;
    v.apply(gamma)?.ensure_frame()?;
    opspace::inverse(t1, "T1")?;
    let t2_inv = opspace::inverse(t2, "T2")?;
    let m_gg = multiplier_matrix(gamma, u, gamma)?;
    let m_gg_inv = opspace::inverse(&m_gg, "M_{U,Gamma,Gamma}")?;
    let t_gamma = gamma.synthesis_matrix();
    let u_op = u.as_operator();
    let complement = opspace::identity(k) - &u_op * gamma.analysis_matrix() * &m_gg_inv * &t_gamma;
    let synthesis = t1 * (&m_gg_inv * &t_gamma + t2_inv * psi * complement);
    GFrame::from_analysis(gamma.layout(), &synthesis.adjoint())
}

pub fn excess_match(lambda: &GFrame, gamma: &GFrame) -> Result<ExcessMatch> {
    if lambda.layout() != gamma.layout() {
        return Err(Error::ShapeMismatch("excess comparison needs a shared layout".into()));
    }
    let lambda_excess = lambda.excess()?;
    let gamma_excess = gamma.excess()?;
    Ok(ExcessMatch {
        lambda_excess,
        gamma_excess,
        matches: lambda_excess == gamma_excess,
    })
}

fn ensure_riesz(frame: &GFrame, which: &'static str) -> Result<()> {
    match frame.frame_bounds()?.classification {
        Classification::GRieszBasis => Ok(()),
        _ => Err(Error::NotGRiesz { which }),
    }
}

/// `M_{U,Λ,Γ}⁻¹ = M_{U⁻¹,Γ̃,Λ̃}` for g-Riesz `Λ`, `Γ` and semi-normalized `U`.
pub fn riesz_inverse(lambda: &GFrame, u: &Symbol, gamma: &GFrame) -> Result<CMatrix> {
    check_triple(lambda, u, gamma)?;
    ensure_riesz(lambda, "Lambda")?;
    ensure_riesz(gamma, "Gamma")?;
    let u_inv = u.invert()?;
    multiplier_matrix(&gamma.canonical_dual()?, &u_inv, &lambda.canonical_dual()?)
}

/// Invert `U ↦ M_{U,Λ,Γ}` on a g-Riesz pair: `U = T_Λ⁻¹ M (T_Γ*)⁻¹`.
pub fn recover_symbol(lambda: &GFrame, gamma: &GFrame, m: &CMatrix) -> Result<RecoveredSymbol> {
    lambda.ensure_same_shape(gamma, "symbol recovery")?;
    ensure_riesz(lambda, "Lambda")?;
    ensure_riesz(gamma, "Gamma")?;
    let n = lambda.ambient_dim();
    if m.shape() != (n, n) {
        return Err(Error::ShapeMismatch(format!(
            "M must be {n}x{n}, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let tl_inv = opspace::inverse(&lambda.synthesis_matrix(), "T_Lambda")?;
    let tg_adj_inv = opspace::inverse(&gamma.analysis_matrix(), "T_Gamma*")?;
    let matrix = tl_inv * m * tg_adj_inv;
    let layout = lambda.layout();
    let blocks = (0..layout.len())
        .map(|i| {
            let r = layout.range(i).expect("index in range");
            matrix.view((r.start, r.start), (r.len(), r.len())).into_owned()
        })
        .collect();
    let symbol = Symbol::with_layout(layout.clone(), blocks)?;
    let off_block_residual = opspace::op_norm(&(&matrix - symbol.as_operator()));
    Ok(RecoveredSymbol {
        matrix,
        symbol,
        off_block_residual,
    })
}

/// `(K√(A_Λ A_Γ), √(B_Λ B_Γ)‖U‖)` with `K` the largest column norm of `U`.
pub fn norm_bracket(lambda: &GFrame, u: &Symbol, gamma: &GFrame) -> Result<NormBracket> {
    check_triple(lambda, u, gamma)?;
    let bl = lambda.frame_bounds()?;
    let bg = gamma.frame_bounds()?;
    if bl.classification != Classification::GRieszBasis {
        return Err(Error::NotGRiesz { which: "Lambda" });
    }
    if bg.classification != Classification::GRieszBasis {
        return Err(Error::NotGRiesz { which: "Gamma" });
    }
    Ok(NormBracket {
        lower: u.column_sup() * (bl.lower * bg.lower).sqrt(),
        upper: (bl.upper * bg.upper).sqrt() * u.norm(),
    })
}
