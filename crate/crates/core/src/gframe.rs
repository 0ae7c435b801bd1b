//! g-frames over `ℂⁿ` and their associated operators.
//!
//! A [`GFrame`] stores blocks `Λᵢ ∈ ℂ^{kᵢ×n}`. The analysis operator is the
//! vertical stack of the blocks (`K × n`), the synthesis operator its adjoint
//! (`n × K`), and the frame operator `S = Σ Λᵢ*Λᵢ`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::opspace::{self, CMatrix, SpaceLayout};

/// Finite sequence of operators `Λᵢ : ℂⁿ → ℂ^{kᵢ}`.
///
/// The same type represents any block sequence on a layout, frame or not;
/// [`GFrame::frame_bounds`] decides which class it belongs to.
#[derive(Debug, Clone, PartialEq)]
pub struct GFrame {
    ambient_dim: usize,
    layout: SpaceLayout,
    blocks: Vec<CMatrix>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    /// Lower bound is zero at the rank threshold.
    BesselOnly,
    GFrame,
    /// g-frame whose synthesis operator is a bijection (`K = n`).
    GRieszBasis,
}

impl Classification {
    pub fn is_frame(self) -> bool {
        !matches!(self, Classification::BesselOnly)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Classification::BesselOnly => "g-bessel-only",
            Classification::GFrame => "g-frame",
            Classification::GRieszBasis => "g-riesz-basis",
        }
    }
}

/// Optimal frame bounds: the extreme eigenvalues of `S`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrameBounds {
    pub lower: f64,
    pub upper: f64,
    pub classification: Classification,
}

impl FrameBounds {
    /// `B / A`, infinite for a Bessel-only sequence.
    pub fn ratio(&self) -> f64 {
        if self.classification.is_frame() && self.lower > 0.0 {
            self.upper / self.lower
        } else {
            f64::INFINITY
        }
    }
}

/// Outcome of a duality test `Σ Fᵢ*Dᵢ = Id`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DualCheck {
    pub is_dual: bool,
    /// `‖Σ Fᵢ*Dᵢ − Id‖`.
    pub residual: f64,
    pub tolerance: f64,
}

impl GFrame {
    /// Build from blocks; the layout is read off the block row counts.
    pub fn new(ambient_dim: usize, blocks: Vec<CMatrix>) -> Result<Self> {
        let layout = SpaceLayout::new(blocks.iter().map(|b| b.nrows()).collect())?;
        Self::with_layout(layout, ambient_dim, blocks)
    }

    pub fn with_layout(layout: SpaceLayout, ambient_dim: usize, blocks: Vec<CMatrix>) -> Result<Self> {
        if ambient_dim == 0 {
            return Err(Error::InvalidInput("ambient dimension must be positive".into()));
        }
        if blocks.len() != layout.len() {
            return Err(Error::ShapeMismatch(format!(
                "layout has {} blocks, got {}",
                layout.len(),
                blocks.len()
            )));
        }
        for (i, b) in blocks.iter().enumerate() {
            if b.nrows() != layout.size(i) || b.ncols() != ambient_dim {
                return Err(Error::ShapeMismatch(format!(
                    "block {i} should be {}x{ambient_dim}, got {}x{}",
                    layout.size(i),
                    b.nrows(),
                    b.ncols()
                )));
            }
            opspace::ensure_finite(b, &format!("block {i}"))?;
        }
        Ok(Self {
            ambient_dim,
            layout,
            blocks,
        })
    }

    /// Split a `K × n` analysis matrix into blocks.
    pub fn from_analysis(layout: &SpaceLayout, analysis: &CMatrix) -> Result<Self> {
        let blocks = layout.split(analysis)?;
        Self::with_layout(layout.clone(), analysis.ncols(), blocks)
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn layout(&self) -> &SpaceLayout {
        &self.layout
    }

    pub fn blocks(&self) -> &[CMatrix] {
        &self.blocks
    }

    pub fn block(&self, i: usize) -> &CMatrix {
        &self.blocks[i]
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// `K = Σ kᵢ`.
    pub fn stacked_dim(&self) -> usize {
        self.layout.total()
    }

    pub fn same_shape(&self, other: &GFrame) -> bool {
        self.ambient_dim == other.ambient_dim && self.layout == other.layout
    }

    pub fn ensure_same_shape(&self, other: &GFrame, what: &str) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::ShapeMismatch(format!(
                "{what}: layouts {:?}/n={} and {:?}/n={} differ",
                self.layout.block_sizes(),
                self.ambient_dim,
                other.layout.block_sizes(),
                other.ambient_dim
            )))
        }
    }

    /// `T_Λ* : x ↦ {Λᵢx}`, the `K × n` vertical stack of the blocks.
    pub fn analysis_matrix(&self) -> CMatrix {
        self.layout.stack(&self.blocks).expect("blocks conform to layout")
    }

    /// `T_Λ : {xᵢ} ↦ Σ Λᵢ*xᵢ`, the `n × K` matrix `[Λ₁* | … | Λ_m*]`.
    pub fn synthesis_matrix(&self) -> CMatrix {
        self.analysis_matrix().adjoint()
    }

    /// `S_Λ = Σ Λᵢ*Λᵢ`, accumulated block by block.
    pub fn frame_operator(&self) -> CMatrix {
        let mut s = CMatrix::zeros(self.ambient_dim, self.ambient_dim);
        for b in &self.blocks {
            s += b.adjoint() * b;
        }
        s
    }

    /// `Σᵢ ‖Λᵢx‖²` for a column vector `x`.
    pub fn energy(&self, x: &CMatrix) -> f64 {
        self.blocks.iter().map(|b| opspace::frobenius(&(b * x)).powi(2)).sum()
    }

    /// Optimal bounds from the spectrum of `S`; classification from the
    /// singular values of `T_Λ` under the rank policy.
    pub fn frame_bounds(&self) -> Result<FrameBounds> {
        let eig = opspace::herm_eig(&self.frame_operator())?;
        let sigma = opspace::singular_values(&self.synthesis_matrix())?;
        let frame = self.stacked_dim() >= self.ambient_dim
            && opspace::cond_from_singular_values(&sigma, opspace::rank_tol()).is_finite();
        let classification = match (frame, self.stacked_dim() == self.ambient_dim) {
            (false, _) => Classification::BesselOnly,
            (true, true) => Classification::GRieszBasis,
            (true, false) => Classification::GFrame,
        };
        Ok(FrameBounds {
            lower: eig.min().max(0.0),
            upper: eig.max().max(0.0),
            classification,
        })
    }

    pub fn ensure_frame(&self) -> Result<FrameBounds> {
        let bounds = self.frame_bounds()?;
        if bounds.classification.is_frame() {
            Ok(bounds)
        } else {
            Err(Error::SingularFrame {
                lower: bounds.lower,
                upper: bounds.upper,
            })
        }
    }

    /// `S_Λ⁻¹`; fails unless the sequence is a g-frame.
    pub fn frame_operator_inverse(&self) -> Result<CMatrix> {
        self.ensure_frame()?;
        opspace::hpd_inverse(&self.frame_operator(), "frame operator")
    }

    /// Multiply every block on the right by `r` (`n × n′`), giving `{Λᵢ r}`.
    pub fn right_mul(&self, r: &CMatrix) -> Result<GFrame> {
        if r.nrows() != self.ambient_dim {
            return Err(Error::ShapeMismatch(format!(
                "right factor must have {} rows, got {}",
                self.ambient_dim,
                r.nrows()
            )));
        }
        Self::with_layout(
            self.layout.clone(),
            r.ncols(),
            self.blocks.iter().map(|b| b * r).collect(),
        )
    }

    pub fn scaled(&self, c: f64) -> GFrame {
        Self {
            ambient_dim: self.ambient_dim,
            layout: self.layout.clone(),
            blocks: self.blocks.iter().map(|b| b.scale(c)).collect(),
        }
    }

    /// `Λ̃ᵢ = Λᵢ S_Λ⁻¹`.
    pub fn canonical_dual(&self) -> Result<GFrame> {
        let s_inv = self.frame_operator_inverse()?;
        self.right_mul(&s_inv)
    }

    /// `dim ker(T_Λ) = K − rank(T_Λ)`.
    pub fn excess(&self) -> Result<usize> {
        let r = opspace::rank(&self.synthesis_matrix(), opspace::rank_tol())?;
        Ok(self.stacked_dim() - r)
    }

    /// The dual `Λᵈᵢ = Λ̃ᵢ + πᵢΨ`. `Ψ` (`K × n`) is first projected onto
    /// `ker(T_Λ)` so every input yields a dual; `Ψ = 0` gives the canonical dual.
    pub fn dual_frame(&self, psi: &CMatrix) -> Result<GFrame> {
        if psi.shape() != (self.stacked_dim(), self.ambient_dim) {
            return Err(Error::ShapeMismatch(format!(
                "dual parameter must be {}x{}, got {}x{}",
                self.stacked_dim(),
                self.ambient_dim,
                psi.nrows(),
                psi.ncols()
            )));
        }
        opspace::ensure_finite(psi, "dual parameter")?;
        let canonical = self.canonical_dual()?;
        let p = opspace::proj_kernel(&self.synthesis_matrix(), opspace::rank_tol())?;
        let analysis = canonical.analysis_matrix() + p * psi;
        Self::from_analysis(&self.layout, &analysis)
    }

    /// `D` is a dual of `self` iff `‖Σ Fᵢ*Dᵢ − Id‖ ≤ 1e-8·max(1, cond(S_F))`.
    pub fn is_dual_pair(&self, other: &GFrame) -> Result<DualCheck> {
        self.ensure_same_shape(other, "dual pair")?;
        let product = self.synthesis_matrix() * other.analysis_matrix();
        let residual = opspace::op_norm(&(product - opspace::identity(self.ambient_dim)));
        let ratio = self.frame_bounds()?.ratio();
        let tolerance = 1e-8 * if ratio.is_finite() { ratio.max(1.0) } else { 1.0 };
        Ok(DualCheck {
            is_dual: residual <= tolerance,
            residual,
            tolerance,
        })
    }
}

/// Seeded random g-frame with `B / A ≤ condition_cap`.
///
/// A Gaussian analysis matrix is drawn, then its singular values are mapped
/// affinely onto `[σ₁/√c, σ₁]` for a target ratio `c = cap^u`, `u ∈ [0, 0.98]`,
/// so `cap = 1` yields a tight frame. The overall scale puts `B` in `[0.5, 2]`.
pub fn random_gframe(ambient_dim: usize, layout: &SpaceLayout, condition_cap: f64, seed: u64) -> Result<GFrame> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_gframe_with(ambient_dim, layout, condition_cap, &mut rng)
}

pub fn random_gframe_with<R: Rng + ?Sized>(
    ambient_dim: usize,
    layout: &SpaceLayout,
    condition_cap: f64,
    rng: &mut R,
) -> Result<GFrame> {
    if ambient_dim == 0 {
        return Err(Error::InvalidInput("ambient dimension must be positive".into()));
    }
    if layout.total() < ambient_dim {
        return Err(Error::InvalidInput(format!(
            "a g-frame on {} stacked coordinates cannot span dimension {ambient_dim}",
            layout.total()
        )));
    }
    if condition_cap.is_nan() || condition_cap < 1.0 || condition_cap.is_infinite() {
        return Err(Error::InvalidInput(format!(
            "condition cap must be a finite value >= 1, got {condition_cap}"
        )));
    }
    let g = opspace::random_gaussian(layout.total(), ambient_dim, rng);
    let dec = opspace::svd(&g)?;
    let target = condition_cap.powf(0.98 * rng.random::<f64>());
    let top = (0.5 + 1.5 * rng.random::<f64>()).sqrt();
    let bottom = top / target.sqrt();
    let s = &dec.singular_values;
    let (hi, lo) = (s[0], *s.last().unwrap());
    let mapped: Vec<f64> = s
        .iter()
        .map(|&x| {
            if hi > lo {
                bottom + (x - lo) / (hi - lo) * (top - bottom)
            } else {
                top
            }
        })
        .collect();
    let analysis = &dec.u * opspace::real_diag(&mapped) * dec.v.adjoint();
    GFrame::from_analysis(layout, &analysis)
}
