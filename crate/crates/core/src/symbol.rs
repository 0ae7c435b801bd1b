//! Block-diagonal symbols `U = diag{uᵢ}` acting on the stacked space.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gframe::GFrame;
use crate::opspace::{self, c64, CMatrix, SpaceLayout, C64};

const HERMITIAN_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct Symbol {
    layout: SpaceLayout,
    blocks: Vec<CMatrix>,
}

/// Norm data of a symbol: `a = minᵢ σ_min(uᵢ) = 1/‖U⁻¹‖`, `b = maxᵢ σ_max(uᵢ) = ‖U‖`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SemiNormalization {
    pub semi_normalized: bool,
    /// `b = ‖U‖`.
    pub norm: f64,
    /// `‖U⁻¹‖`, infinite when some block is singular.
    pub inverse_norm: f64,
    /// `a = 1/‖U⁻¹‖`.
    pub lower: f64,
}

impl Symbol {
    pub fn new(blocks: Vec<CMatrix>) -> Result<Self> {
        let layout = SpaceLayout::new(blocks.iter().map(|b| b.nrows()).collect())?;
        Self::with_layout(layout, blocks)
    }

    pub fn with_layout(layout: SpaceLayout, blocks: Vec<CMatrix>) -> Result<Self> {
        if blocks.len() != layout.len() {
            return Err(Error::ShapeMismatch(format!(
                "layout has {} blocks, symbol has {}",
                layout.len(),
                blocks.len()
            )));
        }
        for (i, b) in blocks.iter().enumerate() {
            let k = layout.size(i);
            if b.shape() != (k, k) {
                return Err(Error::ShapeMismatch(format!(
                    "symbol block {i} should be {k}x{k}, got {}x{}",
                    b.nrows(),
                    b.ncols()
                )));
            }
            opspace::ensure_finite(b, &format!("symbol block {i}"))?;
        }
        Ok(Self { layout, blocks })
    }

    /// Scalar weights: `uᵢ = mᵢ·Id_{kᵢ}`.
    pub fn from_weights(layout: &SpaceLayout, weights: &[C64]) -> Result<Self> {
        if weights.len() != layout.len() {
            return Err(Error::ShapeMismatch(format!(
                "layout has {} blocks, got {} weights",
                layout.len(),
                weights.len()
            )));
        }
        let blocks = weights
            .iter()
            .zip(layout.block_sizes())
            .map(|(&w, &k)| CMatrix::identity(k, k) * w)
            .collect();
        Self::with_layout(layout.clone(), blocks)
    }

    pub fn from_real_weights(layout: &SpaceLayout, weights: &[f64]) -> Result<Self> {
        let w: Vec<C64> = weights.iter().map(|&x| c64(x, 0.0)).collect();
        Self::from_weights(layout, &w)
    }

    pub fn identity(layout: &SpaceLayout) -> Self {
        Self::from_real_weights(layout, &vec![1.0; layout.len()]).expect("identity conforms")
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

    /// The `K × K` block-diagonal matrix.
    pub fn as_operator(&self) -> CMatrix {
        let k = self.layout.total();
        let mut out = CMatrix::zeros(k, k);
        for (i, b) in self.blocks.iter().enumerate() {
            let off = self.layout.offsets()[i];
            out.view_mut((off, off), b.shape()).copy_from(b);
        }
        out
    }

    fn map_blocks(&self, f: impl Fn(&CMatrix) -> CMatrix) -> Symbol {
        Symbol {
            layout: self.layout.clone(),
            blocks: self.blocks.iter().map(f).collect(),
        }
    }

    pub fn adjoint(&self) -> Symbol {
        self.map_blocks(|b| b.adjoint())
    }

    /// `‖U‖ = maxᵢ ‖uᵢ‖`.
    pub fn norm(&self) -> f64 {
        self.blocks.iter().map(opspace::op_norm).fold(0.0, f64::max)
    }

    /// Semi-normalized iff `minᵢ σ_min(uᵢ) > tol · maxᵢ σ_max(uᵢ)`.
    pub fn semi_normalization(&self, tol: f64) -> SemiNormalization {
        let mut lower = f64::INFINITY;
        let mut upper = 0.0f64;
        for b in &self.blocks {
            let s = opspace::singular_values(b).expect("symbol blocks are finite");
            upper = upper.max(s[0]);
            lower = lower.min(*s.last().unwrap());
        }
        let semi_normalized = upper > 0.0 && lower > tol * upper;
        SemiNormalization {
            semi_normalized,
            norm: upper,
            inverse_norm: if semi_normalized { 1.0 / lower } else { f64::INFINITY },
            lower: if semi_normalized { lower } else { 0.0 },
        }
    }

    pub fn is_semi_normalized(&self) -> bool {
        self.semi_normalization(opspace::rank_tol()).semi_normalized
    }

    pub fn ensure_semi_normalized(&self) -> Result<SemiNormalization> {
        let sn = self.semi_normalization(opspace::rank_tol());
        if sn.semi_normalized {
            Ok(sn)
        } else {
            Err(Error::NotSemiNormalized {
                lower: sn.lower,
                upper: sn.norm,
            })
        }
    }

    /// `D_{U⁻¹} = diag{uᵢ⁻¹}`.
    pub fn invert(&self) -> Result<Symbol> {
        let sn = self.ensure_semi_normalized()?;
        let blocks = self
            .blocks
            .iter()
            .map(|b| {
                b.clone().try_inverse().ok_or(Error::NotSemiNormalized {
                    lower: sn.lower,
                    upper: sn.norm,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Symbol {
            layout: self.layout.clone(),
            blocks,
        })
    }

    /// `V` with `uᵢ = vᵢ*vᵢ`, `vᵢ` the Hermitian PSD square root of `uᵢ`.
    pub fn factor_positive(&self) -> Result<Symbol> {
        let blocks = self
            .blocks
            .iter()
            .enumerate()
            .map(|(i, b)| {
                let asymmetry = opspace::hermitian_defect(b);
                if asymmetry > HERMITIAN_TOL {
                    return Err(Error::Factorization {
                        block: i,
                        reason: format!("not Hermitian (relative asymmetry {asymmetry:.3e})"),
                    });
                }
                opspace::psd_sqrt(b).map_err(|e| Error::Factorization {
                    block: i,
                    reason: e.to_string(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Symbol {
            layout: self.layout.clone(),
            blocks,
        })
    }

    /// `K = supⱼ ‖U ξⱼ‖` over the standard basis: the largest column norm.
    pub fn column_sup(&self) -> f64 {
        self.blocks
            .iter()
            .flat_map(|b| {
                b.column_iter()
                    .map(|c| c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
                    .collect::<Vec<_>>()
            })
            .fold(0.0, f64::max)
    }

    /// Every block satisfies `uᵢ*uᵢ = Id` to `tol`.
    pub fn is_unitary(&self, tol: f64) -> bool {
        self.blocks.iter().all(|b| {
            let k = b.nrows();
            opspace::op_norm(&(b.adjoint() * b - CMatrix::identity(k, k))) <= tol
        })
    }

    fn ensure_layout(&self, frame: &GFrame) -> Result<()> {
        if frame.layout() == &self.layout {
            Ok(())
        } else {
            Err(Error::ShapeMismatch(format!(
                "symbol layout {:?} does not match frame layout {:?}",
                self.layout.block_sizes(),
                frame.layout().block_sizes()
            )))
        }
    }

    /// The sequence `UΓ = {uᵢΓᵢ}`.
    pub fn apply(&self, frame: &GFrame) -> Result<GFrame> {
        self.ensure_layout(frame)?;
        GFrame::with_layout(
            self.layout.clone(),
            frame.ambient_dim(),
            self.blocks.iter().zip(frame.blocks()).map(|(u, g)| u * g).collect(),
        )
    }

    /// The sequence `U*Λ = {uᵢ*Λᵢ}`.
    pub fn apply_adjoint(&self, frame: &GFrame) -> Result<GFrame> {
        self.adjoint().apply(frame)
    }

    /// Seeded symbol with every block's singular values in `[b/cond_cap, b]`,
    /// `b ∈ [0.5, 2]`.
    pub fn random(layout: &SpaceLayout, cond_cap: f64, seed: u64) -> Symbol {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::random_with(layout, cond_cap, &mut rng)
    }

    pub fn random_with<R: Rng + ?Sized>(layout: &SpaceLayout, cond_cap: f64, rng: &mut R) -> Symbol {
        let top = 0.5 + 1.5 * rng.random::<f64>();
        let blocks = layout
            .block_sizes()
            .iter()
            .map(|&k| {
                let scale = top / cond_cap.max(1.0) + (top - top / cond_cap.max(1.0)) * rng.random::<f64>();
                opspace::random_well_conditioned(k, cond_cap, scale, rng)
            })
            .collect();
        Symbol {
            layout: layout.clone(),
            blocks,
        }
    }

    pub fn random_unitary_with<R: Rng + ?Sized>(layout: &SpaceLayout, rng: &mut R) -> Symbol {
        Symbol {
            layout: layout.clone(),
            blocks: layout
                .block_sizes()
                .iter()
                .map(|&k| opspace::random_unitary(k, rng))
                .collect(),
        }
    }

    /// Hermitian positive definite blocks with eigenvalues in `[1/cond_cap, 1]·scale`.
    pub fn random_positive_with<R: Rng + ?Sized>(layout: &SpaceLayout, cond_cap: f64, rng: &mut R) -> Symbol {
        let blocks = layout
            .block_sizes()
            .iter()
            .map(|&k| {
                let q = opspace::random_unitary(k, rng);
                let lo = 1.0 / cond_cap.max(1.0);
                let d: Vec<f64> = (0..k).map(|_| lo + (1.0 - lo) * rng.random::<f64>()).collect();
                let p = &q * opspace::real_diag(&d) * q.adjoint();
                (&p + p.adjoint()).scale(0.5)
            })
            .collect();
        Symbol {
            layout: layout.clone(),
            blocks,
        }
    }
}
