//! Dense complex linear algebra and the stacked coefficient space.
//!
//! Matrices are `nalgebra::DMatrix<Complex<f64>>`. SVD and Hermitian
//! eigen-decomposition are computed by `faer` and wrapped so that every routine rejects non-finite input, returns singular values in
//! descending order and eigenvalues in ascending order, and applies one rank
//! policy: a singular value counts as zero when it is at most
//! `rank_tol · σ₁`.

use std::ops::Range;
use std::sync::atomic::{AtomicU64, Ordering};

use faer::Side;
use nalgebra::DMatrix;
use num_complex::Complex;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;

pub const DEFAULT_RANK_TOL: f64 = 1e-10;
pub const DEFAULT_INVERT_TOL: f64 = 1e-10;

const HERMITIAN_TOL: f64 = 1e-10;

// 0 encodes "unset" so the defaults need no lazy initialisation.
static RANK_TOL_BITS: AtomicU64 = AtomicU64::new(0);
static INVERT_TOL_BITS: AtomicU64 = AtomicU64::new(0);

/// Process-wide tolerance policy.
///
/// `rank` is the relative singular-value threshold for every rank, kernel and
/// range decision; `invert` is the relative threshold `σ_min > invert · σ_max`
/// for declaring a multiplier invertible.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub rank: f64,
    pub invert: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rank: DEFAULT_RANK_TOL,
            invert: DEFAULT_INVERT_TOL,
        }
    }
}

impl Tolerances {
    pub fn current() -> Self {
        Self {
            rank: load_tol(&RANK_TOL_BITS, DEFAULT_RANK_TOL),
            invert: load_tol(&INVERT_TOL_BITS, DEFAULT_INVERT_TOL),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("rank", self.rank), ("invert", self.invert)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::InvalidInput(format!(
                    "{name} tolerance must lie in (0, 1), got {v}"
                )));
            }
        }
        Ok(())
    }

    /// Make these tolerances the process-wide policy.
    pub fn install(self) -> Result<()> {
        self.validate()?;
        RANK_TOL_BITS.store(self.rank.to_bits(), Ordering::Relaxed);
        INVERT_TOL_BITS.store(self.invert.to_bits(), Ordering::Relaxed);
        Ok(())
    }
}

fn load_tol(slot: &AtomicU64, default: f64) -> f64 {
    match slot.load(Ordering::Relaxed) {
        0 => default,
        bits => f64::from_bits(bits),
    }
}

pub fn rank_tol() -> f64 {
    Tolerances::current().rank
}

pub fn invert_tol() -> f64 {
    Tolerances::current().invert
}

#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// Build a matrix from real row slices. Handy for literals.
pub fn from_real_rows(rows: &[&[f64]]) -> CMatrix {
    let r = rows.len();
    let c = rows.first().map_or(0, |row| row.len());
    CMatrix::from_fn(r, c, |i, j| c64(rows[i][j], 0.0))
}

pub fn real_diag(values: &[f64]) -> CMatrix {
    let n = values.len();
    CMatrix::from_fn(n, n, |i, j| if i == j { c64(values[i], 0.0) } else { C64::default() })
}

pub fn is_finite(a: &CMatrix) -> bool {
    a.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub fn ensure_finite(a: &CMatrix, what: &str) -> Result<()> {
    if is_finite(a) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{what} has non-finite entries")))
    }
}

pub fn frobenius(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Thin singular value decomposition `A = U diag(σ) V*`.
#[derive(Debug, Clone)]
pub struct Svd {
    /// `rows × p` with orthonormal columns, `p = min(rows, cols)`.
    pub u: CMatrix,
    /// Descending, length `p`.
    pub singular_values: Vec<f64>,
    /// `cols × p` with orthonormal columns.
    pub v: CMatrix,
}

impl Svd {
    pub fn sigma_max(&self) -> f64 {
        self.singular_values.first().copied().unwrap_or(0.0)
    }

    pub fn rank(&self, rank_tol: f64) -> usize {
        let cutoff = rank_tol * self.sigma_max();
        self.singular_values.iter().filter(|&&s| s > cutoff && s > 0.0).count()
    }

    pub fn reconstruct(&self) -> CMatrix {
        let sigma = real_diag(&self.singular_values);
        &self.u * sigma * self.v.adjoint()
    }
}

fn to_faer(a: &CMatrix) -> faer::Mat<C64> {
    faer::Mat::from_fn(a.nrows(), a.ncols(), |r, c| a[(r, c)])
}

fn from_faer(a: faer::MatRef<'_, C64>, cols: usize) -> CMatrix {
    CMatrix::from_fn(a.nrows(), cols, |r, c| a[(r, c)])
}

fn check_decomposable(a: &CMatrix) -> Result<()> {
    ensure_finite(a, "matrix")?;
    if a.is_empty() {
        return Err(Error::InvalidInput("empty matrix".into()));
    }
    Ok(())
}

pub fn svd(a: &CMatrix) -> Result<Svd> {
    check_decomposable(a)?;
    let dec = to_faer(a)
        .thin_svd()
        .map_err(|_| Error::NoConvergence("singular value decomposition"))?;
    let p = a.nrows().min(a.ncols());
    let s = dec.S().column_vector();
    Ok(Svd {
        u: from_faer(dec.U(), p),
        singular_values: (0..p).map(|k| s[k].re).collect(),
        v: from_faer(dec.V(), p),
    })
}

/// Descending singular values without vectors.
pub fn singular_values(a: &CMatrix) -> Result<Vec<f64>> {
    check_decomposable(a)?;
    to_faer(a)
        .singular_values()
        .map_err(|_| Error::NoConvergence("singular value decomposition"))
}

/// Spectral norm. Returns NaN for non-finite input and 0 for empty input.
pub fn op_norm(a: &CMatrix) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    match singular_values(a) {
        Ok(s) => s[0],
        Err(_) => f64::NAN,
    }
}

/// `σ_max / σ_min` over the `min(rows, cols)` singular values; infinite when
/// `σ_min` falls under the rank threshold.
pub fn cond(a: &CMatrix) -> f64 {
    match singular_values(a) {
        Ok(s) => cond_from_singular_values(&s, rank_tol()),
        Err(_) => f64::NAN,
    }
}

pub fn cond_from_singular_values(s: &[f64], rank_tol: f64) -> f64 {
    let (Some(&hi), Some(&lo)) = (s.first(), s.last()) else {
        return f64::INFINITY;
    };
    if hi == 0.0 || lo <= rank_tol * hi {
        f64::INFINITY
    } else {
        hi / lo
    }
}

pub fn rank(a: &CMatrix, rank_tol: f64) -> Result<usize> {
    let s = singular_values(a)?;
    let cutoff = rank_tol * s.first().copied().unwrap_or(0.0);
    Ok(s.iter().filter(|&&x| x > cutoff && x > 0.0).count())
}

fn check_rank_tol(rank_tol: f64) -> Result<()> {
    if rank_tol > 0.0 && rank_tol < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "rank tolerance must lie in (0, 1), got {rank_tol}"
        )))
    }
}

/// Eigen-decomposition of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermEig {
    /// Ascending.
    pub values: Vec<f64>,
    /// Column `j` is the unit eigenvector for `values[j]`.
    pub vectors: CMatrix,
}

impl HermEig {
    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    /// `V f(Λ) V*`.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let d: Vec<f64> = self.values.iter().map(|&x| f(x)).collect();
        &self.vectors * real_diag(&d) * self.vectors.adjoint()
    }
}

/// Relative asymmetry `‖A − A*‖_F / ‖A‖_F` (0 for the zero matrix).
pub fn hermitian_defect(a: &CMatrix) -> f64 {
    let scale = frobenius(a);
    if scale == 0.0 {
        return 0.0;
    }
    frobenius(&(a - a.adjoint())) / scale
}

pub fn herm_eig(a: &CMatrix) -> Result<HermEig> {
    ensure_finite(a, "matrix")?;
    if !a.is_square() || a.is_empty() {
        return Err(Error::ShapeMismatch(format!(
            "eigen-decomposition needs a non-empty square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let asymmetry = hermitian_defect(a);
    if asymmetry > HERMITIAN_TOL {
        return Err(Error::NotHermitian { asymmetry });
    }
    let sym = (a + a.adjoint()).scale(0.5);
    let n = a.nrows();
    let eig = to_faer(&sym)
        .self_adjoint_eigen(Side::Lower)
        .map_err(|_| Error::NoConvergence("Hermitian eigen-decomposition"))?;
    let s = eig.S().column_vector();
    Ok(HermEig {
        values: (0..n).map(|k| s[k].re).collect(),
        vectors: from_faer(eig.U(), n),
    })
}

/// Moore–Penrose pseudoinverse with singular values at or below
/// `rank_tol · σ₁` treated as zero.
pub fn pinv(a: &CMatrix, rank_tol: f64) -> Result<CMatrix> {
    check_rank_tol(rank_tol)?;
    let dec = svd(a)?;
    let r = dec.rank(rank_tol);
    let mut out = CMatrix::zeros(a.ncols(), a.nrows());
    for k in 0..r {
        let inv = 1.0 / dec.singular_values[k];
        let vk = dec.v.column(k);
        let uk = dec.u.column(k);
        out += (vk * uk.adjoint()).scale(inv);
    }
    Ok(out)
}

/// Orthogonal projector onto `ran(A*) = ker(A)^⊥`, i.e. `pinv(A)·A`.
pub fn proj_range_adjoint(a: &CMatrix, rank_tol: f64) -> Result<CMatrix> {
    check_rank_tol(rank_tol)?;
    let dec = svd(a)?;
    let r = dec.rank(rank_tol);
    let vr = dec.v.columns(0, r);
    Ok(vr * vr.adjoint())
}

/// Orthogonal projector onto `ker(A)`.
pub fn proj_kernel(a: &CMatrix, rank_tol: f64) -> Result<CMatrix> {
    let p = proj_range_adjoint(a, rank_tol)?;
    Ok(identity(a.ncols()) - p)
}

/// Orthonormal basis (as columns) of `ker(A)`.
pub fn kernel_basis(a: &CMatrix, rank_tol: f64) -> Result<CMatrix> {
    check_rank_tol(rank_tol)?;
    // Full right basis: pad with the kernel of the thin V.
    let p = proj_kernel(a, rank_tol)?;
    let dim = a.ncols() - rank(a, rank_tol)?;
    if dim == 0 {
        return Ok(CMatrix::zeros(a.ncols(), 0));
    }
    let dec = svd(&p)?;
    Ok(dec.u.columns(0, dim).into_owned())
}

/// Inverse of a square matrix, refusing matrices with
/// `σ_min ≤ rank_tol · σ_max`.
pub fn inverse(a: &CMatrix, what: &'static str) -> Result<CMatrix> {
    if !a.is_square() {
        return Err(Error::ShapeMismatch(format!(
            "{what} must be square, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let s = singular_values(a)?;
    let hi = s[0];
    let lo = *s.last().unwrap();
    let ratio = if hi == 0.0 { 0.0 } else { lo / hi };
    if ratio <= rank_tol() {
        return Err(Error::Singular { what, ratio });
    }
    a.clone().try_inverse().ok_or(Error::Singular { what, ratio })
}

/// Inverse of a Hermitian positive definite matrix via its eigenbasis.
pub fn hpd_inverse(a: &CMatrix, what: &'static str) -> Result<CMatrix> {
    let eig = herm_eig(a)?;
    let hi = eig.max();
    let lo = eig.min();
    if hi <= 0.0 || lo <= rank_tol() * rank_tol() * hi {
        return Err(Error::Singular {
            what,
            ratio: if hi > 0.0 { (lo.max(0.0) / hi).sqrt() } else { 0.0 },
        });
    }
    Ok(eig.apply(|x| 1.0 / x))
}

/// Hermitian positive semidefinite square root. Eigenvalues down to
/// `−1e-10·λ_max` are clamped to zero; anything more negative is rejected.
pub fn psd_sqrt(a: &CMatrix) -> Result<CMatrix> {
    let eig = herm_eig(a)?;
    let scale = eig.values.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if eig.min() < -HERMITIAN_TOL * scale {
        return Err(Error::InvalidInput(format!(
            "matrix is indefinite (eigenvalue {:.3e})",
            eig.min()
        )));
    }
    Ok(eig.apply(|x| x.max(0.0).sqrt()))
}

pub fn random_gaussian<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c64(re * scale, im * scale)
    })
}

/// Haar-ish random unitary from the SVD of a Gaussian matrix.
pub fn random_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    let g = random_gaussian(n, n, rng);
    let dec = svd(&g).expect("gaussian matrices are finite");
    dec.u * dec.v.adjoint()
}

/// Random square matrix whose singular values lie in `[scale / cond_cap, scale]`.
pub fn random_well_conditioned<R: Rng + ?Sized>(n: usize, cond_cap: f64, scale: f64, rng: &mut R) -> CMatrix {
    let left = random_unitary(n, rng);
    let right = random_unitary(n, rng);
    let lo = scale / cond_cap.max(1.0);
    let sigma: Vec<f64> = (0..n)
        .map(|i| {
            if i == 0 {
                scale
            } else {
                lo + (scale - lo) * rng.random::<f64>()
            }
        })
        .collect();
    left * real_diag(&sigma) * right.adjoint()
}

/// Index bookkeeping for the stacked space `ℂ^{k₁} ⊕ … ⊕ ℂ^{k_m} = ℂ^K`.
///
/// Blocks are 0-indexed.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SpaceLayout {
    block_sizes: Vec<usize>,
    offsets: Vec<usize>,
}

impl SpaceLayout {
    pub fn new(block_sizes: Vec<usize>) -> Result<Self> {
        if block_sizes.is_empty() {
            return Err(Error::InvalidInput("layout needs at least one block".into()));
        }
        if let Some(i) = block_sizes.iter().position(|&k| k == 0) {
            return Err(Error::InvalidInput(format!("block {i} has size 0")));
        }
        let mut offsets = Vec::with_capacity(block_sizes.len() + 1);
        offsets.push(0);
        for &k in &block_sizes {
            offsets.push(offsets.last().unwrap() + k);
        }
        Ok(Self { block_sizes, offsets })
    }

    /// `m` blocks of size 1: the classical vector-frame layout.
    pub fn uniform(m: usize, k: usize) -> Result<Self> {
        Self::new(vec![k; m])
    }

    pub fn block_sizes(&self) -> &[usize] {
        &self.block_sizes
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn len(&self) -> usize {
        self.block_sizes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.block_sizes.is_empty()
    }

    /// `K = Σ kᵢ`.
    pub fn total(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn size(&self, i: usize) -> usize {
        self.block_sizes[i]
    }

    pub fn range(&self, i: usize) -> Result<Range<usize>> {
        self.check_index(i)?;
        Ok(self.offsets[i]..self.offsets[i + 1])
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i < self.len() {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange {
                index: i,
                count: self.len(),
            })
        }
    }

    /// `ιᵢ`: place a `kᵢ × c` block into block row `i` of a zero `K × c` matrix.
    pub fn embed(&self, i: usize, x: &CMatrix) -> Result<CMatrix> {
        let range = self.range(i)?;
        if x.nrows() != range.len() {
            return Err(Error::ShapeMismatch(format!(
                "block {i} has {} rows, got {}",
                range.len(),
                x.nrows()
            )));
        }
        let mut out = CMatrix::zeros(self.total(), x.ncols());
        out.rows_mut(range.start, range.len()).copy_from(x);
        Ok(out)
    }

    /// `πᵢ`: the block rows of component `i`.
    pub fn extract(&self, i: usize, x: &CMatrix) -> Result<CMatrix> {
        let range = self.range(i)?;
        if x.nrows() != self.total() {
            return Err(Error::ShapeMismatch(format!(
                "stacked object must have {} rows, got {}",
                self.total(),
                x.nrows()
            )));
        }
        Ok(x.rows(range.start, range.len()).into_owned())
    }

    /// Split a `K × c` matrix into its block rows.
    pub fn split(&self, x: &CMatrix) -> Result<Vec<CMatrix>> {
        (0..self.len()).map(|i| self.extract(i, x)).collect()
    }

    /// Vertically stack `kᵢ × c` blocks into a `K × c` matrix.
    pub fn stack(&self, blocks: &[CMatrix]) -> Result<CMatrix> {
        if blocks.len() != self.len() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} blocks, got {}",
                self.len(),
                blocks.len()
            )));
        }
        let cols = blocks[0].ncols();
        let mut out = CMatrix::zeros(self.total(), cols);
        for (i, b) in blocks.iter().enumerate() {
            if b.nrows() != self.block_sizes[i] || b.ncols() != cols {
                return Err(Error::ShapeMismatch(format!(
                    "block {i} should be {}x{cols}, got {}x{}",
                    self.block_sizes[i],
                    b.nrows(),
                    b.ncols()
                )));
            }
            out.rows_mut(self.offsets[i], b.nrows()).copy_from(b);
        }
        Ok(out)
    }
}
