//! Numerical toolkit for generalized g-frame multipliers on finite-dimensional
//! Hilbert spaces.
//!
//! A g-frame is a finite family of operators `Λᵢ : ℂⁿ → ℂ^{kᵢ}`; the multiplier
//! with block-diagonal symbol `U = diag{uᵢ}` is `M = Σ Λᵢ* uᵢ Γᵢ`. The crate
//! assembles and inverts such multipliers, builds the dual and perturbed frames
//! that represent or preserve them, and checks every accompanying bound by
//! direct computation.
//!
//! Module map:
//! - [`opspace`]: dense complex matrices, SVD, Hermitian eigensolver, pseudoinverse,
//!   projectors and the stacked-space layout.
//! - [`gframe`]: frames, their synthesis/analysis/frame operators, bounds and duals.
//! - [`symbol`]: block-diagonal symbols.
//! - [`multiplier`]: assembly, invertibility analysis and the frame constructions
//!   that produce a prescribed multiplier.
//! - [`dualizer`]: the unique dual that represents the inverse multiplier.
//! - [`perturb`]: multiplier-preserving transfer under perturbation and the
//!   sufficient invertibility condition.
//! - [`cli`]: instance/report file formats and the `gmult` command implementations.

pub mod cli;
pub mod dualizer;
pub mod error;
pub mod gframe;
pub mod multiplier;
pub mod opspace;
pub mod perturb;
pub mod symbol;

pub use error::{Error, Result};
pub use gframe::{Classification, FrameBounds, GFrame};
pub use opspace::{CMatrix, SpaceLayout, Tolerances, C64};
pub use symbol::Symbol;
