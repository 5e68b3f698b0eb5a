//! Sparse and smooth perturbation explanations for image classifiers.
//!
//! The crate bundles everything needed to generate and judge pixel-wise
//! explanation masks for grayscale image classifiers:
//!
//! * [`grid`] — the dense 2-D grid type shared by images, masks and maps,
//!   with PGM / FGRID file I/O in [`io`].
//! * [`model`] — a from-scratch differentiable CNN (conv / maxpool / relu /
//!   dense / softmax) with input gradients, an Adam trainer, IDX dataset
//!   loading and weight serialization.
//! * [`ssplain`] — the mask solver: an ADMM loop combining a cross-entropy
//!   masking loss, a total-variation smoothness term and hard support /
//!   sparsity / box constraints enforced by Euclidean projections.
//! * [`baselines`] — comparator explainers: saliency, input×gradient,
//!   integrated gradients and occlusion.
//! * [`eval`] — insertion/deletion sweeps, normalized sparsity, connected
//!   components, curvature/dilation similarity and the model-randomization
//!   sanity check.

pub mod baselines;
pub mod error;
pub mod eval;
pub mod grid;
pub mod io;
pub mod model;
pub mod rng;
pub mod ssplain;

pub use error::{Error, Result};
pub use grid::{Grid, Support};
