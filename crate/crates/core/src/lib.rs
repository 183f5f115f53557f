//! Two-step NR+FR image quality assessment.
//!
//! A full-reference metric (MS-SSIM) scores a compressed image against its
//! source, a no-reference metric (NIQE) scores the source itself, and a
//! product fusion combines the two into a single prediction that stays
//! honest when the "reference" was never pristine to begin with.
//!
//! The crate is organised around a handful of small modules:
//!
//! - [`image_io`]: decoding into a canonical luminance plane, JPEG encoding
//! - [`kernels`]: separable Gaussian convolution, local moments, dyadic
//!   downsampling shared by both metric engines
//! - [`fr`]: PSNR, SSIM and MS-SSIM
//! - [`nr`]: the NIQE engine (MSCN transform, GGD/AGGD fits, pristine
//!   model training and scoring)
//! - [`fusion`]: the two-step product models and the rescaled variant
//! - [`eval`]: SROCC/PCC, logistic mapping, content-disjoint split protocol
//! - [`synth`]: deterministic procedural scenes used by tests, benches and
//!   the bundled model trainer
//!
//! Batch-oriented inner loops (convolution rows, per-image feature
//! extraction, per-split evaluation) run on rayon when the default
//! `parallel` feature is enabled and fall back to plain sequential
//! iteration without it. Both paths produce identical results.

pub mod error;
pub mod eval;
pub mod fr;
pub mod fusion;
pub mod image_io;
pub mod kernels;
pub mod nr;
pub mod par;
pub mod synth;

pub use error::{Error, Result};
pub use image_io::LumaImage;
