//! Trainable nonparametric clustering for chunk-wise speaker diarization.
//!
//! The crate centers on a truncated variational-Bayes infinite Gaussian
//! mixture whose EM iterations are unrolled into a differentiable computation
//! graph, so the upstream embedding extractor can be trained through the
//! clustering step with a continuous adjusted-Rand-index loss. Around that
//! core sit a desk-scale synthetic diarization pipeline (chunking, a toy
//! encoder, cross-chunk stitching) and scoring utilities (DER with collar,
//! RTTM I/O, a constrained agglomerative baseline).
//!
//! Module map:
//! - [`numerics`]: digamma/trigamma and stable log-probability normalization
//! - [`autodiff`]: scalar reverse-mode tape and the [`autodiff::Scalar`]
//!   abstraction shared by plain and differentiable execution
//! - [`igmm`]: generative sampling, VB E/M steps, unfolded inference
//! - [`losses`]: permutation-invariant BCE, continuous ARI, speaker-ID loss
//! - [`pipeline`]: synthetic recordings, chunking, encoder, training, stitching
//! - [`eval`]: DER scoring, RTTM, constrained AHC baseline

pub mod autodiff;
pub mod error;
pub mod numerics;
pub mod rng;

pub use error::{Error, Result};
