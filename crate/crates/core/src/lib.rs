//! Pixel-level self-paced learning (PSPL) for single-image super-resolution.
//!
//! The crate is split along the training data flow:
//!
//! * [`imagekit`]: the [`ImageGrid`] raster, bicubic resampling, patch
//!   extraction and PNG/PFM file I/O.
//! * [`ssim`]: per-pixel SSIM similarity maps and scalar SSIM scores.
//! * [`pspl`]: the decaying Gaussian attention schedule and the
//!   attention-weighted L1/L2 losses with analytic gradients.
//! * [`tinysr`]: a small residual convolutional SR network with hand-written
//!   forward/backward passes, Adam and checkpointing.
//! * [`trainkit`]: patch sampling, the training loop with and without PSPL,
//!   PSNR/SSIM evaluation and the epochs-to-threshold benchmark.

pub mod error;
pub mod imagekit;
pub mod pspl;
pub mod ssim;
pub mod tinysr;
pub mod trainkit;

pub use error::{Error, Result};
pub use imagekit::{ImageGrid, PatchView};
pub use pspl::{AttentionSchedule, LossKind};
pub use ssim::SsimConfig;
pub use tinysr::{AdamState, Architecture, ConvSpec, GradientSet, SrModel};
pub use trainkit::{PatchDataset, TrainConfig, TrainRecord};
