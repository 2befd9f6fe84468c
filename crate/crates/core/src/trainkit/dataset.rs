use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::imagekit::{bicubic_resize, ImageGrid};

/// A pre-upsampled network input and its ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainPair {
    pub input: ImageGrid,
    pub target: ImageGrid,
}

/// Bicubic down- then up-sampling by `scale`. Height and width must be
/// multiples of `scale`.
pub fn degrade(hr: &ImageGrid, scale: usize) -> Result<ImageGrid> {
    if scale == 0 || !hr.height().is_multiple_of(scale) || !hr.width().is_multiple_of(scale) {
        return Err(Error::InvalidDimensions(format!(
            "{}x{} is not divisible by scale {scale}",
            hr.height(),
            hr.width()
        )));
    }
    let lr = bicubic_resize(hr, 1.0 / scale as f64)?;
    bicubic_resize(&lr, scale as f64)
}

/// Random HR crops from a fixed image set, reproducible from
/// `(seed, epoch, batch index)`.
#[derive(Debug, Clone)]
pub struct PatchDataset {
    images: Vec<ImageGrid>,
    patch_size: usize,
    scale: usize,
    seed: u64,
    patches_per_epoch: usize,
}

impl PatchDataset {
    /// Images are normalized to `[0, 1]` on the way in.
    pub fn new(
        images: Vec<ImageGrid>,
        patch_size: usize,
        scale: usize,
        seed: u64,
        patches_per_epoch: usize,
    ) -> Result<Self> {
        if images.is_empty() {
            return Err(Error::InvalidArgument("dataset has no images".into()));
        }
        if scale == 0 || patch_size == 0 || !patch_size.is_multiple_of(scale) {
            return Err(Error::InvalidArgument(format!(
                "patch size {patch_size} must be a positive multiple of scale {scale}"
            )));
        }
        if patches_per_epoch == 0 {
            return Err(Error::InvalidArgument(
                "epoch needs at least one patch".into(),
            ));
        }
        let channels = images[0].channels();
        for (i, img) in images.iter().enumerate() {
            if img.height() < patch_size || img.width() < patch_size {
                return Err(Error::InvalidDimensions(format!(
                    "image {i} is {}x{}, smaller than the {patch_size}px patch",
                    img.height(),
                    img.width()
                )));
            }
            if img.channels() != channels {
                return Err(Error::ShapeMismatch(format!(
                    "image {i} has {} channels, image 0 has {channels}",
                    img.channels()
                )));
            }
        }
        let images = images
            .iter()
            .map(ImageGrid::normalized)
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            images,
            patch_size,
            scale,
            seed,
            patches_per_epoch,
        })
    }

    pub fn images(&self) -> &[ImageGrid] {
        &self.images
    }

    pub fn channels(&self) -> usize {
        self.images[0].channels()
    }

    pub fn patch_size(&self) -> usize {
        self.patch_size
    }

    pub fn scale(&self) -> usize {
        self.scale
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn patches_per_epoch(&self) -> usize {
        self.patches_per_epoch
    }

    pub fn batches_per_epoch(&self, batch: usize) -> usize {
        self.patches_per_epoch.div_ceil(batch.max(1))
    }

    /// The `index`-th batch of `epoch`. Each call re-derives its random
    /// stream, so batches can be drawn in any order.
    pub fn sample_batch(&self, epoch: usize, index: usize, batch: usize) -> Result<Vec<TrainPair>> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(((epoch as u64) << 32) ^ index as u64);
        let p = self.patch_size;
        (0..batch)
            .map(|_| {
                let img = &self.images[rng.gen_range(0..self.images.len())];
                let top = rng.gen_range(0..=img.height() - p);
                let left = rng.gen_range(0..=img.width() - p);
                let target = img.crop(top, left, p, p)?;
                let input = degrade(&target, self.scale)?;
                Ok(TrainPair { input, target })
            })
            .collect()
    }
}
