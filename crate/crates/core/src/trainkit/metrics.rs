use rayon::prelude::*;

use super::dataset::degrade;
use crate::error::{Error, Result};
use crate::imagekit::ImageGrid;
use crate::ssim::{mean_ssim, SsimConfig};
use crate::tinysr::SrModel;

/// Reported in place of +∞ when prediction and reference match exactly.
pub const PSNR_CAP_DB: f64 = 99.0;

/// `10 log10(L² / mse)`, capped at [`PSNR_CAP_DB`].
pub fn psnr_from_mse(mse: f64, dynamic_range: f64) -> f64 {
    if mse <= 0.0 {
        return PSNR_CAP_DB;
    }
    (10.0 * (dynamic_range * dynamic_range / mse).log10()).min(PSNR_CAP_DB)
}

pub fn mse(a: &ImageGrid, b: &ImageGrid) -> Result<f64> {
    a.ensure_same_shape(b, "mse inputs")?;
    let sum: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    Ok(sum / a.len() as f64)
}

/// PSNR of `prediction` against `reference`, using the reference's range.
pub fn psnr(prediction: &ImageGrid, reference: &ImageGrid) -> Result<f64> {
    Ok(psnr_from_mse(
        mse(prediction, reference)?,
        reference.dynamic_range(),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub psnr_db: f64,
    pub mean_ssim: f64,
}

/// Crop to the largest size divisible by `scale`.
pub(crate) fn crop_to_scale(img: &ImageGrid, scale: usize) -> Result<ImageGrid> {
    let h = img.height() - img.height() % scale;
    let w = img.width() - img.width() % scale;
    if h == 0 || w == 0 {
        return Err(Error::InvalidDimensions(format!(
            "{}x{} is smaller than scale {scale}",
            img.height(),
            img.width()
        )));
    }
    img.crop(0, 0, h, w)
}

/// Full-image PSNR and mean SSIM on `[0, 1]`-normalized data, averaged over
/// the validation set. Each image is degraded by `scale`, super-resolved
/// and clamped to the valid range; nothing is shaved from the borders.
pub fn evaluate(model: &SrModel, val_images: &[ImageGrid], scale: usize) -> Result<Evaluation> {
    evaluate_with(val_images, scale, |input| model.predict(input))
}

/// [`evaluate`] with an arbitrary predictor (e.g. plain bicubic).
pub fn evaluate_with<F>(val_images: &[ImageGrid], scale: usize, predict: F) -> Result<Evaluation>
where
    F: Fn(&ImageGrid) -> Result<ImageGrid> + Sync,
{
    if val_images.is_empty() {
        return Err(Error::InvalidArgument("validation set is empty".into()));
    }
    let cfg = SsimConfig::for_range(1.0);
    let per_image = val_images
        .par_iter()
        .map(|img| {
            let hr = crop_to_scale(&img.normalized()?, scale)?;
            let input = degrade(&hr, scale)?;
            let sr = predict(&input)?.clamped();
            Ok((psnr(&sr, &hr)?, mean_ssim(&sr, &hr, &cfg)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let n = per_image.len() as f64;
    let (p, s) = per_image
        .iter()
        .fold((0.0, 0.0), |(p, s), (pi, si)| (p + pi, s + si));
    Ok(Evaluation {
        psnr_db: p / n,
        mean_ssim: s / n,
    })
}
