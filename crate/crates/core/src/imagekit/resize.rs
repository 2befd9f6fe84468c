use super::ImageGrid;
use crate::error::{Error, Result};

const CUBIC_A: f64 = -0.5;

/// Keys cubic convolution kernel with `a = -0.5` (Catmull-Rom).
#[inline]
pub fn catmull_rom(x: f64) -> f64 {
    let x = x.abs();
    if x <= 1.0 {
        ((CUBIC_A + 2.0) * x - (CUBIC_A + 3.0)) * x * x + 1.0
    } else if x < 2.0 {
        ((CUBIC_A * x - 5.0 * CUBIC_A) * x + 8.0 * CUBIC_A) * x - 4.0 * CUBIC_A
    } else {
        0.0
    }
}

/// Source taps and normalized weights for one output sample.
struct Contribution {
    first: isize,
    weights: Vec<f64>,
}

fn contributions(out_len: usize, scale: f64) -> Vec<Contribution> {
    // Downscaling stretches the kernel by 1/scale so it also low-passes.
    let stretch = if scale < 1.0 { scale } else { 1.0 };
    let support = 2.0 / stretch;
    (0..out_len)
        .map(|o| {
            let center = (o as f64 + 0.5) / scale - 0.5;
            let first = (center - support).floor() as isize;
            let last = (center + support).ceil() as isize;
            let mut weights: Vec<f64> = (first..=last)
                .map(|i| catmull_rom((center - i as f64) * stretch))
                .collect();
            let sum: f64 = weights.iter().sum();
            for w in &mut weights {
                *w /= sum;
            }
            Contribution { first, weights }
        })
        .collect()
}

#[inline]
fn clamp_index(i: isize, len: usize) -> usize {
    i.clamp(0, len as isize - 1) as usize
}

/// Resample `grid` by `scale` with a separable Catmull-Rom kernel.
///
/// Output size is `round(height * scale) × round(width * scale)`; samples
/// outside the source repeat the nearest edge pixel. When shrinking, the
/// kernel is widened by `1 / scale` (antialiasing), the usual bicubic
/// degradation for super-resolution training pairs.
pub fn bicubic_resize(grid: &ImageGrid, scale: f64) -> Result<ImageGrid> {
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "resize scale must be positive, got {scale}"
        )));
    }
    let out_h = (grid.height() as f64 * scale).round() as usize;
    let out_w = (grid.width() as f64 * scale).round() as usize;
    if out_h == 0 || out_w == 0 {
        return Err(Error::InvalidDimensions(format!(
            "resizing {}x{} by {scale} leaves no pixels",
            grid.height(),
            grid.width()
        )));
    }
    let channels = grid.channels();
    let (in_h, in_w) = (grid.height(), grid.width());

    // Horizontal pass: in_h x out_w.
    let cols = contributions(out_w, scale);
    let mut tmp = vec![0.0; in_h * out_w * channels];
    let src = grid.data();
    for r in 0..in_h {
        let row = &src[r * in_w * channels..(r + 1) * in_w * channels];
        for (o, contrib) in cols.iter().enumerate() {
            let dst = &mut tmp[(r * out_w + o) * channels..(r * out_w + o + 1) * channels];
            for (k, &w) in contrib.weights.iter().enumerate() {
                let c = clamp_index(contrib.first + k as isize, in_w);
                for ch in 0..channels {
                    dst[ch] += w * row[c * channels + ch];
                }
            }
        }
    }

    // Vertical pass: out_h x out_w.
    let rows = contributions(out_h, scale);
    let stride = out_w * channels;
    let mut out = vec![0.0; out_h * stride];
    for (o, contrib) in rows.iter().enumerate() {
        let dst = &mut out[o * stride..(o + 1) * stride];
        for (k, &w) in contrib.weights.iter().enumerate() {
            let r = clamp_index(contrib.first + k as isize, in_h);
            let line = &tmp[r * stride..(r + 1) * stride];
            for (d, &s) in dst.iter_mut().zip(line) {
                *d += w * s;
            }
        }
    }

    ImageGrid::new(out_h, out_w, channels, out, grid.dynamic_range())
}
