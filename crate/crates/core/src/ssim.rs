//! Structural similarity: Gaussian-weighted local statistics, the per-pixel
//! similarity map and its mean.
//!
//! Local means, variances and the covariance are weighted statistics with the
//! normalized Gaussian window as the probability mass. The map is computed by
//! separable filtering of the five moment fields (`x`, `y`, `x²`, `y²`, `xy`)
//! with mirror padding, so it has the same size as its inputs.

use crate::error::{Error, Result};
use crate::imagekit::{reflect_index, to_luminance, ImageGrid, PatchView};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SsimConfig {
    pub window_size: usize,
    pub window_sigma: f64,
    pub k1: f64,
    pub k2: f64,
    pub dynamic_range: f64,
}

impl Default for SsimConfig {
    fn default() -> Self {
        Self {
            window_size: 11,
            window_sigma: 1.5,
            k1: 0.01,
            k2: 0.03,
            dynamic_range: 1.0,
        }
    }
}

impl SsimConfig {
    /// Default window and constants for data spanning `dynamic_range`.
    pub fn for_range(dynamic_range: f64) -> Self {
        Self {
            dynamic_range,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.window_size < 3 || self.window_size.is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!(
                "SSIM window must be odd and >= 3, got {}",
                self.window_size
            )));
        }
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.window_sigma) {
            return Err(Error::InvalidArgument(format!(
                "SSIM window sigma must be positive, got {}",
                self.window_sigma
            )));
        }
        if !positive(self.k1) || !positive(self.k2) || !positive(self.dynamic_range) {
            return Err(Error::InvalidArgument(format!(
                "k1, k2 and dynamic range must be positive: {}, {}, {}",
                self.k1, self.k2, self.dynamic_range
            )));
        }
        Ok(())
    }

    /// `(k1 L)²`
    pub fn c1(&self) -> f64 {
        (self.k1 * self.dynamic_range).powi(2)
    }

    /// `(k2 L)²`
    pub fn c2(&self) -> f64 {
        (self.k2 * self.dynamic_range).powi(2)
    }
}

/// Normalized 1-D Gaussian taps; the 2-D window is their outer product.
pub fn gaussian_taps(size: usize, sigma: f64) -> Result<Vec<f64>> {
    if size.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "window size must be odd, got {size}"
        )));
    }
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "window sigma must be positive, got {sigma}"
        )));
    }
    let radius = (size / 2) as f64;
    let mut taps: Vec<f64> = (0..size)
        .map(|i| {
            let d = i as f64 - radius;
            (-d * d / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= sum);
    Ok(taps)
}

/// Circular-symmetric `size × size` Gaussian window, row-major, summing to 1.
pub fn gaussian_window(size: usize, sigma: f64) -> Result<Vec<f64>> {
    let taps = gaussian_taps(size, sigma)?;
    let mut window: Vec<f64> = taps
        .iter()
        .flat_map(|&a| taps.iter().map(move |&b| a * b))
        .collect();
    let sum: f64 = window.iter().sum();
    window.iter_mut().for_each(|w| *w /= sum);
    Ok(window)
}

/// SSIM of the luminance, contrast and structure terms given local
/// statistics. Symmetric in its two arguments bit for bit.
#[inline]
fn ssim_from_stats(
    mu_x: f64,
    mu_y: f64,
    var_x: f64,
    var_y: f64,
    cov: f64,
    c1: f64,
    c2: f64,
) -> f64 {
    let num = (2.0 * mu_x * mu_y + c1) * (2.0 * cov + c2);
    let den = (mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2);
    (num / den).clamp(-1.0, 1.0)
}

/// SSIM between two single-channel windows, weighting every sample by the
/// Gaussian window of `cfg`.
pub fn ssim_patch(ps: &PatchView, ph: &PatchView, cfg: &SsimConfig) -> Result<f64> {
    cfg.validate()?;
    if ps.size != cfg.window_size || ph.size != cfg.window_size {
        return Err(Error::ShapeMismatch(format!(
            "patch sizes {} and {} vs window {}",
            ps.size, ph.size, cfg.window_size
        )));
    }
    if ps.channels() != 1 || ph.channels() != 1 {
        return Err(Error::ShapeMismatch(format!(
            "SSIM patches must be single-channel, got {} and {}",
            ps.channels(),
            ph.channels()
        )));
    }
    let window = gaussian_window(cfg.window_size, cfg.window_sigma)?;
    let (x, y) = (ps.plane(0), ph.plane(0));
    let weighted_mean = |v: &[f64]| -> f64 { window.iter().zip(v).map(|(w, a)| w * a).sum() };
    let mu_x = weighted_mean(x);
    let mu_y = weighted_mean(y);
    let mut var_x = 0.0;
    let mut var_y = 0.0;
    let mut cov = 0.0;
    for ((&w, &a), &b) in window.iter().zip(x).zip(y) {
        let (da, db) = (a - mu_x, b - mu_y);
        var_x += w * da * da;
        var_y += w * db * db;
        cov += w * (da * db);
    }
    // `cov` is accumulated from commuting products, so swapping the inputs
    // swaps var_x/var_y and leaves the result bit-identical.
    Ok(ssim_from_stats(
        mu_x,
        mu_y,
        var_x,
        var_y,
        cov,
        cfg.c1(),
        cfg.c2(),
    ))
}

/// Separable Gaussian filter of a single plane with mirror padding.
fn filter_plane(plane: &[f64], height: usize, width: usize, taps: &[f64]) -> Vec<f64> {
    let radius = (taps.len() / 2) as isize;
    let mut horizontal = vec![0.0; plane.len()];
    for r in 0..height {
        let row = &plane[r * width..(r + 1) * width];
        let out = &mut horizontal[r * width..(r + 1) * width];
        for (c, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (k, &t) in taps.iter().enumerate() {
                acc += t * row[reflect_index(c as isize + k as isize - radius, width)];
            }
            *o = acc;
        }
    }
    let mut out = vec![0.0; plane.len()];
    for (k, &t) in taps.iter().enumerate() {
        for r in 0..height {
            let src = reflect_index(r as isize + k as isize - radius, height);
            let line = &horizontal[src * width..(src + 1) * width];
            for (o, &v) in out[r * width..(r + 1) * width].iter_mut().zip(line) {
                *o += t * v;
            }
        }
    }
    out
}

fn luminance_plane(grid: &ImageGrid) -> Result<ImageGrid> {
    match grid.channels() {
        1 => Ok(grid.clone()),
        _ => to_luminance(grid),
    }
}

/// Per-pixel SSIM map with the same height and width as the inputs.
///
/// RGB inputs are reduced to luminance first. Entry `(r, c)` is the SSIM of
/// the windows centred on `(r, c)`, mirror padded at the borders.
pub fn ssim_map(sr: &ImageGrid, hr: &ImageGrid, cfg: &SsimConfig) -> Result<ImageGrid> {
    cfg.validate()?;
    sr.ensure_same_shape(hr, "ssim_map inputs")?;
    let x = luminance_plane(sr)?;
    let y = luminance_plane(hr)?;
    let (h, w) = (x.height(), x.width());
    let taps = gaussian_taps(cfg.window_size, cfg.window_sigma)?;

    let xs = x.data();
    let ys = y.data();
    let xx: Vec<f64> = xs.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = ys.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = xs.iter().zip(ys).map(|(a, b)| a * b).collect();

    let mu_x = filter_plane(xs, h, w, &taps);
    let mu_y = filter_plane(ys, h, w, &taps);
    let e_xx = filter_plane(&xx, h, w, &taps);
    let e_yy = filter_plane(&yy, h, w, &taps);
    let e_xy = filter_plane(&xy, h, w, &taps);

    let (c1, c2) = (cfg.c1(), cfg.c2());
    let map = (0..h * w)
        .map(|i| {
            let (mx, my) = (mu_x[i], mu_y[i]);
            ssim_from_stats(
                mx,
                my,
                e_xx[i] - mx * mx,
                e_yy[i] - my * my,
                e_xy[i] - mx * my,
                c1,
                c2,
            )
        })
        .collect();
    ImageGrid::new(h, w, 1, map, 1.0)
}

/// Arithmetic mean of [`ssim_map`].
pub fn mean_ssim(sr: &ImageGrid, hr: &ImageGrid, cfg: &SsimConfig) -> Result<f64> {
    let map = ssim_map(sr, hr, cfg)?;
    Ok(mean_of(map.data()))
}

pub(crate) fn mean_of(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}
