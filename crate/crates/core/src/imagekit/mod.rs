//! Raster container, resampling, patch extraction and file I/O.

mod io;
mod patch;
mod resize;

pub use io::{load_pfm, load_png, save_pfm, save_png};
pub use patch::{extract_patch, reflect_index, PatchView};
pub use resize::{bicubic_resize, catmull_rom};

use crate::error::{Error, Result};

/// Dense `height × width × channels` raster of `f64` samples stored in
/// row-major `(row, column, channel)` order.
///
/// `dynamic_range` is the span of valid sample values (`L`): 255 for 8-bit
/// data, 1 for normalized data. Every constructor rejects NaN/Inf.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageGrid {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<f64>,
    dynamic_range: f64,
}

impl ImageGrid {
    pub fn new(
        height: usize,
        width: usize,
        channels: usize,
        data: Vec<f64>,
        dynamic_range: f64,
    ) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidDimensions(format!(
                "{height}x{width} has no pixels"
            )));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidDimensions(format!(
                "{channels} channels, expected 1 or 3"
            )));
        }
        let expected = height * width * channels;
        if data.len() != expected {
            return Err(Error::InvalidDimensions(format!(
                "data length {} != {height}x{width}x{channels}",
                data.len()
            )));
        }
        if !(dynamic_range.is_finite() && dynamic_range > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "dynamic range must be positive and finite, got {dynamic_range}"
            )));
        }
        check_finite(&data)?;
        Ok(Self {
            height,
            width,
            channels,
            data,
            dynamic_range,
        })
    }

    pub fn filled(
        height: usize,
        width: usize,
        channels: usize,
        value: f64,
        dynamic_range: f64,
    ) -> Result<Self> {
        Self::new(
            height,
            width,
            channels,
            vec![value; height * width * channels],
            dynamic_range,
        )
    }

    /// Builds a grid by evaluating `f(row, col, channel)` for every sample.
    pub fn from_fn(
        height: usize,
        width: usize,
        channels: usize,
        dynamic_range: f64,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(height * width * channels);
        for r in 0..height {
            for c in 0..width {
                for ch in 0..channels {
                    data.push(f(r, c, ch));
                }
            }
        }
        Self::new(height, width, channels, data, dynamic_range)
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.channels
    }

    #[inline]
    pub fn dynamic_range(&self) -> f64 {
        self.dynamic_range
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn index(&self, row: usize, col: usize, channel: usize) -> usize {
        (row * self.width + col) * self.channels + channel
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize, channel: usize) -> f64 {
        self.data[self.index(row, col, channel)]
    }

    pub fn same_shape(&self, other: &ImageGrid) -> bool {
        self.height == other.height && self.width == other.width && self.channels == other.channels
    }

    pub(crate) fn ensure_same_shape(&self, other: &ImageGrid, what: &str) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::ShapeMismatch(format!(
                "{what}: {}x{}x{} vs {}x{}x{}",
                self.height, self.width, self.channels, other.height, other.width, other.channels
            )))
        }
    }

    /// Applies `f` to every sample, keeping shape and dynamic range.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<ImageGrid> {
        let data = self.data.iter().map(|&v| f(v)).collect();
        Self::new(
            self.height,
            self.width,
            self.channels,
            data,
            self.dynamic_range,
        )
    }

    /// Multiplies every sample and the dynamic range by `factor`.
    pub fn rescaled(&self, factor: f64) -> Result<ImageGrid> {
        let data = self.data.iter().map(|&v| v * factor).collect();
        Self::new(
            self.height,
            self.width,
            self.channels,
            data,
            self.dynamic_range * factor,
        )
    }

    /// Maps values onto `[0, 1]` by dividing by the dynamic range.
    pub fn normalized(&self) -> Result<ImageGrid> {
        self.rescaled(1.0 / self.dynamic_range)
    }

    pub fn clamped(&self) -> ImageGrid {
        let l = self.dynamic_range;
        ImageGrid {
            data: self.data.iter().map(|&v| v.clamp(0.0, l)).collect(),
            ..self.clone()
        }
    }

    /// Copies the `height × width` window whose top-left corner is `(top, left)`.
    pub fn crop(&self, top: usize, left: usize, height: usize, width: usize) -> Result<ImageGrid> {
        if top + height > self.height || left + width > self.width {
            return Err(Error::InvalidDimensions(format!(
                "crop {height}x{width} at ({top},{left}) exceeds {}x{}",
                self.height, self.width
            )));
        }
        let mut data = Vec::with_capacity(height * width * self.channels);
        for r in top..top + height {
            let start = self.index(r, left, 0);
            data.extend_from_slice(&self.data[start..start + width * self.channels]);
        }
        Self::new(height, width, self.channels, data, self.dynamic_range)
    }

    /// Extracts one channel as a single-channel grid.
    pub fn channel(&self, channel: usize) -> Result<ImageGrid> {
        if channel >= self.channels {
            return Err(Error::InvalidArgument(format!(
                "channel {channel} out of range for {} channels",
                self.channels
            )));
        }
        let data = self
            .data
            .iter()
            .skip(channel)
            .step_by(self.channels)
            .copied()
            .collect();
        Self::new(self.height, self.width, 1, data, self.dynamic_range)
    }

    pub fn with_dynamic_range(mut self, dynamic_range: f64) -> Result<ImageGrid> {
        if !(dynamic_range.is_finite() && dynamic_range > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "dynamic range must be positive and finite, got {dynamic_range}"
            )));
        }
        self.dynamic_range = dynamic_range;
        Ok(self)
    }
}

pub(crate) fn check_finite(data: &[f64]) -> Result<()> {
    match data.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite {
            index,
            value: data[index],
        }),
        None => Ok(()),
    }
}

/// ITU-R BT.601 luma: `Y = 0.299 R + 0.587 G + 0.114 B`.
pub fn to_luminance(grid: &ImageGrid) -> Result<ImageGrid> {
    if grid.channels() != 3 {
        return Err(Error::InvalidArgument(format!(
            "luminance needs 3 channels, got {}",
            grid.channels()
        )));
    }
    let data = grid
        .data()
        .chunks_exact(3)
        .map(|p| {
            let y = 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2];
            // A convex combination; rounding must not leave the channel hull.
            let lo = p[0].min(p[1]).min(p[2]);
            let hi = p[0].max(p[1]).max(p[2]);
            y.clamp(lo, hi)
        })
        .collect();
    ImageGrid::new(grid.height(), grid.width(), 1, data, grid.dynamic_range())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_construction() {
        assert!(ImageGrid::new(2, 2, 1, vec![0.0; 3], 1.0).is_err());
        assert!(ImageGrid::new(2, 2, 2, vec![0.0; 8], 1.0).is_err());
        assert!(ImageGrid::new(1, 1, 1, vec![0.0], 0.0).is_err());
        assert!(ImageGrid::new(0, 1, 1, vec![], 1.0).is_err());
        assert!(matches!(
            ImageGrid::new(1, 2, 1, vec![0.0, f64::NAN], 1.0),
            Err(Error::NonFinite { index: 1, .. })
        ));
        assert!(ImageGrid::new(1, 1, 1, vec![f64::INFINITY], 1.0).is_err());
    }

    #[test]
    fn luminance_anchors() {
        let white = ImageGrid::filled(2, 2, 3, 255.0, 255.0).unwrap();
        let y = to_luminance(&white).unwrap();
        assert_eq!(y.channels(), 1);
        assert_eq!(y.dynamic_range(), 255.0);
        for &v in y.data() {
            assert_eq!(v, 255.0);
        }

        let red = ImageGrid::new(1, 1, 3, vec![255.0, 0.0, 0.0], 255.0).unwrap();
        assert!((to_luminance(&red).unwrap().data()[0] - 76.245).abs() < 1e-9);

        let gray = ImageGrid::new(1, 1, 3, vec![0.3, 0.3, 0.3], 1.0).unwrap();
        assert_eq!(to_luminance(&gray).unwrap().data()[0], 0.3);

        let single = ImageGrid::filled(1, 1, 1, 0.0, 1.0).unwrap();
        assert!(to_luminance(&single).is_err());
    }

    #[test]
    fn crop_and_channel() {
        let g =
            ImageGrid::from_fn(3, 4, 3, 1.0, |r, c, ch| (r * 100 + c * 10 + ch) as f64).unwrap();
        let c = g.crop(1, 2, 2, 2).unwrap();
        assert_eq!(c.get(0, 0, 1), 121.0);
        assert_eq!(c.get(1, 1, 2), 232.0);
        assert!(g.crop(2, 0, 2, 1).is_err());
        let ch = g.channel(2).unwrap();
        assert_eq!(ch.get(2, 3, 0), 232.0);
    }

    proptest::proptest! {
        #[test]
        fn luminance_stays_in_range(
            px in proptest::collection::vec(0.0f64..=255.0, 3 * 12)
        ) {
            let g = ImageGrid::new(3, 4, 3, px, 255.0).unwrap();
            let y = to_luminance(&g).unwrap();
            for &v in y.data() {
                proptest::prop_assert!((0.0..=255.0).contains(&v));
            }
        }
    }
}
