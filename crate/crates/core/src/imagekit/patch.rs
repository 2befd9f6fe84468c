use super::ImageGrid;
use crate::error::{Error, Result};

/// A square window cut out of an [`ImageGrid`], one `size × size` block per
/// channel.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchView {
    /// Top-left corner in parent coordinates; negative when the window hangs
    /// over the border.
    pub origin: (isize, isize),
    pub size: usize,
    /// `values[channel][row * size + col]`.
    pub values: Vec<Vec<f64>>,
}

impl PatchView {
    pub fn channels(&self) -> usize {
        self.values.len()
    }

    /// Values of a single-channel patch.
    pub fn plane(&self, channel: usize) -> &[f64] {
        &self.values[channel]
    }
}

/// Mirror an out-of-range index back into `0..len` without repeating the edge
/// sample: `-1 -> 1`, `len -> len - 2`. Offsets larger than the image reflect
/// repeatedly.
#[inline]
pub fn reflect_index(index: isize, len: usize) -> usize {
    if len == 1 {
        return 0;
    }
    let period = 2 * (len as isize - 1);
    let m = index.rem_euclid(period);
    if m >= len as isize {
        (period - m) as usize
    } else {
        m as usize
    }
}

/// Extract the `size × size` window centred on `center`, mirror-padding
/// samples that fall outside the grid.
pub fn extract_patch(grid: &ImageGrid, center: (usize, usize), size: usize) -> Result<PatchView> {
    if size.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "patch size must be odd, got {size}"
        )));
    }
    let (row, col) = center;
    if row >= grid.height() || col >= grid.width() {
        return Err(Error::InvalidArgument(format!(
            "patch center ({row},{col}) outside {}x{}",
            grid.height(),
            grid.width()
        )));
    }
    let radius = (size / 2) as isize;
    let top = row as isize - radius;
    let left = col as isize - radius;
    let mut values = vec![Vec::with_capacity(size * size); grid.channels()];
    for dy in 0..size as isize {
        let r = reflect_index(top + dy, grid.height());
        for dx in 0..size as isize {
            let c = reflect_index(left + dx, grid.width());
            for (ch, plane) in values.iter_mut().enumerate() {
                plane.push(grid.get(r, c, ch));
            }
        }
    }
    Ok(PatchView {
        origin: (top, left),
        size,
        values,
    })
}
