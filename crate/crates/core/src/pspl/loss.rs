use crate::error::{Error, Result};
use crate::imagekit::ImageGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LossKind {
    L1,
    L2,
}

impl std::str::FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l1" => Ok(LossKind::L1),
            "l2" => Ok(LossKind::L2),
            other => Err(Error::InvalidArgument(format!(
                "unknown loss {other:?}, expected l1 or l2"
            ))),
        }
    }
}

impl std::fmt::Display for LossKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LossKind::L1 => "l1",
            LossKind::L2 => "l2",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossOutput {
    pub loss: f64,
    /// d loss / d sr, same shape as `sr`.
    pub gradient: ImageGrid,
}

/// Mean L1/L2 distance between `ma ⊙ sr` and `ma ⊙ hr`.
///
/// `ma` is single-channel and broadcast over the color channels. It is a
/// constant here: the gradient is taken with respect to `sr` only.
pub fn weighted_loss(
    sr: &ImageGrid,
    hr: &ImageGrid,
    ma: &ImageGrid,
    kind: LossKind,
) -> Result<LossOutput> {
    sr.ensure_same_shape(hr, "loss inputs")?;
    if ma.channels() != 1 || ma.height() != sr.height() || ma.width() != sr.width() {
        return Err(Error::ShapeMismatch(format!(
            "attention map {}x{}x{} does not cover {}x{}",
            ma.height(),
            ma.width(),
            ma.channels(),
            sr.height(),
            sr.width()
        )));
    }
    let channels = sr.channels();
    let n = sr.len() as f64;
    let mut total = 0.0;
    let mut grad = Vec::with_capacity(sr.len());
    for (i, (&s, &h)) in sr.data().iter().zip(hr.data()).enumerate() {
        let w = ma.data()[i / channels];
        let r = w * s - w * h;
        match kind {
            LossKind::L1 => {
                total += r.abs();
                grad.push(w * sign(s - h) / n);
            }
            LossKind::L2 => {
                total += r * r;
                grad.push(2.0 * w * r / n);
            }
        }
    }
    Ok(LossOutput {
        loss: total / n,
        gradient: ImageGrid::new(sr.height(), sr.width(), channels, grad, sr.dynamic_range())?,
    })
}

/// Unweighted loss: [`weighted_loss`] with an all-ones attention map.
pub fn plain_loss(sr: &ImageGrid, hr: &ImageGrid, kind: LossKind) -> Result<LossOutput> {
    let ones = ImageGrid::filled(sr.height(), sr.width(), 1, 1.0, 1.0)?;
    weighted_loss(sr, hr, &ones, kind)
}

#[inline]
fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}
