//! Pixel-level self-paced attention.
//!
//! A similarity map `M_s` (values in `[-1, 1]`) is turned into an attention
//! map through a bell curve `γ · exp(-(m_s - μ)² / δ²)` whose width `δ` grows
//! linearly with the optimizer step. Early on, pixels whose similarity is far
//! from `μ = -1` get almost no weight relative to the badly reconstructed
//! ones; as `δ` grows every pixel's weight approaches `γ`.

mod loss;

pub use loss::{plain_loss, weighted_loss, LossKind, LossOutput};

use crate::error::{Error, Result};
use crate::imagekit::ImageGrid;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttentionSchedule {
    /// Peak attention.
    pub gamma: f64,
    /// Position of the peak on the similarity axis.
    pub mu: f64,
    /// Growth of `δ` per optimizer step.
    pub alpha: f64,
    /// `δ` at step 0.
    pub beta: f64,
    /// Lower clamp on `δ`; keeps step 0 with `β = 0` finite.
    pub delta_floor: f64,
}

impl Default for AttentionSchedule {
    fn default() -> Self {
        Self {
            gamma: 2.0,
            mu: -1.0,
            alpha: 1.0,
            beta: 0.0,
            delta_floor: 1e-3,
        }
    }
}

impl AttentionSchedule {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.gamma, self.mu, self.alpha, self.beta, self.delta_floor]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidArgument(format!(
                "attention schedule has non-finite parameters: {self:?}"
            )));
        }
        if self.gamma <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "gamma must be positive, got {}",
                self.gamma
            )));
        }
        if self.alpha < 0.0 || self.beta < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "alpha and beta must be non-negative, got {} and {}",
                self.alpha, self.beta
            )));
        }
        if self.delta_floor <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "delta floor must be positive, got {}",
                self.delta_floor
            )));
        }
        Ok(())
    }

    /// `max(α · step + β, delta_floor)`.
    pub fn delta_at(&self, step: u64) -> f64 {
        (self.alpha * step as f64 + self.beta).max(self.delta_floor)
    }

    /// Attention for a single similarity value at `step`.
    #[inline]
    pub fn attention_value(&self, similarity: f64, step: u64) -> f64 {
        self.attention_with_delta(similarity, self.delta_at(step))
    }

    #[inline]
    pub fn attention_with_delta(&self, similarity: f64, delta: f64) -> f64 {
        let d = (similarity - self.mu) / delta;
        self.gamma * (-d * d).exp()
    }

    /// Element-wise attention over a single-channel similarity map.
    ///
    /// Values outside `[-1, 1]` are rejected: they can only come from a
    /// broken similarity computation.
    pub fn attention_map(&self, similarity: &ImageGrid, step: u64) -> Result<ImageGrid> {
        self.attention_map_with_delta(similarity, self.delta_at(step))
    }

    pub fn attention_map_with_delta(
        &self,
        similarity: &ImageGrid,
        delta: f64,
    ) -> Result<ImageGrid> {
        self.validate()?;
        if similarity.channels() != 1 {
            return Err(Error::ShapeMismatch(format!(
                "similarity map must be single-channel, got {} channels",
                similarity.channels()
            )));
        }
        if !(delta.is_finite() && delta > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "delta must be positive, got {delta}"
            )));
        }
        let mut out = Vec::with_capacity(similarity.len());
        for (index, &value) in similarity.data().iter().enumerate() {
            if !(-1.0..=1.0).contains(&value) {
                return Err(Error::SimilarityOutOfRange { index, value });
            }
            out.push(self.attention_with_delta(value, delta));
        }
        ImageGrid::new(similarity.height(), similarity.width(), 1, out, self.gamma)
    }
}
