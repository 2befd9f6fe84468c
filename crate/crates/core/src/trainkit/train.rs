use std::time::Instant;

use rayon::prelude::*;

use super::dataset::{PatchDataset, TrainPair};
use super::metrics::{evaluate, Evaluation};
use crate::error::{Error, Result};
use crate::imagekit::ImageGrid;
use crate::pspl::{plain_loss, weighted_loss, AttentionSchedule, LossKind};
use crate::ssim::{ssim_map, SsimConfig};
use crate::tinysr::{adam_step, AdamState, Architecture, GradientSet, SrModel};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub loss: LossKind,
    pub pspl_enabled: bool,
    pub schedule: AttentionSchedule,
    pub ssim: SsimConfig,
    pub learning_rate: f64,
    /// Seeds parameter initialization.
    pub seed: u64,
    /// Validate every this many epochs (and always after the last one).
    pub validation_interval: usize,
    pub architecture: Architecture,
}

impl TrainConfig {
    pub fn new(architecture: Architecture) -> Self {
        Self {
            epochs: 40,
            batch_size: 16,
            loss: LossKind::L1,
            pspl_enabled: false,
            schedule: AttentionSchedule::default(),
            ssim: SsimConfig::for_range(1.0),
            learning_rate: 1e-3,
            seed: 0,
            validation_interval: 1,
            architecture,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 || self.validation_interval == 0 {
            return Err(Error::InvalidArgument(format!(
                "epochs ({}), batch size ({}) and validation interval ({}) must be >= 1",
                self.epochs, self.batch_size, self.validation_interval
            )));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        self.schedule.validate()?;
        self.ssim.validate()?;
        self.architecture.validate()
    }
}

/// One row of a training log.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainRecord {
    pub epoch: usize,
    /// Mean of the per-update batch losses.
    pub loss: f64,
    /// `None` on epochs without validation.
    pub psnr_db: Option<f64>,
    pub mean_ssim: Option<f64>,
    /// Attention width after the epoch's last update.
    pub delta: f64,
    /// Cumulative wall-clock time since training started.
    pub seconds: f64,
}

/// Loss and gradient contribution of a single sample.
struct SampleResult {
    loss: f64,
    grads: GradientSet,
}

fn sample_step(
    model: &SrModel,
    pair: &TrainPair,
    config: &TrainConfig,
    step: u64,
) -> Result<SampleResult> {
    let (sr, tape) = model.forward(&pair.input)?;
    let out = if config.pspl_enabled {
        // The attention map is built from the current prediction but is a
        // constant as far as the gradient is concerned.
        let similarity = ssim_map(&sr, &pair.target, &config.ssim)?;
        let attention = config.schedule.attention_map(&similarity, step)?;
        weighted_loss(&sr, &pair.target, &attention, config.loss)?
    } else {
        plain_loss(&sr, &pair.target, config.loss)?
    };
    let grads = model.backward(&tape, &out.gradient)?;
    Ok(SampleResult {
        loss: out.loss,
        grads,
    })
}

/// Loss of one batch and the gradient of its mean, reduced in sample order.
pub fn batch_gradient(
    model: &SrModel,
    batch: &[TrainPair],
    config: &TrainConfig,
    step: u64,
) -> Result<(f64, GradientSet)> {
    if batch.is_empty() {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    let results = batch
        .par_iter()
        .map(|pair| sample_step(model, pair, config, step))
        .collect::<Result<Vec<_>>>()?;
    let n = results.len() as f64;
    let mut total = GradientSet::zeros(model.architecture());
    let mut loss = 0.0;
    for r in &results {
        total.accumulate(&r.grads);
        loss += r.loss;
    }
    total.values_mut().for_each(|g| *g /= n);
    Ok((loss / n, total))
}

/// Run one epoch of updates. `global_step` counts updates already applied;
/// the attention map of the `k`-th update overall uses step `k` (1-based),
/// so the very first update already has `δ = α + β`.
///
/// Validation fields of the returned record are left empty.
pub fn train_epoch(
    model: &mut SrModel,
    optimizer: &mut AdamState,
    dataset: &PatchDataset,
    config: &TrainConfig,
    epoch: usize,
    global_step: u64,
) -> Result<(TrainRecord, u64)> {
    config.validate()?;
    if dataset.channels() != model.architecture().channels() {
        return Err(Error::ShapeMismatch(format!(
            "dataset has {} channels, model expects {}",
            dataset.channels(),
            model.architecture().channels()
        )));
    }
    let batches = dataset.batches_per_epoch(config.batch_size);
    let mut step = global_step;
    let mut loss_sum = 0.0;
    for index in 0..batches {
        let remaining = dataset.patches_per_epoch() - index * config.batch_size;
        let batch = dataset.sample_batch(epoch, index, remaining.min(config.batch_size))?;
        let (loss, grads) = batch_gradient(model, &batch, config, step + 1)?;
        adam_step(model, &grads, optimizer)?;
        step += 1;
        loss_sum += loss;
    }
    let record = TrainRecord {
        epoch,
        loss: loss_sum / batches as f64,
        psnr_db: None,
        mean_ssim: None,
        delta: config.schedule.delta_at(step),
        seconds: 0.0,
    };
    Ok((record, step))
}

#[derive(Debug, Clone)]
pub struct TrainRun {
    pub model: SrModel,
    pub records: Vec<TrainRecord>,
}

/// Initialize a model from `config.seed` and train it for `config.epochs`
/// epochs, validating on `val_images` at the configured interval.
/// `on_epoch` sees every record as soon as it is complete.
pub fn train(
    dataset: &PatchDataset,
    val_images: &[ImageGrid],
    config: &TrainConfig,
    mut on_epoch: impl FnMut(&TrainRecord),
) -> Result<TrainRun> {
    config.validate()?;
    if config.architecture.scale != dataset.scale() {
        return Err(Error::InvalidArgument(format!(
            "model scale {} differs from dataset scale {}",
            config.architecture.scale,
            dataset.scale()
        )));
    }
    let mut model = SrModel::initialized(config.architecture.clone(), config.seed)?;
    let mut optimizer = AdamState::new(&model, config.learning_rate);
    let start = Instant::now();
    let mut step = 0;
    let mut records = Vec::with_capacity(config.epochs);
    for epoch in 1..=config.epochs {
        let (mut record, next) =
            train_epoch(&mut model, &mut optimizer, dataset, config, epoch, step)?;
        step = next;
        if epoch % config.validation_interval == 0 || epoch == config.epochs {
            let Evaluation { psnr_db, mean_ssim } = evaluate(&model, val_images, dataset.scale())?;
            record.psnr_db = Some(psnr_db);
            record.mean_ssim = Some(mean_ssim);
        }
        record.seconds = start.elapsed().as_secs_f64();
        on_epoch(&record);
        records.push(record);
    }
    Ok(TrainRun { model, records })
}
