use std::fmt::Write as _;

use super::dataset::PatchDataset;
use super::toy::toy_images;
use super::train::{train, TrainConfig, TrainRecord};
use crate::error::{Error, Result};
use crate::imagekit::ImageGrid;
use crate::pspl::{AttentionSchedule, LossKind};
use crate::tinysr::Architecture;

/// What validation PSNR counts as "converged".
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Target {
    /// A fixed PSNR in dB.
    Absolute(f64),
    /// Whatever the reference arm reached at this (1-based) epoch.
    ReferenceEpoch(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkReport {
    pub reference: Vec<TrainRecord>,
    pub candidate: Vec<TrainRecord>,
    pub threshold_db: f64,
    /// First epoch at which each arm reached the threshold.
    pub reference_epochs: Option<usize>,
    pub candidate_epochs: Option<usize>,
}

impl BenchmarkReport {
    /// `candidate_epochs / reference_epochs`, when both reached the target.
    pub fn ratio(&self) -> Option<f64> {
        match (self.reference_epochs, self.candidate_epochs) {
            (Some(r), Some(c)) => Some(c as f64 / r as f64),
            _ => None,
        }
    }

    pub fn final_psnr(records: &[TrainRecord]) -> Option<f64> {
        records.last().and_then(|r| r.psnr_db)
    }

    /// Plain-text `key=value` summary. Contains no timing, so identical runs
    /// produce identical summaries.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        let opt_usize = |v: Option<usize>| v.map_or_else(|| "none".to_string(), |e| e.to_string());
        let opt_f64 = |v: Option<f64>| v.map_or_else(|| "none".to_string(), |x| format!("{x:.6}"));
        let _ = writeln!(s, "threshold_db={:.6}", self.threshold_db);
        let _ = writeln!(s, "baseline_epochs={}", opt_usize(self.reference_epochs));
        let _ = writeln!(s, "pspl_epochs={}", opt_usize(self.candidate_epochs));
        let _ = writeln!(s, "ratio={}", opt_f64(self.ratio()));
        let _ = writeln!(
            s,
            "baseline_final_psnr_db={}",
            opt_f64(Self::final_psnr(&self.reference))
        );
        let _ = writeln!(
            s,
            "pspl_final_psnr_db={}",
            opt_f64(Self::final_psnr(&self.candidate))
        );
        s
    }
}

/// Names of the fields in which `a` and `b` differ, ignoring `pspl_enabled`.
pub fn ablation_differences(a: &TrainConfig, b: &TrainConfig) -> Vec<&'static str> {
    let mut diff = Vec::new();
    let mut check = |same: bool, name| {
        if !same {
            diff.push(name)
        }
    };
    check(a.epochs == b.epochs, "epochs");
    check(a.batch_size == b.batch_size, "batch_size");
    check(a.loss == b.loss, "loss");
    check(a.schedule == b.schedule, "schedule");
    check(a.ssim == b.ssim, "ssim");
    check(a.learning_rate == b.learning_rate, "learning_rate");
    check(a.seed == b.seed, "seed");
    check(
        a.validation_interval == b.validation_interval,
        "validation_interval",
    );
    check(a.architecture == b.architecture, "architecture");
    diff
}

fn first_epoch_reaching(records: &[TrainRecord], threshold: f64) -> Option<usize> {
    records
        .iter()
        .find(|r| r.psnr_db.is_some_and(|p| p >= threshold))
        .map(|r| r.epoch)
}

/// Train `reference` and `candidate` from identical seeds on identical data
/// and compare epochs-to-threshold.
///
/// The two configurations may differ only in `pspl_enabled`; anything else
/// would confound the comparison and is rejected.
pub fn run_benchmark(
    reference: &TrainConfig,
    candidate: &TrainConfig,
    dataset: &PatchDataset,
    val_images: &[ImageGrid],
    target: Target,
    mut on_epoch: impl FnMut(&str, &TrainRecord),
) -> Result<BenchmarkReport> {
    let diff = ablation_differences(reference, candidate);
    if !diff.is_empty() {
        return Err(Error::AblationMismatch(diff.join(", ")));
    }
    if let Target::ReferenceEpoch(e) = target {
        if e == 0 || e > reference.epochs || e % reference.validation_interval != 0 {
            return Err(Error::InvalidArgument(format!(
                "target epoch {e} is not a validated epoch of a {}-epoch run",
                reference.epochs
            )));
        }
    }
    let arm_name = |c: &TrainConfig| if c.pspl_enabled { "pspl" } else { "baseline" };
    let ref_run = train(dataset, val_images, reference, |r| {
        on_epoch(arm_name(reference), r)
    })?;
    let cand_run = train(dataset, val_images, candidate, |r| {
        on_epoch(arm_name(candidate), r)
    })?;

    let threshold_db = match target {
        Target::Absolute(db) => db,
        Target::ReferenceEpoch(e) => ref_run.records[e - 1]
            .psnr_db
            .expect("validated epoch has a PSNR"),
    };
    Ok(BenchmarkReport {
        reference_epochs: first_epoch_reaching(&ref_run.records, threshold_db),
        candidate_epochs: first_epoch_reaching(&cand_run.records, threshold_db),
        reference: ref_run.records,
        candidate: cand_run.records,
        threshold_db,
    })
}

/// The bundled desk-scale ablation: synthetic grayscale images, 48 px
/// patches, ×2, L2 loss, threshold at the baseline's epoch-40 PSNR.
#[derive(Debug, Clone)]
pub struct ToyBenchmark {
    pub dataset: PatchDataset,
    pub val_images: Vec<ImageGrid>,
    pub baseline: TrainConfig,
    pub pspl: TrainConfig,
    pub target: Target,
}

pub const TOY_TRAIN_IMAGES: usize = 8;
pub const TOY_VAL_IMAGES: usize = 4;
pub const TOY_IMAGE_SIZE: usize = 96;
pub const TOY_PATCH_SIZE: usize = 48;
pub const TOY_SCALE: usize = 2;
pub const TOY_PATCHES_PER_EPOCH: usize = 32;
pub const TOY_BATCH_SIZE: usize = 4;
pub const TOY_EPOCHS: usize = 50;
pub const TOY_TARGET_EPOCH: usize = 40;

/// Attention growth per update. The full-scale default of 1.0 flattens the
/// attention within the first few updates; at 0.025 it stays selective for
/// the first ~20 epochs of the toy run.
pub const TOY_ALPHA: f64 = 0.025;
/// Attention width at step 0.
pub const TOY_BETA: f64 = 1.0;

/// Validation images of the toy benchmark for a given seed; disjoint from
/// the training images generated from the same seed.
pub fn toy_validation_images(seed: u64) -> Result<Vec<ImageGrid>> {
    toy_images(TOY_VAL_IMAGES, TOY_IMAGE_SIZE, seed ^ 0x005e_ed0f_da7a)
}

/// Baseline training configuration of the toy benchmark.
pub fn toy_config(channels: usize, seed: u64) -> TrainConfig {
    let mut config = TrainConfig::new(Architecture::standard(channels, TOY_SCALE));
    config.epochs = TOY_EPOCHS;
    config.batch_size = TOY_BATCH_SIZE;
    config.loss = LossKind::L2;
    config.seed = seed;
    config.schedule = AttentionSchedule {
        alpha: TOY_ALPHA,
        beta: TOY_BETA,
        ..AttentionSchedule::default()
    };
    config
}

impl ToyBenchmark {
    pub fn new(seed: u64) -> Result<Self> {
        let dataset = PatchDataset::new(
            toy_images(TOY_TRAIN_IMAGES, TOY_IMAGE_SIZE, seed)?,
            TOY_PATCH_SIZE,
            TOY_SCALE,
            seed,
            TOY_PATCHES_PER_EPOCH,
        )?;
        let baseline = toy_config(1, seed);
        let pspl = TrainConfig {
            pspl_enabled: true,
            ..baseline.clone()
        };
        Ok(Self {
            dataset,
            val_images: toy_validation_images(seed)?,
            baseline,
            pspl,
            target: Target::ReferenceEpoch(TOY_TARGET_EPOCH),
        })
    }

    pub fn run(&self, on_epoch: impl FnMut(&str, &TrainRecord)) -> Result<BenchmarkReport> {
        run_benchmark(
            &self.baseline,
            &self.pspl,
            &self.dataset,
            &self.val_images,
            self.target,
            on_epoch,
        )
    }
}
