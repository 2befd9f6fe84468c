//! Patch sampling, the training loop with and without attention weighting,
//! evaluation metrics and the epochs-to-threshold benchmark.

mod bench;
mod csv;
mod dataset;
mod metrics;
mod toy;
mod train;

pub use bench::{
    ablation_differences, run_benchmark, toy_config, toy_validation_images, BenchmarkReport,
    Target, ToyBenchmark, TOY_ALPHA, TOY_BATCH_SIZE, TOY_BETA, TOY_EPOCHS, TOY_IMAGE_SIZE,
    TOY_PATCHES_PER_EPOCH, TOY_PATCH_SIZE, TOY_SCALE, TOY_TARGET_EPOCH, TOY_TRAIN_IMAGES,
    TOY_VAL_IMAGES,
};
pub use csv::{records_to_csv, write_csv, CSV_HEADER};
pub use dataset::{degrade, PatchDataset, TrainPair};
pub use metrics::{evaluate, evaluate_with, mse, psnr, psnr_from_mse, Evaluation, PSNR_CAP_DB};
pub use toy::toy_images;
pub use train::{batch_gradient, train, train_epoch, TrainConfig, TrainRecord, TrainRun};
