//! Subcommand implementations. Results go to stdout as `key=value` lines;
//! progress goes to stderr.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use pspl_core::imagekit::{load_pfm, load_png, save_pfm};
use pspl_core::ssim::{mean_ssim, ssim_map};
use pspl_core::tinysr::{load_checkpoint, save_checkpoint};
use pspl_core::trainkit::{
    evaluate, run_benchmark, toy_config, toy_images, toy_validation_images, train, write_csv,
    Target, TOY_IMAGE_SIZE, TOY_PATCHES_PER_EPOCH, TOY_PATCH_SIZE, TOY_TARGET_EPOCH,
    TOY_TRAIN_IMAGES,
};
use pspl_core::{
    Architecture, AttentionSchedule, ImageGrid, PatchDataset, SsimConfig, TrainConfig, TrainRecord,
};

use crate::args::{
    AttnMapArgs, BenchArgs, CliCommand, Command, DataArgs, EvalArgs, OptimArgs, PairArgs,
    ScheduleArgs, SsimMapArgs, TrainArgs,
};

pub fn run(cmd: &CliCommand, out: &mut impl Write) -> Result<()> {
    match &cmd.command {
        Command::Train(a) => run_train(a, out),
        Command::Eval(a) => run_eval(a, out),
        Command::Bench(a) => run_bench(a, out),
        Command::SsimMap(a) => run_ssim_map(a, out),
        Command::AttnMap(a) => run_attn_map(a, out),
    }
}

fn is_image(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("png") || e.eq_ignore_ascii_case("pfm"))
}

pub fn load_image(path: &Path) -> Result<ImageGrid> {
    let is_pfm = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("pfm"));
    let img = if is_pfm {
        load_pfm(path)
    } else {
        load_png(path)
    };
    img.with_context(|| format!("loading {}", path.display()))
}

/// A single image file, or every PNG/PFM file in a directory in name order.
pub fn load_images(path: &Path) -> Result<Vec<ImageGrid>> {
    if !path.is_dir() {
        return Ok(vec![load_image(path)?]);
    }
    let mut files: Vec<PathBuf> = fs::read_dir(path)
        .with_context(|| format!("listing {}", path.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()
        .with_context(|| format!("listing {}", path.display()))?;
    files.retain(|p| p.is_file() && is_image(p));
    files.sort();
    if files.is_empty() {
        bail!("no .png or .pfm images in {}", path.display());
    }
    files.iter().map(|p| load_image(p)).collect()
}

fn apply_schedule(s: &mut AttentionSchedule, args: &ScheduleArgs) {
    s.alpha = args.alpha.unwrap_or(s.alpha);
    s.beta = args.beta.unwrap_or(s.beta);
    s.gamma = args.gamma.unwrap_or(s.gamma);
    s.mu = args.mu.unwrap_or(s.mu);
}

/// Training data, validation data and the baseline configuration: the toy
/// benchmark setup with any explicit flags applied on top.
fn experiment(
    data: &DataArgs,
    optim: &OptimArgs,
) -> Result<(PatchDataset, Vec<ImageGrid>, TrainConfig)> {
    let seed = optim.seed;
    let train_images = match &data.data {
        Some(p) => load_images(p)?,
        None => toy_images(TOY_TRAIN_IMAGES, TOY_IMAGE_SIZE, seed)?,
    };
    let val_images = match (&data.val, &data.data) {
        (Some(p), _) => load_images(p)?,
        (None, Some(_)) => train_images.clone(),
        (None, None) => toy_validation_images(seed)?,
    };
    let channels = train_images[0].channels();
    let mut config = toy_config(channels, seed);
    if let Some(s) = data.scale {
        config.architecture = Architecture::standard(channels, s as usize);
    }
    let scale = config.architecture.scale;
    let dataset = PatchDataset::new(
        train_images,
        data.patch_size.map_or(TOY_PATCH_SIZE, |p| p as usize),
        scale,
        seed,
        data.patches_per_epoch
            .map_or(TOY_PATCHES_PER_EPOCH, |p| p as usize),
    )
    .context("building the patch dataset")?;
    if let Some(e) = optim.epochs {
        config.epochs = e as usize;
    }
    if let Some(b) = optim.batch_size {
        config.batch_size = b as usize;
    }
    if let Some(v) = optim.validation_interval {
        config.validation_interval = v as usize;
    }
    config.learning_rate = optim.lr.unwrap_or(config.learning_rate);
    config.loss = optim.loss.unwrap_or(config.loss);
    apply_schedule(&mut config.schedule, &optim.schedule);
    config
        .validate()
        .context("invalid training configuration")?;
    Ok((dataset, val_images, config))
}

fn progress(arm: &str, total: usize, r: &TrainRecord) {
    let val = match (r.psnr_db, r.mean_ssim) {
        (Some(p), Some(s)) => format!(" psnr_db={p:.3} ssim={s:.4}"),
        _ => String::new(),
    };
    eprintln!(
        "[{arm}] epoch {}/{total} loss={:.6} delta={:.4}{val}",
        r.epoch, r.loss, r.delta
    );
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn run_train(a: &TrainArgs, out: &mut impl Write) -> Result<()> {
    let (dataset, val, mut config) = experiment(&a.data, &a.optim)?;
    config.pspl_enabled = a.pspl;
    create_dir(&a.out)?;
    let arm = if a.pspl { "pspl" } else { "baseline" };
    let run = train(&dataset, &val, &config, |r| progress(arm, config.epochs, r))?;
    let ckpt = a.out.join("model.ckpt");
    let csv = a.out.join("train.csv");
    save_checkpoint(&run.model, &ckpt)?;
    write_csv(&run.records, &csv, a.timing)?;
    let last = run.records.last().expect("at least one epoch");
    writeln!(out, "epochs={}", last.epoch)?;
    writeln!(out, "final_loss={:.6}", last.loss)?;
    writeln!(out, "psnr_db={:.6}", last.psnr_db.unwrap_or(f64::NAN))?;
    writeln!(out, "mean_ssim={:.6}", last.mean_ssim.unwrap_or(f64::NAN))?;
    writeln!(out, "checkpoint={}", ckpt.display())?;
    writeln!(out, "csv={}", csv.display())?;
    Ok(())
}

fn run_eval(a: &EvalArgs, out: &mut impl Write) -> Result<()> {
    let model = load_checkpoint(&a.checkpoint)
        .with_context(|| format!("loading {}", a.checkpoint.display()))?;
    let images = load_images(&a.data)?;
    let e = evaluate(&model, &images, model.architecture().scale)?;
    writeln!(out, "images={}", images.len())?;
    writeln!(out, "psnr_db={:.6}", e.psnr_db)?;
    writeln!(out, "mean_ssim={:.6}", e.mean_ssim)?;
    Ok(())
}

fn run_bench(a: &BenchArgs, out: &mut impl Write) -> Result<()> {
    let (dataset, val, baseline) = experiment(&a.data, &a.optim)?;
    let candidate = TrainConfig {
        pspl_enabled: !a.control,
        ..baseline.clone()
    };
    let target = match (a.target_psnr, a.target_epoch) {
        (Some(db), _) => Target::Absolute(db),
        (None, Some(e)) => Target::ReferenceEpoch(e as usize),
        (None, None) => Target::ReferenceEpoch(TOY_TARGET_EPOCH.min(baseline.epochs)),
    };
    create_dir(&a.out)?;
    let epochs = baseline.epochs;
    let report = run_benchmark(&baseline, &candidate, &dataset, &val, target, |arm, r| {
        progress(arm, epochs, r)
    })?;
    write_csv(&report.reference, a.out.join("baseline.csv"), a.timing)?;
    write_csv(&report.candidate, a.out.join("pspl.csv"), a.timing)?;
    let summary = report.summary();
    let report_path = a.out.join("report.txt");
    fs::write(&report_path, &summary)
        .with_context(|| format!("writing {}", report_path.display()))?;
    out.write_all(summary.as_bytes())?;
    Ok(())
}

/// Both images of an SSIM pair, normalized to `[0, 1]` and checked for shape.
fn load_pair(p: &PairArgs) -> Result<(ImageGrid, ImageGrid)> {
    let sr = load_image(&p.sr)?.normalized()?;
    let hr = load_image(&p.hr)?.normalized()?;
    if !sr.same_shape(&hr) {
        bail!(
            "{} is {}x{}x{} but {} is {}x{}x{}",
            p.sr.display(),
            sr.height(),
            sr.width(),
            sr.channels(),
            p.hr.display(),
            hr.height(),
            hr.width(),
            hr.channels()
        );
    }
    Ok((sr, hr))
}

fn run_ssim_map(a: &SsimMapArgs, out: &mut impl Write) -> Result<()> {
    let (sr, hr) = load_pair(&a.pair)?;
    let cfg = SsimConfig::for_range(1.0);
    let map = ssim_map(&sr, &hr, &cfg)?;
    save_pfm(&map, &a.pair.out)?;
    writeln!(out, "mean_ssim={:.6}", mean_ssim(&sr, &hr, &cfg)?)?;
    Ok(())
}

fn run_attn_map(a: &AttnMapArgs, out: &mut impl Write) -> Result<()> {
    let mut schedule = AttentionSchedule::default();
    apply_schedule(&mut schedule, &a.schedule);
    schedule.validate()?;
    let similarity =
        load_pfm(&a.similarity).with_context(|| format!("loading {}", a.similarity.display()))?;
    let attention = schedule
        .attention_map(&similarity, a.step)
        .with_context(|| format!("{} is not a similarity map", a.similarity.display()))?;
    save_pfm(&attention, &a.out)?;
    let v = attention.data();
    let (lo, hi) = v
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        });
    writeln!(out, "delta={:.6}", schedule.delta_at(a.step))?;
    writeln!(
        out,
        "mean_attention={:.6}",
        v.iter().sum::<f64>() / v.len() as f64
    )?;
    writeln!(out, "min_attention={lo:.6}")?;
    writeln!(out, "max_attention={hi:.6}")?;
    Ok(())
}
