//! Command-line grammar and `key=value` config file merging.

use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand};
use pspl_core::LossKind;

#[derive(Debug, Clone, PartialEq, Parser)]
#[command(
    name = "pspl",
    version,
    about = "Pixel-level self-paced learning for single-image super-resolution",
    arg_required_else_help = true
)]
pub struct CliCommand {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Subcommand)]
pub enum Command {
    /// Train a model and write its checkpoint and training log.
    #[command(args_override_self = true)]
    Train(TrainArgs),
    /// Score a checkpoint on a set of HR images.
    #[command(args_override_self = true)]
    Eval(EvalArgs),
    /// Train a baseline and a PSPL arm and compare epochs-to-threshold.
    #[command(args_override_self = true)]
    Bench(BenchArgs),
    /// Write the per-pixel SSIM map of two images.
    #[command(name = "ssim-map", args_override_self = true)]
    SsimMap(SsimMapArgs),
    /// Turn a similarity map into the attention map at a given update step.
    #[command(name = "attn-map", args_override_self = true)]
    AttnMap(AttnMapArgs),
}

#[derive(Debug, Clone, Default, PartialEq, Args)]
pub struct ConfigArg {
    /// `key=value` file with defaults for any of this command's flags.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Args)]
pub struct DataArgs {
    /// Directory (or single file) of HR training images; the synthetic toy
    /// set when absent.
    #[arg(long, value_name = "PATH")]
    pub data: Option<PathBuf>,
    /// Validation images; defaults to the toy validation set, or to the
    /// training images when `--data` is given.
    #[arg(long, value_name = "PATH")]
    pub val: Option<PathBuf>,
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..=8))]
    pub scale: Option<u32>,
    /// HR patch edge length in pixels.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub patch_size: Option<u32>,
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub patches_per_epoch: Option<u32>,
}

#[derive(Debug, Clone, Default, PartialEq, Args)]
pub struct ScheduleArgs {
    /// Attention width growth per update.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Initial attention width.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Attention peak height.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Similarity at which attention peaks.
    #[arg(long, allow_negative_numbers = true)]
    pub mu: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Args)]
pub struct OptimArgs {
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub epochs: Option<u32>,
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub batch_size: Option<u32>,
    #[arg(long)]
    pub lr: Option<f64>,
    /// `l1` or `l2`.
    #[arg(long)]
    pub loss: Option<LossKind>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub validation_interval: Option<u32>,
    #[command(flatten)]
    pub schedule: ScheduleArgs,
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub config: ConfigArg,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub optim: OptimArgs,
    /// Weight the loss with the self-paced attention map.
    #[arg(long)]
    pub pspl: bool,
    /// Output directory for `model.ckpt` and `train.csv`.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    /// Record wall-clock seconds in the CSV.
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub config: ConfigArg,
    #[arg(long, value_name = "FILE")]
    pub checkpoint: PathBuf,
    /// Directory (or single file) of HR images.
    #[arg(long, value_name = "PATH")]
    pub data: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub config: ConfigArg,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub optim: OptimArgs,
    /// Threshold is the baseline's PSNR at this epoch.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub target_epoch: Option<u32>,
    /// Fixed threshold in dB instead of a baseline epoch.
    #[arg(long, conflicts_with = "target_epoch")]
    pub target_psnr: Option<f64>,
    /// Output directory for `baseline.csv`, `pspl.csv` and `report.txt`.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    #[arg(long)]
    pub timing: bool,
    /// Run the baseline configuration in both arms.
    #[arg(long, hide = true)]
    pub control: bool,
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct PairArgs {
    /// Super-resolved (or any test) image, PNG or PFM.
    #[arg(long, value_name = "FILE")]
    pub sr: PathBuf,
    /// Reference image, PNG or PFM.
    #[arg(long, value_name = "FILE")]
    pub hr: PathBuf,
    /// Output PFM file.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct SsimMapArgs {
    #[command(flatten)]
    pub config: ConfigArg,
    #[command(flatten)]
    pub pair: PairArgs,
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct AttnMapArgs {
    #[command(flatten)]
    pub config: ConfigArg,
    /// Similarity map (PFM, single channel, values in [-1, 1]).
    #[arg(long, value_name = "FILE")]
    pub similarity: PathBuf,
    /// Optimizer update count (first update is 1).
    #[arg(long, default_value_t = 1)]
    pub step: u64,
    #[command(flatten)]
    pub schedule: ScheduleArgs,
    /// Output PFM file.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

/// Parse arguments (without the program name).
///
/// A `--config FILE` anywhere after the subcommand contributes its
/// `key=value` pairs as if they were flags given first, so explicit flags
/// win. Unknown keys are rejected like unknown flags.
pub fn parse_args<S: AsRef<str>>(argv: &[S]) -> Result<CliCommand, clap::Error> {
    let mut args: Vec<String> = argv.iter().map(|s| s.as_ref().to_string()).collect();
    if let Some(sub_at) = args.iter().position(|a| !a.starts_with('-')) {
        if let Some(path) = config_path(&args[sub_at + 1..]) {
            let extra = config_flags(&args[sub_at], &path)?;
            args.splice(sub_at + 1..sub_at + 1, extra);
        }
    }
    CliCommand::try_parse_from(std::iter::once("pspl".to_string()).chain(args))
}

fn config_path(args: &[String]) -> Option<PathBuf> {
    let mut it = args.iter();
    let mut found = None;
    while let Some(a) = it.next() {
        if a == "--" {
            break;
        }
        if a == "--config" {
            found = it.next().map(PathBuf::from);
        } else if let Some(v) = a.strip_prefix("--config=") {
            found = Some(PathBuf::from(v));
        }
    }
    found
}

fn usage_error(message: String) -> clap::Error {
    CliCommand::command().error(ErrorKind::InvalidValue, message)
}

/// Turn a config file into the equivalent flag list for `subcommand`.
fn config_flags(subcommand: &str, path: &Path) -> Result<Vec<String>, clap::Error> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| usage_error(format!("cannot read config {}: {e}", path.display())))?;
    let root = CliCommand::command();
    let Some(sub) = root.find_subcommand(subcommand) else {
        // Let clap report the unknown subcommand.
        return Ok(Vec::new());
    };
    let mut flags = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let where_ = || format!("{}:{}", path.display(), n + 1);
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| usage_error(format!("{}: expected key=value", where_())))?;
        let key = key.trim().replace('_', "-");
        let value = value.trim().trim_matches('"');
        let arg = sub
            .get_arguments()
            .find(|a| a.get_long() == Some(key.as_str()) && key != "config")
            .ok_or_else(|| usage_error(format!("{}: unknown key {key:?}", where_())))?;
        if arg.get_action().takes_values() {
            flags.push(format!("--{key}={value}"));
        } else {
            match value {
                "true" => flags.push(format!("--{key}")),
                "false" => {}
                other => {
                    return Err(usage_error(format!(
                        "{}: {key} expects true or false, got {other:?}",
                        where_()
                    )))
                }
            }
        }
    }
    Ok(flags)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<CliCommand, clap::Error> {
        parse_args(&s.split_whitespace().collect::<Vec<_>>())
    }

    #[test]
    fn definition_is_consistent() {
        CliCommand::command().debug_assert();
    }

    #[test]
    fn bench_flags() {
        let cmd = parse("bench --data ./hr --out ./runs --seed 7").unwrap();
        let Command::Bench(b) = cmd.command else {
            panic!("not bench")
        };
        assert_eq!(b.optim.seed, 7);
        assert_eq!(b.data.data, Some(PathBuf::from("./hr")));
        assert_eq!(b.out, PathBuf::from("./runs"));
        assert!(!b.control);
    }

    #[test]
    fn train_flags() {
        let cmd = parse("train --pspl --alpha 0.05 --out o").unwrap();
        let Command::Train(t) = cmd.command else {
            panic!("not train")
        };
        assert!(t.pspl);
        assert_eq!(t.optim.schedule.alpha, Some(0.05));
        assert_eq!(t.optim.schedule.beta, None);
    }

    #[test]
    fn negative_mu_is_a_value() {
        let cmd = parse("attn-map --similarity a --out c --mu -0.5").unwrap();
        let Command::AttnMap(a) = cmd.command else {
            panic!("not attn-map")
        };
        assert_eq!(a.schedule.mu, Some(-0.5));
        assert_eq!(a.step, 1);
    }

    #[test]
    fn usage_errors() {
        for bad in [
            "",
            "frobnicate",
            "train",
            "train --out o --bogus",
            "eval --data d",
            "train --out o --loss l3",
            "train --out o --epochs 0",
            "bench --out o --target-epoch 3 --target-psnr 30",
        ] {
            assert!(parse(bad).is_err(), "{bad:?} parsed");
        }
        let empty: [&str; 0] = [];
        let err = parse_args(&empty).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn config_file_is_overridden_by_flags() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.cfg");
        std::fs::write(
            &cfg,
            "# experiment\nalpha = 0.2\nbeta=1.5\npspl = true\nbatch_size = 8\nout = \"from-config\"\n",
        )
        .unwrap();
        let argv = ["train", "--config", cfg.to_str().unwrap(), "--alpha", "0.3"];
        let Command::Train(t) = parse_args(&argv).unwrap().command else {
            panic!("not train")
        };
        assert_eq!(t.optim.schedule.alpha, Some(0.3));
        assert_eq!(t.optim.schedule.beta, Some(1.5));
        assert_eq!(t.optim.batch_size, Some(8));
        assert!(t.pspl);
        assert_eq!(t.out, PathBuf::from("from-config"));
        assert_eq!(t.config.config.as_deref(), Some(cfg.as_path()));
    }

    #[test]
    fn config_file_errors() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("bad.cfg");
        for text in [
            "colour = red\n",
            "alpha 0.1\n",
            "pspl = maybe\n",
            "config = x\n",
        ] {
            std::fs::write(&cfg, text).unwrap();
            let argv = ["train", "--out", "o", "--config", cfg.to_str().unwrap()];
            assert!(parse_args(&argv).is_err(), "{text:?} accepted");
        }
        let missing = dir.path().join("nope.cfg");
        let argv = ["train", "--out", "o", "--config", missing.to_str().unwrap()];
        assert!(parse_args(&argv).is_err());
    }
}
