use std::fs;
use std::path::Path;

use super::train::TrainRecord;
use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "epoch,loss,psnr_db,mean_ssim,delta,seconds";

/// Render records as CSV with 6-decimal fixed-point values.
///
/// Epochs without validation leave `psnr_db`/`mean_ssim` empty. Wall-clock
/// time is only written when `with_timing` is set; otherwise the column
/// holds zeros so that repeated runs produce identical files.
pub fn records_to_csv(records: &[TrainRecord], with_timing: bool) -> String {
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    let opt = |v: Option<f64>| v.map_or_else(String::new, |x| format!("{x:.6}"));
    for r in records {
        let seconds = if with_timing { r.seconds } else { 0.0 };
        out.push_str(&format!(
            "{},{:.6},{},{},{:.6},{:.6}\n",
            r.epoch,
            r.loss,
            opt(r.psnr_db),
            opt(r.mean_ssim),
            r.delta,
            seconds
        ));
    }
    out
}

pub fn write_csv(records: &[TrainRecord], path: impl AsRef<Path>, with_timing: bool) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, records_to_csv(records, with_timing)).map_err(|e| Error::io(path, e))
}
