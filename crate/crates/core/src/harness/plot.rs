use std::io::Write;
use std::path::{Path, PathBuf};

use super::report::fmt_opt;
use super::run::REDUNDANCY_FILE;
use super::ExperimentReport;
use crate::error::{Error, Result};

pub const TRADEOFF_FILE: &str = "tradeoff.csv";
pub const CONVERGENCE_FILE: &str = "convergence.csv";

/// Writes `tradeoff.csv` and `convergence.csv` (seed means) into `out_dir`
/// and copies the first redundancy table found in `report_dirs`.
pub fn emit_plot_data(
    reports: &[ExperimentReport],
    report_dirs: &[PathBuf],
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    if reports.is_empty() {
        return Err(Error::InvalidArgument("no reports given".into()));
    }
    std::fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();

    let mut out = Vec::new();
    writeln!(
        out,
        "label,policy,retention,ablation,seeds,cumulative_samples,test_mae,test_mape_pct"
    )?;
    for r in reports {
        let p = &r.config.prune;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.label(),
            p.policy.name(),
            r.retention(),
            p.ablations.label(),
            r.seeds.len(),
            r.aggregate.samples_processed,
            r.aggregate.test_mae,
            fmt_opt(r.aggregate.test_mape_pct)
        )?;
    }
    let path = out_dir.join(TRADEOFF_FILE);
    std::fs::write(&path, &out)?;
    written.push(path);

    out.clear();
    writeln!(out, "label,policy,retention,ablation,epoch,val_mae")?;
    for r in reports {
        let p = &r.config.prune;
        for (e, v) in r.aggregate.val_mae_by_epoch.iter().enumerate() {
            writeln!(
                out,
                "{},{},{},{},{},{v}",
                r.label(),
                p.policy.name(),
                r.retention(),
                p.ablations.label(),
                e + 1
            )?;
        }
    }
    let path = out_dir.join(CONVERGENCE_FILE);
    std::fs::write(&path, &out)?;
    written.push(path);

    if let Some(src) = report_dirs
        .iter()
        .map(|d| d.join(REDUNDANCY_FILE))
        .find(|p| p.is_file())
    {
        let dst = out_dir.join(REDUNDANCY_FILE);
        if src != dst {
            std::fs::copy(&src, &dst)?;
        }
        written.push(dst);
    }
    Ok(written)
}
