use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use log::error;

use stprune::analysis::redundancy_report;
use stprune::dataset::{load_dataset, make_windows, synthesize, write_csv, write_stb, SynthSpec};
use stprune::harness::{
    emit_plot_data, run, sweep, ExperimentConfig, ExperimentReport, SweepAxis, REDUNDANCY_FILE,
    REPORT_FILE,
};
use stprune::numerics::{SeededRng, Stream};
use stprune::pruning::{Ablations, Policy};
use stprune::{Error, Result};

#[derive(Parser)]
#[command(
    name = "stprune",
    version,
    about = "Dynamic sample pruning for spatio-temporal forecasting"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Redundancy statistics of a dataset's training span.
    Analyze {
        dataset: PathBuf,
        /// Frames per day.
        #[arg(long, default_value_t = 288)]
        period: usize,
        #[arg(long, default_value_t = 12)]
        input_len: usize,
        #[arg(long, default_value_t = 12)]
        horizon: usize,
        #[arg(long, default_value_t = 0.6)]
        train_ratio: f64,
        #[arg(long, default_value_t = 20)]
        bins: usize,
        #[arg(short, long, default_value = ".")]
        output_dir: PathBuf,
    },
    /// Train every seed of a config.
    Train {
        config: PathBuf,
        /// Overrides `output_dir` from the config.
        #[arg(short, long)]
        output_dir: Option<PathBuf>,
    },
    /// One run per value along an axis, against a full-data reference.
    Sweep {
        config: PathBuf,
        #[arg(long, value_enum)]
        axis: Axis,
        /// Comma-separated axis values; defaults depend on the axis.
        #[arg(long, value_delimiter = ',')]
        values: Vec<String>,
        #[arg(short, long)]
        output_dir: Option<PathBuf>,
    },
    /// Tidy trade-off and convergence tables from finished runs.
    PlotData {
        /// `report.jsonl` files or the run directories holding them.
        #[arg(required = true)]
        reports: Vec<PathBuf>,
        #[arg(short, long, default_value = "plot_data")]
        output_dir: PathBuf,
    },
    /// Generate a synthetic series from a TOML spec.
    Synth {
        spec: PathBuf,
        /// Output file, `.stb` or `.csv`.
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Axis {
    Retention,
    Policy,
    Ablation,
}

fn parse_axis(axis: Axis, values: &[String]) -> Result<SweepAxis> {
    if values.is_empty() {
        return Ok(match axis {
            Axis::Retention => SweepAxis::default_retention(),
            Axis::Policy => SweepAxis::default_policies(),
            Axis::Ablation => SweepAxis::default_ablations(),
        });
    }
    Ok(match axis {
        Axis::Retention => SweepAxis::Retention(
            values
                .iter()
                .map(|v| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::InvalidArgument(format!("bad retention {v:?}")))
                })
                .collect::<Result<_>>()?,
        ),
        Axis::Policy => SweepAxis::Policy(
            values
                .iter()
                .map(|v| v.trim().parse::<Policy>())
                .collect::<Result<_>>()?,
        ),
        Axis::Ablation => SweepAxis::Ablation(
            values
                .iter()
                .map(|v| parse_ablation(v.trim()))
                .collect::<Result<_>>()?,
        ),
    })
}

fn parse_ablation(label: &str) -> Result<Ablations> {
    let mut a = Ablations::default();
    if label == "full" {
        return Ok(a);
    }
    for part in label.split('+') {
        match part {
            "wo_stc" => a.disable_complexity = true,
            "wo_res" => a.disable_rescale = true,
            "wo_anne" => a.disable_anneal = true,
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown ablation {other:?} (full, wo_stc, wo_res, wo_anne)"
                )))
            }
        }
    }
    Ok(a)
}

fn load_config(path: &Path, output_dir: Option<PathBuf>) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(dir) = output_dir {
        cfg.output_dir = dir;
    }
    Ok(cfg)
}

fn print_report(r: &ExperimentReport) {
    let a = &r.aggregate;
    println!(
        "{:<32} samples {:>12.0}  test MAE {:.4}  RMSE {:.4}  MAPE {}",
        r.label(),
        a.samples_processed,
        a.test_mae,
        a.test_rmse,
        a.test_mape_pct
            .map_or_else(|| "NA".to_string(), |m| format!("{m:.2}%"))
    );
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Analyze {
            dataset,
            period,
            input_len,
            horizon,
            train_ratio,
            bins,
            output_dir,
        } => {
            if !(train_ratio > 0.0 && train_ratio <= 1.0) {
                return Err(Error::InvalidArgument(format!(
                    "train ratio {train_ratio} must be in (0, 1]"
                )));
            }
            let series = load_dataset(&dataset)?;
            let frames = (train_ratio * series.num_frames() as f64 + 1e-9).floor() as usize;
            let span = series.slice_frames(0, frames)?;
            let (_, samples) = make_windows(&span, input_len, horizon)?;
            let report = redundancy_report(&span, &samples, 0, period, bins)?;
            std::fs::create_dir_all(&output_dir)?;
            report.write_csv(&output_dir.join(REDUNDANCY_FILE))?;
            let reach = |v: &[f64]| v.iter().position(|&x| x >= 0.9).map_or(v.len(), |k| k + 1);
            println!(
                "nodes {}  frames {}  windows {}",
                series.num_nodes(),
                frames,
                samples.len()
            );
            println!(
                "pairs with corr >= 0.8: {:.1}%",
                100.0 * report.frac_pairs_ge_08
            );
            if !report.correlation.excluded.is_empty() {
                println!("constant nodes: {:?}", report.correlation.excluded);
            }
            println!(
                "components for 90% variance: spatial {}/{}  temporal {}/{}",
                reach(&report.spatial_explained),
                report.spatial_explained.len(),
                reach(&report.temporal_explained),
                report.temporal_explained.len()
            );
            println!("wrote {}", output_dir.join(REDUNDANCY_FILE).display());
        }
        Command::Train { config, output_dir } => {
            let cfg = load_config(&config, output_dir)?;
            let report = run(&cfg)?;
            print_report(&report);
            println!("wrote {}", cfg.output_dir.display());
        }
        Command::Sweep {
            config,
            axis,
            values,
            output_dir,
        } => {
            let cfg = load_config(&config, output_dir)?;
            let axis = parse_axis(axis, &values)?;
            let result = sweep(&cfg, &axis)?;
            print_report(&result.reference);
            for cell in &result.cells {
                match &cell.outcome {
                    Ok(r) => print_report(r),
                    Err(e) => println!("{:<32} failed: {e}", cell.label),
                }
            }
            println!("wrote {}", cfg.output_dir.display());
            let failed = result.cells.iter().filter(|c| c.outcome.is_err()).count();
            if failed > 0 {
                return Err(Error::SweepFailures(failed));
            }
        }
        Command::PlotData {
            reports,
            output_dir,
        } => {
            let mut loaded = Vec::new();
            let mut dirs = Vec::new();
            for p in &reports {
                let file = if p.is_dir() {
                    p.join(REPORT_FILE)
                } else {
                    p.clone()
                };
                loaded.push(ExperimentReport::read_jsonl(&file)?);
                dirs.push(file.parent().map(Path::to_path_buf).unwrap_or_default());
            }
            for path in emit_plot_data(&loaded, &dirs, &output_dir)? {
                println!("wrote {}", path.display());
            }
        }
        Command::Synth { spec, output, seed } => {
            let text = std::fs::read_to_string(&spec)
                .map_err(|e| Error::Config(format!("{}: {e}", spec.display())))?;
            let spec: SynthSpec =
                toml::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
            spec.validate()?;
            let series = synthesize(&spec, &mut SeededRng::new(seed).stream(Stream::Data))?;
            match output.extension().and_then(|e| e.to_str()) {
                Some("csv") => write_csv(&series, &output)?,
                _ => write_stb(&series, &output)?,
            }
            println!(
                "wrote {} ({} nodes x {} frames)",
                output.display(),
                series.num_nodes(),
                series.num_frames()
            );
        }
    }
    Ok(())
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var("STPRUNE_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        Error::InvalidArgument(format!("STPRUNE_THREADS={raw:?} is not a positive integer"))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::InvalidArgument(e.to_string()))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match configure_threads().and_then(|()| execute(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            if e.is_validation() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
