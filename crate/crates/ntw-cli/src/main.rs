//! Command-line front end: align a class of series, compare two series with
//! DTW, or recompute metrics / averages from saved warpings.

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use ntw::data_io::{
    average_csv, load_ucr_with, metrics_json, read_warpings_csv, select_class, write_outputs,
    znormalize, Delimiter,
};
use ntw::metrics::{barycenter_loss, dtw_slices, warped_average, warped_std, AlignedSet};
use ntw::training::{align, Metrics, NtwConfig};
use ntw::warp_model::check_feasibility;
use ntw::{NtwError, TimeSeries};

#[derive(Parser)]
#[command(name = "ntw", version, about = "Joint alignment of multiple time-series")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Align a set of series and write all result files
    Align(AlignArgs),
    /// DTW discrepancy between two single-series files
    Dtw(DtwArgs),
    /// Recompute metrics.json from saved warpings and the source data
    Metrics(RecomputeArgs),
    /// Recompute average.csv from saved warpings and the source data
    Average(RecomputeArgs),
}

#[derive(Args, Clone)]
struct InputArgs {
    /// Dataset file: one series per line, label first, comma or tab separated
    #[arg(long)]
    input: PathBuf,
    /// Field separator: auto, comma, or tab
    #[arg(long)]
    format: Option<String>,
    /// Class label to align; omit to use every series
    #[arg(long)]
    label: Option<i64>,
    /// Subsample classes larger than this (seeded, without replacement)
    #[arg(long)]
    max_series: Option<usize>,
    /// Seed for subsampling and network initialization
    #[arg(long)]
    seed: Option<u64>,
    /// Z-normalize each series after loading
    #[arg(long)]
    znorm: bool,
}

#[derive(Args)]
struct AlignArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Number of optimizer updates
    #[arg(long)]
    updates: Option<usize>,
    /// Learning rate
    #[arg(long)]
    lr: Option<f64>,
    /// Monotonicity penalty weight
    #[arg(long)]
    lambda: Option<f64>,
    /// Initial annealing kernel width
    #[arg(long)]
    alpha0: Option<f64>,
    /// Per-update annealing multiplier
    #[arg(long)]
    alpha_decay: Option<f64>,
    /// Trapezoid sample count (default: longest series length)
    #[arg(long)]
    z_train: Option<usize>,
    /// Output warping resolution (default: N * longest series length)
    #[arg(long)]
    z_out: Option<usize>,
    /// Worker threads: 0 or 1 = serial (reproducible), more = parallel
    #[arg(long)]
    threads: Option<usize>,
    /// First hidden layer width
    #[arg(long)]
    hidden1: Option<usize>,
    /// Second hidden layer width
    #[arg(long)]
    hidden2: Option<usize>,
    /// Optional TOML config file; flags override its keys
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DtwArgs {
    /// First series file (numbers separated by commas or whitespace)
    a: PathBuf,
    /// Second series file
    b: PathBuf,
    /// Write the optimal alignment path as CSV to this file
    #[arg(long)]
    path: Option<PathBuf>,
}

#[derive(Args)]
struct RecomputeArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Directory holding warpings.csv (and metrics.json for `metrics`)
    #[arg(long)]
    out: PathBuf,
}

/// Config-file counterpart of the align flags; keys mirror the flag names.
#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
struct FileConfig {
    format: Option<String>,
    label: Option<i64>,
    max_series: Option<usize>,
    seed: Option<u64>,
    znorm: Option<bool>,
    updates: Option<usize>,
    lr: Option<f64>,
    lambda: Option<f64>,
    alpha0: Option<f64>,
    alpha_decay: Option<f64>,
    z_train: Option<usize>,
    z_out: Option<usize>,
    threads: Option<usize>,
    hidden1: Option<usize>,
    hidden2: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Align(args) => cmd_align(args),
        Command::Dtw(args) => cmd_dtw(args),
        Command::Metrics(args) => cmd_recompute(args, true),
        Command::Average(args) => cmd_recompute(args, false),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                NtwError::Divergence { .. } => ExitCode::from(1),
                _ => ExitCode::from(2),
            }
        }
    }
}

fn parse_format(format: Option<&str>) -> Result<Option<Delimiter>, NtwError> {
    match format {
        None | Some("auto") => Ok(None),
        Some("comma") => Ok(Some(Delimiter::Comma)),
        Some("tab") => Ok(Some(Delimiter::Tab)),
        Some(other) => Err(NtwError::InvalidArgument(format!(
            "unknown format {other:?} (expected auto, comma, or tab)"
        ))),
    }
}

fn load_selection(input: &InputArgs, file_cfg: &FileConfig) -> Result<Vec<TimeSeries>, NtwError> {
    let format = input.format.as_deref().or(file_cfg.format.as_deref());
    let ds = load_ucr_with(&input.input, parse_format(format)?)?;
    let label = input.label.or(file_cfg.label);
    let max_series = input.max_series.or(file_cfg.max_series).unwrap_or(100);
    let seed = input.seed.or(file_cfg.seed).unwrap_or(0);
    let mut series = select_class(&ds, label, max_series, seed)?;
    if input.znorm || file_cfg.znorm.unwrap_or(false) {
        znormalize(&mut series);
    }
    Ok(series)
}

fn read_file_config(path: Option<&Path>) -> Result<FileConfig, NtwError> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = fs::read_to_string(path).map_err(|e| NtwError::io(path, e))?;
    toml::from_str(&text)
        .map_err(|e| NtwError::InvalidArgument(format!("{}: {e}", path.display())))
}

fn cmd_align(args: AlignArgs) -> Result<(), NtwError> {
    let file_cfg = read_file_config(args.config.as_deref())?;
    let threads = args.threads.or(file_cfg.threads).unwrap_or(0);
    if threads > 1 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| NtwError::InvalidArgument(format!("thread pool: {e}")))?;
    }
    let series = load_selection(&args.input, &file_cfg)?;
    let defaults = NtwConfig::default();
    let config = NtwConfig {
        updates: args.updates.or(file_cfg.updates).unwrap_or(defaults.updates),
        learning_rate: args.lr.or(file_cfg.lr).unwrap_or(defaults.learning_rate),
        lambda: args.lambda.or(file_cfg.lambda).unwrap_or(defaults.lambda),
        alpha0: args.alpha0.or(file_cfg.alpha0).unwrap_or(defaults.alpha0),
        alpha_decay: args
            .alpha_decay
            .or(file_cfg.alpha_decay)
            .unwrap_or(defaults.alpha_decay),
        z_train: args.z_train.or(file_cfg.z_train),
        z_out: args.z_out.or(file_cfg.z_out),
        seed: args.input.seed.or(file_cfg.seed).unwrap_or(0),
        hidden1: args.hidden1.or(file_cfg.hidden1).unwrap_or(defaults.hidden1),
        hidden2: args.hidden2.or(file_cfg.hidden2).unwrap_or(defaults.hidden2),
        parallel: threads > 1,
        ..defaults
    };
    config.validate()?;

    let start = std::time::Instant::now();
    let result = align(&series, &config)?;
    let elapsed = start.elapsed();
    let written = write_outputs(&result, &args.out)?;

    let m = &result.metrics;
    println!(
        "aligned {} series in {:.1}s: data_loss={:.6e} penalty={:.3e} validity={:.1}/{:.1}/{:.1} barycenter_loss={:.6e}",
        series.len(),
        elapsed.as_secs_f64(),
        m.data_loss_final,
        m.penalty_residual,
        100.0 * m.v_mono,
        100.0 * m.v_cont,
        100.0 * m.v_bound,
        m.barycenter_loss,
    );
    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(())
}

/// A single unlabeled series: numbers separated by commas or whitespace.
fn load_single_series(path: &Path) -> Result<Vec<f64>, NtwError> {
    let text = fs::read_to_string(path).map_err(|e| NtwError::io(path, e))?;
    let mut values = Vec::new();
    for (k, token) in text
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .enumerate()
    {
        values.push(token.parse::<f64>().map_err(|_| NtwError::Parse {
            path: path.to_path_buf(),
            line: 1,
            field: k + 1,
            detail: format!("cannot parse {token:?} as a number"),
        })?);
    }
    if values.is_empty() {
        return Err(NtwError::InvalidArgument(format!(
            "{}: no values",
            path.display()
        )));
    }
    Ok(values)
}

fn cmd_dtw(args: DtwArgs) -> Result<(), NtwError> {
    let a = load_single_series(&args.a)?;
    let b = load_single_series(&args.b)?;
    let result = dtw_slices(&a, &b, args.path.is_some())?;
    println!("{}", result.discrepancy);
    if let Some(path_file) = args.path {
        let mut out = String::from("i,j\n");
        for (i, j) in result.path.unwrap() {
            out.push_str(&format!("{i},{j}\n"));
        }
        fs::write(&path_file, out).map_err(|e| NtwError::io(&path_file, e))?;
    }
    Ok(())
}

fn cmd_recompute(args: RecomputeArgs, metrics_mode: bool) -> Result<(), NtwError> {
    let file_cfg = FileConfig::default();
    let series = load_selection(&args.input, &file_cfg)?;
    let warpings_path = args.out.join("warpings.csv");
    let warping = read_warpings_csv(&warpings_path)?;
    if warping.n_series != series.len() {
        return Err(NtwError::ShapeMismatch(format!(
            "warpings.csv has {} series but the selection has {}",
            warping.n_series,
            series.len()
        )));
    }
    let aligned = AlignedSet::from_warping(&series, &warping)?;

    if metrics_mode {
        // run-state fields are not derivable from the warpings; carry them
        // over from the original run
        let metrics_path = args.out.join("metrics.json");
        let text = fs::read_to_string(&metrics_path).map_err(|e| NtwError::io(&metrics_path, e))?;
        let previous: Metrics = serde_json::from_str(&text)
            .map_err(|e| NtwError::InvalidArgument(format!("{}: {e}", metrics_path.display())))?;
        let validity = check_feasibility(&warping);
        let metrics = Metrics {
            barycenter_loss: barycenter_loss(&series, &aligned)?,
            v_mono: validity.v_mono,
            v_cont: validity.v_cont,
            v_bound: validity.v_bound,
            ..previous
        };
        fs::write(&metrics_path, metrics_json(&metrics))
            .map_err(|e| NtwError::io(&metrics_path, e))?;
        println!("wrote {}", metrics_path.display());
    } else {
        let average = warped_average(&aligned);
        let sd = warped_std(&aligned);
        let avg_path = args.out.join("average.csv");
        fs::write(&avg_path, average_csv(&average.values, &sd.values))
            .map_err(|e| NtwError::io(&avg_path, e))?;
        println!("wrote {}", avg_path.display());
    }
    Ok(())
}
