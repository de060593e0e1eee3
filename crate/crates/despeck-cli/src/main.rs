use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use despeck_core::filter::{filter_image, FilterConfig, FilterMethod};
use despeck_core::phantom::{corrupt, generate_phantom, PhantomSpec};
use despeck_core::raster::Rect;

use despeck_cli::config::{parse_filter_list, parse_looks_list, resolve, RunOverrides};
use despeck_cli::plot::emit_boxplots;
use despeck_cli::rasterio::{
    export_pgm, read_labels, read_raster, write_labels, write_raster,
};
use despeck_cli::run::run_protocol;
use despeck_cli::summary::{
    records_from_csv, records_to_csv, format_table, summarize, summary_to_csv,
};

#[derive(Parser)]
#[command(name = "despeck", version, about = "Despeckling toolkit for intensity SAR imagery")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the cartoon phantom and its region labels.
    Phantom(PhantomArgs),
    /// Multiply an intensity image by unit-mean Gamma speckle.
    Corrupt(CorruptArgs),
    /// Despeckle an intensity image.
    Filter(FilterArgs),
    /// Evaluate the metric suite for one filtered image.
    Metrics(MetricsArgs),
    /// Run the Monte Carlo protocol and write the records table.
    Montecarlo(MonteCarloArgs),
    /// Summarize a records table into text, CSV, and boxplots.
    Report(ReportArgs),
}

#[derive(Args)]
struct PhantomArgs {
    #[arg(long, default_value_t = 256)]
    side: usize,
    #[arg(long, default_value_t = 30.0)]
    background_mean: f64,
    #[arg(long, default_value_t = 120.0)]
    line_mean: f64,
    /// Output path for the truth raster.
    #[arg(long)]
    out: PathBuf,
    /// Output path for the region labels.
    #[arg(long)]
    labels: PathBuf,
    /// Optional 16-bit PGM preview of the truth image.
    #[arg(long)]
    pgm: Option<PathBuf>,
}

#[derive(Args)]
struct CorruptArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Number of looks of the simulated acquisition.
    #[arg(long)]
    looks: f64,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long)]
    pgm: Option<PathBuf>,
}

#[derive(Args)]
struct FilterArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    method: FilterMethod,
    /// Significance level of the region-acceptance test (kl only).
    #[arg(long, default_value_t = 0.05)]
    significance: f64,
    /// Nominal looks of the acquisition (lee only).
    #[arg(long, default_value_t = 1.0)]
    looks: f64,
    /// Window side for the lee and mean filters.
    #[arg(long, default_value_t = 5)]
    window: usize,
    #[arg(long)]
    pgm: Option<PathBuf>,
}

#[derive(Args)]
struct MetricsArgs {
    #[arg(long)]
    filtered: PathBuf,
    #[arg(long)]
    truth: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    /// Homogeneous patch for the ENL estimate as `row,col,height,width`;
    /// defaults to the phantom layout patch for the label raster's side.
    #[arg(long)]
    patch: Option<String>,
    #[arg(long, default_value_t = 0)]
    replicate: u32,
    #[arg(long, default_value_t = 1.0)]
    looks: f64,
    /// Filter column value for the emitted record.
    #[arg(long, default_value = "image")]
    label: String,
}

#[derive(Args)]
struct MonteCarloArgs {
    /// Key=value configuration file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    replicates: Option<u32>,
    /// Comma-separated looks levels, e.g. `1,4`.
    #[arg(long)]
    looks: Option<String>,
    /// Comma-separated filters, e.g. `kl,lee`.
    #[arg(long)]
    filters: Option<String>,
    #[arg(long)]
    significance: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    side: Option<usize>,
    #[arg(long)]
    background_mean: Option<f64>,
    #[arg(long)]
    line_mean: Option<f64>,
    /// Records table destination; the manifest lands at `<out>.manifest`.
    #[arg(long, default_value = "results.csv")]
    out: PathBuf,
    /// Optional per-group summary CSV.
    #[arg(long)]
    summary: Option<PathBuf>,
    /// Optional boxplot figure.
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// Records table produced by `montecarlo`.
    #[arg(long = "in")]
    input: PathBuf,
    /// Optional per-group summary CSV.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Optional boxplot figure.
    #[arg(long)]
    svg: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Phantom(args) => cmd_phantom(args),
        Command::Corrupt(args) => cmd_corrupt(args),
        Command::Filter(args) => cmd_filter(args),
        Command::Metrics(args) => cmd_metrics(args),
        Command::Montecarlo(args) => cmd_montecarlo(args),
        Command::Report(args) => cmd_report(args),
    }
}

fn maybe_export_pgm(path: Option<&Path>, raster: &despeck_core::Raster64) -> Result<()> {
    if let Some(path) = path {
        export_pgm(path, raster).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn cmd_phantom(args: PhantomArgs) -> Result<()> {
    let spec = PhantomSpec {
        side: args.side,
        background_mean: args.background_mean,
        line_mean: args.line_mean,
        ..PhantomSpec::default()
    };
    let (truth, labels) = generate_phantom(&spec)?;
    write_raster(&args.out, &truth).with_context(|| format!("writing {}", args.out.display()))?;
    write_labels(&args.labels, &labels)
        .with_context(|| format!("writing {}", args.labels.display()))?;
    maybe_export_pgm(args.pgm.as_deref(), &truth)?;
    let patch = spec.layout()?.enl_patch;
    println!(
        "phantom {side}x{side}: truth {}, labels {}, homogeneous patch {},{},{},{}",
        args.out.display(),
        args.labels.display(),
        patch.row,
        patch.col,
        patch.height,
        patch.width,
        side = args.side,
    );
    Ok(())
}

fn cmd_corrupt(args: CorruptArgs) -> Result<()> {
    let truth = read_raster(&args.input)
        .with_context(|| format!("reading {}", args.input.display()))?;
    let speckled = corrupt(&truth, args.looks, args.seed)?;
    write_raster(&args.out, &speckled)
        .with_context(|| format!("writing {}", args.out.display()))?;
    maybe_export_pgm(args.pgm.as_deref(), &speckled)?;
    println!(
        "corrupted {} at {} looks (seed {}) -> {}",
        args.input.display(),
        args.looks,
        args.seed,
        args.out.display()
    );
    Ok(())
}

fn cmd_filter(args: FilterArgs) -> Result<()> {
    let image = read_raster(&args.input)
        .with_context(|| format!("reading {}", args.input.display()))?;
    let mut config = match args.method {
        FilterMethod::Kl => FilterConfig::kl(args.significance),
        FilterMethod::Lee => FilterConfig::lee(args.looks),
        FilterMethod::Mean => FilterConfig::mean(),
    };
    if args.method != FilterMethod::Kl {
        config.window_side = args.window;
    }
    let filtered = filter_image(&image, &config)?;
    write_raster(&args.out, &filtered)
        .with_context(|| format!("writing {}", args.out.display()))?;
    maybe_export_pgm(args.pgm.as_deref(), &filtered)?;
    println!(
        "filtered {} with {} -> {}",
        args.input.display(),
        args.method,
        args.out.display()
    );
    Ok(())
}

fn parse_patch(text: &str) -> Result<Rect> {
    let parts: Vec<usize> = text
        .split(',')
        .map(|p| p.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .context("patch must be four integers: row,col,height,width")?;
    if parts.len() != 4 {
        bail!("patch must be row,col,height,width, got {} values", parts.len());
    }
    Ok(Rect::new(parts[0], parts[1], parts[2], parts[3]))
}

fn cmd_metrics(args: MetricsArgs) -> Result<()> {
    let filtered = read_raster(&args.filtered)
        .with_context(|| format!("reading {}", args.filtered.display()))?;
    let truth = read_raster(&args.truth)
        .with_context(|| format!("reading {}", args.truth.display()))?;
    let labels = read_labels(&args.labels)
        .with_context(|| format!("reading {}", args.labels.display()))?;
    let patch = match &args.patch {
        Some(text) => parse_patch(text)?,
        None => {
            if labels.width() != labels.height() {
                bail!(
                    "labels are {}x{}, not square: pass --patch row,col,height,width",
                    labels.height(),
                    labels.width()
                );
            }
            let spec = PhantomSpec::<f64> {
                side: labels.width(),
                ..PhantomSpec::default()
            };
            spec.layout()
                .context("no default patch for this size: pass --patch")?
                .enl_patch
        }
    };
    let record = despeck_core::metrics::evaluate(
        &filtered,
        &truth,
        &labels,
        patch,
        args.replicate,
        args.looks,
        &args.label,
    );
    print!("{}", records_to_csv(&[record])?);
    Ok(())
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest");
    PathBuf::from(name)
}

fn cmd_montecarlo(args: MonteCarloArgs) -> Result<()> {
    let overrides = RunOverrides {
        replicates: args.replicates,
        looks_list: args.looks.as_deref().map(parse_looks_list).transpose()?,
        filters: args.filters.as_deref().map(parse_filter_list).transpose()?,
        significance: args.significance,
        base_seed: args.seed,
        side: args.side,
        background_mean: args.background_mean,
        line_mean: args.line_mean,
    };
    let config = resolve(args.config.as_deref(), &overrides)?;
    let outcome = run_protocol(&config)?;

    std::fs::write(&args.out, records_to_csv(&outcome.records)?)
        .with_context(|| format!("writing {}", args.out.display()))?;
    let manifest = manifest_path(&args.out);
    std::fs::write(&manifest, config.manifest())
        .with_context(|| format!("writing {}", manifest.display()))?;

    let (rows, warnings) = summarize(&outcome.records);
    if let Some(path) = &args.summary {
        std::fs::write(path, summary_to_csv(&rows)?)
            .with_context(|| format!("writing {}", path.display()))?;
    }
    if let Some(path) = &args.svg {
        std::fs::write(path, emit_boxplots(&outcome.records))
            .with_context(|| format!("writing {}", path.display()))?;
    }
    for warning in &warnings {
        eprintln!("warning: {warning}");
    }
    println!(
        "wrote {} records to {} (manifest {})",
        outcome.records.len(),
        args.out.display(),
        manifest.display()
    );
    if !outcome.failures.is_empty() {
        for failure in &outcome.failures {
            eprintln!("failed: {failure}");
        }
        bail!("{} of {} tasks failed", outcome.failures.len(), outcome.records.len());
    }
    Ok(())
}

fn cmd_report(args: ReportArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.input)
        .with_context(|| format!("reading {}", args.input.display()))?;
    let records = records_from_csv(&text)
        .with_context(|| format!("parsing {}", args.input.display()))?;
    let (rows, warnings) = summarize(&records);
    for warning in &warnings {
        eprintln!("warning: {warning}");
    }
    print!("{}", format_table(&rows));
    if let Some(path) = &args.out {
        std::fs::write(path, summary_to_csv(&rows)?)
            .with_context(|| format!("writing {}", path.display()))?;
    }
    if let Some(path) = &args.svg {
        std::fs::write(path, emit_boxplots(&records))
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}
