use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use afdm::plot::render_svg;
use afdm::sim::{
    argmin_zeta, overhead_report, read_csv, run_ber_sweep, run_mimo_ber, run_threshold_sweep, write_csv,
    write_overhead_csv, SimConfig, SimResult,
};
use afdm::{AfdmError, Result};

#[derive(Parser)]
#[command(name = "afdm", version, about = "AFDM link-level simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// BER against SNRd for every threshold in the config.
    Ber(RunArgs),
    /// BER against the estimation threshold at one SNRd.
    ThresholdSweep(RunArgs),
    /// BER of a MIMO configuration.
    Mimo(RunArgs),
    /// AFDM and OTFS pilot overhead table.
    Overhead(OverheadArgs),
    /// Render result CSVs as an SVG chart.
    Plot(PlotArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the trial budget in the config.
    #[arg(long)]
    trials: Option<usize>,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct OverheadArgs {
    /// Range such as `1-4`, or a single value.
    #[arg(long, default_value = "1-4", value_parser = parse_range)]
    n_t: RangeInclusive<usize>,
    #[arg(long, default_value = "1-6", value_parser = parse_range)]
    alpha_max: RangeInclusive<usize>,
    #[arg(long, default_value = "1-4", value_parser = parse_range)]
    l_max: RangeInclusive<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PlotArgs {
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "BER vs SNRd")]
    title: String,
}

fn parse_range(s: &str) -> std::result::Result<RangeInclusive<usize>, String> {
    let (lo, hi) = s.split_once('-').unwrap_or((s, s));
    let lo: usize = lo.trim().parse().map_err(|_| format!("bad range start in `{s}`"))?;
    let hi: usize = hi.trim().parse().map_err(|_| format!("bad range end in `{s}`"))?;
    if lo > hi {
        return Err(format!("empty range `{s}`"));
    }
    Ok(lo..=hi)
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn run(args: &RunArgs, sweep: fn(&SimConfig) -> Result<Vec<SimResult>>) -> Result<Vec<SimResult>> {
    let mut config = SimConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(trials) = args.trials {
        config.trials = trials;
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = args.workers {
        if w == 0 {
            return Err(AfdmError::Config("--workers must be at least 1".into()));
        }
        builder = builder.num_threads(w);
    }
    let pool = builder
        .build()
        .map_err(|e| AfdmError::Config(format!("cannot start workers: {e}")))?;
    let rows = pool.install(|| sweep(&config))?;
    write_csv(&rows, output(args.out.as_deref())?)?;
    for r in &rows {
        eprintln!(
            "snr_d={} zeta={} frames={} errors={}/{} ber={:.3e} ({:.1}s, config {})",
            r.snr_d_db,
            r.zeta.map_or("-".to_string(), |z| z.to_string()),
            r.frames,
            r.bit_errors,
            r.data_bits,
            r.ber,
            r.wall_time_s,
            r.config_hash
        );
    }
    Ok(rows)
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ber(args) => {
            run(&args, run_ber_sweep)?;
        }
        Command::ThresholdSweep(args) => {
            let rows = run(&args, run_threshold_sweep)?;
            if let Some(z) = argmin_zeta(&rows) {
                eprintln!("lowest BER at zeta = {z}");
            }
        }
        Command::Mimo(args) => {
            run(&args, run_mimo_ber)?;
        }
        Command::Overhead(args) => {
            let rows = overhead_report(args.n_t, args.alpha_max, args.l_max)?;
            write_overhead_csv(&rows, output(args.out.as_deref())?)?;
        }
        Command::Plot(args) => {
            let mut rows = Vec::new();
            for path in &args.inputs {
                rows.extend(read_csv(File::open(path)?)?);
            }
            std::fs::write(&args.out, render_svg(&rows, &args.title))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
