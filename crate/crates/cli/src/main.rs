use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Parser;
use tbrova::sim::{self, ExperimentConfig, KeyValues};

/// Simulate tail-biting reliability-output decoders and emit CSV.
#[derive(Debug, Parser)]
#[command(name = "tbrova", version)]
struct Args {
    /// Octal generators, e.g. 117,127,155
    #[arg(long)]
    code: Option<String>,
    /// Code rate as k/n
    #[arg(long)]
    rate: Option<String>,
    /// Encoder memory cells
    #[arg(long)]
    nu: Option<usize>,
    /// Trellis segments per codeword
    #[arg(long)]
    length: Option<usize>,
    /// Comma separated Eb/N0 grid in dB
    #[arg(long, allow_hyphen_values = true)]
    ebn0: Option<String>,
    /// Words per grid point
    #[arg(long)]
    words: Option<usize>,
    /// Decoder name(s): tb_rova, approx_tb_rova, tb_sea_rova, wava_prc, tb_bcjr_rova
    #[arg(long)]
    decoder: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// awgn or bsc
    #[arg(long)]
    channel: Option<String>,
    /// Output file (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Minimum error count for reporting an actual word-error rate
    #[arg(long)]
    min_errors: Option<usize>,
    /// key=value configuration file; command-line flags override it
    #[arg(long)]
    config: Option<PathBuf>,
    /// Emit one row per decoded word instead of sweep rows
    #[arg(long)]
    histogram: bool,
    /// With --histogram, emit decade-binned counts
    #[arg(long, requires = "histogram")]
    decade_bins: bool,
    /// Print measured per-segment operation counts beside the closed forms
    #[arg(long)]
    op_report: bool,
}

impl Args {
    fn key_values(&self) -> KeyValues {
        KeyValues {
            code: self.code.clone(),
            rate: self.rate.clone(),
            nu: self.nu,
            length: self.length,
            ebn0: self.ebn0.clone(),
            words: self.words,
            decoder: self.decoder.clone(),
            seed: self.seed,
            channel: self.channel.clone(),
            out: self.out.clone(),
            min_errors: self.min_errors,
        }
    }
}

fn load_config(args: &Args) -> Result<ExperimentConfig> {
    let defaults = if args.histogram { KeyValues::histogram_defaults() } else { KeyValues::default() };
    let file = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            KeyValues::parse(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => KeyValues::default(),
    };
    Ok(defaults.merge(file).merge(args.key_values()).build()?)
}

fn run(args: &Args) -> Result<()> {
    let cfg = load_config(args)?;
    let mut out: Box<dyn Write> = match &cfg.out {
        Some(path) => Box::new(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    if args.op_report {
        sim::write_op_report(&sim::report_op_counts(&cfg)?, &mut out)?;
    } else if args.histogram {
        let rows = sim::run_histogram(&cfg)?;
        if args.decade_bins {
            sim::write_binned_csv(&rows, &mut out)?;
        } else {
            sim::write_histogram_csv(&rows, &mut out)?;
        }
    } else {
        sim::write_csv(&sim::run_wer_sweep(&cfg)?, &mut out)?;
    }
    out.flush()?;
    Ok(())
}

fn main() {
    let args = Args::parse();
    if let Err(e) = run(&args) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
