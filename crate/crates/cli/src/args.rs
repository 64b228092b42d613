use std::path::PathBuf;

use bsbl::bsbl_fm::CorrelationModel;
use bsbl::dictionary::DictionaryKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "bsbl", version, about = "Block sparse Bayesian learning compressed sensing toolkit")]
pub struct Cli {
    /// Worker threads for packet-level parallelism (default: all cores).
    #[arg(long, global = true, env = "BSBL_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the parameters of a sparse binary sensing matrix as JSON.
    GenMatrix(GenMatrixArgs),
    /// Compress a signal into CS measurements or thresholded DWT streams.
    Compress(CompressArgs),
    /// Recover packets from CS measurements with BSBL-FM.
    Recover(RecoverArgs),
    /// Reconstruct a signal from thresholded DWT streams.
    DwtExpand(DwtExpandArgs),
    /// Run a compression-ratio sweep described by a TOML file.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct GenMatrixArgs {
    #[arg(long)]
    pub m: usize,
    #[arg(long)]
    pub n: usize,
    /// Ones per column.
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Cs,
    Dwt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Bin,
}

#[derive(Debug, Args)]
pub struct CompressArgs {
    /// Signal file: samples separated by commas, whitespace or newlines.
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long, short)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = Mode::Cs)]
    pub mode: Mode,
    /// Matrix JSON from `gen-matrix` (cs mode).
    #[arg(long)]
    pub matrix: Option<PathBuf>,
    /// Samples per packet; in cs mode it must equal the matrix's n.
    #[arg(long)]
    pub packet_size: Option<usize>,
    /// Output layout: csv (default) or bin for cs; dwt streams are always bin.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Lifting stages (dwt mode).
    #[arg(long, default_value_t = 4)]
    pub stages: usize,
    /// Discard coefficients with |c| < 2^T (dwt mode).
    #[arg(long = "T", default_value_t = 8)]
    pub t: u32,
    /// Samples are multiplied by this and rounded to integers (dwt mode).
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DictArg {
    Dct,
    None,
}

impl From<DictArg> for DictionaryKind {
    fn from(d: DictArg) -> Self {
        match d {
            DictArg::Dct => DictionaryKind::Dct,
            DictArg::None => DictionaryKind::Identity,
        }
    }
}

/// `0`/`sim` or `1`/`ar1`.
pub fn parse_model(s: &str) -> Result<CorrelationModel, String> {
    match s.to_ascii_lowercase().as_str() {
        "0" | "sim" => Ok(CorrelationModel::Sim),
        "1" | "ar1" => Ok(CorrelationModel::Ar1),
        _ => Err(format!("unknown model {s:?} (expected 0, 1, sim or ar1)")),
    }
}

#[derive(Debug, Args)]
pub struct RecoverArgs {
    /// Measurement file (CSV or binary, detected automatically).
    #[arg(long, short)]
    pub input: PathBuf,
    /// Recovered packets as CSV rows `index,x1,…,xn`.
    #[arg(long, short)]
    pub out: PathBuf,
    /// Matrix JSON; defaults to the parameters in the measurement header.
    #[arg(long)]
    pub matrix: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = DictArg::Dct)]
    pub dict: DictArg,
    /// 0 = SIM (identity block structure), 1 = AR(1) block structure.
    #[arg(long, value_parser = parse_model, default_value = "1")]
    pub model: CorrelationModel,
    /// Noise variance; defaults to the noiseless setting 1e-6.
    #[arg(long, conflicts_with = "noisy")]
    pub beta_inv: Option<f64>,
    /// Use 0.01·‖y‖² per packet as the noise variance.
    #[arg(long)]
    pub noisy: bool,
    #[arg(long, default_value_t = bsbl::bsbl_fm::DEFAULT_ETA)]
    pub eta: f64,
    #[arg(long, default_value_t = bsbl::bsbl_fm::DEFAULT_MAX_ITER)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 32)]
    pub block_size: usize,
    /// JSON report path (default: `<out>.json`).
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Original signal; adds per-packet PRD to the report.
    #[arg(long)]
    pub reference: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DwtExpandArgs {
    #[arg(long, short)]
    pub input: PathBuf,
    /// Reconstructed packets as CSV rows `index,x1,…,xn`.
    #[arg(long, short)]
    pub out: PathBuf,
    /// Original signal; prints per-packet and mean PRD.
    #[arg(long)]
    pub reference: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// TOML sweep description.
    #[arg(long, short)]
    pub config: PathBuf,
    /// Results table (default: stdout).
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Write `NA` in the timing columns so the table is reproducible byte for byte.
    #[arg(long)]
    pub no_timing: bool,
}
