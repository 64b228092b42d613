//! Compression-ratio sweeps.

use std::fmt::Write as _;

use bsbl::bsbl_fm::{noisy_beta_inv, recover, CorrelationModel, SolverConfig, DEFAULT_ETA, NOISELESS_BETA_INV};
use bsbl::dictionary::{Dictionary, DictionaryKind};
use bsbl::formats::{parse_signal, FORMAT_VERSION};
use bsbl::metrics::{mean, median, prd, time_repeated, MIN_TIMING_RUNS};
use bsbl::sensing::{measurements_for_cr, Measurement, SparseBinaryMatrix};
use bsbl::signal_model::{packetize, uniform_partition};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::args::BenchArgs;
use crate::error::{read_text, write, CliError, CliResult};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_block_size")]
    pub block_size: usize,
    #[serde(default = "default_k")]
    pub k: usize,
    pub cr_list: Vec<f64>,
    /// One model or a list; both when omitted.
    #[serde(default = "default_models", alias = "models")]
    pub model: Models,
    /// Defaults to 1e-6 for noiseless data and `0.01‖y‖²` per packet otherwise.
    #[serde(default)]
    pub beta_inv: Option<f64>,
    #[serde(default = "default_eta")]
    pub eta: f64,
    #[serde(default)]
    pub seed: u64,
    /// `"synthetic"` or a signal file path.
    #[serde(default = "default_input")]
    pub input: String,
    #[serde(default = "default_dict")]
    pub dict: DictionaryKind,
    #[serde(default = "default_timing_runs")]
    pub timing_runs: usize,
    #[serde(default)]
    pub synthetic_params: SyntheticParams,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Models {
    One(CorrelationModel),
    Many(Vec<CorrelationModel>),
}

impl Models {
    fn list(&self) -> Vec<CorrelationModel> {
        match self {
            Models::One(m) => vec![*m],
            Models::Many(v) => v.clone(),
        }
    }
}

/// Packets whose DCT coefficients are block sparse with AR(`intra_r`) blocks.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticParams {
    #[serde(default = "default_packets")]
    pub packets: usize,
    #[serde(default = "default_active")]
    pub active_blocks: usize,
    #[serde(default = "default_intra_r")]
    pub intra_r: f64,
    /// Measurement SNR in dB; noiseless when absent.
    #[serde(default)]
    pub noise_db: Option<f64>,
}

impl Default for SyntheticParams {
    fn default() -> Self {
        SyntheticParams {
            packets: default_packets(),
            active_blocks: default_active(),
            intra_r: default_intra_r(),
            noise_db: None,
        }
    }
}

fn default_n() -> usize {
    512
}
fn default_block_size() -> usize {
    32
}
fn default_k() -> usize {
    2
}
fn default_models() -> Models {
    Models::Many(vec![CorrelationModel::Sim, CorrelationModel::Ar1])
}
fn default_eta() -> f64 {
    DEFAULT_ETA
}
fn default_input() -> String {
    "synthetic".into()
}
fn default_dict() -> DictionaryKind {
    DictionaryKind::Dct
}
fn default_timing_runs() -> usize {
    MIN_TIMING_RUNS
}
fn default_packets() -> usize {
    8
}
fn default_active() -> usize {
    3
}
fn default_intra_r() -> f64 {
    0.95
}

impl BenchConfig {
    pub fn validate(&self) -> CliResult<()> {
        if self.cr_list.is_empty() {
            return Err(CliError::usage("cr_list is empty"));
        }
        if let Some(cr) = self.cr_list.iter().find(|cr| !(0.0..1.0).contains(*cr)) {
            return Err(CliError::usage(format!("compression ratio {cr} is outside [0, 1)")));
        }
        if self.block_size == 0 || !self.n.is_multiple_of(self.block_size) {
            return Err(CliError::usage(format!(
                "n = {} is not divisible by block_size = {}",
                self.n, self.block_size
            )));
        }
        if self.model.list().is_empty() {
            return Err(CliError::usage("model list is empty"));
        }
        let s = &self.synthetic_params;
        if self.input == "synthetic" {
            if s.packets == 0 || s.active_blocks == 0 || s.active_blocks > self.n / self.block_size {
                return Err(CliError::usage("synthetic_params need packets ≥ 1 and 1 ≤ active_blocks ≤ n/block_size"));
            }
            if !(s.intra_r.abs() < 1.0) {
                return Err(CliError::usage("synthetic_params.intra_r must lie in (-1, 1)"));
            }
        }
        Ok(())
    }
}

fn synthetic_packets(cfg: &BenchConfig, dict: &Dictionary) -> Vec<Vec<f64>> {
    let s = &cfg.synthetic_params;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let g = cfg.n / cfg.block_size;
    let innov = (1.0 - s.intra_r * s.intra_r).sqrt();
    (0..s.packets)
        .map(|_| {
            let mut theta = DVector::zeros(cfg.n);
            let mut blocks = rand::seq::index::sample(&mut rng, g, s.active_blocks).into_vec();
            blocks.sort_unstable();
            for b in blocks {
                let mut prev: f64 = rng.sample(StandardNormal);
                for j in b * cfg.block_size..(b + 1) * cfg.block_size {
                    theta[j] = prev;
                    prev = s.intra_r * prev + innov * rng.sample::<f64, _>(StandardNormal);
                }
            }
            dict.synthesize(&theta).as_slice().to_vec()
        })
        .collect()
}

struct PacketOutcome {
    prd: f64,
    iterations: usize,
    median_s: f64,
    mean_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub cr: f64,
    pub model: CorrelationModel,
    pub prd_mean: Option<f64>,
    pub prd_median: Option<f64>,
    pub time_median_s: Option<f64>,
    pub time_mean_s: Option<f64>,
    pub iterations_mean: Option<f64>,
    pub errors: usize,
}

pub fn run(cfg: &BenchConfig, timing: bool) -> CliResult<Vec<BenchRow>> {
    cfg.validate()?;
    let dict = Dictionary::new(cfg.dict, cfg.n)?;
    let part = uniform_partition(cfg.n, cfg.block_size)?;
    let signals = if cfg.input == "synthetic" {
        synthetic_packets(cfg, &dict)
    } else {
        let path = std::path::Path::new(&cfg.input);
        let signal = parse_signal(&read_text(path)?).map_err(|e| CliError::from(e).at(path))?;
        let p = packetize(&signal, cfg.n, &cfg.input)?;
        if p.packets.is_empty() {
            return Err(CliError::data(format!("fewer than n = {} samples", cfg.n)).at(path));
        }
        p.packets.into_iter().map(|p| p.samples).collect()
    };
    let runs = cfg.timing_runs.max(MIN_TIMING_RUNS);

    let mut rows = Vec::new();
    for (ci, &cr) in cfg.cr_list.iter().enumerate() {
        let m = measurements_for_cr(cfg.n, cr)?;
        let phi = SparseBinaryMatrix::generate(m, cfg.n, cfg.k, cfg.seed)?;
        // Noise is drawn once per (cr, packet) so both models see the same data.
        let measurements: Vec<Measurement> = signals
            .iter()
            .enumerate()
            .map(|(p, x)| {
                let mut meas = phi.encode(x, p)?;
                if let Some(snr) = cfg.synthetic_params.noise_db {
                    let power = meas.values.iter().map(|v| v * v).sum::<f64>() / m as f64;
                    let sigma = (power / 10f64.powf(snr / 10.0)).sqrt();
                    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ ((ci as u64) << 32 | p as u64));
                    for v in &mut meas.values {
                        *v += sigma * rng.sample::<f64, _>(StandardNormal);
                    }
                }
                Ok(meas)
            })
            .collect::<bsbl::Result<_>>()?;
        for model in cfg.model.list() {
            let outcomes: Vec<Option<PacketOutcome>> = measurements
                .par_iter()
                .zip(&signals)
                .map(|(meas, x)| {
                    let beta_inv = cfg.beta_inv.unwrap_or_else(|| match cfg.synthetic_params.noise_db {
                        Some(_) => noisy_beta_inv(&meas.values),
                        None => NOISELESS_BETA_INV,
                    });
                    let solver = SolverConfig { beta_inv, eta: cfg.eta, ..SolverConfig::noiseless(model) };
                    let solve = || recover(meas, &phi, &dict, &part, &solver);
                    let (rep, t) = if timing {
                        let (rep, t) = time_repeated(runs, solve);
                        (rep, Some(t))
                    } else {
                        (solve(), None)
                    };
                    let rep = rep.ok()?;
                    Some(PacketOutcome {
                        prd: prd(x, &rep.x_hat).ok()?,
                        iterations: rep.iterations,
                        median_s: t.map_or(f64::NAN, |t| t.median_s),
                        mean_s: t.map_or(f64::NAN, |t| t.mean_s),
                    })
                })
                .collect();
            let ok: Vec<&PacketOutcome> = outcomes.iter().flatten().collect();
            let prds: Vec<f64> = ok.iter().map(|o| o.prd).collect();
            let iters: Vec<f64> = ok.iter().map(|o| o.iterations as f64).collect();
            let medians: Vec<f64> = ok.iter().map(|o| o.median_s).collect();
            let means: Vec<f64> = ok.iter().map(|o| o.mean_s).collect();
            rows.push(BenchRow {
                cr,
                model,
                prd_mean: mean(&prds),
                prd_median: median(&prds),
                time_median_s: if timing { median(&medians) } else { None },
                time_mean_s: if timing { mean(&means) } else { None },
                iterations_mean: mean(&iters),
                errors: outcomes.len() - ok.len(),
            });
        }
    }
    Ok(rows)
}

pub fn table(cfg: &BenchConfig, rows: &[BenchRow]) -> String {
    let params = serde_json::to_string(cfg).expect("config serializes");
    let mut out = format!("# bsbl-bench format_version={FORMAT_VERSION} config={params}\n");
    out.push_str("cr,model,prd_mean,prd_median,time_median_s,time_mean_s,iterations_mean,errors\n");
    let cell = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |v| format!("{v:.6}"));
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.cr,
            r.model.label(),
            cell(r.prd_mean),
            cell(r.prd_median),
            cell(r.time_median_s),
            cell(r.time_mean_s),
            cell(r.iterations_mean),
            r.errors
        );
    }
    out
}

pub fn bench(args: &BenchArgs) -> CliResult<()> {
    let text = read_text(&args.config)?;
    let cfg: BenchConfig =
        toml::from_str(&text).map_err(|e| CliError::usage(e.to_string()).at(&args.config))?;
    let rows = run(&cfg, !args.no_timing)?;
    let out = table(&cfg, &rows);
    match &args.out {
        Some(path) => write(path, out)?,
        None => print!("{out}"),
    }
    let errors: usize = rows.iter().map(|r| r.errors).sum();
    if errors > 0 {
        return Err(CliError::degenerate(format!("{errors} packet recoveries failed; see the errors column")));
    }
    Ok(())
}
