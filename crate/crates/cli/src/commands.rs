use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use bsbl::bsbl_fm::{recover, RecoveryReport, SolverConfig, Termination};
use bsbl::dictionary::{Dictionary, DictionaryKind};
use bsbl::dwt53;
use bsbl::formats::{parse_signal, DwtStreamSet, MatrixHeader, MeasurementSet, FORMAT_VERSION};
use bsbl::metrics::{mean, prd};
use bsbl::signal_model::{packetize, uniform_partition, Packet};
use rayon::prelude::*;
use serde::Serialize;

use crate::args::*;
use crate::error::{read, read_text, write, CliError, CliResult};

pub fn gen_matrix(args: &GenMatrixArgs) -> CliResult<()> {
    let phi = bsbl::sensing::SparseBinaryMatrix::generate(args.m, args.n, args.k, args.seed)?;
    write(&args.out, MatrixHeader::of(&phi).to_json())
}

/// Matrix parameters given on the command line are a usage matter, whatever
/// is wrong with them.
fn load_matrix(path: &Path) -> CliResult<MatrixHeader> {
    let text = read_text(path)?;
    MatrixHeader::from_json(&text).map_err(|e| CliError::usage(e.to_string()).at(path))
}

fn load_signal(path: &Path) -> CliResult<Vec<f64>> {
    parse_signal(&read_text(path)?).map_err(|e| CliError::from(e).at(path))
}

fn packets_of(path: &Path, n: usize) -> CliResult<(Vec<Packet>, usize)> {
    let signal = load_signal(path)?;
    let source = path.display().to_string();
    let p = packetize(&signal, n, &source)?;
    if p.packets.is_empty() {
        return Err(CliError::data(format!(
            "{} samples do not fill one packet of {n}",
            signal.len()
        ))
        .at(path));
    }
    Ok((p.packets, p.dropped))
}

pub fn compress(args: &CompressArgs) -> CliResult<()> {
    match args.mode {
        Mode::Cs => compress_cs(args),
        Mode::Dwt => compress_dwt(args),
    }
}

fn compress_cs(args: &CompressArgs) -> CliResult<()> {
    let matrix = args
        .matrix
        .as_deref()
        .ok_or_else(|| CliError::usage("--mode cs needs --matrix"))?;
    let header = load_matrix(matrix)?;
    if let Some(size) = args.packet_size {
        if size != header.n {
            return Err(CliError::usage(format!(
                "--packet-size {size} does not match the matrix's n = {}",
                header.n
            )));
        }
    }
    let phi = header.matrix()?;
    let (packets, dropped) = packets_of(&args.input, header.n)?;
    let packets = packets
        .iter()
        .map(|p| phi.encode(&p.samples, p.index))
        .collect::<Result<Vec<_>, _>>()?;
    let count = packets.len();
    let set = MeasurementSet { header, dropped, packets };
    let bytes = match args.format.unwrap_or(Format::Csv) {
        Format::Csv => set.to_csv()?.into_bytes(),
        Format::Bin => set.to_bytes()?,
    };
    write(&args.out, bytes)?;
    eprintln!("compressed {count} packets ({dropped} trailing samples dropped)");
    Ok(())
}

fn compress_dwt(args: &CompressArgs) -> CliResult<()> {
    if args.format == Some(Format::Csv) {
        return Err(CliError::usage("dwt streams are binary only; use --format bin"));
    }
    if !(args.scale.is_finite() && args.scale > 0.0) {
        return Err(CliError::usage("--scale must be positive"));
    }
    let n = args.packet_size.unwrap_or(512);
    let (packets, dropped) = packets_of(&args.input, n)?;
    let mut streams = Vec::with_capacity(packets.len());
    let (mut kept, mut total) = (0, 0);
    for p in &packets {
        let ints = p
            .samples
            .iter()
            .map(|v| {
                let r = (v * args.scale).round();
                (r.abs() < 2f64.powi(52))
                    .then_some(r as i64)
                    .ok_or_else(|| CliError::data(format!("sample {v} overflows at scale {}", args.scale)))
            })
            .collect::<CliResult<Vec<i64>>>()?;
        let stream = dwt53::compress(&ints, args.stages, args.t)?;
        kept += stream.values.len();
        total += n;
        streams.push((p.index, stream));
    }
    let set = DwtStreamSet { dropped, scale: args.scale, packets: streams };
    write(&args.out, set.to_bytes()?)?;
    eprintln!("compressed {} packets, {kept} of {total} coefficients kept", packets.len());
    Ok(())
}

#[derive(Serialize)]
struct RecoverParams {
    format_version: u32,
    matrix: MatrixHeader,
    dict: DictionaryKind,
    model: bsbl::bsbl_fm::CorrelationModel,
    /// `null` when the per-packet noisy default was used.
    beta_inv: Option<f64>,
    eta: f64,
    max_iter: usize,
    block_size: usize,
    dropped: usize,
}

#[derive(Serialize)]
struct PacketReport {
    packet_index: usize,
    status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    final_cost: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    wall_time: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    active_blocks: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    termination: Option<Termination>,
    #[serde(skip_serializing_if = "Option::is_none")]
    degenerate_candidates: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    prd: Option<f64>,
}

#[derive(Serialize)]
struct RecoverReportFile {
    params: RecoverParams,
    packets: Vec<PacketReport>,
    failed: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    mean_prd: Option<f64>,
}

fn packet_rows(header: &str, rows: &[(usize, &[f64])]) -> String {
    let mut out = format!("{header}\n");
    for (index, values) in rows {
        let _ = write!(out, "{index}");
        for v in *values {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

/// Reference samples of `index`, from a signal packetized like the input.
fn reference_packets(path: &Path, n: usize) -> CliResult<Vec<Packet>> {
    packets_of(path, n).map(|(p, _)| p)
}

fn reference_for<'a>(refs: &'a [Packet], index: usize, path: &Path) -> CliResult<&'a [f64]> {
    refs.get(index)
        .map(|p| p.samples.as_slice())
        .ok_or_else(|| CliError::data(format!("no reference packet {index}")).at(path))
}

pub fn recover_cmd(args: &RecoverArgs) -> CliResult<()> {
    let set = MeasurementSet::parse(&read(&args.input)?).map_err(|e| CliError::from(e).at(&args.input))?;
    let header = match &args.matrix {
        Some(path) => {
            let given = load_matrix(path)?;
            let file = &set.header;
            if (given.m, given.n, given.k, given.seed) != (file.m, file.n, file.k, file.seed) {
                return Err(CliError::data(format!(
                    "matrix (m={}, n={}, k={}, seed={}) does not match the measurements (m={}, n={}, k={}, seed={})",
                    given.m, given.n, given.k, given.seed, file.m, file.n, file.k, file.seed
                )));
            }
            given
        }
        None => set.header,
    };
    let phi = header.matrix()?;
    let dict = Dictionary::new(args.dict.into(), header.n)?;
    let part = uniform_partition(header.n, args.block_size)?;
    let base = SolverConfig {
        beta_inv: args.beta_inv.unwrap_or(bsbl::bsbl_fm::NOISELESS_BETA_INV),
        eta: args.eta,
        max_iter: args.max_iter,
        ..SolverConfig::noiseless(args.model)
    };
    base.validate()?;
    let refs = match &args.reference {
        Some(path) => Some(reference_packets(path, header.n)?),
        None => None,
    };

    let results: Vec<bsbl::Result<RecoveryReport>> = set
        .packets
        .par_iter()
        .map(|meas| {
            let cfg = if args.noisy {
                SolverConfig { beta_inv: bsbl::bsbl_fm::noisy_beta_inv(&meas.values), ..base.clone() }
            } else {
                base.clone()
            };
            recover(meas, &phi, &dict, &part, &cfg)
        })
        .collect();

    let mut rows = Vec::new();
    let mut reports = Vec::new();
    let mut failure: Option<CliError> = None;
    for (meas, result) in set.packets.iter().zip(&results) {
        let index = meas.packet_index;
        match result {
            Ok(rep) => {
                let prd_value = match (&refs, &args.reference) {
                    (Some(refs), Some(path)) => Some(prd(reference_for(refs, index, path)?, &rep.x_hat)?),
                    _ => None,
                };
                rows.push((index, rep.x_hat.as_slice()));
                reports.push(PacketReport {
                    packet_index: index,
                    status: "ok",
                    error: None,
                    iterations: Some(rep.iterations),
                    final_cost: Some(rep.final_cost),
                    wall_time: Some(rep.wall_time),
                    active_blocks: Some(rep.active_blocks.clone()),
                    termination: Some(rep.termination),
                    degenerate_candidates: Some(rep.degenerate_candidates),
                    prd: prd_value,
                });
            }
            Err(e) => {
                eprintln!("packet {index} failed: {e}");
                failure.get_or_insert_with(|| CliError::of(e));
                reports.push(PacketReport {
                    packet_index: index,
                    status: "failed",
                    error: Some(e.to_string()),
                    iterations: None,
                    final_cost: None,
                    wall_time: None,
                    active_blocks: None,
                    termination: None,
                    degenerate_candidates: None,
                    prd: None,
                });
            }
        }
    }

    let params = RecoverParams {
        format_version: FORMAT_VERSION,
        matrix: header,
        dict: args.dict.into(),
        model: args.model,
        beta_inv: (!args.noisy).then_some(base.beta_inv),
        eta: args.eta,
        max_iter: args.max_iter,
        block_size: args.block_size,
        dropped: set.dropped,
    };
    let csv_header = format!(
        "# bsbl-recovered format_version={FORMAT_VERSION} m={} n={} k={} seed={} dict={} model={} beta_inv={} eta={} max_iter={} block_size={} dropped={}",
        header.m,
        header.n,
        header.k,
        header.seed,
        if args.dict == DictArg::Dct { "dct" } else { "none" },
        args.model.label(),
        if args.noisy { "noisy".to_string() } else { base.beta_inv.to_string() },
        args.eta,
        args.max_iter,
        args.block_size,
        set.dropped
    );
    write(&args.out, packet_rows(&csv_header, &rows))?;

    let prds: Vec<f64> = reports.iter().filter_map(|r| r.prd).collect();
    let mean_prd = mean(&prds);
    if let Some(m) = mean_prd {
        println!("mean PRD {m:.4} over {} packets", prds.len());
    }
    let failed = reports.iter().filter(|r| r.status == "failed").count();
    let report = RecoverReportFile { params, packets: reports, failed, mean_prd };
    let report_path = args.report.clone().unwrap_or_else(|| sidecar(&args.out));
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    write(&report_path, json + "\n")?;

    match failure {
        Some(mut e) => {
            e.message = format!("{failed} of {} packets failed; first: {}", set.packets.len(), e.message);
            Err(e)
        }
        None => Ok(()),
    }
}

fn sidecar(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

pub fn dwt_expand(args: &DwtExpandArgs) -> CliResult<()> {
    let set = DwtStreamSet::from_bytes(&read(&args.input)?).map_err(|e| CliError::from(e).at(&args.input))?;
    let mut decoded = Vec::with_capacity(set.packets.len());
    for (index, stream) in &set.packets {
        let ints = stream.reconstruct()?;
        decoded.push((*index, ints.iter().map(|&v| v as f64 / set.scale).collect::<Vec<f64>>()));
    }
    let (n, stages, t) = set
        .packets
        .first()
        .map_or((0, 0, 0), |(_, s)| (s.n, s.stages, s.t));
    let header = format!(
        "# bsbl-dwt-expanded format_version={FORMAT_VERSION} n={n} stages={stages} T={t} scale={} dropped={}",
        set.scale, set.dropped
    );
    let rows: Vec<(usize, &[f64])> = decoded.iter().map(|(i, v)| (*i, v.as_slice())).collect();
    write(&args.out, packet_rows(&header, &rows))?;

    if let Some(path) = &args.reference {
        let refs = reference_packets(path, n)?;
        let mut prds = Vec::new();
        for (index, x_hat) in &decoded {
            let value = prd(reference_for(&refs, *index, path)?, x_hat)?;
            println!("packet {index}: PRD {value:.4}");
            prds.push(value);
        }
        if let Some(m) = mean(&prds) {
            println!("mean PRD {m:.4} over {} packets", prds.len());
        }
    }
    Ok(())
}
