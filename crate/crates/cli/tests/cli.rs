use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use bsbl::dictionary::dct_dictionary;
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde_json::Value;
use tempfile::TempDir;

fn bsbl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bsbl"))
        .args(args)
        .env_remove("BSBL_THREADS")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn ok(out: Output) -> Output {
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    out
}

struct Work(TempDir);

impl Work {
    fn new() -> Self {
        Work(tempfile::tempdir().unwrap())
    }

    fn path(&self, name: &str) -> PathBuf {
        self.0.path().join(name)
    }

    fn arg(&self, name: &str) -> String {
        self.path(name).display().to_string()
    }

    fn write(&self, name: &str, text: &str) -> String {
        fs::write(self.path(name), text).unwrap();
        self.arg(name)
    }

    fn signal(&self, name: &str, x: &[f64]) -> String {
        let text: String = x.iter().map(|v| format!("{v:.17e}\n")).collect();
        self.write(name, &text)
    }

    fn matrix(&self, name: &str, m: usize, n: usize, seed: u64) -> String {
        let out = self.arg(name);
        ok(bsbl(&[
            "gen-matrix", "--m", &m.to_string(), "--n", &n.to_string(), "--seed", &seed.to_string(), "-o", &out,
        ]));
        out
    }
}

/// Packets that are block sparse in the DCT domain: 3 of 16 blocks of 32
/// carry AR(`r`) samples.
fn dct_sparse_signal(packets: usize, r: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dict = dct_dictionary(512).unwrap();
    let mut out = Vec::new();
    for _ in 0..packets {
        let mut theta = DVector::zeros(512);
        let blocks = rand::seq::index::sample(&mut rng, 16, 3);
        for b in blocks {
            let mut prev: f64 = rng.sample(StandardNormal);
            for j in 0..32 {
                if j > 0 {
                    prev = r * prev + (1.0 - r * r).sqrt() * rng.sample::<f64, _>(StandardNormal);
                }
                theta[b * 32 + j] = prev;
            }
        }
        out.extend(dict.synthesize(&theta).iter());
    }
    out
}

fn data_rows(path: &Path) -> Vec<String> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(str::to_owned)
        .collect()
}

fn report(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn gen_matrix_writes_reproducible_parameters() {
    let w = Work::new();
    let a = w.matrix("a.json", 256, 512, 7);
    let b = w.matrix("b.json", 256, 512, 7);
    let v: Value = serde_json::from_str(&fs::read_to_string(&a).unwrap()).unwrap();
    assert_eq!((v["m"].as_u64(), v["n"].as_u64()), (Some(256), Some(512)));
    assert_eq!((v["k"].as_u64(), v["seed"].as_u64()), (Some(2), Some(7)));
    assert!(v["format_version"].is_u64());
    assert_eq!(fs::read(a).unwrap(), fs::read(b).unwrap());
}

#[test]
fn gen_matrix_rejects_zero_ones_per_column() {
    let w = Work::new();
    let out = bsbl(&["gen-matrix", "--m", "8", "--n", "16", "--k", "0", "-o", &w.arg("p.json")]);
    assert_eq!(code(&out), 2, "{}", stderr(&out));
    assert!(!w.path("p.json").exists());
}

#[test]
fn compress_frames_one_row_per_packet() {
    let w = Work::new();
    let phi = w.matrix("phi.json", 256, 512, 1);
    let sig = w.signal("x.txt", &dct_sparse_signal(2, 0.9, 1));
    let meas = w.arg("y.csv");
    ok(bsbl(&["compress", "-i", &sig, "-o", &meas, "--matrix", &phi]));
    let rows = data_rows(&w.path("y.csv"));
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.split(',').count() == 257));
    let header = fs::read_to_string(&meas).unwrap();
    assert!(header.starts_with('#') && header.contains("format_version="));
}

#[test]
fn compress_names_both_sizes_on_packet_mismatch() {
    let w = Work::new();
    let phi = w.matrix("phi.json", 256, 512, 1);
    let sig = w.signal("x.txt", &[1.0; 1024]);
    let out = bsbl(&["compress", "-i", &sig, "-o", &w.arg("y.csv"), "--matrix", &phi, "--packet-size", "256"]);
    assert_eq!(code(&out), 2);
    let msg = stderr(&out);
    assert!(msg.contains("256") && msg.contains("512"), "{msg}");
}

#[test]
fn cs_round_trip_recovers_noiseless_packets() {
    let w = Work::new();
    let phi = w.matrix("phi.json", 256, 512, 5);
    let x = dct_sparse_signal(2, 0.95, 5);
    let sig = w.signal("x.txt", &x);
    for format in ["csv", "bin"] {
        let meas = w.arg(&format!("y.{format}"));
        let rec = w.path(&format!("x_{format}.csv"));
        ok(bsbl(&["compress", "-i", &sig, "-o", &meas, "--matrix", &phi, "--format", format]));
        let out = ok(bsbl(&["recover", "-i", &meas, "-o", rec.to_str().unwrap(), "--reference", &sig]));
        assert!(stdout(&out).contains("mean PRD"));
        let rep = report(&rec.with_extension("csv.json"));
        assert_eq!(rep["failed"].as_u64(), Some(0));
        let mean_prd = rep["mean_prd"].as_f64().unwrap();
        assert!(mean_prd < 1.0, "{format}: PRD {mean_prd}");

        let rows = data_rows(&rec);
        assert_eq!(rows.len(), 2);
        let values: Vec<f64> = rows
            .iter()
            .flat_map(|r| r.split(',').skip(1).map(|v| v.parse::<f64>().unwrap()).collect::<Vec<_>>())
            .collect();
        let err: f64 = values.iter().zip(&x).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let norm: f64 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(100.0 * err / norm < 1.0);
    }
}

#[test]
fn recover_report_carries_per_packet_fields() {
    let w = Work::new();
    let phi = w.matrix("phi.json", 256, 512, 2);
    let sig = w.signal("x.txt", &dct_sparse_signal(1, 0.9, 2));
    let meas = w.arg("y.csv");
    ok(bsbl(&["compress", "-i", &sig, "-o", &meas, "--matrix", &phi]));
    let rep_path = w.arg("rep.json");
    ok(bsbl(&["recover", "-i", &meas, "-o", &w.arg("x.csv"), "--model", "0", "--report", &rep_path]));
    let rep = report(Path::new(&rep_path));
    assert_eq!(rep["params"]["model"], "SIM");
    assert_eq!(rep["params"]["matrix"]["seed"].as_u64(), Some(2));
    let p = &rep["packets"][0];
    for field in ["iterations", "final_cost", "wall_time", "active_blocks", "termination"] {
        assert!(!p[field].is_null(), "missing {field}");
    }
    assert_eq!(p["status"], "ok");
    assert!(p["iterations"].as_u64().unwrap() >= 3);
    assert_eq!(p["active_blocks"].as_array().unwrap().len(), 3);
    let csv = fs::read_to_string(w.path("x.csv")).unwrap();
    assert!(csv.starts_with('#') && csv.contains("model=") && csv.contains("seed=2"));
}

#[test]
fn both_models_agree_on_uncorrelated_dct_data() {
    let w = Work::new();
    let phi = w.matrix("phi.json", 256, 512, 9);
    let sig = w.signal("x.txt", &dct_sparse_signal(3, 0.0, 9));
    let meas = w.arg("y.csv");
    ok(bsbl(&["compress", "-i", &sig, "-o", &meas, "--matrix", &phi]));
    let mut prds = Vec::new();
    for model in ["0", "1"] {
        let rep = w.arg(&format!("rep{model}.json"));
        ok(bsbl(&[
            "recover", "-i", &meas, "-o", &w.arg("x.csv"), "--model", model, "--report", &rep, "--reference", &sig,
        ]));
        prds.push(report(Path::new(&rep))["mean_prd"].as_f64().unwrap());
    }
    let ratio = prds[0].max(prds[1]) / prds[0].min(prds[1]);
    assert!(ratio <= 2.0, "PRDs {prds:?}");
}

#[test]
fn matrix_problems_map_to_exit_codes() {
    let w = Work::new();
    let phi = w.matrix("phi.json", 128, 512, 3);
    let sig = w.signal("x.txt", &dct_sparse_signal(1, 0.9, 3));
    let meas = w.arg("y.csv");
    ok(bsbl(&["compress", "-i", &sig, "-o", &meas, "--matrix", &phi]));

    let no_seed = w.write("noseed.json", r#"{"format_version":1,"m":128,"n":512,"k":2}"#);
    let out = bsbl(&["recover", "-i", &meas, "-o", &w.arg("r.csv"), "--matrix", &no_seed]);
    assert_eq!(code(&out), 2, "{}", stderr(&out));
    let out = bsbl(&["compress", "-i", &sig, "-o", &w.arg("z.csv"), "--matrix", &no_seed]);
    assert_eq!(code(&out), 2, "{}", stderr(&out));

    let other = w.matrix("other.json", 128, 512, 4);
    let out = bsbl(&["recover", "-i", &meas, "-o", &w.arg("r.csv"), "--matrix", &other]);
    assert_eq!(code(&out), 3, "{}", stderr(&out));

    let corrupt = w.write("bad.csv", "# bsbl-measurements format_version=1 m=128 n=512 k=2 seed=3\n0,1,2,x\n");
    let out = bsbl(&["recover", "-i", &corrupt, "-o", &w.arg("r.csv")]);
    assert_eq!(code(&out), 3, "{}", stderr(&out));

    let out = bsbl(&["recover", "-i", &w.arg("missing.csv"), "-o", &w.arg("r.csv")]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("missing.csv"));
}

#[test]
fn dwt_of_a_constant_keeps_only_the_approximation() {
    let w = Work::new();
    let sig = w.signal("c.txt", &[1000.0; 512]);
    let streams = w.arg("c.dwt");
    let out = ok(bsbl(&["compress", "--mode", "dwt", "-i", &sig, "-o", &streams, "--stages", "4", "--T", "8"]));
    assert!(stderr(&out).contains("32 of 512 coefficients kept"), "{}", stderr(&out));
    let out = ok(bsbl(&["dwt-expand", "-i", &streams, "-o", &w.arg("c.csv"), "--reference", &sig]));
    assert!(stdout(&out).contains("mean PRD 0.0000"), "{}", stdout(&out));
}

#[test]
fn dwt_round_trip_reports_distortion() {
    let w = Work::new();
    let x: Vec<f64> = (0..1024)
        .map(|i| {
            let t = i as f64;
            (300.0 * (t / 17.0).sin() + 120.0 * (t / 5.0).cos()).round()
        })
        .collect();
    let sig = w.signal("x.txt", &x);
    let streams = w.arg("x.dwt");
    ok(bsbl(&["compress", "--mode", "dwt", "-i", &sig, "-o", &streams, "--packet-size", "512", "--T", "4"]));
    let out = ok(bsbl(&["dwt-expand", "-i", &streams, "-o", &w.arg("x.csv"), "--reference", &sig]));
    let text = stdout(&out);
    let mean = text
        .lines()
        .find_map(|l| l.strip_prefix("mean PRD "))
        .and_then(|l| l.split_whitespace().next())
        .and_then(|v| v.parse::<f64>().ok())
        .expect("mean PRD line");
    assert!(mean > 0.0 && mean < 10.0, "{text}");
    assert_eq!(data_rows(&w.path("x.csv")).len(), 2);

    let lossless = w.arg("l.dwt");
    ok(bsbl(&["compress", "--mode", "dwt", "-i", &sig, "-o", &lossless, "--packet-size", "512", "--T", "0"]));
    let out = ok(bsbl(&["dwt-expand", "-i", &lossless, "-o", &w.arg("l.csv"), "--reference", &sig]));
    assert!(stdout(&out).contains("mean PRD 0.0000"));
}

#[test]
fn dwt_streams_reject_csv_output() {
    let w = Work::new();
    let sig = w.signal("c.txt", &[1.0; 512]);
    let out = bsbl(&["compress", "--mode", "dwt", "-i", &sig, "-o", &w.arg("c.csv"), "--format", "csv"]);
    assert_eq!(code(&out), 2);
}

const BENCH: &str = r#"
cr_list = [0.5, 0.6, 0.7]
seed = 11
[synthetic_params]
packets = 4
"#;

fn bench_rows(table: &str) -> Vec<Vec<String>> {
    table
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

#[test]
fn bench_is_deterministic_and_covers_every_pair() {
    let w = Work::new();
    let cfg = w.write("b.toml", BENCH);
    let (a, b) = (w.arg("a.csv"), w.arg("b.csv"));
    ok(bsbl(&["bench", "-c", &cfg, "-o", &a, "--no-timing"]));
    ok(bsbl(&["bench", "-c", &cfg, "-o", &b, "--no-timing", "--threads", "1"]));
    let table = fs::read_to_string(&a).unwrap();
    assert_eq!(table.as_bytes(), fs::read(&b).unwrap().as_slice());
    assert!(table.starts_with("# bsbl-bench format_version="));
    assert!(table.contains("cr,model,prd_mean,prd_median,time_median_s,time_mean_s,iterations_mean,errors"));
    let rows = bench_rows(&table);
    assert_eq!(rows.len(), 6);
    for row in &rows {
        assert_eq!(row.len(), 8);
        assert_eq!((row[4].as_str(), row[7].as_str()), ("NA", "0"));
    }
}

#[test]
fn bench_distortion_grows_with_compression() {
    let w = Work::new();
    let cfg = w.write(
        "b.toml",
        r#"
cr_list = [0.5, 0.6, 0.7, 0.8]
seed = 4
beta_inv = 0.01
[synthetic_params]
packets = 4
intra_r = 0.9
noise_db = 20.0
"#,
    );
    let out = ok(bsbl(&["bench", "-c", &cfg, "--no-timing"]));
    let rows = bench_rows(&stdout(&out));
    assert_eq!(rows.len(), 8);
    for model in ["BSBL-FM(0)", "BSBL-FM(1)"] {
        let prds: Vec<f64> = rows.iter().filter(|r| r[1] == model).map(|r| r[2].parse().unwrap()).collect();
        let inversions = prds.windows(2).filter(|p| p[1] < p[0]).count();
        assert!(inversions <= 1, "{model}: {prds:?}");
    }
}

#[test]
fn bench_timing_and_threads() {
    let w = Work::new();
    let cfg = w.write("b.toml", "cr_list = [0.5]\nmodel = \"AR1\"\n[synthetic_params]\npackets = 2\n");
    let out = Command::new(env!("CARGO_BIN_EXE_bsbl"))
        .args(["bench", "-c", &cfg])
        .env("BSBL_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let rows = bench_rows(&stdout(&out));
    assert_eq!(rows.len(), 1);
    assert!(rows[0][4].parse::<f64>().unwrap() > 0.0);

    let out = bsbl(&["bench", "-c", &cfg, "--threads", "0"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn bench_config_errors_are_usage_errors() {
    let w = Work::new();
    for (name, text) in [
        ("empty.toml", "cr_list = []\n"),
        ("range.toml", "cr_list = [1.0]\n"),
        ("blocks.toml", "cr_list = [0.5]\nn = 500\n"),
        ("unknown.toml", "cr_list = [0.5]\ncolour = 1\n"),
    ] {
        let cfg = w.write(name, text);
        let out = bsbl(&["bench", "-c", &cfg, "--no-timing"]);
        assert_eq!(code(&out), 2, "{name}: {}", stderr(&out));
    }
}
