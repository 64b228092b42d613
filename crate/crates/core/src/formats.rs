//! On-disk layouts.
//!
//! - Matrix header: JSON `{"format_version", "m", "n", "k", "seed"}`; the
//!   matrix itself is regenerated from these values.
//! - Measurements, CSV: a `#` metadata line followed by one packet per row,
//!   `packet_index,y_0,…,y_{m−1}`.
//! - Measurements, binary (little-endian): magic `BSBLMEAS`, `u32` version,
//!   `u32` reserved, `u64` m, n, k, seed, dropped, packet count, then per
//!   packet a `u64` index and `m` `f64` values.
//! - Wavelet streams (little-endian): magic `BSBLDWT\0`, `u32` version,
//!   `u32` packet count, `u64` dropped, `f64` input scale, then per packet
//!   `u32` index, n, stages, T, count, `count` LEB128 location deltas and
//!   `count` `i32` values.

use std::io::{Cursor, Read};

use serde::{Deserialize, Serialize};

use crate::dwt53::ThresholdedStream;
use crate::sensing::{Measurement, SparseBinaryMatrix};
use crate::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;
pub const MEASUREMENT_MAGIC: &[u8; 8] = b"BSBLMEAS";
pub const DWT_MAGIC: &[u8; 8] = b"BSBLDWT\0";
const CSV_TAG: &str = "bsbl-measurements";

/// Parameters that regenerate a [`SparseBinaryMatrix`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixHeader {
    pub format_version: u32,
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub seed: u64,
}

impl MatrixHeader {
    pub fn of(phi: &SparseBinaryMatrix) -> Self {
        MatrixHeader {
            format_version: FORMAT_VERSION,
            m: phi.m(),
            n: phi.n(),
            k: phi.k(),
            seed: phi.seed(),
        }
    }

    pub fn matrix(&self) -> Result<SparseBinaryMatrix> {
        SparseBinaryMatrix::generate(self.m, self.n, self.k, self.seed)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("header serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let h: MatrixHeader =
            serde_json::from_str(text).map_err(|e| Error::Format(format!("matrix header: {e}")))?;
        check_version(h.format_version)?;
        Ok(h)
    }
}

fn check_version(v: u32) -> Result<()> {
    if v == FORMAT_VERSION {
        Ok(())
    } else {
        Err(Error::Format(format!(
            "unsupported format_version {v} (expected {FORMAT_VERSION})"
        )))
    }
}

/// Measurements of consecutive packets under one sensing matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSet {
    pub header: MatrixHeader,
    /// Trailing input samples that did not fill a packet.
    pub dropped: usize,
    pub packets: Vec<Measurement>,
}

impl MeasurementSet {
    fn check(&self) -> Result<()> {
        for p in &self.packets {
            if p.values.len() != self.header.m {
                return Err(Error::Format(format!(
                    "packet {} has {} measurements, header says m={}",
                    p.packet_index,
                    p.values.len(),
                    self.header.m
                )));
            }
        }
        Ok(())
    }

    pub fn to_csv(&self) -> Result<String> {
        self.check()?;
        let h = &self.header;
        let mut out = format!(
            "# {CSV_TAG} format_version={} m={} n={} k={} seed={} dropped={}\n",
            h.format_version, h.m, h.n, h.k, h.seed, self.dropped
        );
        for p in &self.packets {
            out.push_str(&p.packet_index.to_string());
            for v in &p.values {
                out.push(',');
                out.push_str(&v.to_string());
            }
            out.push('\n');
        }
        Ok(out)
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let first = lines
            .next()
            .ok_or_else(|| Error::Format("empty measurement file".into()))?;
        let meta = first
            .strip_prefix('#')
            .map(str::trim)
            .and_then(|rest| rest.strip_prefix(CSV_TAG))
            .ok_or_else(|| Error::Format(format!("missing '# {CSV_TAG}' header line")))?;
        let field = |key: &str| -> Result<u64> {
            meta.split_whitespace()
                .find_map(|kv| kv.strip_prefix(key).and_then(|v| v.strip_prefix('=')))
                .ok_or_else(|| Error::Format(format!("header lacks {key}")))?
                .parse()
                .map_err(|e| Error::Format(format!("header field {key}: {e}")))
        };
        let header = MatrixHeader {
            format_version: field("format_version")? as u32,
            m: field("m")? as usize,
            n: field("n")? as usize,
            k: field("k")? as usize,
            seed: field("seed")?,
        };
        check_version(header.format_version)?;
        let dropped = field("dropped")? as usize;
        let mut packets = Vec::new();
        for (lineno, line) in lines.enumerate() {
            if line.trim_start().starts_with('#') {
                continue;
            }
            let mut cells = line.split(',').map(str::trim);
            let packet_index = cells
                .next()
                .unwrap_or_default()
                .parse()
                .map_err(|e| Error::Format(format!("row {}: packet index: {e}", lineno + 2)))?;
            let values = cells
                .map(|c| {
                    c.parse::<f64>()
                        .map_err(|e| Error::Format(format!("row {}: value {c:?}: {e}", lineno + 2)))
                })
                .collect::<Result<Vec<_>>>()?;
            packets.push(Measurement {
                values,
                packet_index,
            });
        }
        let set = MeasurementSet {
            header,
            dropped,
            packets,
        };
        set.check()?;
        Ok(set)
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        self.check()?;
        let h = &self.header;
        let mut out = Vec::with_capacity(64 + self.packets.len() * (8 + 8 * h.m));
        out.extend_from_slice(MEASUREMENT_MAGIC);
        out.extend_from_slice(&h.format_version.to_le_bytes());
        out.extend_from_slice(&0u32.to_le_bytes());
        for v in [h.m as u64, h.n as u64, h.k as u64, h.seed, self.dropped as u64, self.packets.len() as u64] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for p in &self.packets {
            out.extend_from_slice(&(p.packet_index as u64).to_le_bytes());
            for v in &p.values {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Cursor::new(bytes);
        expect_magic(&mut r, MEASUREMENT_MAGIC)?;
        let format_version = read_u32(&mut r)?;
        check_version(format_version)?;
        let _reserved = read_u32(&mut r)?;
        let m = read_u64(&mut r)? as usize;
        let n = read_u64(&mut r)? as usize;
        let k = read_u64(&mut r)? as usize;
        let seed = read_u64(&mut r)?;
        let dropped = read_u64(&mut r)? as usize;
        let count = read_u64(&mut r)? as usize;
        let remaining = bytes.len() as u64 - r.position();
        if (count as u64).saturating_mul(8 + 8 * m as u64) != remaining {
            return Err(Error::Format(format!(
                "{count} packets of {m} values need {} bytes, found {remaining}",
                count as u64 * (8 + 8 * m as u64)
            )));
        }
        let mut packets = Vec::with_capacity(count);
        for _ in 0..count {
            let packet_index = read_u64(&mut r)? as usize;
            let values = (0..m).map(|_| read_f64(&mut r)).collect::<Result<Vec<_>>>()?;
            packets.push(Measurement {
                values,
                packet_index,
            });
        }
        Ok(MeasurementSet {
            header: MatrixHeader {
                format_version,
                m,
                n,
                k,
                seed,
            },
            dropped,
            packets,
        })
    }

    /// Reads either layout, recognised by the binary magic.
    pub fn parse(bytes: &[u8]) -> Result<Self> {
        if bytes.starts_with(MEASUREMENT_MAGIC) {
            Self::from_bytes(bytes)
        } else {
            let text = std::str::from_utf8(bytes)
                .map_err(|_| Error::Format("measurement file is neither binary nor UTF-8 CSV".into()))?;
            Self::from_csv(text)
        }
    }
}

/// Thresholded wavelet streams of consecutive packets.
#[derive(Debug, Clone, PartialEq)]
pub struct DwtStreamSet {
    pub dropped: usize,
    /// Factor applied to input samples before rounding to integers.
    pub scale: f64,
    pub packets: Vec<(usize, ThresholdedStream)>,
}

impl DwtStreamSet {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        out.extend_from_slice(DWT_MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&to_u32(self.packets.len(), "packet count")?.to_le_bytes());
        out.extend_from_slice(&(self.dropped as u64).to_le_bytes());
        out.extend_from_slice(&self.scale.to_le_bytes());
        for (index, s) in &self.packets {
            if s.locations.len() != s.values.len() {
                return Err(Error::Format("locations and values differ in length".into()));
            }
            for v in [*index, s.n, s.stages, s.t as usize, s.values.len()] {
                out.extend_from_slice(&to_u32(v, "stream header field")?.to_le_bytes());
            }
            let mut prev = 0usize;
            for (j, &loc) in s.locations.iter().enumerate() {
                if j > 0 && loc <= prev {
                    return Err(Error::Format("locations are not strictly increasing".into()));
                }
                let delta = if j == 0 { loc } else { loc - prev };
                leb128::write::unsigned(&mut out, delta as u64).expect("writing to a Vec");
                prev = loc;
            }
            for &v in &s.values {
                let v = i32::try_from(v)
                    .map_err(|_| Error::Format(format!("coefficient {v} does not fit in 32 bits")))?;
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Cursor::new(bytes);
        expect_magic(&mut r, DWT_MAGIC)?;
        check_version(read_u32(&mut r)?)?;
        let count = read_u32(&mut r)? as usize;
        let dropped = read_u64(&mut r)? as usize;
        let scale = read_f64(&mut r)?;
        let mut packets = Vec::with_capacity(count.min(1 << 16));
        for _ in 0..count {
            let index = read_u32(&mut r)? as usize;
            let n = read_u32(&mut r)? as usize;
            let stages = read_u32(&mut r)? as usize;
            let t = read_u32(&mut r)?;
            let survivors = read_u32(&mut r)? as usize;
            if survivors > n {
                return Err(Error::Format(format!("{survivors} survivors exceed n={n}")));
            }
            let mut locations = Vec::with_capacity(survivors);
            let mut prev = 0u64;
            for j in 0..survivors {
                let delta = leb128::read::unsigned(&mut r)
                    .map_err(|e| Error::Format(format!("location varint: {e}")))?;
                let loc = if j == 0 { delta } else { prev + delta };
                if j > 0 && delta == 0 {
                    return Err(Error::Format("repeated location".into()));
                }
                locations.push(loc as usize);
                prev = loc;
            }
            let values = (0..survivors)
                .map(|_| {
                    let mut b = [0u8; 4];
                    read_exact(&mut r, &mut b)?;
                    Ok(i32::from_le_bytes(b) as i64)
                })
                .collect::<Result<Vec<_>>>()?;
            packets.push((
                index,
                ThresholdedStream {
                    n,
                    stages,
                    t,
                    locations,
                    values,
                },
            ));
        }
        if r.position() != bytes.len() as u64 {
            return Err(Error::Format("trailing bytes after last stream".into()));
        }
        Ok(DwtStreamSet {
            dropped,
            scale,
            packets,
        })
    }
}

fn to_u32(v: usize, what: &str) -> Result<u32> {
    u32::try_from(v).map_err(|_| Error::Format(format!("{what} {v} exceeds 32 bits")))
}

fn read_exact(r: &mut Cursor<&[u8]>, buf: &mut [u8]) -> Result<()> {
    r.read_exact(buf)
        .map_err(|_| Error::Format("unexpected end of data".into()))
}

fn expect_magic(r: &mut Cursor<&[u8]>, magic: &[u8; 8]) -> Result<()> {
    let mut b = [0u8; 8];
    read_exact(r, &mut b)?;
    if &b == magic {
        Ok(())
    } else {
        Err(Error::Format("bad magic prefix".into()))
    }
}

fn read_u32(r: &mut Cursor<&[u8]>) -> Result<u32> {
    let mut b = [0u8; 4];
    read_exact(r, &mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut Cursor<&[u8]>) -> Result<u64> {
    let mut b = [0u8; 8];
    read_exact(r, &mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64(r: &mut Cursor<&[u8]>) -> Result<f64> {
    let mut b = [0u8; 8];
    read_exact(r, &mut b)?;
    Ok(f64::from_le_bytes(b))
}

/// Parses a signal file: numbers separated by commas, whitespace or
/// newlines; blank lines and `#` comments are ignored.
pub fn parse_signal(text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        for cell in line.split(|c: char| c == ',' || c.is_whitespace()).filter(|c| !c.is_empty()) {
            let v: f64 = cell
                .parse()
                .map_err(|e| Error::Format(format!("line {}: {cell:?}: {e}", lineno + 1)))?;
            if !v.is_finite() {
                return Err(Error::Format(format!("line {}: non-finite sample", lineno + 1)));
            }
            out.push(v);
        }
    }
    Ok(out)
}
