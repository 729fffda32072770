//! On-disk formats.
//!
//! * Record file: `"SDIQ"`, version byte (1), repetition rate as a
//!   little-endian IEEE double, round count as little-endian `u64`, then
//!   the packed rounds (2 bits per round, `x` then `b`, 4 rounds per byte,
//!   LSB first).
//! * Monitor CSV: `time_s,power_w`.
//! * Session log CSV: `block_index,f00,f10,f01,f11,measured_omega,
//!   witness_value,passed,certified_bits` where `fbx = f(b|x)`.
//! * Bit file (seeds and extractor output): bit count as little-endian
//!   `u64`, then the bits packed LSB-first.
//!
//! Floating-point fields are written with 17 significant digits so that
//! every value round-trips exactly.

use crate::error::{Error, Result};
use crate::extract::Bits;
use crate::physics::{Behavior, MeanPhotonNumber, PowerSample, RoundLog};
use crate::protocol::BlockResult;
use std::fmt::Write as _;

pub const RECORD_MAGIC: &[u8; 4] = b"SDIQ";
pub const RECORD_VERSION: u8 = 1;
pub const RECORD_HEADER_LEN: usize = 21;

pub const MONITOR_HEADER: &str = "time_s,power_w";
pub const SESSION_HEADER: &str =
    "block_index,f00,f10,f01,f11,measured_omega,witness_value,passed,certified_bits";

fn parse_err(offset: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        offset: offset as u64,
        message: message.into(),
    }
}

/// 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn encode_records(rep_rate_hz: f64, rounds: &RoundLog) -> Vec<u8> {
    let mut out = Vec::with_capacity(RECORD_HEADER_LEN + rounds.packed().len());
    out.extend_from_slice(RECORD_MAGIC);
    out.push(RECORD_VERSION);
    out.extend_from_slice(&rep_rate_hz.to_le_bytes());
    out.extend_from_slice(&rounds.len().to_le_bytes());
    out.extend_from_slice(rounds.packed());
    out
}

pub fn decode_records(data: &[u8]) -> Result<(f64, RoundLog)> {
    if data.len() < RECORD_HEADER_LEN {
        return Err(parse_err(
            data.len(),
            format!("truncated header ({} of {RECORD_HEADER_LEN} bytes)", data.len()),
        ));
    }
    if &data[0..4] != RECORD_MAGIC {
        return Err(parse_err(0, "bad magic, expected \"SDIQ\""));
    }
    if data[4] != RECORD_VERSION {
        return Err(parse_err(4, format!("unsupported version {}", data[4])));
    }
    let rate = f64::from_le_bytes(data[5..13].try_into().expect("8 bytes"));
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(parse_err(5, format!("invalid repetition rate {rate}")));
    }
    let count = u64::from_le_bytes(data[13..21].try_into().expect("8 bytes"));
    let payload = &data[RECORD_HEADER_LEN..];
    let need = count.div_ceil(4);
    if (payload.len() as u64) < need {
        return Err(parse_err(
            data.len(),
            format!("payload truncated: {count} rounds need {need} bytes, found {}", payload.len()),
        ));
    }
    if payload.len() as u64 > need {
        return Err(parse_err(
            RECORD_HEADER_LEN + need as usize,
            "trailing bytes after payload",
        ));
    }
    let log = RoundLog::from_packed(payload.to_vec(), count)
        .map_err(|_| parse_err(data.len().saturating_sub(1), "nonzero padding bits"))?;
    Ok((rate, log))
}

pub fn encode_monitor(samples: &[PowerSample]) -> String {
    let mut s = String::from(MONITOR_HEADER);
    s.push('\n');
    for p in samples {
        let _ = writeln!(s, "{},{}", fmt_f64(p.time_s), fmt_f64(p.power_w));
    }
    s
}

/// Yields `(byte offset, fields)` for every data line after the header.
fn csv_rows<'a>(text: &'a str, header: &str) -> Result<Vec<(usize, Vec<&'a str>)>> {
    let mut offset = 0;
    let mut rows = Vec::new();
    let mut saw_header = false;
    for line in text.split_inclusive('\n') {
        let here = offset;
        offset += line.len();
        let body = line.trim_end_matches(['\n', '\r']);
        if body.trim().is_empty() {
            continue;
        }
        if !saw_header {
            if body.trim() != header {
                return Err(parse_err(here, format!("expected header `{header}`")));
            }
            saw_header = true;
            continue;
        }
        rows.push((here, body.split(',').map(str::trim).collect()));
    }
    if !saw_header {
        return Err(parse_err(0, "empty file"));
    }
    Ok(rows)
}

fn field<T: std::str::FromStr>(offset: usize, fields: &[&str], i: usize, name: &str) -> Result<T> {
    fields
        .get(i)
        .ok_or_else(|| parse_err(offset, format!("missing field `{name}`")))?
        .parse::<T>()
        .map_err(|_| parse_err(offset, format!("invalid `{name}`: `{}`", fields[i])))
}

pub fn decode_monitor(text: &str) -> Result<Vec<PowerSample>> {
    csv_rows(text, MONITOR_HEADER)?
        .into_iter()
        .map(|(off, f)| {
            if f.len() != 2 {
                return Err(parse_err(off, format!("expected 2 fields, got {}", f.len())));
            }
            Ok(PowerSample {
                time_s: field(off, &f, 0, "time_s")?,
                power_w: field(off, &f, 1, "power_w")?,
            })
        })
        .collect()
}

/// A session-log line: block position plus its judgment.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LoggedBlock {
    pub block_index: u64,
    pub result: BlockResult,
}

pub fn encode_session_log(blocks: &[LoggedBlock]) -> String {
    let mut s = String::from(SESSION_HEADER);
    s.push('\n');
    for lb in blocks {
        let r = &lb.result;
        let f = r.frequencies;
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            lb.block_index,
            fmt_f64(f.get(0, 0)),
            fmt_f64(f.get(0, 1)),
            fmt_f64(f.get(1, 0)),
            fmt_f64(f.get(1, 1)),
            fmt_f64(r.measured_omega.value()),
            fmt_f64(r.witness_value),
            u8::from(r.passed),
            r.certified_bits
        );
    }
    s
}

pub fn decode_session_log(text: &str) -> Result<Vec<LoggedBlock>> {
    csv_rows(text, SESSION_HEADER)?
        .into_iter()
        .map(|(off, f)| {
            if f.len() != 9 {
                return Err(parse_err(off, format!("expected 9 fields, got {}", f.len())));
            }
            let f00: f64 = field(off, &f, 1, "f00")?;
            let f10: f64 = field(off, &f, 2, "f10")?;
            let f01: f64 = field(off, &f, 3, "f01")?;
            let f11: f64 = field(off, &f, 4, "f11")?;
            let frequencies = Behavior::new([[f00, f10], [f01, f11]])
                .map_err(|e| parse_err(off, e.to_string()))?;
            let measured: f64 = field(off, &f, 5, "measured_omega")?;
            let measured_omega =
                MeanPhotonNumber::new(measured).map_err(|e| parse_err(off, e.to_string()))?;
            let passed = match f[7] {
                "0" => false,
                "1" => true,
                other => return Err(parse_err(off, format!("invalid `passed`: `{other}`"))),
            };
            Ok(LoggedBlock {
                block_index: field(off, &f, 0, "block_index")?,
                result: BlockResult {
                    frequencies,
                    measured_omega,
                    witness_value: field(off, &f, 6, "witness_value")?,
                    passed,
                    certified_bits: field(off, &f, 8, "certified_bits")?,
                },
            })
        })
        .collect()
}

pub fn encode_bits(bits: &Bits) -> Vec<u8> {
    let mut out = (bits.len() as u64).to_le_bytes().to_vec();
    out.extend_from_slice(&bits.to_bytes());
    out
}

pub fn decode_bits(data: &[u8]) -> Result<Bits> {
    if data.len() < 8 {
        return Err(parse_err(data.len(), "truncated bit-count prefix"));
    }
    let count = u64::from_le_bytes(data[0..8].try_into().expect("8 bytes"));
    let need = count.div_ceil(8);
    let payload = &data[8..];
    if payload.len() as u64 != need {
        return Err(parse_err(
            data.len().min(8 + need as usize),
            format!("{count} bits need {need} bytes, found {}", payload.len()),
        ));
    }
    Bits::from_bytes(payload, count as usize).map_err(|e| parse_err(8, e.to_string()))
}
