//! Run records and their CSV form.
//!
//! The main CSV is deterministic in (config, master seed). Wall time goes to
//! a `.timing.csv` sidecar and the recovered vectors to an `.xhat` sidecar,
//! which the checker reads back.

use std::fmt::Write as _;
use std::io;
use std::path::{Path, PathBuf};

use acs_core::SparseEstimate;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run_id: String,
    pub scheme: String,
    pub family: String,
    pub n: usize,
    pub k: usize,
    pub eps: f64,
    pub p: f64,
    pub seed: u64,
    pub measurements: u64,
    pub rounds: usize,
    pub error_ratio: f64,
    pub success: bool,
    /// `ok`, `budget-clipped`, or `error: ...`.
    pub status: String,
    #[serde(skip)]
    pub wall_time_ms: f64,
}

impl RunRecord {
    pub fn counts_toward_statistics(&self) -> bool {
        self.status == "ok"
    }
}

pub const CSV_COLUMNS: [&str; 13] = [
    "run_id",
    "scheme",
    "family",
    "n",
    "k",
    "eps",
    "p",
    "seed",
    "measurements",
    "rounds",
    "error_ratio",
    "success",
    "status",
];

fn csv_error(e: csv::Error) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, e)
}

pub fn records_to_csv(records: &[RunRecord]) -> io::Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in records {
        w.serialize(r).map_err(csv_error)?;
    }
    w.into_inner().map_err(|e| io::Error::other(e.to_string()))
}

pub fn records_from_csv(bytes: &[u8]) -> io::Result<Vec<RunRecord>> {
    let mut rd = csv::Reader::from_reader(bytes);
    let headers = rd.headers().map_err(csv_error)?.clone();
    if headers.iter().ne(CSV_COLUMNS.iter().copied()) {
        return Err(io::Error::new(
            io::ErrorKind::InvalidData,
            format!("unexpected CSV columns: {:?}", headers.iter().collect::<Vec<_>>()),
        ));
    }
    rd.deserialize().map(|r| r.map_err(csv_error)).collect()
}

pub fn timing_path(out: &Path) -> PathBuf {
    sidecar(out, "timing.csv")
}

pub fn estimates_path(out: &Path) -> PathBuf {
    sidecar(out, "xhat")
}

fn sidecar(out: &Path, ext: &str) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

pub fn timing_csv(records: &[RunRecord]) -> String {
    let mut s = String::from("run_id,wall_time_ms\n");
    for r in records {
        let _ = writeln!(s, "{},{:.3}", r.run_id, r.wall_time_ms);
    }
    s
}

/// One line per run: the run id, then `index:value` pairs.
pub fn estimates_text<'a>(items: impl IntoIterator<Item = (&'a str, &'a SparseEstimate)>) -> String {
    let mut s = String::new();
    for (id, est) in items {
        s.push_str(id);
        for (i, v) in est.iter() {
            let _ = write!(s, " {i}:{v}");
        }
        s.push('\n');
    }
    s
}

/// Parses [`estimates_text`] output into `(run_id, entries)`.
pub fn parse_estimates(text: &str) -> io::Result<Vec<(String, Vec<(usize, f64)>)>> {
    let bad = |m: String| io::Error::new(io::ErrorKind::InvalidData, m);
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let mut parts = line.split_whitespace();
        let Some(id) = parts.next() else { continue };
        let mut entries = Vec::new();
        for item in parts {
            let (i, v) = item
                .split_once(':')
                .ok_or_else(|| bad(format!("estimates line {}: bad entry {item:?}", lineno + 1)))?;
            let i = i.parse().map_err(|_| bad(format!("estimates line {}: bad index {i:?}", lineno + 1)))?;
            let v = v.parse().map_err(|_| bad(format!("estimates line {}: bad value {v:?}", lineno + 1)))?;
            entries.push((i, v));
        }
        out.push((id.to_string(), entries));
    }
    Ok(out)
}
