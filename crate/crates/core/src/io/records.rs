//! Trajectory record files.
//!
//! JSONL: one object per line with keys `id`, `points` (12 `[x, y]` pairs),
//! `v`, `a`, `h`, optional `labeled` (default false) and optional
//! `schema_version` (must be 1 when present).
//!
//! CSV: header `id,x1,y1,…,x12,y12,v,a,h,labeled`; the `labeled` cell may be
//! empty, `0`/`1` or `false`/`true`.

use std::collections::HashSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::fmt::g17;
use crate::trajectory::{validate_trajectory_state, RawTrajectory, TrajectoryError, TrajectoryPool, TrajectoryState, POINTS_PER_TRAJECTORY};

pub const RECORD_SCHEMA_VERSION: u32 = 1;
const COORDINATES: usize = 2 * POINTS_PER_TRAJECTORY;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordFormat {
    Jsonl,
    Csv,
}

impl RecordFormat {
    /// Guesses the format from the file extension.
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "jsonl" | "json" | "ndjson" => Some(RecordFormat::Jsonl),
            "csv" => Some(RecordFormat::Csv),
            _ => None,
        }
    }
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot tell the record format of {0}; use a .jsonl or .csv extension")]
    UnknownFormat(PathBuf),
    #[error("line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("line {line}: duplicate id {id:?}")]
    DuplicateId { line: usize, id: String },
    #[error("line {line}: record {id:?} has {found} coordinate values, expected {COORDINATES}")]
    WrongPointCount { line: usize, id: String, found: usize },
    #[error("line {line}: {source}")]
    Invalid {
        line: usize,
        #[source]
        source: TrajectoryError,
    },
    #[error("line {line}: unsupported schema_version {found}")]
    SchemaVersion { line: usize, found: u32 },
    #[error("labeled id {0:?} is not in the input")]
    UnknownLabeledId(String),
}

#[derive(Deserialize, Serialize)]
struct JsonRecord {
    id: String,
    points: Vec<[f64; 2]>,
    v: f64,
    a: f64,
    h: f64,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    labeled: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    schema_version: Option<u32>,
}

struct Builder {
    items: Vec<TrajectoryState>,
    labeled: Vec<String>,
    seen: HashSet<String>,
}

impl Builder {
    fn new() -> Self {
        Self {
            items: Vec::new(),
            labeled: Vec::new(),
            seen: HashSet::new(),
        }
    }

    fn push(&mut self, line: usize, raw: RawTrajectory, labeled: bool) -> Result<(), LoadError> {
        if !self.seen.insert(raw.id.clone()) {
            return Err(LoadError::DuplicateId { line, id: raw.id });
        }
        let item = validate_trajectory_state(&raw).map_err(|e| match e {
            TrajectoryError::WrongPointCount { id, found } => LoadError::WrongPointCount {
                line,
                id,
                found: 2 * found,
            },
            source => LoadError::Invalid { line, source },
        })?;
        if labeled {
            self.labeled.push(item.id().to_string());
        }
        self.items.push(item);
        Ok(())
    }

    fn finish(self) -> TrajectoryPool {
        TrajectoryPool::with_labeled(self.items, &self.labeled).expect("ids checked while loading")
    }
}

pub fn parse_jsonl(text: &str) -> Result<TrajectoryPool, LoadError> {
    let mut b = Builder::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let rec: JsonRecord = serde_json::from_str(line).map_err(|e| LoadError::Parse {
            line: lineno,
            column: e.column(),
            message: e.to_string(),
        })?;
        if let Some(found) = rec.schema_version.filter(|&v| v != RECORD_SCHEMA_VERSION) {
            return Err(LoadError::SchemaVersion { line: lineno, found });
        }
        let raw = RawTrajectory {
            id: rec.id,
            points: rec.points,
            v: rec.v,
            a: rec.a,
            h: rec.h,
        };
        b.push(lineno, raw, rec.labeled)?;
    }
    Ok(b.finish())
}

pub fn csv_header() -> Vec<String> {
    let mut h = vec!["id".to_string()];
    for k in 1..=POINTS_PER_TRAJECTORY {
        h.push(format!("x{k}"));
        h.push(format!("y{k}"));
    }
    h.extend(["v", "a", "h", "labeled"].map(String::from));
    h
}

pub fn parse_csv(text: &str) -> Result<TrajectoryPool, LoadError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(text.as_bytes());
    let parse_err = |e: csv::Error| {
        let line = e.position().map_or(0, |p| p.line() as usize);
        LoadError::Parse {
            line,
            column: 0,
            message: e.to_string(),
        }
    };
    let header = reader.headers().map_err(parse_err)?.clone();
    let expected = csv_header();
    if header.iter().ne(expected.iter().map(String::as_str)) {
        return Err(LoadError::Parse {
            line: 1,
            column: 1,
            message: format!("expected header {:?}", expected.join(",")),
        });
    }

    let mut b = Builder::new();
    for rec in reader.records() {
        let rec = rec.map_err(parse_err)?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let id = rec.get(0).unwrap_or_default().to_string();
        let found = rec.len().saturating_sub(5);
        if found != COORDINATES {
            return Err(LoadError::WrongPointCount { line, id, found });
        }
        let num = |col: usize| -> Result<f64, LoadError> {
            let cell = rec[col].trim();
            cell.parse::<f64>().map_err(|_| LoadError::Parse {
                line,
                column: col + 1,
                message: format!("{:?} in column {} is not a number", cell, expected[col]),
            })
        };
        let mut points = Vec::with_capacity(POINTS_PER_TRAJECTORY);
        for k in 0..POINTS_PER_TRAJECTORY {
            points.push([num(1 + 2 * k)?, num(2 + 2 * k)?]);
        }
        let labeled = match rec[COORDINATES + 4].trim() {
            "" | "0" | "false" => false,
            "1" | "true" => true,
            other => {
                return Err(LoadError::Parse {
                    line,
                    column: COORDINATES + 5,
                    message: format!("{other:?} is not a labeled flag"),
                })
            }
        };
        let raw = RawTrajectory {
            id,
            points,
            v: num(COORDINATES + 1)?,
            a: num(COORDINATES + 2)?,
            h: num(COORDINATES + 3)?,
        };
        b.push(line, raw, labeled)?;
    }
    Ok(b.finish())
}

pub fn parse_trajectories(text: &str, format: RecordFormat) -> Result<TrajectoryPool, LoadError> {
    match format {
        RecordFormat::Jsonl => parse_jsonl(text),
        RecordFormat::Csv => parse_csv(text),
    }
}

/// Hex SHA-256 of a byte string.
pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// A loaded pool with the digest of the file it came from.
#[derive(Debug, Clone)]
pub struct LoadedPool {
    pub pool: TrajectoryPool,
    pub digest: String,
}

pub fn load_trajectories(path: &Path, format: Option<RecordFormat>) -> Result<LoadedPool, LoadError> {
    let format = format
        .or_else(|| RecordFormat::from_path(path))
        .ok_or_else(|| LoadError::UnknownFormat(path.to_path_buf()))?;
    let bytes = fs::read(path).map_err(|source| LoadError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let text = String::from_utf8(bytes).map_err(|e| LoadError::Parse {
        line: 0,
        column: 0,
        message: format!("input is not UTF-8: {e}"),
    })?;
    let digest = sha256_hex(text.as_bytes());
    Ok(LoadedPool {
        pool: parse_trajectories(&text, format)?,
        digest,
    })
}

/// Reads an id-list file: one id per line, blank lines and `#` comments
/// ignored.
pub fn read_id_list(path: &Path) -> Result<Vec<String>, LoadError> {
    let text = fs::read_to_string(path).map_err(|source| LoadError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(String::from)
        .collect())
}

/// Replaces the labeled set of a pool with the listed ids.
pub fn relabel(pool: TrajectoryPool, ids: &[String]) -> Result<TrajectoryPool, LoadError> {
    let items = pool.items().to_vec();
    TrajectoryPool::with_labeled(items, ids).map_err(|e| match e {
        TrajectoryError::UnknownLabeledId(id) => LoadError::UnknownLabeledId(id),
        other => LoadError::Invalid { line: 0, source: other },
    })
}

pub fn write_trajectories<W: Write>(pool: &TrajectoryPool, format: RecordFormat, mut w: W) -> std::io::Result<()> {
    match format {
        RecordFormat::Jsonl => {
            for (i, t) in pool.items().iter().enumerate() {
                let s = t.state();
                let rec = JsonRecord {
                    id: t.id().to_string(),
                    points: t.points().to_vec(),
                    v: s.v,
                    a: s.a,
                    h: s.h,
                    labeled: pool.is_labeled(i),
                    schema_version: None,
                };
                serde_json::to_writer(&mut w, &rec)?;
                w.write_all(b"\n")?;
            }
        }
        RecordFormat::Csv => {
            writeln!(w, "{}", csv_header().join(","))?;
            for (i, t) in pool.items().iter().enumerate() {
                let mut cells = vec![t.id().to_string()];
                for p in t.points() {
                    cells.push(g17(p[0]));
                    cells.push(g17(p[1]));
                }
                let s = t.state();
                cells.extend([g17(s.v), g17(s.a), g17(s.h)]);
                cells.push(if pool.is_labeled(i) { "1" } else { "0" }.to_string());
                let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
                wtr.write_record(&cells).map_err(std::io::Error::other)?;
                w.write_all(&wtr.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?)?;
            }
        }
    }
    Ok(())
}
