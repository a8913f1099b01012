//! On-disk embedding cache.
//!
//! A cache is a CSV matrix (one row per crystal in sample order, one column
//! per fingerprint entry) preceded by `#` header lines:
//!
//! ```text
//! # xtalmet embedding cache v1
//! # kind: {"name":"amd","k":100}
//! # sample_hash: <sha256 of the canonical JSONL serialisation>
//! # property_table: <sha256 of the property table, magpie only>
//! # shape: <rows> <cols>
//! ```
//!
//! Values use the shortest representation that parses back to the same
//! double, so a rewrite of unchanged inputs is byte identical. Loading
//! refuses a cache whose kind, sample hash or property table differ from
//! the request.

use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::metrics::{Distance, DistanceKind, Embeddings};
use crate::structures::io::to_jsonl_string;
use crate::structures::SampleSet;
use crate::{Error, Result};

const MAGIC: &str = "# xtalmet embedding cache v1";

/// SHA-256 (hex) of the sample set's canonical JSONL serialisation.
pub fn sample_hash(samples: &SampleSet) -> String {
    hex::encode(Sha256::digest(to_jsonl_string(samples).as_bytes()))
}

fn table_digest(d: &Distance) -> Option<String> {
    matches!(d.kind, DistanceKind::Magpie).then(|| d.table.digest().to_string())
}

pub fn to_cache_string(emb: &Embeddings, samples: &SampleSet, d: &Distance) -> Result<String> {
    if emb.kind != d.kind {
        return Err(Error::Cache(format!("embeddings are {}, distance is {}", emb.kind, d.kind)));
    }
    if emb.len() != samples.len() {
        return Err(Error::Cache(format!("{} embeddings for {} samples", emb.len(), samples.len())));
    }
    let cols = emb.rows.first().map_or(0, Vec::len);
    let mut out = String::new();
    writeln!(out, "{MAGIC}").unwrap();
    writeln!(out, "# kind: {}", serde_json::to_string(&emb.kind)?).unwrap();
    writeln!(out, "# sample_hash: {}", sample_hash(samples)).unwrap();
    if let Some(t) = table_digest(d) {
        writeln!(out, "# property_table: {t}").unwrap();
    }
    writeln!(out, "# shape: {} {cols}", emb.len()).unwrap();
    for row in &emb.rows {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(out, "{}", line.join(",")).unwrap();
    }
    Ok(out)
}

pub fn write_cache(path: &Path, emb: &Embeddings, samples: &SampleSet, d: &Distance) -> Result<()> {
    std::fs::write(path, to_cache_string(emb, samples, d)?)?;
    Ok(())
}

/// Parsed cache contents.
#[derive(Clone, Debug, PartialEq)]
pub struct CacheFile {
    pub embeddings: Embeddings,
    pub sample_hash: String,
    pub property_table: Option<String>,
}

pub fn parse_cache(text: &str) -> Result<CacheFile> {
    let bad = |m: &str| Error::Cache(m.to_string());
    let mut lines = text.lines();
    if lines.next() != Some(MAGIC) {
        return Err(bad("not an embedding cache (bad first line)"));
    }
    let mut kind = None;
    let mut hash = None;
    let mut table = None;
    let mut shape = None;
    let mut rows = Vec::new();
    for (n, line) in lines.enumerate() {
        if let Some(header) = line.strip_prefix("# ") {
            let (key, value) = header.split_once(": ").ok_or_else(|| bad("malformed header line"))?;
            match key {
                "kind" => kind = Some(serde_json::from_str::<DistanceKind>(value)?),
                "sample_hash" => hash = Some(value.to_string()),
                "property_table" => table = Some(value.to_string()),
                "shape" => {
                    let dims: Vec<usize> = value
                        .split_whitespace()
                        .map(|x| x.parse().map_err(|_| bad("malformed shape")))
                        .collect::<Result<_>>()?;
                    if dims.len() != 2 {
                        return Err(bad("malformed shape"));
                    }
                    shape = Some((dims[0], dims[1]));
                }
                _ => return Err(Error::Cache(format!("unknown header {key:?}"))),
            }
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|x| x.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| Error::Cache(format!("bad number on data line {}", n + 1)))?;
        rows.push(row);
    }
    let kind = kind.ok_or_else(|| bad("missing kind"))?;
    let sample_hash = hash.ok_or_else(|| bad("missing sample_hash"))?;
    let (n_rows, n_cols) = shape.ok_or_else(|| bad("missing shape"))?;
    if rows.len() != n_rows || rows.iter().any(|r| r.len() != n_cols) {
        return Err(Error::Cache(format!("matrix does not match declared shape {n_rows}x{n_cols}")));
    }
    Ok(CacheFile { embeddings: Embeddings { kind, rows }, sample_hash, property_table: table })
}

/// Loads a cache and checks it was built from `samples` with distance `d`.
pub fn load_checked(path: &Path, samples: &SampleSet, d: &Distance) -> Result<Embeddings> {
    let file = parse_cache(&std::fs::read_to_string(path)?)?;
    check(file, samples, d)
}

pub fn check(file: CacheFile, samples: &SampleSet, d: &Distance) -> Result<Embeddings> {
    if file.embeddings.kind != d.kind {
        return Err(Error::Cache(format!("cache holds {} embeddings, requested {}", file.embeddings.kind, d.kind)));
    }
    let actual = sample_hash(samples);
    if file.sample_hash != actual {
        return Err(Error::CacheHashMismatch { expected: file.sample_hash, actual });
    }
    if file.property_table != table_digest(d) {
        return Err(Error::Cache("cache was built with a different property table".into()));
    }
    Ok(file.embeddings)
}
