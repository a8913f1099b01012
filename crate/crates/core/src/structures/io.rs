//! JSONL structure records, one crystal per line:
//!
//! ```json
//! {"id": "mp-2133", "lattice": [[3.24, 0, 0], [-1.62, 2.806, 0], [0, 0, 5.22]],
//!  "species": ["Zn", "Zn", "O", "O"], "frac_coords": [[0.333, 0.667, 0], ...],
//!  "e_hull": 0.0, "symmetry": {"spacegroup": 186, "wyckoff": ["b", "b"]}}
//! ```
//!
//! Floats are written rounded to 12 significant digits.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::{Crystal, Lattice, SampleSet, Site};
use crate::element::Element;
use crate::symmetry::SymmetryRecord;
use crate::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StructureRecord {
    id: String,
    lattice: [[f64; 3]; 3],
    species: Vec<String>,
    frac_coords: Vec<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    e_hull: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    symmetry: Option<SymmetryRecord>,
}

/// Rounds to 12 significant digits (the on-disk precision).
pub fn round_sig12(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

fn record_to_crystal(rec: StructureRecord) -> Result<Crystal> {
    if rec.species.len() != rec.frac_coords.len() {
        return Err(Error::InvalidCrystal(format!(
            "{} species but {} coordinates",
            rec.species.len(),
            rec.frac_coords.len()
        )));
    }
    let lattice = Lattice::from_rows(rec.lattice)?;
    let sites = rec
        .species
        .iter()
        .zip(&rec.frac_coords)
        .map(|(s, f)| {
            let element = Element::from_symbol(s).ok_or_else(|| Error::UnknownElement(s.clone()))?;
            Site::new(element, Vector3::from(*f))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut crystal = Crystal::new(rec.id, lattice, sites)?;
    if let Some(sym) = rec.symmetry {
        sym.validate()?;
        crystal.symmetry = Some(sym);
    }
    if let Some(e) = rec.e_hull {
        if !e.is_finite() {
            return Err(Error::InvalidCrystal("non-finite e_hull".into()));
        }
        crystal.e_hull = Some(e);
    }
    Ok(crystal)
}

fn crystal_to_record(c: &Crystal) -> StructureRecord {
    StructureRecord {
        id: c.id.clone(),
        lattice: c.lattice.rows().map(|r| r.map(round_sig12)),
        species: c.sites().iter().map(|s| s.element.symbol().to_string()).collect(),
        frac_coords: c
            .sites()
            .iter()
            .map(|s| [s.frac.x, s.frac.y, s.frac.z].map(round_sig12))
            .collect(),
        e_hull: c.e_hull.map(round_sig12),
        symmetry: c.symmetry.clone(),
    }
}

/// Parses one JSON record (no line context).
pub fn parse_record(line: &str) -> Result<Crystal> {
    record_to_crystal(serde_json::from_str(line)?)
}

/// Reads a JSONL stream into a sample set, keeping file order. Blank lines
/// are skipped; every error carries its 1-based line number.
pub fn parse_jsonl<R: BufRead>(reader: R, label: &str) -> Result<SampleSet> {
    let mut crystals = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: StructureRecord = serde_json::from_str(&line)
            .map_err(|e| Error::Parse { line: lineno, message: e.to_string() })?;
        let crystal = record_to_crystal(rec).map_err(|e| Error::Parse {
            line: lineno,
            message: match e {
                Error::UnknownElement(s) => format!("unknown element {s:?}"),
                other => other.to_string(),
            },
        })?;
        crystals.push(crystal);
    }
    if crystals.is_empty() {
        return Err(Error::EmptySampleSet);
    }
    Ok(SampleSet::new(label, crystals))
}

/// Reads a JSONL file; the sample-set label is the file stem.
pub fn read_jsonl_file(path: &Path) -> Result<SampleSet> {
    let label = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    parse_jsonl(BufReader::new(File::open(path)?), &label)
}

pub fn record_line(c: &Crystal) -> String {
    serde_json::to_string(&crystal_to_record(c)).expect("structure records always serialize")
}

pub fn write_jsonl<W: Write>(mut writer: W, samples: &SampleSet) -> Result<()> {
    for c in samples.iter() {
        writeln!(writer, "{}", record_line(c))?;
    }
    Ok(())
}

pub fn to_jsonl_string(samples: &SampleSet) -> String {
    samples.iter().map(|c| record_line(c) + "\n").collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const PO: &str = r#"{"id": "po", "lattice": [[3.35,0,0],[0,3.35,0],[0,0,3.35]], "species": ["Po"], "frac_coords": [[0,0,0]]}"#;

    #[test]
    fn minimal_record() {
        let set = parse_jsonl(PO.as_bytes(), "t").unwrap();
        assert_eq!(set.len(), 1);
        assert_eq!(set.crystals[0].num_sites(), 1);
        assert!((set.crystals[0].volume() - 3.35f64.powi(3)).abs() < 1e-12);
    }

    #[test]
    fn empty_stream() {
        let err = parse_jsonl("".as_bytes(), "t").unwrap_err();
        assert_eq!(err.to_string(), "empty sample set");
        assert!(matches!(parse_jsonl("\n  \n".as_bytes(), "t"), Err(Error::EmptySampleSet)));
    }

    #[test]
    fn unknown_element_reports_line() {
        let line = PO.replace("\"Po\"", "\"Xx\"");
        let err = parse_jsonl(line.as_bytes(), "t").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        assert!(err.to_string().contains("unknown element"), "{err}");
    }

    #[test]
    fn errors_carry_line_numbers() {
        let degenerate = PO.replace("[0,0,3.35]", "[0,0,0]");
        let missing = r#"{"id": "x", "species": ["Po"], "frac_coords": [[0,0,0]]}"#;
        let text = format!("{PO}\n{PO}\n{degenerate}\n");
        assert!(matches!(parse_jsonl(text.as_bytes(), "t"), Err(Error::Parse { line: 3, .. })));
        let text = format!("{PO}\n{missing}\n");
        let err = parse_jsonl(text.as_bytes(), "t").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        assert!(err.to_string().contains("lattice"));
        assert!(matches!(parse_jsonl("{not json".as_bytes(), "t"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn optional_fields_survive() {
        let line = PO.replace("}", r#", "e_hull": 0.05, "symmetry": {"spacegroup": 221, "wyckoff": ["a"]}}"#);
        let set = parse_jsonl(line.as_bytes(), "t").unwrap();
        let c = &set.crystals[0];
        assert_eq!(c.e_hull, Some(0.05));
        assert_eq!(c.symmetry.as_ref().unwrap().spacegroup, 221);
        let back = parse_jsonl(to_jsonl_string(&set).as_bytes(), "t").unwrap();
        assert_eq!(back, set);
        let bad = PO.replace("}", r#", "symmetry": {"spacegroup": 300, "wyckoff": ["a"]}}"#);
        assert!(parse_jsonl(bad.as_bytes(), "t").is_err());
    }

    #[test]
    fn sig12_rounding() {
        assert_eq!(round_sig12(1.0 / 3.0), 0.333333333333);
        assert_eq!(round_sig12(-2.5e-7), -2.5e-7);
        assert_eq!(round_sig12(0.0), 0.0);
    }
}
