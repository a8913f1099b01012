//! Discrete structural distance over supplied space-group / Wyckoff labels.
//!
//! Labels are input metadata; nothing here detects symmetry. The comparison
//! ignores which element sits on which Wyckoff position, and no cell
//! reduction is applied first, so the distance depends on the origin and
//! setting the labels were produced in.

use serde::{Deserialize, Serialize};

use crate::structures::Crystal;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SymmetryRecord {
    pub spacegroup: u16,
    #[serde(rename = "wyckoff")]
    pub wyckoff_letters: Vec<String>,
}

impl SymmetryRecord {
    pub fn new(spacegroup: u16, wyckoff_letters: Vec<String>) -> Result<Self> {
        let rec = SymmetryRecord { spacegroup, wyckoff_letters };
        rec.validate()?;
        Ok(rec)
    }

    pub fn from_letters(spacegroup: u16, letters: &[&str]) -> Result<Self> {
        SymmetryRecord::new(spacegroup, letters.iter().map(|s| s.to_string()).collect())
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=230).contains(&self.spacegroup) {
            return Err(Error::InvalidSymmetry(format!("space group {} outside 1..230", self.spacegroup)));
        }
        if self.wyckoff_letters.is_empty() {
            return Err(Error::InvalidSymmetry("empty Wyckoff multiset".into()));
        }
        if let Some(bad) = self
            .wyckoff_letters
            .iter()
            .find(|l| l.is_empty() || !l.chars().all(|c| c.is_ascii_alphabetic()))
        {
            return Err(Error::InvalidSymmetry(format!("bad Wyckoff letter {bad:?}")));
        }
        Ok(())
    }

    /// Space group plus the sorted letter multiset; two records are at
    /// distance zero exactly when their keys are equal.
    pub fn key(&self) -> (u16, Vec<String>) {
        let mut letters = self.wyckoff_letters.clone();
        letters.sort_unstable();
        (self.spacegroup, letters)
    }
}

pub fn d_wyckoff(a: &Crystal, b: &Crystal) -> Result<u8> {
    let (sa, sb) = match (&a.symmetry, &b.symmetry) {
        (Some(sa), Some(sb)) => (sa, sb),
        _ => return Err(Error::MissingSymmetry),
    };
    Ok(u8::from(sa.key() != sb.key()))
}
