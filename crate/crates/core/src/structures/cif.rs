//! Minimal CIF reader for explicit-site (P1-style) files.
//!
//! Reads `_cell_length_*`, `_cell_angle_*` and an `_atom_site_` loop with
//! fractional coordinates. A symmetry-operator loop may be present only if
//! it lists nothing but the identity; operator expansion is not performed.

use std::collections::HashMap;

use nalgebra::Vector3;

use super::{Crystal, Lattice, Site};
use crate::element::Element;
use crate::{Error, Result};

const SYMOP_TAGS: [&str; 3] = [
    "_symmetry_equiv_pos_as_xyz",
    "_space_group_symop_operation_xyz",
    "_space_group_symop.operation_xyz",
];

/// Splits a line into CIF tokens, honouring single and double quotes.
fn tokenize(line: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut chars = line.chars().peekable();
    while let Some(&c) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
        } else if c == '#' {
            break;
        } else if c == '\'' || c == '"' {
            chars.next();
            let mut tok = String::new();
            while let Some(ch) = chars.next() {
                if ch == c && chars.peek().is_none_or(|n| n.is_whitespace()) {
                    break;
                }
                tok.push(ch);
            }
            out.push(tok);
        } else {
            let mut tok = String::new();
            while let Some(&ch) = chars.peek() {
                if ch.is_whitespace() {
                    break;
                }
                tok.push(ch);
                chars.next();
            }
            out.push(tok);
        }
    }
    out
}

/// Parses a CIF number, dropping a trailing standard uncertainty like `3.2494(3)`.
fn cif_number(tok: &str) -> Option<f64> {
    let t = tok.split('(').next()?;
    t.parse().ok()
}

/// "Zn2+" -> Zn, "O1" -> O, "Ga" -> Ga.
fn element_from_label(tok: &str) -> Option<Element> {
    let letters: String = tok.chars().take_while(|c| c.is_ascii_alphabetic()).collect();
    if letters.is_empty() {
        return None;
    }
    let mut sym = String::new();
    let mut it = letters.chars();
    sym.push(it.next()?.to_ascii_uppercase());
    if let Some(c) = it.next() {
        let two = format!("{sym}{}", c.to_ascii_lowercase());
        if let Some(e) = Element::from_symbol(&two) {
            return Some(e);
        }
    }
    Element::from_symbol(&sym)
}

fn is_identity_op(op: &str) -> bool {
    let norm: String = op.chars().filter(|c| !c.is_whitespace()).collect::<String>().to_lowercase();
    norm == "x,y,z" || norm == "+x,+y,+z"
}

struct Loop {
    tags: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Loop {
    fn column(&self, tag: &str) -> Option<usize> {
        self.tags.iter().position(|t| t.eq_ignore_ascii_case(tag))
    }
}

pub fn parse_cif_lite(text: &str) -> Result<Crystal> {
    let mut id = String::from("cif");
    let mut items: HashMap<String, String> = HashMap::new();
    let mut loops: Vec<Loop> = Vec::new();

    let mut lines = text.lines().peekable();
    while let Some(raw) = lines.next() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(name) = line.strip_prefix("data_") {
            id = name.trim().to_string();
            continue;
        }
        if line.eq_ignore_ascii_case("loop_") {
            let mut tags = Vec::new();
            while let Some(next) = lines.peek() {
                let t = next.trim();
                if t.starts_with('_') {
                    tags.push(t.split_whitespace().next().unwrap_or_default().to_string());
                    lines.next();
                } else {
                    break;
                }
            }
            let mut values = Vec::new();
            while let Some(next) = lines.peek() {
                let t = next.trim();
                if t.starts_with('_') || t.eq_ignore_ascii_case("loop_") || t.starts_with("data_") {
                    break;
                }
                values.extend(tokenize(t));
                lines.next();
            }
            if tags.is_empty() {
                continue;
            }
            if values.len() % tags.len() != 0 {
                return Err(Error::Cif(format!("loop starting with {} has a ragged row", tags[0])));
            }
            let rows = values.chunks(tags.len()).map(|c| c.to_vec()).collect();
            loops.push(Loop { tags, rows });
            continue;
        }
        if line.starts_with('_') {
            let toks = tokenize(line);
            let tag = toks[0].to_lowercase();
            let value = match toks.get(1) {
                Some(v) => v.clone(),
                None => lines.next().map(|l| tokenize(l).join(" ")).unwrap_or_default(),
            };
            items.insert(tag, value);
        }
    }

    let cell = |tag: &str| -> Result<f64> {
        items
            .get(tag)
            .and_then(|v| cif_number(v))
            .ok_or_else(|| Error::Cif(format!("missing or invalid {tag}")))
    };
    let lattice = Lattice::from_parameters(
        cell("_cell_length_a")?,
        cell("_cell_length_b")?,
        cell("_cell_length_c")?,
        cell("_cell_angle_alpha")?,
        cell("_cell_angle_beta")?,
        cell("_cell_angle_gamma")?,
    )?;

    for lp in &loops {
        if let Some(col) = SYMOP_TAGS.iter().find_map(|t| lp.column(t)) {
            if lp.rows.iter().any(|r| !is_identity_op(&r[col])) {
                return Err(Error::SymmetryExpandedCif);
            }
        }
    }
    for tag in SYMOP_TAGS {
        if items.get(tag).is_some_and(|op| !is_identity_op(op)) {
            return Err(Error::SymmetryExpandedCif);
        }
    }

    let sites_loop = loops
        .iter()
        .find(|l| l.column("_atom_site_fract_x").is_some())
        .ok_or_else(|| Error::Cif("missing _atom_site loop with fractional coordinates".into()))?;
    let fx = sites_loop.column("_atom_site_fract_x");
    let fy = sites_loop.column("_atom_site_fract_y");
    let fz = sites_loop.column("_atom_site_fract_z");
    let (fx, fy, fz) = match (fx, fy, fz) {
        (Some(x), Some(y), Some(z)) => (x, y, z),
        _ => return Err(Error::Cif("incomplete _atom_site_fract columns".into())),
    };
    let species_col = sites_loop
        .column("_atom_site_type_symbol")
        .or_else(|| sites_loop.column("_atom_site_label"))
        .ok_or_else(|| Error::Cif("no _atom_site_type_symbol or _atom_site_label column".into()))?;
    let occ_col = sites_loop.column("_atom_site_occupancy");

    let mut sites = Vec::with_capacity(sites_loop.rows.len());
    for row in &sites_loop.rows {
        let element = element_from_label(&row[species_col])
            .ok_or_else(|| Error::UnknownElement(row[species_col].clone()))?;
        if let Some(c) = occ_col {
            let occ = cif_number(&row[c]).unwrap_or(1.0);
            if (occ - 1.0).abs() > 1e-6 {
                return Err(Error::Cif(format!("partial occupancy {occ} unsupported")));
            }
        }
        let coord = |c: usize| cif_number(&row[c]).ok_or_else(|| Error::Cif(format!("bad coordinate {:?}", row[c])));
        sites.push(Site::new(element, Vector3::new(coord(fx)?, coord(fy)?, coord(fz)?))?);
    }
    Crystal::new(id, lattice, sites)
}
