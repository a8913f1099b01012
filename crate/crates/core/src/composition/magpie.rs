//! Magpie composition fingerprint (145 attributes) and its Euclidean distance.
//!
//! Attribute layout, in order:
//!
//! * 0..6: stoichiometric p-norms of the atomic-fraction vector for
//!   p = 0, 2, 3, 5, 7, 10 (p = 0 is the number of elements);
//! * 6..138: for each of the 22 tabulated properties (in table column
//!   order), the fraction-weighted minimum, maximum, range, mean, mean
//!   absolute deviation and mode;
//! * 138..142: fraction of valence electrons in s, p, d, f shells;
//! * 142..145: charge-neutral ionic compound possible (0/1), maximum and
//!   fraction-weighted average ionic character `1 - exp(-(dX)^2 / 4)`.
//!
//! The mode is the value of the element with the largest fraction; ties
//! resolve to the smallest tied value.

use std::collections::HashSet;
use std::path::Path;
use std::sync::OnceLock;

use sha2::{Digest, Sha256};

use crate::element::{Element, MAX_Z};
use crate::structures::Crystal;
use crate::{Error, Result};

use super::{composition_of, Composition};

pub const MAGPIE_LEN: usize = 145;
pub const TABLE_VERSION: &str = "element_properties_v1";

pub const PROPERTIES: [&str; 22] = [
    "Number",
    "MendeleevNumber",
    "AtomicWeight",
    "MeltingT",
    "Column",
    "Row",
    "CovalentRadius",
    "Electronegativity",
    "NsValence",
    "NpValence",
    "NdValence",
    "NfValence",
    "NValence",
    "NsUnfilled",
    "NpUnfilled",
    "NdUnfilled",
    "NfUnfilled",
    "NUnfilled",
    "GSvolume_pa",
    "GSbandgap",
    "GSmagmom",
    "SpaceGroupNumber",
];

const STATS: [&str; 6] = ["minimum", "maximum", "range", "mean", "avg_dev", "mode"];
const P_NORMS: [i32; 6] = [0, 2, 3, 5, 7, 10];

const ELECTRONEGATIVITY: usize = 7;
const SHELL_VALENCE: [usize; 4] = [8, 9, 10, 11];
const TOTAL_VALENCE: usize = 12;

const BUILTIN_CSV: &str = include_str!("../../data/element_properties_v1.csv");

#[derive(Clone, Debug)]
struct ElementRow {
    values: [f64; 22],
    oxidation_states: Vec<i64>,
}

/// Elemental property table. Missing cells are imputed with the column mean
/// over the elements present in the table.
#[derive(Clone, Debug)]
pub struct PropertyTable {
    rows: Vec<Option<ElementRow>>,
    digest: String,
}

impl PropertyTable {
    /// The table compiled into the library.
    pub fn builtin() -> &'static PropertyTable {
        static TABLE: OnceLock<PropertyTable> = OnceLock::new();
        TABLE.get_or_init(|| PropertyTable::from_csv(BUILTIN_CSV).expect("bundled property table is valid"))
    }

    pub fn from_path(path: &Path) -> Result<PropertyTable> {
        PropertyTable::from_csv(&std::fs::read_to_string(path)?)
    }

    pub fn from_csv(text: &str) -> Result<PropertyTable> {
        let bad = |m: String| Error::PropertyTable(m);
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let headers = reader.headers().map_err(|e| bad(e.to_string()))?.clone();
        let col = |name: &str| {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| bad(format!("missing column {name}")))
        };
        let symbol_col = col("symbol")?;
        let prop_cols = PROPERTIES.iter().map(|p| col(p)).collect::<Result<Vec<_>>>()?;
        let ox_col = col("oxidation_states")?;

        // per Z: property values (blank cells are None) and oxidation states
        type Row = ([Option<f64>; 22], Vec<i64>);
        let mut raw: Vec<Option<Row>> = vec![None; MAX_Z as usize + 1];
        for (i, record) in reader.records().enumerate() {
            let record = record.map_err(|e| bad(e.to_string()))?;
            let symbol = record.get(symbol_col).unwrap_or_default();
            let element = Element::from_symbol(symbol).ok_or_else(|| bad(format!("row {}: unknown element {symbol:?}", i + 1)))?;
            let mut values = [None; 22];
            for (k, &c) in prop_cols.iter().enumerate() {
                let cell = record.get(c).unwrap_or_default();
                if !cell.is_empty() {
                    let v: f64 = cell
                        .parse()
                        .map_err(|_| bad(format!("{symbol}: bad {} value {cell:?}", PROPERTIES[k])))?;
                    values[k] = Some(v);
                }
            }
            let ox = record
                .get(ox_col)
                .unwrap_or_default()
                .split_whitespace()
                .map(|t| t.parse::<f64>().map(|x| x.round() as i64))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| bad(format!("{symbol}: bad oxidation states")))?;
            raw[element.z() as usize] = Some((values, ox));
        }

        let mut means = [0.0; 22];
        for (k, mean) in means.iter_mut().enumerate() {
            let present: Vec<f64> = raw.iter().flatten().filter_map(|(v, _)| v[k]).collect();
            *mean = if present.is_empty() { 0.0 } else { present.iter().sum::<f64>() / present.len() as f64 };
        }
        let rows = raw
            .into_iter()
            .map(|r| {
                r.map(|(v, ox)| ElementRow {
                    values: std::array::from_fn(|k| v[k].unwrap_or(means[k])),
                    oxidation_states: ox,
                })
            })
            .collect();
        Ok(PropertyTable { rows, digest: hex::encode(Sha256::digest(text.as_bytes())) })
    }

    /// SHA-256 of the CSV text the table was loaded from.
    pub fn digest(&self) -> &str {
        &self.digest
    }

    fn row(&self, e: Element) -> Result<&ElementRow> {
        self.rows[e.z() as usize].as_ref().ok_or_else(|| Error::MissingProperty {
            element: e.symbol().to_string(),
            property: PROPERTIES[0].to_string(),
        })
    }

    pub fn value(&self, e: Element, property: &str) -> Result<f64> {
        let k = PROPERTIES.iter().position(|p| *p == property).ok_or_else(|| Error::MissingProperty {
            element: e.symbol().to_string(),
            property: property.to_string(),
        })?;
        Ok(self.row(e)?.values[k])
    }
}

/// Names of the 145 attributes in vector order.
pub fn feature_labels() -> Vec<String> {
    let mut out: Vec<String> = P_NORMS.iter().map(|p| format!("{p}-norm")).collect();
    for p in PROPERTIES {
        for s in STATS {
            out.push(format!("{s} {p}"));
        }
    }
    for shell in ["s", "p", "d", "f"] {
        out.push(format!("frac {shell} valence electrons"));
    }
    out.extend(["compound possible", "max ionic char", "avg ionic char"].map(String::from));
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct MagpieVector(Vec<f64>);

impl MagpieVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn distance(&self, other: &MagpieVector) -> f64 {
        euclidean(&self.0, &other.0)
    }
}

pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// numpy.isclose with default tolerances.
fn isclose(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-8 + 1e-5 * b.abs()
}

fn charge_neutral_possible(amounts: &[u64], oxidation_states: &[&[i64]]) -> bool {
    let mut reachable: HashSet<i64> = HashSet::from([0]);
    for (&n, states) in amounts.iter().zip(oxidation_states) {
        reachable = reachable
            .iter()
            .flat_map(|&s| states.iter().map(move |&ox| s + ox * n as i64))
            .collect();
        if reachable.is_empty() {
            return false;
        }
    }
    reachable.contains(&0)
}

pub fn magpie_fingerprint(comp: &Composition, table: &PropertyTable) -> Result<MagpieVector> {
    let reduced = comp.reduced();
    let fractions = reduced.fractions();
    if fractions.is_empty() {
        return Err(Error::InvalidCrystal("empty composition".into()));
    }
    let rows = fractions.iter().map(|(e, _)| table.row(*e)).collect::<Result<Vec<_>>>()?;
    let x: Vec<f64> = fractions.iter().map(|(_, f)| *f).collect();
    let mut out = Vec::with_capacity(MAGPIE_LEN);

    for p in P_NORMS {
        if p == 0 {
            out.push(x.len() as f64);
        } else {
            out.push(x.iter().map(|f| f.powi(p)).sum::<f64>().powf(1.0 / p as f64));
        }
    }

    let x_max = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    for k in 0..PROPERTIES.len() {
        let v: Vec<f64> = rows.iter().map(|r| r.values[k]).collect();
        let min = v.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mean: f64 = v.iter().zip(&x).map(|(v, f)| v * f).sum();
        let avg_dev: f64 = v.iter().zip(&x).map(|(v, f)| (v - mean).abs() * f).sum();
        let mode = v
            .iter()
            .zip(&x)
            .filter(|(_, f)| isclose(**f, x_max))
            .map(|(v, _)| *v)
            .fold(f64::INFINITY, f64::min);
        out.extend([min, max, max - min, mean, avg_dev, mode]);
    }

    let weighted = |k: usize| -> f64 { rows.iter().zip(&x).map(|(r, f)| r.values[k] * f).sum() };
    let total = weighted(TOTAL_VALENCE);
    for k in SHELL_VALENCE {
        out.push(if total > 0.0 { weighted(k) / total } else { 0.0 });
    }

    if rows.len() < 2 {
        out.extend([1.0, 0.0, 0.0]);
    } else {
        let amounts: Vec<u64> = reduced.amounts().values().copied().collect();
        let ox: Vec<&[i64]> = rows.iter().map(|r| r.oxidation_states.as_slice()).collect();
        let possible = charge_neutral_possible(&amounts, &ox);
        let mut max_ionic = f64::NEG_INFINITY;
        let mut avg_ionic = 0.0;
        for i in 0..rows.len() {
            for j in i + 1..rows.len() {
                let dx = rows[i].values[ELECTRONEGATIVITY] - rows[j].values[ELECTRONEGATIVITY];
                let ionic = 1.0 - (-0.25 * dx * dx).exp();
                max_ionic = max_ionic.max(ionic);
                avg_ionic += x[i] * x[j] * ionic;
            }
        }
        out.extend([f64::from(u8::from(possible)), max_ionic, avg_ionic]);
    }

    debug_assert_eq!(out.len(), MAGPIE_LEN);
    if let Some(i) = out.iter().position(|v| !v.is_finite()) {
        return Err(Error::PropertyTable(format!("non-finite attribute {} for {comp}", feature_labels()[i])));
    }
    Ok(MagpieVector(out))
}

pub fn crystal_fingerprint(c: &Crystal, table: &PropertyTable) -> Result<MagpieVector> {
    magpie_fingerprint(&composition_of(c), table)
}

/// Euclidean distance between the Magpie fingerprints of two crystals.
pub fn d_magpie(a: &Crystal, b: &Crystal, table: &PropertyTable) -> Result<f64> {
    Ok(crystal_fingerprint(a, table)?.distance(&crystal_fingerprint(b, table)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn comp(pairs: &[(&str, u64)]) -> Composition {
        Composition::from_counts(pairs.iter().map(|(s, n)| (s.parse().unwrap(), *n)))
    }

    fn label_index(label: &str) -> usize {
        feature_labels().iter().position(|l| l == label).unwrap()
    }

    #[test]
    fn layout() {
        let labels = feature_labels();
        assert_eq!(labels.len(), MAGPIE_LEN);
        assert_eq!(labels[6], "minimum Number");
        assert_eq!(labels[9], "mean Number");
        assert_eq!(labels[144], "avg ionic char");
    }

    #[test]
    fn zno_mean_atomic_number() {
        let v = magpie_fingerprint(&comp(&[("Zn", 1), ("O", 1)]), PropertyTable::builtin()).unwrap();
        assert_eq!(v.as_slice()[label_index("mean Number")], 19.0);
        // equal fractions: the mode picks the smaller value
        assert_eq!(v.as_slice()[label_index("mode Number")], 8.0);
        assert_eq!(v.as_slice()[label_index("compound possible")], 1.0);
    }

    #[test]
    fn depends_only_on_fractions() {
        let t = PropertyTable::builtin();
        let a = magpie_fingerprint(&comp(&[("Zn", 2), ("O", 2)]), t).unwrap();
        let b = magpie_fingerprint(&comp(&[("Zn", 1), ("O", 1)]), t).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn single_element_degenerate_statistics() {
        let v = magpie_fingerprint(&comp(&[("Po", 1)]), PropertyTable::builtin()).unwrap();
        for p in PROPERTIES {
            assert_eq!(v.as_slice()[label_index(&format!("range {p}"))], 0.0);
            assert_eq!(v.as_slice()[label_index(&format!("avg_dev {p}"))], 0.0);
        }
        assert_eq!(&v.as_slice()[142..], &[1.0, 0.0, 0.0]);
        assert_eq!(v.as_slice()[0], 1.0);
        assert_eq!(v.as_slice()[1], 1.0);
    }

    #[test]
    fn charge_balance() {
        assert!(charge_neutral_possible(&[2, 3], &[&[3], &[-2]]));
        assert!(!charge_neutral_possible(&[1, 1], &[&[3], &[-2]]));
        assert!(!charge_neutral_possible(&[1, 1], &[&[], &[-2]]));
        // Fe3O4 needs mixed valence; the single-state check per element says no
        assert!(!charge_neutral_possible(&[3, 4], &[&[2, 3], &[-2]]));
    }

    #[test]
    fn missing_cells_imputed_missing_rows_rejected() {
        let csv = "symbol,Z,".to_string()
            + &PROPERTIES.join(",")
            + ",oxidation_states\n"
            + "H,1,1,92,1.0,14.0,1,1,31,2.2,1,0,0,0,1,1,0,0,0,1,6.6,7.8,0,194,-1 1\n"
            + "He,2,2,98,4.0,,18,1,28,,2,0,0,0,2,0,0,0,0,0,12.3,18.1,0,225,\n";
        let t = PropertyTable::from_csv(&csv).unwrap();
        let he: Element = "He".parse().unwrap();
        assert_eq!(t.value(he, "MeltingT").unwrap(), 14.0);
        let li = comp(&[("Li", 1)]);
        let err = magpie_fingerprint(&li, &t).unwrap_err();
        assert!(matches!(err, Error::MissingProperty { ref element, .. } if element == "Li"));
        assert!(PropertyTable::from_csv("symbol,Z\nH,1\n").is_err());
    }

    #[test]
    fn builtin_covers_every_element() {
        let t = PropertyTable::builtin();
        for e in Element::all() {
            let v = magpie_fingerprint(&Composition::from_counts([(e, 1)]), t).unwrap();
            assert!(v.as_slice().iter().all(|x| x.is_finite()));
        }
    }
}
