//! Compositional distances: exact reduced-formula match ([`d_comp`]) and the
//! continuous Magpie-fingerprint distance ([`magpie::d_magpie`]).

pub mod magpie;

use std::collections::BTreeMap;
use std::fmt;

use crate::element::Element;
use crate::structures::Crystal;

pub use magpie::{d_magpie, magpie_fingerprint, MagpieVector, PropertyTable, MAGPIE_LEN};

/// Element amounts of a crystal. Amounts are positive integers counted from
/// sites; the reduced form divides out their GCD.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Composition {
    amounts: BTreeMap<Element, u64>,
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl Composition {
    pub fn from_counts<I: IntoIterator<Item = (Element, u64)>>(counts: I) -> Self {
        let mut amounts = BTreeMap::new();
        for (e, n) in counts {
            if n > 0 {
                *amounts.entry(e).or_insert(0) += n;
            }
        }
        Composition { amounts }
    }

    pub fn amounts(&self) -> &BTreeMap<Element, u64> {
        &self.amounts
    }

    pub fn num_atoms(&self) -> u64 {
        self.amounts.values().sum()
    }

    /// Integer-ratio formula with the GCD divided out, keyed by atomic number.
    pub fn reduced(&self) -> Composition {
        let g = self.amounts.values().fold(0, |g, &n| gcd(g, n)).max(1);
        Composition { amounts: self.amounts.iter().map(|(&e, &n)| (e, n / g)).collect() }
    }

    /// Atomic fractions in atomic-number order.
    pub fn fractions(&self) -> Vec<(Element, f64)> {
        let total = self.num_atoms() as f64;
        self.amounts.iter().map(|(&e, &n)| (e, n as f64 / total)).collect()
    }
}

impl fmt::Display for Composition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (e, n) in &self.amounts {
            if *n == 1 {
                write!(f, "{e}")?;
            } else {
                write!(f, "{e}{n}")?;
            }
        }
        Ok(())
    }
}

pub fn composition_of(c: &Crystal) -> Composition {
    Composition::from_counts(c.sites().iter().map(|s| (s.element, 1)))
}

/// 0 when the reduced compositions are identical, 1 otherwise.
pub fn d_comp(a: &Crystal, b: &Crystal) -> u8 {
    u8::from(composition_of(a).reduced() != composition_of(b).reduced())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structures::{make_supercell, Lattice};

    fn el(s: &str) -> Element {
        s.parse().unwrap()
    }

    #[test]
    fn reduced_formula() {
        let c = Composition::from_counts([(el("Zn"), 2), (el("O"), 2)]);
        assert_eq!(c.reduced().to_string(), "OZn");
        let c = Composition::from_counts([(el("Te"), 6), (el("Bi"), 4)]);
        assert_eq!(c.reduced().to_string(), "Te3Bi2");
        assert_eq!(c.reduced().num_atoms(), 5);
    }

    #[test]
    fn supercell_has_same_reduced_composition() {
        let l = Lattice::from_rows([[3.0, 0.0, 0.0], [0.0, 3.0, 0.0], [0.0, 0.0, 3.0]]).unwrap();
        let c = crate::structures::Crystal::from_species("x", l, &["Cs", "Cl"], &[[0.0; 3], [0.5; 3]]).unwrap();
        let s = make_supercell(&c, 2, 1, 3).unwrap();
        assert_eq!(composition_of(&s).num_atoms(), 12);
        assert_eq!(d_comp(&c, &s), 0);
        assert_eq!(d_comp(&c, &c), 0);
        let po = crate::structures::Crystal::from_species(
            "po",
            Lattice::from_rows([[3.35, 0.0, 0.0], [0.0, 3.35, 0.0], [0.0, 0.0, 3.35]]).unwrap(),
            &["Po"],
            &[[0.0; 3]],
        )
        .unwrap();
        assert_eq!(composition_of(&po).reduced().to_string(), "Po");
        assert_eq!(d_comp(&c, &po), 1);
    }
}
