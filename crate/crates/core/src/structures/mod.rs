//! Crystal data model: lattices, sites, crystals and ordered sample sets,
//! plus ingestion ([`io`], [`cif`]) and cell manipulations.

pub mod cif;
pub mod io;
pub mod niggli;
pub mod primitive;
pub mod transform;

use nalgebra::{Matrix3, Vector3};

use crate::element::Element;
use crate::symmetry::SymmetryRecord;
use crate::{Error, Result};

pub use cif::parse_cif_lite;
pub use io::{parse_jsonl, read_jsonl_file, write_jsonl};
pub use niggli::niggli_reduce;
pub use primitive::{primitive_reduce, DEFAULT_SITE_TOL};
pub use transform::{apply_isometry, make_supercell, make_supercell_capped, perturb_sites, SITE_CAP};

/// Smallest accepted |det| of a lattice basis, in A^3.
pub const MIN_VOLUME: f64 = 1e-8;

/// Same-element sites closer than this (A, periodic) are rejected as duplicates.
pub const DUPLICATE_SITE_TOL: f64 = 1e-4;

/// Lattice basis; rows are the lattice vectors a, b, c in Angstrom.
#[derive(Clone, Debug, PartialEq)]
pub struct Lattice {
    matrix: Matrix3<f64>,
    inverse: Matrix3<f64>,
}

impl Lattice {
    pub fn new(matrix: Matrix3<f64>) -> Result<Self> {
        if !matrix.iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidCrystal("non-finite lattice entry".into()));
        }
        let det = matrix.determinant();
        if det.abs() < MIN_VOLUME {
            return Err(Error::DegenerateLattice(det.abs()));
        }
        if det < 0.0 {
            return Err(Error::LeftHandedLattice(det));
        }
        let inverse = matrix.try_inverse().ok_or(Error::DegenerateLattice(det.abs()))?;
        Ok(Lattice { matrix, inverse })
    }

    pub fn from_rows(rows: [[f64; 3]; 3]) -> Result<Self> {
        Lattice::new(Matrix3::from_fn(|i, j| rows[i][j]))
    }

    /// Builds a lattice from cell parameters (lengths in A, angles in degrees)
    /// with a along x and b in the xy-plane.
    pub fn from_parameters(a: f64, b: f64, c: f64, alpha: f64, beta: f64, gamma: f64) -> Result<Self> {
        let (alpha, beta, gamma) = (alpha.to_radians(), beta.to_radians(), gamma.to_radians());
        let (sg, cg) = gamma.sin_cos();
        let cx = c * beta.cos();
        let cy = c * (alpha.cos() - beta.cos() * cg) / sg;
        let cz2 = c * c - cx * cx - cy * cy;
        if cz2.is_nan() || cz2 <= 0.0 {
            return Err(Error::DegenerateLattice(0.0));
        }
        Lattice::from_rows([[a, 0.0, 0.0], [b * cg, b * sg, 0.0], [cx, cy, cz2.sqrt()]])
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.matrix
    }

    pub fn rows(&self) -> [[f64; 3]; 3] {
        let m = &self.matrix;
        [[m[(0, 0)], m[(0, 1)], m[(0, 2)]], [m[(1, 0)], m[(1, 1)], m[(1, 2)]], [m[(2, 0)], m[(2, 1)], m[(2, 2)]]]
    }

    pub fn vector(&self, i: usize) -> Vector3<f64> {
        self.matrix.row(i).transpose()
    }

    pub fn volume(&self) -> f64 {
        self.matrix.determinant()
    }

    pub fn lengths(&self) -> [f64; 3] {
        [0, 1, 2].map(|i| self.vector(i).norm())
    }

    /// (alpha, beta, gamma) in degrees.
    pub fn angles(&self) -> [f64; 3] {
        let v = [0, 1, 2].map(|i| self.vector(i));
        [angle_deg(&v[1], &v[2]), angle_deg(&v[0], &v[2]), angle_deg(&v[0], &v[1])]
    }

    pub fn to_cart(&self, frac: &Vector3<f64>) -> Vector3<f64> {
        self.matrix.tr_mul(frac)
    }

    pub fn to_frac(&self, cart: &Vector3<f64>) -> Vector3<f64> {
        self.inverse.tr_mul(cart)
    }

    /// Reciprocal vectors without the 2 pi factor; row i dotted with a Cartesian
    /// vector gives its i-th fractional coordinate.
    pub fn reciprocal_rows(&self) -> Matrix3<f64> {
        self.inverse.transpose()
    }

    /// Shortest Cartesian image of a fractional difference vector.
    pub fn min_image(&self, dfrac: &Vector3<f64>) -> Vector3<f64> {
        let base = dfrac.map(|x| x - x.round());
        let mut best = self.to_cart(&base);
        let mut best_n2 = best.norm_squared();
        for i in -1..=1 {
            for j in -1..=1 {
                for k in -1..=1 {
                    if i == 0 && j == 0 && k == 0 {
                        continue;
                    }
                    let v = self.to_cart(&(base + Vector3::new(i as f64, j as f64, k as f64)));
                    let n2 = v.norm_squared();
                    if n2 < best_n2 {
                        best = v;
                        best_n2 = n2;
                    }
                }
            }
        }
        best
    }
}

pub(crate) fn angle_deg(u: &Vector3<f64>, v: &Vector3<f64>) -> f64 {
    (u.dot(v) / (u.norm() * v.norm())).clamp(-1.0, 1.0).acos().to_degrees()
}

/// Wraps a fractional coordinate into [0, 1).
pub fn wrap_frac(x: f64) -> f64 {
    let w = x - x.floor();
    if w >= 1.0 {
        0.0
    } else {
        w + 0.0
    }
}

pub fn wrap_frac3(v: &Vector3<f64>) -> Vector3<f64> {
    v.map(wrap_frac)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Site {
    pub element: Element,
    pub frac: Vector3<f64>,
}

impl Site {
    pub fn new(element: Element, frac: Vector3<f64>) -> Result<Self> {
        if !frac.iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidCrystal("non-finite fractional coordinate".into()));
        }
        Ok(Site { element, frac: wrap_frac3(&frac) })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Crystal {
    pub id: String,
    pub lattice: Lattice,
    sites: Vec<Site>,
    pub symmetry: Option<SymmetryRecord>,
    pub e_hull: Option<f64>,
}

impl Crystal {
    /// Validates the site list (non-empty, no same-element duplicates within
    /// [`DUPLICATE_SITE_TOL`]).
    pub fn new(id: impl Into<String>, lattice: Lattice, sites: Vec<Site>) -> Result<Self> {
        if sites.is_empty() {
            return Err(Error::InvalidCrystal("crystal has no sites".into()));
        }
        for (i, a) in sites.iter().enumerate() {
            for b in &sites[..i] {
                if a.element == b.element
                    && lattice.min_image(&(a.frac - b.frac)).norm() < DUPLICATE_SITE_TOL
                {
                    return Err(Error::InvalidCrystal(format!(
                        "duplicate {} sites within {} A",
                        a.element, DUPLICATE_SITE_TOL
                    )));
                }
            }
        }
        Ok(Crystal::assemble(id.into(), lattice, sites))
    }

    /// Convenience constructor from symbols and fractional coordinates.
    pub fn from_species(
        id: impl Into<String>,
        lattice: Lattice,
        species: &[&str],
        frac_coords: &[[f64; 3]],
    ) -> Result<Self> {
        if species.len() != frac_coords.len() {
            return Err(Error::InvalidCrystal("species / coordinate count mismatch".into()));
        }
        let sites = species
            .iter()
            .zip(frac_coords)
            .map(|(s, f)| Site::new(s.parse()?, Vector3::from(*f)))
            .collect::<Result<Vec<_>>>()?;
        Crystal::new(id, lattice, sites)
    }

    /// Skips the duplicate-site check; callers guarantee the sites derive
    /// from an already valid crystal.
    pub(crate) fn assemble(id: String, lattice: Lattice, sites: Vec<Site>) -> Self {
        Crystal { id, lattice, sites, symmetry: None, e_hull: None }
    }

    pub fn with_symmetry(mut self, symmetry: SymmetryRecord) -> Self {
        self.symmetry = Some(symmetry);
        self
    }

    pub fn with_e_hull(mut self, e_hull: f64) -> Self {
        self.e_hull = Some(e_hull);
        self
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn num_sites(&self) -> usize {
        self.sites.len()
    }

    pub fn cart_positions(&self) -> Vec<Vector3<f64>> {
        self.sites.iter().map(|s| self.lattice.to_cart(&s.frac)).collect()
    }

    pub fn volume(&self) -> f64 {
        self.lattice.volume()
    }

    /// Sites re-ordered by element, preserving relative order otherwise.
    pub fn sorted_by_element(&self) -> Crystal {
        let mut sites = self.sites.clone();
        sites.sort_by_key(|s| s.element);
        Crystal { sites, ..self.clone() }
    }
}

/// Generated crystals in generation order; duplicates are allowed.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleSet {
    pub label: String,
    pub crystals: Vec<Crystal>,
}

impl SampleSet {
    pub fn new(label: impl Into<String>, crystals: Vec<Crystal>) -> Self {
        SampleSet { label: label.into(), crystals }
    }

    pub fn len(&self) -> usize {
        self.crystals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.crystals.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Crystal> {
        self.crystals.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_degenerate_lattice() {
        let flat = Lattice::from_rows([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 1.0, 0.0]]);
        assert!(matches!(flat, Err(Error::DegenerateLattice(_))));
        let left = Lattice::from_rows([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, -1.0]]);
        assert!(matches!(left, Err(Error::LeftHandedLattice(_))));
    }

    #[test]
    fn parameters_round_trip() {
        let l = Lattice::from_parameters(3.24, 3.24, 5.22, 90.0, 90.0, 120.0).unwrap();
        let [a, b, c] = l.lengths();
        let [al, be, ga] = l.angles();
        assert!((a - 3.24).abs() < 1e-12 && (b - 3.24).abs() < 1e-12 && (c - 5.22).abs() < 1e-12);
        assert!((al - 90.0).abs() < 1e-9 && (be - 90.0).abs() < 1e-9 && (ga - 120.0).abs() < 1e-9);
    }

    #[test]
    fn wraps_coordinates() {
        assert_eq!(wrap_frac(1.25), 0.25);
        assert_eq!(wrap_frac(-0.25), 0.75);
        assert_eq!(wrap_frac(1.0), 0.0);
        assert_eq!(wrap_frac(-1e-20), 0.0);
        assert!(wrap_frac(-0.0).is_sign_positive());
    }

    #[test]
    fn duplicate_sites_rejected_across_boundary() {
        let l = Lattice::from_rows([[3.0, 0.0, 0.0], [0.0, 3.0, 0.0], [0.0, 0.0, 3.0]]).unwrap();
        let dup = Crystal::from_species("d", l.clone(), &["Na", "Na"], &[[0.0, 0.0, 0.0], [0.99999999, 0.0, 0.0]]);
        assert!(matches!(dup, Err(Error::InvalidCrystal(_))));
        // different elements may share a position
        assert!(Crystal::from_species("ok", l.clone(), &["Na", "Cl"], &[[0.0; 3], [0.0; 3]]).is_ok());
        assert!(Crystal::from_species("e", l, &[], &[]).is_err());
    }

    #[test]
    fn min_image_skewed_cell() {
        let l = Lattice::from_rows([[1.0, 0.0, 0.0], [0.9, 0.2, 0.0], [0.0, 0.0, 1.0]]).unwrap();
        let v = l.min_image(&Vector3::new(0.0, 0.5, 0.0));
        // brute force over a wide image range
        let mut best = f64::INFINITY;
        for i in -4..=4 {
            for j in -4..=4 {
                let f = Vector3::new(i as f64, 0.5 + j as f64, 0.0);
                best = best.min(l.to_cart(&f).norm());
            }
        }
        assert!((v.norm() - best).abs() < 1e-12);
    }
}
