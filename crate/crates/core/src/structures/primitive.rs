//! Primitive-cell search by internal translations.
//!
//! Candidate translations are the differences between one site of the
//! rarest element and every other site of that element. A candidate is kept
//! when it maps every site onto a same-element site within the tolerance.
//! The kept translations, together with the original lattice, generate the
//! primitive lattice; its basis is obtained exactly as the Hermite normal
//! form of the integer generators on the 1/N grid (N = number of kept
//! translations including zero).

use std::collections::BTreeMap;

use nalgebra::{Matrix3, Vector3};

use super::niggli::niggli_reduce;
use super::{wrap_frac3, Crystal, Lattice, Site};
use crate::element::Element;
use crate::Result;

pub const DEFAULT_SITE_TOL: f64 = 1e-3;

fn maps_onto_itself(c: &Crystal, t: &Vector3<f64>, tol: f64) -> bool {
    c.sites().iter().all(|s| {
        let moved = s.frac + t;
        c.sites()
            .iter()
            .any(|o| o.element == s.element && c.lattice.min_image(&(moved - o.frac)).norm() <= tol)
    })
}

/// Row-style Hermite normal form of a full-rank set of integer row vectors
/// in Z^3; returns the three basis rows (upper triangular).
pub(crate) fn hnf_basis(mut rows: Vec<[i64; 3]>) -> Option<[[i64; 3]; 3]> {
    let mut basis = [[0i64; 3]; 3];
    for col in 0..3 {
        // Euclid on column `col` among remaining rows until a single non-zero pivot remains.
        loop {
            let mut nz: Vec<usize> = (0..rows.len()).filter(|&i| rows[i][col] != 0).collect();
            if nz.len() <= 1 {
                break;
            }
            nz.sort_by_key(|&i| rows[i][col].abs());
            let p = nz[0];
            let pivot = rows[p];
            for &i in &nz[1..] {
                let q = rows[i][col].div_euclid(pivot[col]);
                for k in 0..3 {
                    rows[i][k] -= q * pivot[k];
                }
            }
        }
        let idx = (0..rows.len()).find(|&i| rows[i][col] != 0)?;
        let mut pivot = rows.swap_remove(idx);
        if pivot[col] < 0 {
            pivot = pivot.map(|x| -x);
        }
        basis[col] = pivot;
        rows.retain(|r| r.iter().any(|&x| x != 0));
    }
    // reduce entries above the pivots
    for col in 1..3 {
        for r in 0..col {
            let q = basis[r][col].div_euclid(basis[col][col]);
            let pivot = basis[col];
            for (x, p) in basis[r].iter_mut().zip(pivot) {
                *x -= q * p;
            }
        }
    }
    Some(basis)
}

/// Reduces a crystal to a primitive cell (Niggli-reduced). Never fails on a
/// valid crystal: when no consistent translation group is found the input
/// is returned with a Niggli-reduced basis.
pub fn primitive_reduce(c: &Crystal, site_tol: f64) -> Result<Crystal> {
    let translations = find_translations(c, site_tol);
    let n = translations.len() + 1;
    let primitive = if n > 1 && c.num_sites().is_multiple_of(n) {
        build_primitive(c, &translations, n, site_tol)
    } else {
        None
    };
    let base = primitive.unwrap_or_else(|| c.clone());
    reexpress(&base, niggli_reduce(&base.lattice)?)
}

fn find_translations(c: &Crystal, tol: f64) -> Vec<Vector3<f64>> {
    let mut counts: BTreeMap<Element, usize> = BTreeMap::new();
    for s in c.sites() {
        *counts.entry(s.element).or_default() += 1;
    }
    let (&rarest, _) = counts.iter().min_by_key(|(_, &n)| n).expect("crystal has sites");
    let anchor = c.sites().iter().find(|s| s.element == rarest).unwrap().frac;
    c.sites()
        .iter()
        .filter(|s| s.element == rarest)
        .map(|s| wrap_frac3(&(s.frac - anchor)))
        .filter(|t| c.lattice.to_cart(&t.map(|x| x - x.round())).norm() > tol)
        .filter(|t| maps_onto_itself(c, t, tol))
        .collect()
}

fn build_primitive(c: &Crystal, translations: &[Vector3<f64>], n: usize, tol: f64) -> Option<Crystal> {
    let nf = n as f64;
    let ni = n as i64;
    let mut gens: Vec<[i64; 3]> = vec![[ni, 0, 0], [0, ni, 0], [0, 0, ni]];
    for t in translations {
        let scaled = t.map(|x| (x * nf).round());
        let snapped = scaled / nf;
        if !maps_onto_itself(c, &snapped, tol) {
            return None;
        }
        gens.push([scaled.x as i64, scaled.y as i64, scaled.z as i64]);
    }
    let basis = hnf_basis(gens)?;
    let det = Matrix3::from_fn(|i, j| basis[i][j] as f64).determinant().round() as i64;
    if det != ni * ni {
        return None;
    }
    let transform = Matrix3::from_fn(|i, j| basis[i][j] as f64 / nf);
    let lattice = Lattice::new(transform * c.lattice.matrix()).ok()?;

    let mut sites: Vec<Site> = Vec::with_capacity(c.num_sites() / n);
    for s in c.sites() {
        let cart = c.lattice.to_cart(&s.frac);
        let frac = wrap_frac3(&lattice.to_frac(&cart));
        let dup = sites
            .iter()
            .any(|o| o.element == s.element && lattice.min_image(&(frac - o.frac)).norm() <= tol);
        if !dup {
            sites.push(Site { element: s.element, frac });
        }
    }
    if sites.len() * n != c.num_sites() {
        return None;
    }
    let mut out = Crystal::assemble(c.id.clone(), lattice, sites);
    out.symmetry = c.symmetry.clone();
    out.e_hull = c.e_hull;
    Some(out)
}

/// Same crystal, new basis for the same lattice.
pub(crate) fn reexpress(c: &Crystal, lattice: Lattice) -> Result<Crystal> {
    let sites = c
        .sites()
        .iter()
        .map(|s| Site { element: s.element, frac: wrap_frac3(&lattice.to_frac(&c.lattice.to_cart(&s.frac))) })
        .collect();
    let mut out = Crystal::assemble(c.id.clone(), lattice, sites);
    out.symmetry = c.symmetry.clone();
    out.e_hull = c.e_hull;
    Ok(out)
}
