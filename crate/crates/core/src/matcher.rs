//! The structure-matcher distance `d_smat` and a generator for the
//! three-crystal chain on which it breaks the triangle inequality.
//!
//! Procedure: reduced compositions must agree; both crystals are reduced to
//! Niggli-reduced primitive cells; every basis of the first lattice whose
//! vector lengths and angles match the second within tolerance is tried,
//! combined with every translation that puts a site of the rarest element
//! onto a same-element site of the other crystal. Sites are paired one to
//! one per element so that the largest displacement is minimal (after
//! removing the mean displacement), measured in the averaged lattice and
//! normalised by `(V / m)^(1/3)`.

use std::collections::BTreeMap;

use log::warn;
use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::composition::{composition_of, Composition};
use crate::element::Element;
use crate::structures::{angle_deg, primitive_reduce, Crystal, Lattice, Site, DEFAULT_SITE_TOL};
use crate::{Error, Result};

pub const MAX_PRIMITIVE_SITES: usize = 200;
pub const MAX_LATTICE_MAPPINGS: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchTolerances {
    pub ltol: f64,
    pub stol: f64,
    pub angle_tol: f64,
}

impl Default for MatchTolerances {
    fn default() -> Self {
        MatchTolerances { ltol: 0.2, stol: 0.3, angle_tol: 5.0 }
    }
}

impl MatchTolerances {
    pub fn validate(&self) -> Result<()> {
        let ok = |x: f64| x.is_finite() && x > 0.0;
        if ok(self.ltol) && ok(self.stol) && ok(self.angle_tol) {
            Ok(())
        } else {
            Err(Error::InvalidTolerances(format!(
                "ltol={}, stol={}, angle_tol={} must all be positive",
                self.ltol, self.stol, self.angle_tol
            )))
        }
    }
}

/// A crystal reduced once for repeated matching.
#[derive(Clone, Debug)]
pub struct PreparedCrystal {
    composition: Composition,
    primitive: Crystal,
}

impl PreparedCrystal {
    pub fn new(c: &Crystal) -> Result<Self> {
        let primitive = primitive_reduce(c, DEFAULT_SITE_TOL)?;
        if primitive.num_sites() > MAX_PRIMITIVE_SITES {
            return Err(Error::MatcherInputTooLarge(primitive.num_sites()));
        }
        Ok(PreparedCrystal { composition: composition_of(c).reduced(), primitive })
    }

    pub fn primitive(&self) -> &Crystal {
        &self.primitive
    }
}

pub fn d_smat(a: &Crystal, b: &Crystal, tol: &MatchTolerances) -> Result<u8> {
    tol.validate()?;
    if composition_of(a).reduced() != composition_of(b).reduced() {
        return Ok(1);
    }
    d_smat_prepared(&PreparedCrystal::new(a)?, &PreparedCrystal::new(b)?, tol)
}

pub fn d_smat_prepared(a: &PreparedCrystal, b: &PreparedCrystal, tol: &MatchTolerances) -> Result<u8> {
    tol.validate()?;
    if a.composition != b.composition || a.primitive.num_sites() != b.primitive.num_sites() {
        return Ok(1);
    }
    // The anchored alignment search is not exactly symmetric in its
    // arguments, so a match is required in both directions.
    let forward = best_alignment(&a.primitive, &b.primitive, tol)?.is_some();
    Ok(u8::from(!(forward && best_alignment(&b.primitive, &a.primitive, tol)?.is_some())))
}

/// Candidate vectors of `lattice` with length within the `ltol` window of `target`.
fn candidate_vectors(lattice: &Lattice, targets: [f64; 3], ltol: f64) -> [Vec<(Vector3<f64>, [i64; 3])>; 3] {
    let r_max = targets.iter().cloned().fold(0.0, f64::max) * (1.0 + ltol);
    let recip = lattice.reciprocal_rows();
    let bound: Vec<i64> = (0..3).map(|i| (r_max * recip.row(i).norm()).ceil() as i64).collect();
    let mut out: [Vec<_>; 3] = Default::default();
    for n0 in -bound[0]..=bound[0] {
        for n1 in -bound[1]..=bound[1] {
            for n2 in -bound[2]..=bound[2] {
                if n0 == 0 && n1 == 0 && n2 == 0 {
                    continue;
                }
                let v = lattice.to_cart(&Vector3::new(n0 as f64, n1 as f64, n2 as f64));
                let len = v.norm();
                for (i, t) in targets.iter().enumerate() {
                    let ratio = len / t;
                    if ratio < 1.0 + ltol && ratio > 1.0 / (1.0 + ltol) {
                        out[i].push((v, [n0, n1, n2]));
                    }
                }
            }
        }
    }
    out
}

/// Bases of `a`'s lattice matching `b`'s lattice parameters, as Cartesian row matrices.
fn lattice_mappings(a: &Lattice, b: &Lattice, tol: &MatchTolerances) -> Option<Vec<Matrix3<f64>>> {
    let [alpha, beta, gamma] = b.angles();
    let cands = candidate_vectors(a, b.lengths(), tol.ltol);
    let close = |x: f64, y: f64| (x - y).abs() <= tol.angle_tol;
    let mut out = Vec::new();
    for (v0, n0) in &cands[0] {
        for (v1, n1) in &cands[1] {
            if !close(angle_deg(v0, v1), gamma) {
                continue;
            }
            for (v2, n2) in &cands[2] {
                if !close(angle_deg(v0, v2), beta) || !close(angle_deg(v1, v2), alpha) {
                    continue;
                }
                let n = Matrix3::from_fn(|i, j| [n0, n1, n2][i][j] as f64);
                if (n.determinant().abs() - 1.0).abs() > 1e-6 {
                    continue;
                }
                out.push(Matrix3::from_rows(&[v0.transpose(), v1.transpose(), v2.transpose()]));
                if out.len() > MAX_LATTICE_MAPPINGS {
                    return None;
                }
            }
        }
    }
    Some(out)
}

fn average_lattice(rows: &Matrix3<f64>, b: &Lattice) -> Result<Lattice> {
    let v = [rows.row(0).transpose(), rows.row(1).transpose(), rows.row(2).transpose()];
    let la = [v[0].norm(), v[1].norm(), v[2].norm()];
    let aa = [angle_deg(&v[1], &v[2]), angle_deg(&v[0], &v[2]), angle_deg(&v[0], &v[1])];
    let lb = b.lengths();
    let ab = b.angles();
    let m = |x: f64, y: f64| 0.5 * (x + y);
    Lattice::from_parameters(
        m(la[0], lb[0]),
        m(la[1], lb[1]),
        m(la[2], lb[2]),
        m(aa[0], ab[0]),
        m(aa[1], ab[1]),
        m(aa[2], ab[2]),
    )
}

struct Group {
    a: Vec<Vector3<f64>>,
    b: Vec<Vector3<f64>>,
}

/// Normalised maximum displacement of the first alignment found within `stol`.
fn best_alignment(a: &Crystal, b: &Crystal, tol: &MatchTolerances) -> Result<Option<f64>> {
    let Some(mappings) = lattice_mappings(&a.lattice, &b.lattice, tol) else {
        warn!(
            "more than {MAX_LATTICE_MAPPINGS} lattice mappings between {} and {}; treating as different",
            a.id, b.id
        );
        return Ok(None);
    };
    let m = a.num_sites();
    let a_cart = a.cart_positions();

    let mut counts: BTreeMap<Element, usize> = BTreeMap::new();
    for s in a.sites() {
        *counts.entry(s.element).or_default() += 1;
    }
    let (&rarest, _) = counts.iter().min_by_key(|(_, &n)| n).expect("crystal has sites");
    let elements: Vec<Element> = counts.keys().copied().collect();
    let anchor = a.sites().iter().position(|s| s.element == rarest).unwrap();

    for rows in mappings {
        let Some(inv) = rows.try_inverse() else { continue };
        let avg = average_lattice(&rows, &b.lattice)?;
        let norm = (avg.volume() / m as f64).cbrt();
        let limit = tol.stol * norm;
        let a_frac: Vec<Vector3<f64>> = a_cart.iter().map(|p| inv.tr_mul(p)).collect();
        let groups: Vec<Group> = elements
            .iter()
            .map(|e| Group {
                a: a.sites().iter().zip(&a_frac).filter(|(s, _)| s.element == *e).map(|(_, f)| *f).collect(),
                b: b.sites().iter().filter(|s| s.element == *e).map(|s| s.frac).collect(),
            })
            .collect();
        for target in b.sites().iter().filter(|s| s.element == rarest) {
            let t = target.frac - a_frac[anchor];
            if let Some(d) = align(&groups, &t, &avg, limit) {
                let d = d / norm;
                if d <= tol.stol {
                    return Ok(Some(d));
                }
            }
        }
    }
    Ok(None)
}

fn frac_disp(from: &Vector3<f64>, to: &Vector3<f64>, lattice: &Lattice) -> Vector3<f64> {
    lattice.to_frac(&lattice.min_image(&(to - from)))
}

/// Bottleneck pairing for translation `t`, re-centred on the mean
/// displacement. Returns the largest Cartesian displacement, or None when it
/// exceeds `limit`.
fn align(groups: &[Group], t: &Vector3<f64>, lattice: &Lattice, limit: f64) -> Option<f64> {
    let (first, pairs) = assign(groups, t, lattice, limit)?;
    let mut mean = Vector3::zeros();
    let mut count = 0.0;
    for (g, pairing) in groups.iter().zip(&pairs) {
        for (i, &j) in pairing.iter().enumerate() {
            mean += frac_disp(&(g.a[i] + t), &g.b[j], lattice);
            count += 1.0;
        }
    }
    let shifted = t + mean / count;
    match assign(groups, &shifted, lattice, limit) {
        Some((second, _)) => Some(first.min(second)),
        None => Some(first),
    }
}

fn assign(groups: &[Group], t: &Vector3<f64>, lattice: &Lattice, limit: f64) -> Option<(f64, Vec<Vec<usize>>)> {
    let mut worst: f64 = 0.0;
    let mut pairs = Vec::with_capacity(groups.len());
    for g in groups {
        let cost: Vec<Vec<f64>> = g
            .a
            .iter()
            .map(|fa| {
                let shifted = fa + t;
                g.b.iter().map(|fb| lattice.min_image(&(fb - shifted)).norm()).collect()
            })
            .collect();
        if cost.iter().any(|row| row.iter().all(|d| *d > limit)) {
            return None;
        }
        let (value, pairing) = bottleneck(&cost, limit)?;
        worst = worst.max(value);
        pairs.push(pairing);
    }
    Some((worst, pairs))
}

/// Perfect matching minimising the largest cost, considering only costs
/// `<= limit`. Returns the bottleneck value and row -> column pairing.
fn bottleneck(cost: &[Vec<f64>], limit: f64) -> Option<(f64, Vec<usize>)> {
    let mut values: Vec<f64> = cost.iter().flatten().copied().filter(|c| *c <= limit).collect();
    values.sort_unstable_by(f64::total_cmp);
    values.dedup();
    let (mut lo, mut hi) = (0usize, values.len());
    let mut found = None;
    while lo < hi {
        let mid = (lo + hi) / 2;
        match perfect_matching(cost, values[mid]) {
            Some(p) => {
                found = Some((values[mid], p));
                hi = mid;
            }
            None => lo = mid + 1,
        }
    }
    found
}

fn perfect_matching(cost: &[Vec<f64>], threshold: f64) -> Option<Vec<usize>> {
    let n = cost.len();
    let mut owner: Vec<Option<usize>> = vec![None; n];
    fn augment(
        row: usize,
        cost: &[Vec<f64>],
        threshold: f64,
        seen: &mut [bool],
        owner: &mut [Option<usize>],
    ) -> bool {
        for col in 0..cost[row].len() {
            if cost[row][col] <= threshold && !seen[col] {
                seen[col] = true;
                if owner[col].is_none_or(|r| augment(r, cost, threshold, seen, owner)) {
                    owner[col] = Some(row);
                    return true;
                }
            }
        }
        false
    }
    for row in 0..n {
        let mut seen = vec![false; n];
        if !augment(row, cost, threshold, &mut seen, &mut owner) {
            return None;
        }
    }
    let mut pairing = vec![0; n];
    for (col, r) in owner.iter().enumerate() {
        pairing[r.expect("perfect matching")] = col;
    }
    Some(pairing)
}

fn displace(c: &Crystal, site: usize, shift: &Vector3<f64>) -> Result<Crystal> {
    let mut sites: Vec<Site> = c.sites().to_vec();
    let cart = c.lattice.to_cart(&sites[site].frac) + shift;
    sites[site] = Site::new(sites[site].element, c.lattice.to_frac(&cart))?;
    let mut out = Crystal::new(c.id.clone(), c.lattice.clone(), sites)?;
    out.symmetry = c.symmetry.clone();
    out.e_hull = c.e_hull;
    Ok(out)
}

/// Returns `(x, x', x'')` where `x' ` and `x''` move one site of `x` by
/// `+delta` and `-delta`, with `delta` just below the matching threshold so
/// that `d(x, x') = d(x, x'') = 0` but `d(x', x'') = 1`.
pub fn build_smat_chain(base: &Crystal, tol: &MatchTolerances) -> Result<(Crystal, Crystal, Crystal)> {
    tol.validate()?;
    if base.num_sites() < 2 {
        return Err(Error::ChainNotFound("base needs at least 2 sites".into()));
    }
    let scale = (base.volume() / base.num_sites() as f64).cbrt();
    let mut directions: Vec<Vector3<f64>> = (0..3).rev().map(|i| base.lattice.vector(i).normalize()).collect();
    directions.push(Vector3::new(1.0, 1.0, 1.0).normalize());
    directions.push(Vector3::new(1.0, -2.0, 0.5).normalize());

    let prepared = PreparedCrystal::new(base)?;
    for site in 0..base.num_sites() {
        for u in &directions {
            let pair = |delta: f64| -> Result<(Crystal, Crystal)> {
                Ok((displace(base, site, &(u * delta))?, displace(base, site, &(-u * delta))?))
            };
            let both_match = |delta: f64| -> Result<bool> {
                let (p, m) = match pair(delta) {
                    Ok(pm) => pm,
                    Err(_) => return Ok(false),
                };
                Ok(d_smat_prepared(&prepared, &PreparedCrystal::new(&p)?, tol)? == 0
                    && d_smat_prepared(&prepared, &PreparedCrystal::new(&m)?, tol)? == 0)
            };
            let (mut lo, mut hi) = (0.0, scale * tol.stol * 4.0);
            if both_match(hi)? {
                continue;
            }
            for _ in 0..40 {
                let mid = 0.5 * (lo + hi);
                if both_match(mid)? {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            if lo <= 0.0 {
                continue;
            }
            let (p, m) = pair(lo)?;
            if d_smat(&p, &m, tol)? == 1 {
                return Ok((base.clone(), p, m));
            }
        }
    }
    Err(Error::ChainNotFound(format!("no threshold-straddling displacement for {}", base.id)))
}
