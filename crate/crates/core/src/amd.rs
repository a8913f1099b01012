//! Average minimum distance (AMD) fingerprints.
//!
//! `AMD[j]` is the mean, over the sites of a cell, of the distance from each
//! site to its (j+1)-th nearest neighbour in the infinite periodic crystal.
//! Neighbours come from an expanding ball of lattice translates: a ball of
//! radius `r` around the origin is searched and accepted once every site's
//! k-th distance is at most `r - max|p_i|`, which guarantees nothing outside
//! the ball could be closer.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::structures::Crystal;
use crate::{Error, Result};

pub const DEFAULT_K: usize = 100;
/// Largest search radius (Å) before a cell is treated as pathologically sparse.
pub const MAX_RADIUS: f64 = 1e3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmdVector {
    k: usize,
    values: Vec<f64>,
}

impl AmdVector {
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidCrystal("AMD values must be finite, non-negative and non-empty".into()));
        }
        Ok(AmdVector { k: values.len(), values })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// L-infinity distance.
    pub fn distance(&self, other: &AmdVector) -> Result<f64> {
        if self.k != other.k {
            return Err(Error::KMismatch(self.k, other.k));
        }
        Ok(linf(&self.values, &other.values))
    }
}

/// L-infinity distance. The loop keeps eight independent running maxima so
/// it vectorises; the maximum is exact, so every code path returns the same
/// bits. On x86-64 an AVX build of the same loop is used when available.
pub(crate) fn linf(a: &[f64], b: &[f64]) -> f64 {
    #[cfg(target_arch = "x86_64")]
    {
        if std::arch::is_x86_feature_detected!("avx") {
            // SAFETY: the required CPU feature was detected at runtime.
            return unsafe { linf_avx(a, b) };
        }
    }
    linf_generic(a, b)
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx")]
unsafe fn linf_avx(a: &[f64], b: &[f64]) -> f64 {
    linf_generic(a, b)
}

#[inline(always)]
fn linf_generic(a: &[f64], b: &[f64]) -> f64 {
    const LANES: usize = 8;
    let mut acc = [0.0f64; LANES];
    let (ca, cb) = (a.chunks_exact(LANES), b.chunks_exact(LANES));
    let tail = ca.remainder().iter().zip(cb.remainder()).fold(0.0, |m, (x, y)| f64::max(m, (x - y).abs()));
    for (x, y) in ca.zip(cb) {
        let x: &[f64; LANES] = x.try_into().unwrap();
        let y: &[f64; LANES] = y.try_into().unwrap();
        for l in 0..LANES {
            let d = (x[l] - y[l]).abs();
            acc[l] = if d > acc[l] { d } else { acc[l] };
        }
    }
    acc.into_iter().fold(tail, f64::max)
}

fn check_k(k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidCrystal("k must be at least 1".into()));
    }
    Ok(())
}

/// Sorted distances from each site to its `k` nearest neighbours.
pub fn neighbor_distances(c: &Crystal, k: usize) -> Result<Vec<Vec<f64>>> {
    check_k(k)?;
    let lattice = &c.lattice;
    let m = c.num_sites();
    let points = c.cart_positions();
    let offset = points.iter().map(|p| p.norm()).fold(0.0, f64::max);
    let longest = lattice.lengths().into_iter().fold(0.0, f64::max);
    let recip_norms: Vec<f64> = lattice.reciprocal_rows().row_iter().map(|r| r.norm()).collect();

    let volume = lattice.volume();
    let mut r = 2.0 * (k as f64 * volume / (4.0 * std::f64::consts::PI * m as f64 / 3.0)).cbrt() + longest;
    let mut dists: Vec<Vec<f64>> = vec![Vec::new(); m];
    loop {
        if r > MAX_RADIUS {
            return Err(Error::SparseCell { k, max: MAX_RADIUS });
        }
        let bound: Vec<i64> = recip_norms.iter().map(|n| ((r + offset) * n).ceil() as i64).collect();
        let r2 = r * r;
        let mut cloud: Vec<(usize, bool, Vector3<f64>)> = Vec::new();
        for n0 in -bound[0]..=bound[0] {
            for n1 in -bound[1]..=bound[1] {
                for n2 in -bound[2]..=bound[2] {
                    let t = lattice.to_cart(&Vector3::new(n0 as f64, n1 as f64, n2 as f64));
                    let origin_cell = n0 == 0 && n1 == 0 && n2 == 0;
                    for (j, p) in points.iter().enumerate() {
                        let q = p + t;
                        if q.norm_squared() <= r2 {
                            cloud.push((j, origin_cell, q));
                        }
                    }
                }
            }
        }

        let limit = r - offset;
        let mut complete = true;
        for (i, p) in points.iter().enumerate() {
            let d = &mut dists[i];
            d.clear();
            d.extend(
                cloud
                    .iter()
                    .filter(|(j, origin_cell, _)| !(*origin_cell && *j == i))
                    .map(|(_, _, q)| (q - p).norm()),
            );
            if d.len() < k {
                complete = false;
                break;
            }
            d.select_nth_unstable_by(k - 1, f64::total_cmp);
            if d[k - 1] > limit {
                complete = false;
                break;
            }
            d.truncate(k);
            d.sort_unstable_by(f64::total_cmp);
        }
        if complete {
            return Ok(dists);
        }
        r *= 2.0;
    }
}

pub fn amd_vector(c: &Crystal, k: usize) -> Result<AmdVector> {
    let per_site = neighbor_distances(c, k)?;
    let m = per_site.len() as f64;
    let values = (0..k).map(|j| per_site.iter().map(|d| d[j]).sum::<f64>() / m).collect();
    Ok(AmdVector { k, values })
}

pub fn d_amd(a: &Crystal, b: &Crystal, k: usize) -> Result<f64> {
    amd_vector(a, k)?.distance(&amd_vector(b, k)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structures::{make_supercell, Lattice};

    fn cubic(a: f64) -> Crystal {
        let l = Lattice::from_rows([[a, 0.0, 0.0], [0.0, a, 0.0], [0.0, 0.0, a]]).unwrap();
        Crystal::from_species("sc", l, &["Po"], &[[0.0; 3]]).unwrap()
    }

    #[test]
    fn simple_cubic_shells() {
        let v = amd_vector(&cubic(1.0), 26).unwrap();
        for (j, x) in v.values().iter().enumerate() {
            let expected = match j {
                0..=5 => 1.0,
                6..=17 => 2f64.sqrt(),
                _ => 3f64.sqrt(),
            };
            assert!((x - expected).abs() < 1e-12, "{j}: {x}");
        }
    }

    #[test]
    fn stacked_sites_share_lists() {
        let c = make_supercell(&cubic(1.0), 1, 1, 2).unwrap();
        let d = neighbor_distances(&c, 18).unwrap();
        assert_eq!(d.len(), 2);
        for (x, y) in d[0].iter().zip(&d[1]) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn homogeneous_in_scale() {
        let a = amd_vector(&cubic(1.0), 30).unwrap();
        let b = amd_vector(&cubic(2.5), 30).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((2.5 * x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn k_checks() {
        let c = cubic(1.0);
        assert!(amd_vector(&c, 0).is_err());
        let a = amd_vector(&c, 3).unwrap();
        let b = amd_vector(&c, 4).unwrap();
        assert!(matches!(a.distance(&b), Err(Error::KMismatch(3, 4))));
    }

    #[test]
    fn sparse_cell_rejected() {
        let c = cubic(400.0);
        assert!(matches!(amd_vector(&c, 100), Err(Error::SparseCell { .. })));
    }
}
