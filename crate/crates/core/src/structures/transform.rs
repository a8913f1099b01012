//! Supercells, rigid motions and random site perturbations.

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{wrap_frac3, Crystal, Lattice, Site};
use crate::{Error, Result};

/// Maximum number of sites a constructed crystal may hold.
pub const SITE_CAP: usize = 10_000;

const ORTHO_TOL: f64 = 1e-10;

pub fn make_supercell(c: &Crystal, n1: usize, n2: usize, n3: usize) -> Result<Crystal> {
    make_supercell_capped(c, n1, n2, n3, SITE_CAP)
}

/// Scales the lattice rows by (n1, n2, n3) and replicates the sites; each
/// input site is followed by its images.
pub fn make_supercell_capped(c: &Crystal, n1: usize, n2: usize, n3: usize, cap: usize) -> Result<Crystal> {
    if n1 == 0 || n2 == 0 || n3 == 0 {
        return Err(Error::InvalidCrystal("supercell multipliers must be positive".into()));
    }
    let requested = c.num_sites().saturating_mul(n1).saturating_mul(n2).saturating_mul(n3);
    if requested > cap {
        return Err(Error::SiteCap { requested, cap });
    }
    let scale = Vector3::new(n1 as f64, n2 as f64, n3 as f64);
    let m = c.lattice.matrix();
    let lattice = Lattice::new(Matrix3::from_fn(|i, j| m[(i, j)] * scale[i]))?;
    let mut sites = Vec::with_capacity(requested);
    for s in c.sites() {
        for i in 0..n1 {
            for j in 0..n2 {
                for k in 0..n3 {
                    let shift = Vector3::new(i as f64, j as f64, k as f64);
                    let frac = (s.frac + shift).component_div(&scale);
                    sites.push(Site { element: s.element, frac: wrap_frac3(&frac) });
                }
            }
        }
    }
    let mut out = Crystal::assemble(c.id.clone(), lattice, sites);
    out.symmetry = c.symmetry.clone();
    out.e_hull = c.e_hull;
    Ok(out)
}

/// Rotates the lattice and the Cartesian site positions, then translates
/// the positions. An improper rotation flips handedness; the result is
/// stored with the negated basis (and negated fractional coordinates), which
/// describes the same point set.
pub fn apply_isometry(c: &Crystal, rotation: &Matrix3<f64>, translation: &Vector3<f64>) -> Result<Crystal> {
    let deviation = (rotation * rotation.transpose() - Matrix3::identity()).abs().max();
    if deviation.is_nan() || deviation > ORTHO_TOL {
        return Err(Error::NotOrthogonal(deviation));
    }
    let mut rows = c.lattice.matrix() * rotation.transpose();
    if rotation.determinant() < 0.0 {
        rows = -rows;
    }
    let lattice = Lattice::new(rows)?;
    let sites = c
        .sites()
        .iter()
        .map(|s| {
            let cart = rotation * c.lattice.to_cart(&s.frac) + translation;
            Site { element: s.element, frac: wrap_frac3(&lattice.to_frac(&cart)) }
        })
        .collect();
    let mut out = Crystal::assemble(c.id.clone(), lattice, sites);
    out.symmetry = c.symmetry.clone();
    out.e_hull = c.e_hull;
    Ok(out)
}

/// Uniformly random unit vector.
pub(crate) fn random_direction<R: Rng>(rng: &mut R) -> Vector3<f64> {
    let z: f64 = rng.random_range(-1.0..=1.0);
    let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let r = (1.0 - z * z).max(0.0).sqrt();
    Vector3::new(r * phi.cos(), r * phi.sin(), z)
}

/// Moves every site by an independent random Cartesian vector with uniform
/// direction and length uniform in [0, eps]. Deterministic in `seed`.
pub fn perturb_sites(c: &Crystal, eps: f64, seed: u64) -> Result<Crystal> {
    if eps.is_nan() || eps < 0.0 {
        return Err(Error::InvalidCrystal(format!("perturbation size must be >= 0 (got {eps})")));
    }
    if eps == 0.0 {
        return Ok(c.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sites = c
        .sites()
        .iter()
        .map(|s| {
            let dir = random_direction(&mut rng);
            let len = eps * rng.random::<f64>();
            let cart = c.lattice.to_cart(&s.frac) + dir * len;
            Site { element: s.element, frac: wrap_frac3(&c.lattice.to_frac(&cart)) }
        })
        .collect();
    let mut out = Crystal::assemble(c.id.clone(), c.lattice.clone(), sites);
    out.symmetry = c.symmetry.clone();
    out.e_hull = c.e_hull;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Rotation3;

    fn cubic() -> Crystal {
        let l = Lattice::from_rows([[2.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 2.0]]).unwrap();
        Crystal::from_species("sc", l, &["Cu"], &[[0.1, 0.2, 0.3]]).unwrap()
    }

    #[test]
    fn supercell_counts() {
        let c = cubic();
        let s = make_supercell(&c, 1, 1, 3).unwrap();
        assert_eq!(s.num_sites(), 3);
        assert!((s.lattice.vector(2).norm() - 6.0).abs() < 1e-12);
        let same = make_supercell(&c, 1, 1, 1).unwrap();
        assert_eq!(same, c);
        assert!(matches!(make_supercell_capped(&c, 10, 10, 10, 999), Err(Error::SiteCap { requested: 1000, .. })));
        assert!(make_supercell(&c, 0, 1, 1).is_err());
    }

    #[test]
    fn identity_isometry() {
        let c = cubic();
        let out = apply_isometry(&c, &Matrix3::identity(), &Vector3::zeros()).unwrap();
        assert!((out.sites()[0].frac - c.sites()[0].frac).norm() < 1e-15);
    }

    #[test]
    fn isometry_rejects_non_orthogonal() {
        let m = Matrix3::new(1.0, 0.1, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0);
        assert!(matches!(apply_isometry(&cubic(), &m, &Vector3::zeros()), Err(Error::NotOrthogonal(_))));
    }

    #[test]
    fn improper_rotation_keeps_right_handed() {
        let l = Lattice::from_rows([[2.0, 0.0, 0.0], [0.3, 2.1, 0.0], [0.2, 0.4, 2.5]]).unwrap();
        let c = Crystal::from_species("x", l, &["Cu", "O"], &[[0.1, 0.2, 0.3], [0.6, 0.5, 0.9]]).unwrap();
        let mirror = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, -1.0));
        let out = apply_isometry(&c, &mirror, &Vector3::new(0.3, 0.0, 0.1)).unwrap();
        assert!(out.volume() > 0.0);
        let d_in = c.lattice.min_image(&(c.sites()[0].frac - c.sites()[1].frac)).norm();
        let d_out = out.lattice.min_image(&(out.sites()[0].frac - out.sites()[1].frac)).norm();
        assert!((d_in - d_out).abs() < 1e-12);
        let rot = Rotation3::from_euler_angles(0.3, -1.1, 2.0);
        assert!(apply_isometry(&c, rot.matrix(), &Vector3::zeros()).is_ok());
    }

    #[test]
    fn perturbation_is_bounded_and_deterministic() {
        let c = cubic();
        assert_eq!(perturb_sites(&c, 0.0, 7).unwrap(), c);
        let a = perturb_sites(&c, 0.1, 7).unwrap();
        let b = perturb_sites(&c, 0.1, 7).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, perturb_sites(&c, 0.1, 8).unwrap());
        for seed in 0..200 {
            let p = perturb_sites(&c, 0.1, seed).unwrap();
            let shift = c.lattice.min_image(&(p.sites()[0].frac - c.sites()[0].frac)).norm();
            assert!(shift <= 0.1 + 1e-12);
        }
        assert!(perturb_sites(&c, -1.0, 0).is_err());
    }
}
