#![allow(dead_code)]

use nalgebra::{Matrix3, Rotation3, Unit, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use xtalmet::structures::{make_supercell, Crystal, Lattice};
use xtalmet::symmetry::SymmetryRecord;

fn hexagonal(a: f64, c: f64) -> Lattice {
    Lattice::from_parameters(a, a, c, 90.0, 90.0, 120.0).unwrap()
}

fn wurtzite(id: &str, cation: &str, anion: &str, a: f64, c: f64, u: f64) -> Crystal {
    Crystal::from_species(
        id,
        hexagonal(a, c),
        &[cation, cation, anion, anion],
        &[
            [1.0 / 3.0, 2.0 / 3.0, 0.0],
            [2.0 / 3.0, 1.0 / 3.0, 0.5],
            [1.0 / 3.0, 2.0 / 3.0, u],
            [2.0 / 3.0, 1.0 / 3.0, 0.5 + u],
        ],
    )
    .unwrap()
    .with_symmetry(SymmetryRecord::from_letters(186, &["b", "b"]).unwrap())
}

pub fn wz_zno() -> Crystal {
    wurtzite("wz-ZnO", "Zn", "O", 3.24, 5.22, 0.38)
}

pub fn wz_zno_supercell() -> Crystal {
    let mut c = make_supercell(&wz_zno(), 2, 2, 2).unwrap();
    c.id = "wz-ZnO-2x2x2".into();
    c.with_symmetry(SymmetryRecord::from_letters(186, &["b", "b"]).unwrap())
}

pub fn rs_zno() -> Crystal {
    let h = 4.28 / 2.0;
    let l = Lattice::from_rows([[0.0, h, h], [h, 0.0, h], [h, h, 0.0]]).unwrap();
    Crystal::from_species("rs-ZnO", l, &["Zn", "O"], &[[0.0; 3], [0.5; 3]])
        .unwrap()
        .with_symmetry(SymmetryRecord::from_letters(225, &["a", "b"]).unwrap())
}

pub fn wz_gan() -> Crystal {
    wurtzite("wz-GaN", "Ga", "N", 3.189, 5.185, 0.377)
}

pub fn bi2te3() -> Crystal {
    let base: [(&str, f64); 5] =
        [("Te", 0.0), ("Te", 0.7899), ("Te", -0.7899), ("Bi", 0.4001), ("Bi", -0.4001)];
    let centring = [[0.0, 0.0, 0.0], [2.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], [1.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0]];
    let mut species = Vec::new();
    let mut coords = Vec::new();
    for t in centring {
        for (el, z) in base {
            species.push(el);
            coords.push([t[0], t[1], t[2] + z]);
        }
    }
    Crystal::from_species("Bi2Te3", hexagonal(4.386, 30.497), &species, &coords)
        .unwrap()
        .with_symmetry(SymmetryRecord::from_letters(166, &["a", "c", "c"]).unwrap())
}

pub fn cubic(a: f64, species: &[&str], coords: &[[f64; 3]]) -> Crystal {
    let l = Lattice::from_rows([[a, 0.0, 0.0], [0.0, a, 0.0], [0.0, 0.0, a]]).unwrap();
    Crystal::from_species("cubic", l, species, coords).unwrap()
}

pub const ELEMENT_POOL: [&str; 12] = ["Li", "O", "Na", "Mg", "Si", "S", "Cl", "Ti", "Fe", "Zn", "Ga", "N"];

/// Random crystal with 1..=max_sites sites, lattice lengths in [3, 7] A,
/// angles in [70, 110] degrees and no two sites closer than 0.8 A.
pub fn random_crystal(rng: &mut ChaCha8Rng, max_sites: usize, pool: &[&str]) -> Crystal {
    loop {
        let l = rng.random_range(3.0..7.0);
        let lengths = [l, l * rng.random_range(0.8..1.25), l * rng.random_range(0.8..1.25)];
        let angles: [f64; 3] = std::array::from_fn(|_| rng.random_range(70.0..110.0));
        let Ok(lattice) =
            Lattice::from_parameters(lengths[0], lengths[1], lengths[2], angles[0], angles[1], angles[2])
        else {
            continue;
        };
        if lattice.volume() < 10.0 {
            continue;
        }
        let m = rng.random_range(1..=max_sites);
        let species: Vec<&str> = (0..m).map(|_| pool[rng.random_range(0..pool.len())]).collect();
        let coords: Vec<[f64; 3]> = (0..m).map(|_| [rng.random(), rng.random(), rng.random()]).collect();
        let Ok(c) = Crystal::from_species("rand", lattice, &species, &coords) else { continue };
        let cart = c.cart_positions();
        let crowded = (0..m).any(|i| {
            (0..i).any(|j| c.lattice.min_image(&c.lattice.to_frac(&(cart[i] - cart[j]))).norm() < 0.8)
        });
        if !crowded {
            return c;
        }
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_rotation(rng: &mut ChaCha8Rng) -> Matrix3<f64> {
    let axis = loop {
        let v = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            break v;
        }
    };
    let angle = rng.random_range(0.0..std::f64::consts::TAU);
    let r = *Rotation3::from_axis_angle(&Unit::new_normalize(axis), angle).matrix();
    if rng.random_bool(0.5) {
        -r
    } else {
        r
    }
}

pub fn random_translation(rng: &mut ChaCha8Rng) -> Vector3<f64> {
    Vector3::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0))
}

/// Brute-force neighbour lists: all translates with |n_i| <= reach, sorted,
/// first k kept. Independent of the library search.
pub fn brute_force_amd(c: &Crystal, k: usize, reach: i64) -> Vec<f64> {
    let pts = c.cart_positions();
    let mut per_site: Vec<Vec<f64>> = Vec::new();
    for (i, p) in pts.iter().enumerate() {
        let mut d = Vec::new();
        for a in -reach..=reach {
            for b in -reach..=reach {
                for cc in -reach..=reach {
                    let t = c.lattice.to_cart(&Vector3::new(a as f64, b as f64, cc as f64));
                    for (j, q) in pts.iter().enumerate() {
                        if i == j && a == 0 && b == 0 && cc == 0 {
                            continue;
                        }
                        d.push((q + t - p).norm());
                    }
                }
            }
        }
        d.sort_by(f64::total_cmp);
        d.truncate(k);
        per_site.push(d);
    }
    (0..k).map(|j| per_site.iter().map(|d| d[j]).sum::<f64>() / pts.len() as f64).collect()
}
