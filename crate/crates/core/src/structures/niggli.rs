//! Niggli reduction of a lattice basis (Krivy-Gruber, with the epsilon
//! comparisons of Grosse-Kunstleve, Sauter & Adams 2004).
//!
//! The basis vectors themselves are transformed at every step and the
//! metric is recomputed from them, so the result spans exactly the input
//! lattice and keeps its handedness.

use nalgebra::Vector3;

use super::Lattice;
use crate::{Error, Result};

pub const MAX_STEPS: usize = 1000;

/// Relative tolerance; the absolute epsilon is this times V^(2/3).
const REL_EPS: f64 = 1e-5;

struct Metric {
    a: f64,
    b: f64,
    c: f64,
    xi: f64,
    eta: f64,
    zeta: f64,
}

impl Metric {
    fn of(v: &[Vector3<f64>; 3]) -> Self {
        Metric {
            a: v[0].norm_squared(),
            b: v[1].norm_squared(),
            c: v[2].norm_squared(),
            xi: 2.0 * v[1].dot(&v[2]),
            eta: 2.0 * v[0].dot(&v[2]),
            zeta: 2.0 * v[0].dot(&v[1]),
        }
    }
}

fn sign_eps(x: f64, eps: f64) -> i32 {
    if x > eps {
        1
    } else if x < -eps {
        -1
    } else {
        0
    }
}

fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// One pass over the eight Krivy-Gruber conditions. Returns false when
/// the basis already satisfies all of them.
fn step(v: &mut [Vector3<f64>; 3], eps: f64) -> bool {
    let m = Metric::of(v);
    let lt = |x: f64, y: f64| x < y - eps;
    let gt = |x: f64, y: f64| x > y + eps;
    let eq = |x: f64, y: f64| !lt(x, y) && !gt(x, y);

    // A1
    if gt(m.a, m.b) || (eq(m.a, m.b) && gt(m.xi.abs(), m.eta.abs())) {
        *v = [-v[1], -v[0], -v[2]];
        return true;
    }
    // A2
    if gt(m.b, m.c) || (eq(m.b, m.c) && gt(m.eta.abs(), m.zeta.abs())) {
        *v = [-v[0], -v[2], -v[1]];
        return true;
    }
    let (l, mm, n) = (sign_eps(m.xi, eps), sign_eps(m.eta, eps), sign_eps(m.zeta, eps));
    // A3 / A4: make the three off-diagonal terms all positive or all non-positive.
    if l * mm * n == 1 {
        let f = |s: i32| if s < 0 { -1.0 } else { 1.0 };
        let (i, j, k) = (f(l), f(mm), f(n));
        if i < 0.0 || j < 0.0 || k < 0.0 {
            *v = [v[0] * i, v[1] * j, v[2] * k];
        }
    } else if !(l == -1 && mm == -1 && n == -1) {
        let mut s = [1.0, 1.0, 1.0];
        let mut free = None;
        for (idx, sign) in [l, mm, n].into_iter().enumerate() {
            if sign == 1 {
                s[idx] = -1.0;
            } else if sign == 0 {
                free = Some(idx);
            }
        }
        if s[0] * s[1] * s[2] < 0.0 {
            if let Some(p) = free {
                s[p] = -1.0;
            }
        }
        if s != [1.0, 1.0, 1.0] {
            *v = [v[0] * s[0], v[1] * s[1], v[2] * s[2]];
        }
    }
    let m = Metric::of(v);
    // A5
    if gt(m.xi.abs(), m.b)
        || (eq(m.xi, m.b) && lt(2.0 * m.eta, m.zeta))
        || (eq(m.xi, -m.b) && lt(m.zeta, 0.0))
    {
        v[2] -= v[1] * sgn(m.xi);
        return true;
    }
    // A6
    if gt(m.eta.abs(), m.a)
        || (eq(m.eta, m.a) && lt(2.0 * m.xi, m.zeta))
        || (eq(m.eta, -m.a) && lt(m.zeta, 0.0))
    {
        v[2] -= v[0] * sgn(m.eta);
        return true;
    }
    // A7
    if gt(m.zeta.abs(), m.a)
        || (eq(m.zeta, m.a) && lt(2.0 * m.xi, m.eta))
        || (eq(m.zeta, -m.a) && lt(m.eta, 0.0))
    {
        v[1] -= v[0] * sgn(m.zeta);
        return true;
    }
    // A8
    let sum = m.xi + m.eta + m.zeta + m.a + m.b;
    if lt(sum, 0.0) || (eq(sum, 0.0) && gt(2.0 * (m.a + m.eta) + m.zeta, 0.0)) {
        v[2] += v[0] + v[1];
        return true;
    }
    false
}

/// Returns a Niggli-reduced basis of the same lattice.
pub fn niggli_reduce(lattice: &Lattice) -> Result<Lattice> {
    let mut v = [lattice.vector(0), lattice.vector(1), lattice.vector(2)];
    let eps = REL_EPS * lattice.volume().abs().powf(2.0 / 3.0);
    for _ in 0..MAX_STEPS {
        if !step(&mut v, eps) {
            return Lattice::from_rows([0, 1, 2].map(|i| [v[i].x, v[i].y, v[i].z]));
        }
    }
    Err(Error::NiggliNotConverged(MAX_STEPS))
}

/// Checks the Niggli conditions on a basis within `eps` (A^2).
pub fn is_niggli_reduced(lattice: &Lattice, eps: f64) -> bool {
    let v = [lattice.vector(0), lattice.vector(1), lattice.vector(2)];
    let m = Metric::of(&v);
    let le = |x: f64, y: f64| x <= y + eps;
    let positive = m.xi > eps && m.eta > eps && m.zeta > eps;
    let nonpositive = m.xi <= eps && m.eta <= eps && m.zeta <= eps;
    le(m.a, m.b)
        && le(m.b, m.c)
        && (positive || nonpositive)
        && le(m.xi.abs(), m.b)
        && le(m.eta.abs(), m.a)
        && le(m.zeta.abs(), m.a)
        && (m.xi + m.eta + m.zeta + m.a + m.b) >= -eps
}
