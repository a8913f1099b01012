use std::cmp::Ordering;

use rayon::prelude::*;

use super::{Distance, DistanceKind};
use crate::structures::Crystal;
use crate::Result;

/// Fingerprints of a crystal list under one continuous distance kind, in
/// list order.
#[derive(Clone, Debug, PartialEq)]
pub struct Embeddings {
    pub kind: DistanceKind,
    pub rows: Vec<Vec<f64>>,
}

impl Embeddings {
    /// Fingerprints every crystal, in parallel over crystals.
    pub fn compute(crystals: &[Crystal], d: &Distance) -> Result<Embeddings> {
        d.kind.require_continuous()?;
        let rows = crystals.par_iter().map(|c| d.embed(c)).collect::<Result<Vec<_>>>()?;
        Ok(Embeddings { kind: d.kind, rows })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Compensated (Neumaier) running sum.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

pub(crate) fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    a.len().cmp(&b.len())
}

/// Rows sorted into a canonical (lexicographic, IEEE total order) sequence.
pub(crate) fn canonical<'a>(rows: &[&'a [f64]]) -> Vec<&'a [f64]> {
    let mut out = rows.to_vec();
    out.sort_by(|a, b| lex_cmp(a, b));
    out
}

/// Sum of `dist` over all unordered pairs, independent of the input order
/// and of the thread count: rows are put in canonical order, each row's
/// partial sum over later rows is computed in parallel, and the partials
/// are added sequentially in row order.
pub fn canonical_pair_sum<F>(rows: &[&[f64]], dist: F) -> f64
where
    F: Fn(&[f64], &[f64]) -> f64 + Sync,
{
    let rows = canonical(rows);
    let partials: Vec<f64> = (0..rows.len())
        .into_par_iter()
        .map(|i| {
            let mut s = Neumaier::default();
            for r in &rows[i + 1..] {
                s.add(dist(rows[i], r));
            }
            s.value()
        })
        .collect();
    let mut total = Neumaier::default();
    for p in partials {
        total.add(p);
    }
    total.value()
}

/// Order-independent compensated sum of scalars.
pub(crate) fn canonical_sum(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mut s = Neumaier::default();
    for x in v {
        s.add(x);
    }
    s.value()
}
