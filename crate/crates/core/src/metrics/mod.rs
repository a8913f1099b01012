//! Uniqueness and novelty of generated sample sets, stability screening,
//! shuffle audits and Pareto comparison of models.
//!
//! Discrete distances (`smat`, `comp`, `wyckoff`) use the first-occurrence
//! uniqueness and the all-different novelty. Continuous distances (`magpie`,
//! `amd`) use the mean pairwise distance and the mean distance to the nearest
//! training crystal. Both are normalised by `n`, which is the full sample
//! count by default even when screening removes samples.
//!
//! Continuous sums are order independent bit for bit: embeddings are sorted
//! into a canonical order before a fixed ascending-pair compensated sum, and
//! parallel partial sums are combined sequentially in that order.

mod audit;
mod embed;
mod eval;
mod pareto;
mod report;

use serde::{Deserialize, Serialize};
use std::fmt;
use std::time::Duration;

use crate::amd::{amd_vector, linf, DEFAULT_K};
use crate::composition::magpie::{crystal_fingerprint, euclidean};
use crate::composition::{composition_of, Composition, PropertyTable};
use crate::matcher::{d_smat_prepared, MatchTolerances, PreparedCrystal};
use crate::structures::Crystal;
use crate::{Error, Result};

pub use audit::{mean_std, shuffle_audit, shuffled_order, ShuffleAudit};
pub use embed::{canonical_pair_sum, Embeddings};
pub use eval::{
    continuous_novelty, continuous_novelty_embedded, continuous_uniqueness, continuous_uniqueness_embedded,
    discrete_novelty, discrete_uniqueness, novelty, pairwise_matrix, uniqueness,
};
pub use pareto::{pareto_front, pareto_indices};
pub use report::{comparison_table_csv, MetricReport};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "lowercase")]
pub enum DistanceKind {
    Smat(MatchTolerances),
    Comp,
    Wyckoff,
    Magpie,
    Amd { k: usize },
}

impl DistanceKind {
    pub fn amd() -> Self {
        DistanceKind::Amd { k: DEFAULT_K }
    }

    pub fn smat() -> Self {
        DistanceKind::Smat(MatchTolerances::default())
    }

    pub fn name(&self) -> &'static str {
        match self {
            DistanceKind::Smat(_) => "smat",
            DistanceKind::Comp => "comp",
            DistanceKind::Wyckoff => "wyckoff",
            DistanceKind::Magpie => "magpie",
            DistanceKind::Amd { .. } => "amd",
        }
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self, DistanceKind::Smat(_) | DistanceKind::Comp | DistanceKind::Wyckoff)
    }

    /// Factor applied to continuous values when tabulating (magpie values
    /// are conventionally shown divided by 1000).
    pub fn presentation_scale(&self) -> f64 {
        match self {
            DistanceKind::Magpie => 1e-3,
            _ => 1.0,
        }
    }

    pub(crate) fn require_discrete(&self) -> Result<()> {
        if self.is_discrete() {
            Ok(())
        } else {
            Err(Error::WrongDistanceKind(self.name().into(), "discrete"))
        }
    }

    pub(crate) fn require_continuous(&self) -> Result<()> {
        if self.is_discrete() {
            Err(Error::WrongDistanceKind(self.name().into(), "continuous"))
        } else {
            Ok(())
        }
    }
}

impl fmt::Display for DistanceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DistanceKind::Smat(t) => write!(f, "smat(ltol={}, stol={}, angle_tol={})", t.ltol, t.stol, t.angle_tol),
            DistanceKind::Amd { k } => write!(f, "amd(k={k})"),
            other => f.write_str(other.name()),
        }
    }
}

/// A distance kind bound to the elemental property table used by `magpie`.
#[derive(Clone, Copy, Debug)]
pub struct Distance<'t> {
    pub kind: DistanceKind,
    pub table: &'t PropertyTable,
}

impl Distance<'static> {
    pub fn new(kind: DistanceKind) -> Self {
        Distance { kind, table: PropertyTable::builtin() }
    }
}

/// Per-crystal data a discrete distance compares.
#[derive(Clone, Debug)]
pub enum Prepared {
    Smat(Box<PreparedCrystal>),
    Comp(Composition),
    Wyckoff((u16, Vec<String>)),
}

impl<'t> Distance<'t> {
    pub fn with_table(kind: DistanceKind, table: &'t PropertyTable) -> Self {
        Distance { kind, table }
    }

    pub fn prepare(&self, c: &Crystal) -> Result<Prepared> {
        match self.kind {
            DistanceKind::Smat(tol) => {
                tol.validate()?;
                Ok(Prepared::Smat(Box::new(PreparedCrystal::new(c)?)))
            }
            DistanceKind::Comp => Ok(Prepared::Comp(composition_of(c).reduced())),
            DistanceKind::Wyckoff => Ok(Prepared::Wyckoff(c.symmetry.as_ref().ok_or(Error::MissingSymmetry)?.key())),
            _ => Err(Error::WrongDistanceKind(self.kind.name().into(), "discrete")),
        }
    }

    pub fn discrete_prepared(&self, a: &Prepared, b: &Prepared) -> Result<u8> {
        match (&self.kind, a, b) {
            (DistanceKind::Smat(tol), Prepared::Smat(a), Prepared::Smat(b)) => d_smat_prepared(a, b, tol),
            (DistanceKind::Comp, Prepared::Comp(a), Prepared::Comp(b)) => Ok(u8::from(a != b)),
            (DistanceKind::Wyckoff, Prepared::Wyckoff(a), Prepared::Wyckoff(b)) => Ok(u8::from(a != b)),
            _ => Err(Error::WrongDistanceKind(self.kind.name().into(), "discrete")),
        }
    }

    pub fn discrete(&self, a: &Crystal, b: &Crystal) -> Result<u8> {
        self.discrete_prepared(&self.prepare(a)?, &self.prepare(b)?)
    }

    pub fn embed(&self, c: &Crystal) -> Result<Vec<f64>> {
        match self.kind {
            DistanceKind::Magpie => Ok(crystal_fingerprint(c, self.table)?.into_vec()),
            DistanceKind::Amd { k } => Ok(amd_vector(c, k)?.values().to_vec()),
            _ => Err(Error::WrongDistanceKind(self.kind.name().into(), "continuous")),
        }
    }

    /// Distance between two embeddings of this kind.
    pub fn between(&self, a: &[f64], b: &[f64]) -> f64 {
        match self.kind {
            DistanceKind::Amd { .. } => linf(a, b),
            _ => euclidean(a, b),
        }
    }

    pub fn continuous(&self, a: &Crystal, b: &Crystal) -> Result<f64> {
        self.kind.require_continuous()?;
        Ok(self.between(&self.embed(a)?, &self.embed(b)?))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Denominator {
    /// All samples, screened or not.
    #[default]
    Full,
    /// Only the samples that pass screening.
    Filtered,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScreenPolicy {
    /// eV/atom; samples above it are removed.
    pub e_hull_max: f64,
    pub denominator: Denominator,
}

impl Default for ScreenPolicy {
    fn default() -> Self {
        ScreenPolicy { e_hull_max: 0.1, denominator: Denominator::Full }
    }
}

impl ScreenPolicy {
    pub fn validate(&self) -> Result<()> {
        if self.e_hull_max.is_nan() || self.e_hull_max < 0.0 {
            return Err(Error::InvalidPolicy(format!("e_hull_max = {}", self.e_hull_max)));
        }
        Ok(())
    }
}

/// Sample indices kept by screening.
#[derive(Clone, Debug, PartialEq)]
pub struct Screened {
    pub kept: Vec<usize>,
    pub n_total: usize,
    pub n_missing_ehull: usize,
    pub denominator: usize,
}

/// Applies `policy` to `samples`; `None` keeps everything. Samples lacking
/// `e_hull` are dropped with a warning; it is an error if none has one.
pub fn screen(samples: &[Crystal], policy: Option<&ScreenPolicy>) -> Result<Screened> {
    let n_total = samples.len();
    let Some(policy) = policy else {
        return Ok(Screened { kept: (0..n_total).collect(), n_total, n_missing_ehull: 0, denominator: n_total });
    };
    policy.validate()?;
    let n_missing_ehull = samples.iter().filter(|c| c.e_hull.is_none()).count();
    if n_total > 0 && n_missing_ehull == n_total {
        return Err(Error::NoEhull);
    }
    if n_missing_ehull > 0 {
        log::warn!("{n_missing_ehull} of {n_total} samples have no e_hull and are removed by screening");
    }
    let kept: Vec<usize> = samples
        .iter()
        .enumerate()
        .filter(|(_, c)| c.e_hull.is_some_and(|e| e <= policy.e_hull_max))
        .map(|(i, _)| i)
        .collect();
    let denominator = match policy.denominator {
        Denominator::Full => n_total,
        Denominator::Filtered => kept.len(),
    };
    Ok(Screened { kept, n_total, n_missing_ehull, denominator })
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StageTimings {
    pub embedding: Duration,
    pub pairwise: Duration,
}

/// A uniqueness or novelty value with the counts behind it.
#[derive(Clone, Debug, PartialEq)]
pub struct Score {
    pub value: f64,
    pub n_total: usize,
    pub n_kept: usize,
    pub denominator: usize,
    pub timings: StageTimings,
}
