use std::time::Instant;

use log::{info, warn};
use rayon::prelude::*;

use super::embed::{canonical_pair_sum, canonical_sum};
use super::{screen, Distance, Embeddings, Prepared, Score, ScreenPolicy, Screened, StageTimings};
use crate::structures::{Crystal, SampleSet};
use crate::{Error, Result};

/// Uniqueness with the aggregation matching the distance kind.
pub fn uniqueness(samples: &SampleSet, d: &Distance, policy: Option<&ScreenPolicy>) -> Result<Score> {
    if d.kind.is_discrete() {
        discrete_uniqueness(samples, d, policy)
    } else {
        continuous_uniqueness(samples, d, policy)
    }
}

/// Novelty with the aggregation matching the distance kind.
pub fn novelty(samples: &SampleSet, train: &SampleSet, d: &Distance, policy: Option<&ScreenPolicy>) -> Result<Score> {
    if d.kind.is_discrete() {
        discrete_novelty(samples, train, d, policy)
    } else {
        continuous_novelty(samples, train, d, policy)
    }
}

fn ratio(count: f64, screened: &Screened) -> f64 {
    if screened.kept.is_empty() || screened.denominator == 0 {
        warn!("no samples left after screening; reporting 0");
        0.0
    } else {
        count / screened.denominator as f64
    }
}

fn score(value: f64, screened: &Screened, timings: StageTimings) -> Score {
    Score {
        value,
        n_total: screened.n_total,
        n_kept: screened.kept.len(),
        denominator: screened.denominator,
        timings,
    }
}

fn prepare_all(crystals: &[Crystal], idx: &[usize], d: &Distance) -> Result<Vec<Prepared>> {
    idx.par_iter().map(|&i| d.prepare(&crystals[i])).collect()
}

/// Number of items with no earlier item at distance 0.
pub(crate) fn first_occurrences(items: &[&Prepared], d: &Distance) -> Result<usize> {
    let flags = (0..items.len())
        .into_par_iter()
        .map(|i| {
            for j in 0..i {
                if d.discrete_prepared(items[i], items[j])? == 0 {
                    return Ok(false);
                }
            }
            Ok(true)
        })
        .collect::<Result<Vec<bool>>>()?;
    Ok(flags.into_iter().filter(|f| *f).count())
}

/// `(1/n) * #{i : d(x_i, x_j) != 0 for all j < i}` over kept samples in
/// generation order.
pub fn discrete_uniqueness(samples: &SampleSet, d: &Distance, policy: Option<&ScreenPolicy>) -> Result<Score> {
    d.kind.require_discrete()?;
    if samples.is_empty() {
        return Err(Error::EmptySampleSet);
    }
    let screened = screen(&samples.crystals, policy)?;
    let start = Instant::now();
    let prepared = prepare_all(&samples.crystals, &screened.kept, d)?;
    let refs: Vec<&Prepared> = prepared.iter().collect();
    let count = first_occurrences(&refs, d)?;
    let timings = StageTimings { embedding: Default::default(), pairwise: start.elapsed() };
    info!("{} {}: pairwise stage {:.3} s", samples.label, d.kind, timings.pairwise.as_secs_f64());
    Ok(score(ratio(count as f64, &screened), &screened, timings))
}

/// `(1/n) * #{i : d(x_i, y_j) != 0 for all training y_j}`.
pub fn discrete_novelty(
    samples: &SampleSet,
    train: &SampleSet,
    d: &Distance,
    policy: Option<&ScreenPolicy>,
) -> Result<Score> {
    d.kind.require_discrete()?;
    if train.is_empty() {
        return Err(Error::EmptyTrain);
    }
    if samples.is_empty() {
        return Err(Error::EmptySampleSet);
    }
    let screened = screen(&samples.crystals, policy)?;
    let start = Instant::now();
    let all_train: Vec<usize> = (0..train.len()).collect();
    let train_prepared = prepare_all(&train.crystals, &all_train, d)?;
    let prepared = prepare_all(&samples.crystals, &screened.kept, d)?;
    let novel = prepared
        .par_iter()
        .map(|x| {
            for y in &train_prepared {
                if d.discrete_prepared(x, y)? == 0 {
                    return Ok(false);
                }
            }
            Ok(true)
        })
        .collect::<Result<Vec<bool>>>()?;
    let count = novel.into_iter().filter(|f| *f).count();
    let timings = StageTimings { embedding: Default::default(), pairwise: start.elapsed() };
    info!("{} {}: pairwise stage {:.3} s", samples.label, d.kind, timings.pairwise.as_secs_f64());
    Ok(score(ratio(count as f64, &screened), &screened, timings))
}

fn check_embeddings(emb: &Embeddings, d: &Distance) -> Result<()> {
    if emb.kind != d.kind {
        return Err(Error::WrongDistanceKind(format!("{} embeddings", emb.kind), "the requested distance"));
    }
    Ok(())
}

fn pair_denominator(screened: &Screened) -> Result<f64> {
    let n = screened.denominator;
    if n < 2 {
        return Err(Error::TooFewSamples(n));
    }
    Ok(n as f64 * (n as f64 - 1.0) / 2.0)
}

/// Mean pairwise distance over kept samples, normalised by `C(n, 2)`.
pub fn continuous_uniqueness(samples: &SampleSet, d: &Distance, policy: Option<&ScreenPolicy>) -> Result<Score> {
    d.kind.require_continuous()?;
    if samples.is_empty() {
        return Err(Error::EmptySampleSet);
    }
    let screened = screen(&samples.crystals, policy)?;
    pair_denominator(&screened)?;
    let start = Instant::now();
    let kept: Vec<Crystal> = screened.kept.iter().map(|&i| samples.crystals[i].clone()).collect();
    let emb = Embeddings::compute(&kept, d)?;
    let embedding = start.elapsed();
    let all = Screened { kept: (0..kept.len()).collect(), ..screened.clone() };
    let mut s = continuous_uniqueness_embedded(&emb, &all, d)?;
    s.timings.embedding = embedding;
    info!(
        "{} {}: embedding stage {:.3} s, pairwise stage {:.3} s",
        samples.label,
        d.kind,
        embedding.as_secs_f64(),
        s.timings.pairwise.as_secs_f64()
    );
    Ok(s)
}

/// As [`continuous_uniqueness`], from precomputed embeddings of the whole
/// sample set (row `i` belongs to sample `i`).
pub fn continuous_uniqueness_embedded(emb: &Embeddings, screened: &Screened, d: &Distance) -> Result<Score> {
    check_embeddings(emb, d)?;
    let denom = pair_denominator(screened)?;
    let start = Instant::now();
    let rows: Vec<&[f64]> = screened.kept.iter().map(|&i| emb.rows[i].as_slice()).collect();
    let sum = canonical_pair_sum(&rows, |a, b| d.between(a, b));
    let timings = StageTimings { embedding: Default::default(), pairwise: start.elapsed() };
    Ok(score(sum / denom, screened, timings))
}

/// Mean over kept samples of the distance to the nearest training crystal.
pub fn continuous_novelty(
    samples: &SampleSet,
    train: &SampleSet,
    d: &Distance,
    policy: Option<&ScreenPolicy>,
) -> Result<Score> {
    d.kind.require_continuous()?;
    if train.is_empty() {
        return Err(Error::EmptyTrain);
    }
    if samples.is_empty() {
        return Err(Error::EmptySampleSet);
    }
    let screened = screen(&samples.crystals, policy)?;
    let start = Instant::now();
    let kept: Vec<Crystal> = screened.kept.iter().map(|&i| samples.crystals[i].clone()).collect();
    let emb = Embeddings::compute(&kept, d)?;
    let train_emb = Embeddings::compute(&train.crystals, d)?;
    let embedding = start.elapsed();
    let all = Screened { kept: (0..kept.len()).collect(), ..screened.clone() };
    let mut s = continuous_novelty_embedded(&emb, &train_emb, &all, d)?;
    s.timings.embedding = embedding;
    info!(
        "{} {}: embedding stage {:.3} s, pairwise stage {:.3} s",
        samples.label,
        d.kind,
        embedding.as_secs_f64(),
        s.timings.pairwise.as_secs_f64()
    );
    Ok(s)
}

pub fn continuous_novelty_embedded(
    emb: &Embeddings,
    train: &Embeddings,
    screened: &Screened,
    d: &Distance,
) -> Result<Score> {
    check_embeddings(emb, d)?;
    check_embeddings(train, d)?;
    if train.is_empty() {
        return Err(Error::EmptyTrain);
    }
    let start = Instant::now();
    let minima: Vec<f64> = screened
        .kept
        .par_iter()
        .map(|&i| train.rows.iter().map(|y| d.between(&emb.rows[i], y)).fold(f64::INFINITY, f64::min))
        .collect();
    let value = ratio(canonical_sum(&minima), screened);
    let timings = StageTimings { embedding: Default::default(), pairwise: start.elapsed() };
    Ok(score(value, screened, timings))
}

/// Full symmetric distance matrix (discrete kinds give 0.0 / 1.0).
pub fn pairwise_matrix(crystals: &[Crystal], d: &Distance) -> Result<Vec<Vec<f64>>> {
    let n = crystals.len();
    if d.kind.is_discrete() {
        let all: Vec<usize> = (0..n).collect();
        let p = prepare_all(crystals, &all, d)?;
        (0..n)
            .into_par_iter()
            .map(|i| (0..n).map(|j| Ok(f64::from(d.discrete_prepared(&p[i], &p[j])?))).collect())
            .collect()
    } else {
        let emb = Embeddings::compute(crystals, d)?;
        Ok((0..n)
            .into_par_iter()
            .map(|i| (0..n).map(|j| d.between(&emb.rows[i], &emb.rows[j])).collect())
            .collect())
    }
}
