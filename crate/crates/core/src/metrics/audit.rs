use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::eval::first_occurrences;
use super::{screen, Distance, Prepared, ScreenPolicy};
use crate::structures::SampleSet;
use crate::{Error, Result};

/// Discrete uniqueness of one sample set under several seeded shuffles.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShuffleAudit {
    pub seeds: Vec<u64>,
    pub values: Vec<f64>,
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
}

/// Permutation of `0..n` for `seed`: Fisher-Yates driven by
/// `ChaCha8Rng::seed_from_u64(seed)`, where step `i` (from `n - 1` down to
/// 1) swaps `i` with `(next_u64 * (i + 1)) >> 64`.
pub fn shuffled_order(n: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = ((u128::from(rng.next_u64()) * (i as u128 + 1)) >> 64) as usize;
        order.swap(i, j);
    }
    order
}

/// Mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt();
    (mean, std)
}

pub fn shuffle_audit(
    samples: &SampleSet,
    d: &Distance,
    seeds: &[u64],
    policy: Option<&ScreenPolicy>,
) -> Result<ShuffleAudit> {
    d.kind.require_discrete()?;
    if seeds.len() < 2 {
        return Err(Error::TooFewSeeds(seeds.len()));
    }
    if samples.is_empty() {
        return Err(Error::EmptySampleSet);
    }
    let screened = screen(&samples.crystals, policy)?;
    let prepared: Vec<Option<Prepared>> = samples
        .crystals
        .iter()
        .enumerate()
        .map(|(i, c)| if screened.kept.binary_search(&i).is_ok() { d.prepare(c).map(Some) } else { Ok(None) })
        .collect::<Result<_>>()?;
    let mut values = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let order = shuffled_order(samples.len(), seed);
        let items: Vec<&Prepared> = order.iter().filter_map(|&i| prepared[i].as_ref()).collect();
        let count = first_occurrences(&items, d)?;
        values.push(if screened.denominator == 0 { 0.0 } else { count as f64 / screened.denominator as f64 });
    }
    let (mean, std) = mean_std(&values);
    Ok(ShuffleAudit { seeds: seeds.to_vec(), values, mean, std })
}
