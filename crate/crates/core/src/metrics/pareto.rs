use super::MetricReport;
use crate::{Error, Result};

/// Indices of points `(u, n)` not dominated by any other point: `l`
/// dominates `k` when `u_l >= u_k`, `n_l >= n_k` and one of them is strict.
/// Mutually equal points are all kept.
pub fn pareto_indices(points: &[(f64, f64)]) -> Vec<usize> {
    (0..points.len())
        .filter(|&k| {
            let (uk, nk) = points[k];
            !points
                .iter()
                .enumerate()
                .any(|(l, &(ul, nl))| l != k && ul >= uk && nl >= nk && (ul > uk || nl > nk))
        })
        .collect()
}

/// Models on the uniqueness/novelty Pareto frontier, in input order. Every
/// report needs both values and all must share distance kind and screening.
pub fn pareto_front(reports: &[MetricReport]) -> Result<Vec<String>> {
    let first = reports.first().ok_or_else(|| Error::Pareto("no reports".into()))?;
    let mut points = Vec::with_capacity(reports.len());
    for r in reports {
        if r.distance != first.distance {
            return Err(Error::Pareto(format!("mixed distance kinds: {} and {}", first.distance, r.distance)));
        }
        if r.screen != first.screen {
            return Err(Error::Pareto(format!("mixed screening between {} and {}", first.model, r.model)));
        }
        match (r.uniqueness, r.novelty) {
            (Some(u), Some(n)) => points.push((u, n)),
            _ => return Err(Error::Pareto(format!("{} lacks uniqueness or novelty", r.model))),
        }
    }
    Ok(pareto_indices(&points).into_iter().map(|i| reports[i].model.clone()).collect())
}
