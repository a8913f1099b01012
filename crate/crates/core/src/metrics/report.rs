use serde::{Deserialize, Serialize};

use super::{pareto_front, DistanceKind, Score, ScreenPolicy};
use crate::{Error, Result};

/// Uniqueness and/or novelty of one model under one distance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub model: String,
    pub distance: DistanceKind,
    pub screened: bool,
    pub screen: Option<ScreenPolicy>,
    pub uniqueness: Option<f64>,
    pub novelty: Option<f64>,
    pub n_total: usize,
    pub n_kept: usize,
    pub denominator: usize,
    pub m_train: Option<usize>,
    /// Factor for tabulating the values (1e-3 for magpie); values here are raw.
    pub presentation_scale: f64,
}

impl MetricReport {
    fn base(model: &str, distance: DistanceKind, screen: Option<ScreenPolicy>, s: &Score) -> Self {
        MetricReport {
            model: model.to_string(),
            distance,
            screened: screen.is_some(),
            screen,
            uniqueness: None,
            novelty: None,
            n_total: s.n_total,
            n_kept: s.n_kept,
            denominator: s.denominator,
            m_train: None,
            presentation_scale: distance.presentation_scale(),
        }
    }

    pub fn from_uniqueness(model: &str, distance: DistanceKind, screen: Option<ScreenPolicy>, s: &Score) -> Self {
        MetricReport { uniqueness: Some(s.value), ..Self::base(model, distance, screen, s) }
    }

    pub fn from_novelty(
        model: &str,
        distance: DistanceKind,
        screen: Option<ScreenPolicy>,
        s: &Score,
        m_train: usize,
    ) -> Self {
        MetricReport { novelty: Some(s.value), m_train: Some(m_train), ..Self::base(model, distance, screen, s) }
    }

    /// Combines a uniqueness-only and a novelty-only report of the same run.
    pub fn merge(&self, other: &MetricReport) -> Result<MetricReport> {
        if self.model != other.model || self.distance != other.distance || self.screen != other.screen {
            return Err(Error::Pareto(format!(
                "cannot merge reports {} ({}) and {} ({})",
                self.model, self.distance, other.model, other.distance
            )));
        }
        let pick = |a: Option<f64>, b: Option<f64>, what: &str| match (a, b) {
            (Some(_), Some(_)) => Err(Error::Pareto(format!("{}: two {what} values", self.model))),
            (x, y) => Ok(x.or(y)),
        };
        Ok(MetricReport {
            uniqueness: pick(self.uniqueness, other.uniqueness, "uniqueness")?,
            novelty: pick(self.novelty, other.novelty, "novelty")?,
            m_train: self.m_train.or(other.m_train),
            ..self.clone()
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<MetricReport> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Merges reports that share model, distance and screening.
pub(crate) fn merge_by_model(reports: &[MetricReport]) -> Result<Vec<MetricReport>> {
    let mut out: Vec<MetricReport> = Vec::new();
    for r in reports {
        match out
            .iter_mut()
            .find(|o| o.model == r.model && o.distance == r.distance && o.screen == r.screen)
        {
            Some(o) => *o = o.merge(r)?,
            None => out.push(r.clone()),
        }
    }
    Ok(out)
}

/// Model-comparison table: one column per model, rows `U <kind>`,
/// `N <kind>` and `pareto <kind>` (1 = on the frontier) per distance kind.
/// Values are raw; the `scale` column carries the presentation scale.
pub fn comparison_table_csv(reports: &[MetricReport]) -> Result<String> {
    let merged = merge_by_model(reports)?;
    let mut models: Vec<&str> = Vec::new();
    let mut kinds: Vec<DistanceKind> = Vec::new();
    for r in &merged {
        if !models.contains(&r.model.as_str()) {
            models.push(&r.model);
        }
        if !kinds.contains(&r.distance) {
            kinds.push(r.distance);
        }
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
    let mut header = vec!["metric".to_string(), "scale".to_string()];
    header.extend(models.iter().map(|m| m.to_string()));
    w.write_record(&header).map_err(csv_err)?;
    for kind in kinds {
        let group: Vec<&MetricReport> = merged.iter().filter(|r| r.distance == kind).collect();
        let cell = |model: &str, f: &dyn Fn(&MetricReport) -> Option<f64>| {
            group.iter().find(|r| r.model == model).and_then(|r| f(r)).map(|v| v.to_string()).unwrap_or_default()
        };
        for (label, f) in [
            ("U", &(|r: &MetricReport| r.uniqueness) as &dyn Fn(&MetricReport) -> Option<f64>),
            ("N", &|r: &MetricReport| r.novelty),
        ] {
            let mut row = vec![format!("{label} {}", kind.name()), kind.presentation_scale().to_string()];
            row.extend(models.iter().map(|m| cell(m, f)));
            w.write_record(&row).map_err(csv_err)?;
        }
        let complete: Vec<MetricReport> = group.iter().map(|r| (*r).clone()).collect();
        if let Ok(front) = pareto_front(&complete) {
            let mut row = vec![format!("pareto {}", kind.name()), String::new()];
            row.extend(models.iter().map(|m| {
                if !group.iter().any(|r| r.model == *m) {
                    String::new()
                } else if front.iter().any(|f| f == m) {
                    "1".into()
                } else {
                    "0".into()
                }
            }));
            w.write_record(&row).map_err(csv_err)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
