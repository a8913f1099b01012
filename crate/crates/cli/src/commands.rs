use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{info, warn};
use serde::Serialize;
use xtalmet::cache;
use xtalmet::composition::magpie::PropertyTable;
use xtalmet::matcher::MatchTolerances;
use xtalmet::metrics::{
    self, comparison_table_csv, continuous_novelty_embedded, continuous_uniqueness_embedded, pairwise_matrix,
    pareto_front, screen, shuffle_audit, Denominator, Distance, DistanceKind, Embeddings, MetricReport, Score,
    ScreenPolicy,
};
use xtalmet::structures::io::read_jsonl_file;
use xtalmet::structures::SampleSet;

use crate::{
    DenominatorArg, DistanceArgs, DistanceName, FingerprintArgs, Format, MetricArgs, NoveltyArgs, OutputArgs,
    PairwiseArgs, ParetoArgs, ScreenArgs, ShuffleArgs,
};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Lib(xtalmet::Error),
    Internal(String),
}

impl CliError {
    /// 2 for bad usage or input, 1 for internal failures.
    pub fn exit_code(&self) -> u8 {
        use xtalmet::Error as E;
        match self {
            CliError::Usage(_) => 2,
            CliError::Internal(_) => 1,
            CliError::Lib(E::NiggliNotConverged(_) | E::NotOrthogonal(_) | E::ChainNotFound(_)) => 1,
            CliError::Lib(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Internal(m) => f.write_str(m),
            CliError::Lib(e) => write!(f, "{e}"),
        }
    }
}

impl From<xtalmet::Error> for CliError {
    fn from(e: xtalmet::Error) -> Self {
        CliError::Lib(e)
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn load_samples(path: &Path) -> Result<SampleSet> {
    read_jsonl_file(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn load_train(path: &Path) -> Result<SampleSet> {
    if path.as_os_str().is_empty() {
        return Err(CliError::Lib(xtalmet::Error::EmptyTrain));
    }
    match read_jsonl_file(path) {
        Err(xtalmet::Error::EmptySampleSet) => Err(CliError::Lib(xtalmet::Error::EmptyTrain)),
        other => other.map_err(|e| CliError::Usage(format!("{}: {e}", path.display()))),
    }
}

fn load_table(args: &DistanceArgs) -> Result<Option<PropertyTable>> {
    match &args.property_table {
        None => Ok(None),
        Some(p) if args.distance == DistanceName::Magpie => PropertyTable::from_path(p)
            .map(Some)
            .map_err(|e| CliError::Usage(format!("{}: {e}", p.display()))),
        Some(_) => {
            warn!("--property-table only affects the magpie distance; ignored");
            Ok(None)
        }
    }
}

fn kind(args: &DistanceArgs) -> Result<DistanceKind> {
    Ok(match args.distance {
        DistanceName::Smat => {
            let tol = MatchTolerances { ltol: args.ltol, stol: args.stol, angle_tol: args.angle_tol };
            tol.validate()?;
            DistanceKind::Smat(tol)
        }
        DistanceName::Comp => DistanceKind::Comp,
        DistanceName::Wyckoff => DistanceKind::Wyckoff,
        DistanceName::Magpie => DistanceKind::Magpie,
        DistanceName::Amd => {
            if args.k == 0 {
                return Err(CliError::Usage("--k must be at least 1".into()));
            }
            DistanceKind::Amd { k: args.k }
        }
    })
}

fn distance<'t>(kind: DistanceKind, table: &'t Option<PropertyTable>) -> Distance<'t> {
    match table {
        Some(t) => Distance::with_table(kind, t),
        None => Distance::new(kind),
    }
}

fn policy(args: &ScreenArgs) -> Result<Option<ScreenPolicy>> {
    let denominator = match args.denominator {
        DenominatorArg::Full => Denominator::Full,
        DenominatorArg::Filtered => Denominator::Filtered,
    };
    match args.filter_ehull {
        None => Ok(None),
        Some(e_hull_max) => {
            let p = ScreenPolicy { e_hull_max, denominator };
            p.validate()?;
            Ok(Some(p))
        }
    }
}

fn emit(out: &OutputArgs, text: &str) -> Result<()> {
    match &out.out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Internal(format!("writing {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Internal(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn csv_string(records: &[Vec<String>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in records {
        w.write_record(r).map_err(|e| CliError::Internal(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Internal(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Internal(e.to_string()))
}

fn cache_file_name(samples: &Path, kind: DistanceKind) -> String {
    let stem = samples.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "samples".into());
    match kind {
        DistanceKind::Amd { k } => format!("{stem}.amd-k{k}.csv"),
        other => format!("{stem}.{}.csv", other.name()),
    }
}

/// Where the embedding cache lives, if anywhere: an explicit `--cache`
/// path, else a file named after the input inside the cache directory.
fn cache_location(explicit: &Option<PathBuf>, dir: &Option<PathBuf>, input: &Path, kind: DistanceKind) -> Option<(PathBuf, bool)> {
    match (explicit, dir) {
        (Some(p), _) => Some((p.clone(), true)),
        (None, Some(d)) => Some((d.join(cache_file_name(input, kind)), false)),
        (None, None) => None,
    }
}

fn write_cache(path: &Path, emb: &Embeddings, samples: &SampleSet, d: &Distance) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| CliError::Internal(format!("creating {}: {e}", parent.display())))?;
    }
    cache::write_cache(path, emb, samples, d).map_err(|e| CliError::Internal(format!("writing {}: {e}", path.display())))
}

/// Embeddings for every sample, from the cache when it matches. An explicit
/// cache that does not match the request is an error; a stale file in the
/// cache directory is recomputed and replaced.
fn embeddings(args: &MetricArgs, samples: &SampleSet, d: &Distance) -> Result<Option<Embeddings>> {
    let Some((path, explicit)) = cache_location(&args.cache, &args.cache_dir, &args.input, d.kind) else {
        return Ok(None);
    };
    if path.exists() {
        match cache::load_checked(&path, samples, d) {
            Ok(emb) => {
                info!("using embedding cache {}", path.display());
                return Ok(Some(emb));
            }
            Err(e) if explicit => return Err(CliError::Lib(e)),
            Err(e) => warn!("ignoring stale cache {}: {e}", path.display()),
        }
    }
    let start = Instant::now();
    let emb = Embeddings::compute(&samples.crystals, d)?;
    info!("{} {}: embedding stage {:.3} s", samples.label, d.kind, start.elapsed().as_secs_f64());
    write_cache(&path, &emb, samples, d)?;
    info!("wrote embedding cache {}", path.display());
    Ok(Some(emb))
}

fn log_pairwise(samples: &SampleSet, d: &Distance, s: &Score) {
    info!("{} {}: pairwise stage {:.3} s", samples.label, d.kind, s.timings.pairwise.as_secs_f64());
}

fn model_name(args: &MetricArgs, samples: &SampleSet) -> String {
    args.model.clone().unwrap_or_else(|| samples.label.clone())
}

fn emit_report(out: &OutputArgs, report: &MetricReport) -> Result<()> {
    let text = match out.format {
        Format::Json => to_json(report)?,
        Format::Csv => comparison_table_csv(std::slice::from_ref(report))?,
    };
    emit(out, &text)
}

pub fn fingerprint(args: &FingerprintArgs) -> Result<()> {
    let kind = kind(&args.distance)?;
    if kind.is_discrete() {
        return Err(CliError::Usage(format!("fingerprint needs a continuous distance (amd or magpie), got {kind}")));
    }
    let table = load_table(&args.distance)?;
    let d = distance(kind, &table);
    let samples = load_samples(&args.input)?;
    let (path, _) = cache_location(&args.cache, &args.cache_dir, &args.input, kind)
        .ok_or_else(|| CliError::Usage("no cache location: pass --cache or set XTALMET_CACHE_DIR".into()))?;
    let start = Instant::now();
    let emb = Embeddings::compute(&samples.crystals, &d)?;
    info!("{} {}: embedding stage {:.3} s", samples.label, kind, start.elapsed().as_secs_f64());
    write_cache(&path, &emb, &samples, &d)?;
    info!("wrote {} x {} embeddings to {}", emb.len(), emb.rows.first().map_or(0, Vec::len), path.display());
    Ok(())
}

pub fn uniqueness(args: &MetricArgs) -> Result<()> {
    let kind = kind(&args.distance)?;
    let table = load_table(&args.distance)?;
    let d = distance(kind, &table);
    let policy = policy(&args.screen)?;
    let samples = load_samples(&args.input)?;
    let score = match (kind.is_discrete(), embeddings(args, &samples, &d)?) {
        (false, Some(emb)) => {
            let screened = screen(&samples.crystals, policy.as_ref())?;
            let s = continuous_uniqueness_embedded(&emb, &screened, &d)?;
            log_pairwise(&samples, &d, &s);
            s
        }
        _ => metrics::uniqueness(&samples, &d, policy.as_ref())?,
    };
    let report = MetricReport::from_uniqueness(&model_name(args, &samples), kind, policy, &score);
    emit_report(&args.output, &report)
}

pub fn novelty(args: &NoveltyArgs) -> Result<()> {
    let m = &args.metric;
    let kind = kind(&m.distance)?;
    let table = load_table(&m.distance)?;
    let d = distance(kind, &table);
    let policy = policy(&m.screen)?;
    let samples = load_samples(&m.input)?;
    let train = load_train(&args.train)?;
    let score = match (kind.is_discrete(), embeddings(m, &samples, &d)?) {
        (false, Some(emb)) => {
            let screened = screen(&samples.crystals, policy.as_ref())?;
            let train_emb = Embeddings::compute(&train.crystals, &d)?;
            let s = continuous_novelty_embedded(&emb, &train_emb, &screened, &d)?;
            log_pairwise(&samples, &d, &s);
            s
        }
        _ => metrics::novelty(&samples, &train, &d, policy.as_ref())?,
    };
    let report = MetricReport::from_novelty(&model_name(m, &samples), kind, policy, &score, train.len());
    emit_report(&m.output, &report)
}

#[derive(Serialize)]
struct PairwiseOutput<'a> {
    distance: DistanceKind,
    ids: Vec<&'a str>,
    matrix: Vec<Vec<f64>>,
}

pub fn pairwise(args: &PairwiseArgs) -> Result<()> {
    let kind = kind(&args.distance)?;
    let table = load_table(&args.distance)?;
    let d = distance(kind, &table);
    let samples = load_samples(&args.input)?;
    let start = Instant::now();
    let matrix = pairwise_matrix(&samples.crystals, &d)?;
    info!("{} {}: {} x {} matrix in {:.3} s", samples.label, kind, matrix.len(), matrix.len(), start.elapsed().as_secs_f64());
    let ids: Vec<&str> = samples.crystals.iter().map(|c| c.id.as_str()).collect();
    let text = match args.output.format {
        Format::Json => to_json(&PairwiseOutput { distance: kind, ids, matrix })?,
        Format::Csv => {
            let mut records = vec![std::iter::once("id".to_string()).chain(ids.iter().map(|s| s.to_string())).collect()];
            for (id, row) in ids.iter().zip(&matrix) {
                records.push(std::iter::once(id.to_string()).chain(row.iter().map(f64::to_string)).collect());
            }
            csv_string(&records)?
        }
    };
    emit(&args.output, &text)
}

#[derive(Serialize)]
struct FrontierEntry {
    model: String,
    uniqueness: f64,
    novelty: f64,
    frontier: bool,
}

/// Combines per-model uniqueness and novelty reports that share distance
/// and screening, keeping first-seen order.
fn merge_reports(reports: Vec<MetricReport>) -> Result<Vec<MetricReport>> {
    let mut out: Vec<MetricReport> = Vec::new();
    for r in reports {
        match out.iter_mut().find(|o| o.model == r.model && o.distance == r.distance && o.screen == r.screen) {
            Some(o) => *o = o.merge(&r)?,
            None => out.push(r),
        }
    }
    Ok(out)
}

pub fn pareto(args: &ParetoArgs) -> Result<()> {
    let mut reports = Vec::with_capacity(args.inputs.len());
    for path in &args.inputs {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        let report = MetricReport::from_json(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        reports.push(report);
    }
    if args.table {
        return emit(&args.output, &comparison_table_csv(&reports)?);
    }
    let merged = merge_reports(reports)?;
    let front = pareto_front(&merged)?;
    let entries: Vec<FrontierEntry> = merged
        .iter()
        .map(|r| FrontierEntry {
            model: r.model.clone(),
            uniqueness: r.uniqueness.unwrap_or(f64::NAN),
            novelty: r.novelty.unwrap_or(f64::NAN),
            frontier: front.contains(&r.model),
        })
        .collect();
    let text = match args.output.format {
        Format::Json => to_json(&entries)?,
        Format::Csv => {
            let mut records = vec![vec!["model".into(), "uniqueness".into(), "novelty".into(), "frontier".into()]];
            for e in &entries {
                records.push(vec![e.model.clone(), e.uniqueness.to_string(), e.novelty.to_string(), e.frontier.to_string()]);
            }
            csv_string(&records)?
        }
    };
    emit(&args.output, &text)
}

pub fn shuffle_check(args: &ShuffleArgs) -> Result<()> {
    let kind = kind(&args.distance)?;
    if !kind.is_discrete() {
        return Err(CliError::Usage(format!("shuffle-check needs a discrete distance, got {kind}")));
    }
    let d = Distance::new(kind);
    let policy = policy(&args.screen)?;
    let samples = load_samples(&args.input)?;
    let seeds: Vec<u64> = (0..args.seed_count).collect();
    let audit = shuffle_audit(&samples, &d, &seeds, policy.as_ref())?;
    let text = match args.output.format {
        Format::Json => to_json(&audit)?,
        Format::Csv => {
            let mut records = vec![vec!["shuffle".to_string(), samples.label.clone()]];
            for (seed, v) in audit.seeds.iter().zip(&audit.values) {
                records.push(vec![format!("seed {seed}"), v.to_string()]);
            }
            records.push(vec!["mean".into(), audit.mean.to_string()]);
            records.push(vec!["std".into(), audit.std.to_string()]);
            csv_string(&records)?
        }
    };
    emit(&args.output, &text)
}
