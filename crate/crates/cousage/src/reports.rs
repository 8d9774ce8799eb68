//! CSV reports with fixed file names and column orders.
//!
//! | file              | columns |
//! |-------------------|---------|
//! | `cv_runs.csv`     | run, training_clients, validation_clients, pattern_count, eligible_count, puc_training_avg, puc_training_max, puc_training_stddev, puc_validation_avg, puc_validation_max, puc_validation_stddev, avg_consistency, precision |
//! | `cv_summary.csv`  | metric, value |
//! | `cv_patterns.csv` | run, pattern, size, members, puc_training, puc_validation, consistency, eligible, informative |
//! | `sweep.csv`       | max_epsilon, library_count, pattern_count, noise_count, avg_puc, avg_pattern_size, avg_clients_per_pattern, and wall_time_secs when timing is requested |
//! | `ranking.csv`     | k, recall; a final `mrr,<value>` line |
//! | `rules.csv`       | antecedent, consequent, support, confidence |
//!
//! Library sets inside a cell are joined with `;`. Undefined values are
//! empty cells. Numbers use the shortest representation that reads back
//! exactly.

use std::fs;
use std::path::{Path, PathBuf};

use cousage_core::baseline::AssociationRule;
use cousage_core::evaluation::{CvReport, SweepReport, SweepRow};
use cousage_core::recommend::RankingEval;
use cousage_core::LibraryId;

use crate::error::{Error, Result};

pub const CV_RUNS_FILE: &str = "cv_runs.csv";
pub const CV_SUMMARY_FILE: &str = "cv_summary.csv";
pub const CV_PATTERNS_FILE: &str = "cv_patterns.csv";
pub const SWEEP_FILE: &str = "sweep.csv";
pub const RANKING_FILE: &str = "ranking.csv";
pub const RULES_FILE: &str = "rules.csv";

pub const SET_SEPARATOR: char = ';';

fn num(x: f64) -> String {
    format!("{x}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn join_libs(libs: &[LibraryId]) -> String {
    libs.iter()
        .map(LibraryId::as_str)
        .collect::<Vec<_>>()
        .join(&SET_SEPARATOR.to_string())
}

fn to_csv<I>(header: &[&str], rows: I) -> String
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .flexible(true)
        .from_writer(Vec::new());
    w.write_record(header).expect("write to memory");
    for row in rows {
        w.write_record(&row).expect("write to memory");
    }
    String::from_utf8(w.into_inner().expect("flush to memory")).expect("utf-8 cells")
}

pub fn cv_runs_csv(cv: &CvReport) -> String {
    let header = [
        "run",
        "training_clients",
        "validation_clients",
        "pattern_count",
        "eligible_count",
        "puc_training_avg",
        "puc_training_max",
        "puc_training_stddev",
        "puc_validation_avg",
        "puc_validation_max",
        "puc_validation_stddev",
        "avg_consistency",
        "precision",
    ];
    to_csv(
        &header,
        cv.runs.iter().map(|r| {
            vec![
                r.fold.to_string(),
                r.training_clients.to_string(),
                r.validation_clients.to_string(),
                r.pattern_count.to_string(),
                r.eligible_count.to_string(),
                opt(r.training.map(|s| s.avg)),
                opt(r.training.map(|s| s.max)),
                opt(r.training.map(|s| s.stddev)),
                opt(r.validation.map(|s| s.avg)),
                opt(r.validation.map(|s| s.max)),
                opt(r.validation.map(|s| s.stddev)),
                opt(r.avg_consistency),
                opt(r.precision),
            ]
        }),
    )
}

pub fn cv_summary_csv(cv: &CvReport) -> String {
    let a = &cv.aggregate;
    let skipped = cv
        .skipped
        .iter()
        .map(usize::to_string)
        .collect::<Vec<_>>()
        .join(";");
    let rows = [
        ("k", cv.k.to_string()),
        ("seed", cv.seed.to_string()),
        ("runs", cv.runs.len().to_string()),
        ("skipped_runs", skipped),
        ("avg_eligible_count", num(a.avg_eligible_count)),
        ("avg_puc_training", opt(a.avg_puc_training)),
        ("avg_puc_validation", opt(a.avg_puc_validation)),
        ("avg_max_puc_training", opt(a.avg_max_puc_training)),
        ("avg_max_puc_validation", opt(a.avg_max_puc_validation)),
        ("avg_stddev_puc_training", opt(a.avg_stddev_puc_training)),
        (
            "avg_stddev_puc_validation",
            opt(a.avg_stddev_puc_validation),
        ),
        ("avg_consistency", opt(a.avg_consistency)),
        ("avg_precision", opt(a.avg_precision)),
    ];
    to_csv(
        &["metric", "value"],
        rows.into_iter().map(|(k, v)| vec![k.to_owned(), v]),
    )
}

pub fn cv_patterns_csv(cv: &CvReport) -> String {
    let header = [
        "run",
        "pattern",
        "size",
        "members",
        "puc_training",
        "puc_validation",
        "consistency",
        "eligible",
        "informative",
    ];
    to_csv(
        &header,
        cv.runs.iter().flat_map(|r| {
            r.patterns.iter().enumerate().map(move |(i, p)| {
                vec![
                    r.fold.to_string(),
                    (i + 1).to_string(),
                    p.members.len().to_string(),
                    join_libs(&p.members),
                    num(p.metrics.puc_training),
                    opt(p.metrics.puc_validation),
                    opt(p.metrics.consistency),
                    p.metrics.eligible.to_string(),
                    p.metrics.informative.to_string(),
                ]
            })
        }),
    )
}

const SWEEP_HEADER: [&str; 8] = [
    "max_epsilon",
    "library_count",
    "pattern_count",
    "noise_count",
    "avg_puc",
    "avg_pattern_size",
    "avg_clients_per_pattern",
    "wall_time_secs",
];

/// Wall times are hardware dependent, so they are only written on request.
pub fn sweep_csv(sweep: &SweepReport, with_timing: bool) -> String {
    let cols = if with_timing { 8 } else { 7 };
    to_csv(
        &SWEEP_HEADER[..cols],
        sweep.rows.iter().map(|r| {
            let mut row = vec![
                num(r.max_epsilon),
                r.library_count.to_string(),
                r.pattern_count.to_string(),
                r.noise_count.to_string(),
                opt(r.avg_puc),
                opt(r.avg_pattern_size),
                opt(r.avg_clients_per_pattern),
                num(r.wall_time_secs),
            ];
            row.truncate(cols);
            row
        }),
    )
}

pub fn ranking_csv(r: &RankingEval) -> String {
    let rows = r
        .recall_at_k
        .iter()
        .map(|&(k, recall)| vec![k.to_string(), num(recall)])
        .chain(std::iter::once(vec!["mrr".to_owned(), num(r.mrr)]));
    to_csv(&["k", "recall"], rows)
}

pub fn rules_csv(rules: &[AssociationRule]) -> String {
    to_csv(
        &["antecedent", "consequent", "support", "confidence"],
        rules.iter().map(|r| {
            vec![
                join_libs(&r.antecedent),
                join_libs(&r.consequent),
                num(r.support),
                num(r.confidence),
            ]
        }),
    )
}

fn write(dir: &Path, name: &str, text: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Writes whichever reports are given into `dir` (created if missing) and
/// returns the paths written.
pub fn write_reports(
    dir: &Path,
    cv: Option<&CvReport>,
    sweep: Option<&SweepReport>,
    ranking: Option<&RankingEval>,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut out = Vec::new();
    if let Some(cv) = cv {
        out.push(write(dir, CV_RUNS_FILE, &cv_runs_csv(cv))?);
        out.push(write(dir, CV_SUMMARY_FILE, &cv_summary_csv(cv))?);
        out.push(write(dir, CV_PATTERNS_FILE, &cv_patterns_csv(cv))?);
    }
    if let Some(sweep) = sweep {
        out.push(write(dir, SWEEP_FILE, &sweep_csv(sweep, false))?);
    }
    if let Some(r) = ranking {
        out.push(write(dir, RANKING_FILE, &ranking_csv(r))?);
    }
    Ok(out)
}

fn parse_f64(cell: &str, path: &Path) -> Result<Option<f64>> {
    if cell.is_empty() {
        return Ok(None);
    }
    cell.parse()
        .map(Some)
        .map_err(|_| Error::format(path, format!("not a number: {cell:?}")))
}

fn parse_usize(cell: &str, path: &Path) -> Result<usize> {
    cell.parse()
        .map_err(|_| Error::format(path, format!("not a count: {cell:?}")))
}

fn records(text: &str, path: &Path) -> Result<Vec<csv::StringRecord>> {
    csv::ReaderBuilder::new()
        .flexible(true)
        .from_reader(text.as_bytes())
        .records()
        .collect::<Result<_, _>>()
        .map_err(|e| Error::format(path, e.to_string()))
}

/// Reads a sweep report written by [`sweep_csv`]; missing timings read as 0.
pub fn read_sweep_csv(text: &str, path: &Path) -> Result<SweepReport> {
    let rows = records(text, path)?
        .iter()
        .map(|r| {
            let need = |i: usize| {
                r.get(i)
                    .ok_or_else(|| Error::format(path, "short sweep row"))
            };
            Ok(SweepRow {
                max_epsilon: parse_f64(need(0)?, path)?.unwrap_or_default(),
                library_count: parse_usize(need(1)?, path)?,
                pattern_count: parse_usize(need(2)?, path)?,
                noise_count: parse_usize(need(3)?, path)?,
                avg_puc: parse_f64(need(4)?, path)?,
                avg_pattern_size: parse_f64(need(5)?, path)?,
                avg_clients_per_pattern: parse_f64(need(6)?, path)?,
                wall_time_secs: r
                    .get(7)
                    .map(|c| parse_f64(c, path))
                    .transpose()?
                    .flatten()
                    .unwrap_or_default(),
            })
        })
        .collect::<Result<_>>()?;
    Ok(SweepReport { rows })
}

/// Reads `(k, recall)` pairs and the MRR from a ranking report.
pub fn read_ranking_csv(text: &str, path: &Path) -> Result<(Vec<(usize, f64)>, f64)> {
    let mut recall = Vec::new();
    let mut mrr = None;
    for r in records(text, path)? {
        let value = parse_f64(&r[1], path)?.unwrap_or_default();
        if &r[0] == "mrr" {
            mrr = Some(value);
        } else {
            recall.push((parse_usize(&r[0], path)?, value));
        }
    }
    let mrr = mrr.ok_or_else(|| Error::format(path, "missing mrr line"))?;
    Ok((recall, mrr))
}
