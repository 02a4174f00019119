//! CSV/JSON readers and writers for scores, rankings, class matrices and
//! dispersion reports. JSON objects use sorted keys.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dispersion::{ClassProfile, DispersionReport};
use crate::error::{Error, Result};
use crate::model::{Level, QuintileClass};
use crate::productivity::{ScoreSet, OVERALL_SCOPE};
use crate::ranking::{rank_entries, RankingList};
use crate::Scalar;

pub const NA: &str = "N.A.";

fn f64_of<T: Scalar>(v: T) -> f64 {
    v.to_f64().expect("finite scalar")
}

fn csv_err(what: &str) -> impl Fn(csv::Error) -> Error + '_ {
    move |e| Error::parse(what, e)
}

/// Writer that emits `header` even when no rows follow.
fn headed_writer<W: Write>(out: W, header: &[&str]) -> Result<csv::Writer<W>> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    w.write_record(header)
        .map_err(|e| Error::parse("csv header", e))?;
    Ok(w)
}

#[derive(Debug, Serialize, Deserialize)]
struct ScoreRow {
    level: String,
    university_id: String,
    scope_code: String,
    fss: f64,
    salary_mass: f64,
}

pub fn write_scores_csv<T: Scalar, W: Write>(scores: &ScoreSet<T>, out: W) -> Result<()> {
    let mut w = headed_writer(
        out,
        &["level", "university_id", "scope_code", "fss", "salary_mass"],
    )?;
    for row in score_rows(scores) {
        w.serialize(row).map_err(csv_err("scores"))?;
    }
    w.flush().map_err(|e| Error::parse("scores", e))
}

#[derive(Debug, Serialize, Deserialize)]
struct RankingRow {
    level: Level,
    scope_code: String,
    university_id: String,
    fss: f64,
    rank: usize,
    percentile: f64,
    class: QuintileClass,
}

pub fn write_rankings_csv<T: Scalar, W: Write>(lists: &[RankingList<T>], out: W) -> Result<()> {
    let mut w = headed_writer(
        out,
        &[
            "level",
            "scope_code",
            "university_id",
            "fss",
            "rank",
            "percentile",
            "class",
        ],
    )?;
    for list in lists {
        for e in list.entries() {
            w.serialize(RankingRow {
                level: list.level,
                scope_code: list.scope_code.clone(),
                university_id: e.university_id.clone(),
                fss: f64_of(e.fss),
                rank: e.rank,
                percentile: f64_of(e.percentile),
                class: e.class,
            })
            .map_err(csv_err("rankings"))?;
        }
    }
    w.flush().map_err(|e| Error::parse("rankings", e))
}

/// Reads a rankings CSV back. Lists are re-ranked from their FSS values and
/// must reproduce the stored ranks and classes.
pub fn read_rankings_csv<R: Read>(input: R) -> Result<Vec<RankingList<f64>>> {
    let mut groups: BTreeMap<(Level, String), Vec<RankingRow>> = BTreeMap::new();
    for row in csv::Reader::from_reader(input).deserialize() {
        let row: RankingRow = row.map_err(csv_err("rankings"))?;
        groups
            .entry((row.level, row.scope_code.clone()))
            .or_default()
            .push(row);
    }
    let mut lists = Vec::new();
    for ((level, scope), rows) in groups {
        let list = rank_entries(
            level,
            &scope,
            rows.iter()
                .map(|r| (r.university_id.clone(), r.fss))
                .collect(),
        )?;
        for r in &rows {
            let e = list.get(&r.university_id).expect("just ranked");
            if e.rank != r.rank || e.class != r.class {
                return Err(Error::parse(
                    "rankings",
                    format!(
                        "{level}/{scope}/{}: stored rank/class disagree with its FSS",
                        r.university_id
                    ),
                ));
            }
        }
        lists.push(list);
    }
    Ok(lists)
}

fn score_rows<T: Scalar>(scores: &ScoreSet<T>) -> Vec<ScoreRow> {
    scores
        .iter()
        .map(|(key, s)| ScoreRow {
            level: scores.level().to_string(),
            university_id: key.university_id.clone(),
            scope_code: key.scope_code.clone(),
            fss: f64_of(s.fss),
            salary_mass: f64_of(s.salary_mass),
        })
        .collect()
}

/// Same rows as [`write_scores_csv`], as a JSON array.
pub fn scores_json<T: Scalar>(scores: &ScoreSet<T>) -> Result<String> {
    serde_json::to_string_pretty(&score_rows(scores)).map_err(|e| Error::parse("scores", e))
}

/// Same rows as [`write_rankings_csv`], as a JSON array.
pub fn rankings_json<T: Scalar>(lists: &[RankingList<T>]) -> Result<String> {
    let rows: Vec<RankingRow> = lists
        .iter()
        .flat_map(|list| {
            list.entries().iter().map(|e| RankingRow {
                level: list.level,
                scope_code: list.scope_code.clone(),
                university_id: e.university_id.clone(),
                fss: f64_of(e.fss),
                rank: e.rank,
                percentile: f64_of(e.percentile),
                class: e.class,
            })
        })
        .collect();
    serde_json::to_string_pretty(&rows).map_err(|e| Error::parse("rankings", e))
}

#[derive(Debug, Serialize, Deserialize)]
struct ClassRow {
    university_id: String,
    scope_code: String,
    class: QuintileClass,
}

#[derive(Debug, Serialize, Deserialize)]
struct StaffRow {
    university_id: String,
    staff: u64,
}

pub fn read_staff_csv<R: Read>(input: R) -> Result<BTreeMap<String, u64>> {
    let mut out = BTreeMap::new();
    for row in csv::Reader::from_reader(input).deserialize() {
        let row: StaffRow = row.map_err(csv_err("staff"))?;
        if out.insert(row.university_id.clone(), row.staff).is_some() {
            return Err(Error::parse(
                "staff",
                format!("duplicate university '{}'", row.university_id),
            ));
        }
    }
    Ok(out)
}

/// Reads `university_id,scope_code,class` rows; the `ALL` scope row carries
/// the university's overall class, all others are sub-scope classes.
pub fn read_class_matrix<R: Read>(
    input: R,
    staff: Option<&BTreeMap<String, u64>>,
) -> Result<Vec<ClassProfile>> {
    let mut overall: BTreeMap<String, QuintileClass> = BTreeMap::new();
    let mut subs: BTreeMap<String, BTreeMap<String, QuintileClass>> = BTreeMap::new();
    for row in csv::Reader::from_reader(input).deserialize() {
        let row: ClassRow = row.map_err(csv_err("class matrix"))?;
        let dup = if row.scope_code == OVERALL_SCOPE {
            overall
                .insert(row.university_id.clone(), row.class)
                .is_some()
        } else {
            subs.entry(row.university_id.clone())
                .or_default()
                .insert(row.scope_code.clone(), row.class)
                .is_some()
        };
        if dup {
            return Err(Error::parse(
                "class matrix",
                format!("duplicate ({}, {})", row.university_id, row.scope_code),
            ));
        }
    }
    if let Some(u) = subs.keys().find(|u| !overall.contains_key(*u)) {
        return Err(Error::parse(
            "class matrix",
            format!("'{u}' has no {OVERALL_SCOPE} row"),
        ));
    }
    Ok(overall
        .into_iter()
        .map(|(u, class)| ClassProfile {
            sub_classes: subs.remove(&u).unwrap_or_default(),
            staff: staff.and_then(|s| s.get(&u).copied()),
            overall_class: class,
            university_id: u,
        })
        .collect())
}

pub fn write_class_matrix<W: Write>(profiles: &[ClassProfile], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for p in profiles {
        let rows = std::iter::once((OVERALL_SCOPE, p.overall_class))
            .chain(p.sub_classes.iter().map(|(s, c)| (s.as_str(), *c)));
        for (scope, class) in rows {
            w.serialize(ClassRow {
                university_id: p.university_id.clone(),
                scope_code: scope.to_string(),
                class,
            })
            .map_err(csv_err("class matrix"))?;
        }
    }
    w.flush().map_err(|e| Error::parse("class matrix", e))
}

fn opt<T: Scalar>(v: Option<T>) -> String {
    v.map_or_else(|| NA.to_string(), |v| format!("{}", f64_of(v)))
}

/// `university_id,overall_class,n_active,staff,delta,r`, N.A. where undefined.
pub fn write_dispersion_csv<T: Scalar, W: Write>(
    report: &DispersionReport<T>,
    out: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let err = csv_err("dispersion");
    w.write_record([
        "university_id",
        "overall_class",
        "n_active",
        "staff",
        "delta",
        "r",
    ])
    .map_err(&err)?;
    for r in &report.per_university {
        w.write_record([
            r.university_id.clone(),
            r.overall_class.to_string(),
            r.n_active.to_string(),
            r.staff.map_or_else(|| NA.to_string(), |s| s.to_string()),
            opt(r.delta),
            opt(r.r),
        ])
        .map_err(&err)?;
    }
    w.flush().map_err(|e| Error::parse("dispersion", e))
}

#[derive(Debug, Serialize)]
struct BandJson {
    lower: f64,
    upper: f64,
    count: usize,
    share: f64,
}

#[derive(Debug, Serialize)]
struct ConcordanceJson {
    mode: crate::dispersion::ConcordanceMode,
    /// Overall class letter → (n, [A..E] percentages or null)
    rows: BTreeMap<String, ConcordanceRowJson>,
}

#[derive(Debug, Serialize)]
struct ConcordanceRowJson {
    n_universities: usize,
    shares: Option<[f64; 5]>,
}

#[derive(Debug, Serialize)]
struct SummaryJson {
    n_profiles: usize,
    n_defined: usize,
    max_delta: Option<f64>,
    median_r: Option<f64>,
    histogram: Vec<BandJson>,
    correlations: BTreeMap<String, Option<f64>>,
    concordance: ConcordanceJson,
    warnings: Vec<String>,
}

pub fn dispersion_summary_json<T: Scalar>(report: &DispersionReport<T>) -> Result<String> {
    let summary = SummaryJson {
        n_profiles: report.per_university.len(),
        n_defined: report.stats.as_ref().map_or(0, |s| s.n),
        max_delta: report.max_delta.map(f64_of),
        median_r: report.stats.as_ref().map(|s| f64_of(s.median)),
        histogram: report
            .stats
            .iter()
            .flat_map(|s| &s.bands)
            .map(|b| BandJson {
                lower: f64_of(b.lower),
                upper: f64_of(b.upper),
                count: b.count,
                share: f64_of(b.share),
            })
            .collect(),
        correlations: report
            .correlations
            .iter()
            .map(|(k, v)| (k.clone(), v.map(f64_of)))
            .collect(),
        concordance: ConcordanceJson {
            mode: report.concordance.mode,
            rows: report
                .concordance
                .rows
                .iter()
                .map(|r| {
                    (
                        r.overall_class.to_string(),
                        ConcordanceRowJson {
                            n_universities: r.n_universities,
                            shares: r.shares.map(|s| s.map(f64_of)),
                        },
                    )
                })
                .collect(),
        },
        warnings: report.warnings.clone(),
    };
    serde_json::to_string_pretty(&summary).map_err(|e| Error::parse("dispersion summary", e))
}

/// Writes `contents` to `path`, creating parent directories.
pub fn write_file(path: impl AsRef<Path>, contents: &[u8]) -> Result<()> {
    let path = path.as_ref();
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}
