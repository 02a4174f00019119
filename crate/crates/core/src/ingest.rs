//! Loading and validating the five input tables, and the SDS inclusion rule.
//!
//! Rows are parsed as plain strings first so that every problem can be
//! reported with its file and line; a [`Dataset`] is only built when the
//! [`ValidationReport`] has no errors.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    AcademicRank, AnalysisConfig, Authorship, BylineConvention, Publication, Researcher,
    SalaryTable, Taxonomy,
};

pub const TAXONOMY_FILE: &str = "taxonomy.csv";
pub const RESEARCHERS_FILE: &str = "researchers.csv";
pub const SALARIES_FILE: &str = "salaries.csv";
pub const PUBLICATIONS_FILE: &str = "publications.csv";
pub const AUTHORSHIPS_FILE: &str = "authorships.csv";

const TAXONOMY_HEADER: &[&str] = &["sds_code", "uda_code", "byline_convention"];
const RESEARCHERS_HEADER: &[&str] = &[
    "researcher_id",
    "university_id",
    "sds_code",
    "academic_rank",
];
const SALARIES_HEADER: &[&str] = &["academic_rank", "annual_salary"];
const PUBLICATIONS_HEADER: &[&str] = &["pub_id", "year", "citation_count", "categories"];
const AUTHORSHIPS_HEADER: &[&str] = &[
    "pub_id",
    "position",
    "author_key",
    "researcher_id",
    "affiliation_university_id",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InputPaths {
    pub taxonomy: PathBuf,
    pub researchers: PathBuf,
    pub salaries: PathBuf,
    pub publications: PathBuf,
    pub authorships: PathBuf,
}

impl InputPaths {
    /// The five files under their standard names in `dir`.
    pub fn in_dir(dir: impl AsRef<Path>) -> Self {
        let dir = dir.as_ref();
        Self {
            taxonomy: dir.join(TAXONOMY_FILE),
            researchers: dir.join(RESEARCHERS_FILE),
            salaries: dir.join(SALARIES_FILE),
            publications: dir.join(PUBLICATIONS_FILE),
            authorships: dir.join(AUTHORSHIPS_FILE),
        }
    }

    pub fn all(&self) -> [&Path; 5] {
        [
            &self.taxonomy,
            &self.researchers,
            &self.salaries,
            &self.publications,
            &self.authorships,
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Issue {
    pub code: String,
    pub location: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub errors: Vec<Issue>,
    pub warnings: Vec<Issue>,
    pub counts: BTreeMap<String, u64>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.errors.is_empty()
    }

    fn error(&mut self, code: &str, location: String, message: String) {
        self.errors.push(Issue {
            code: code.into(),
            location,
            message,
        });
    }

    fn warn(&mut self, code: &str, location: String, message: String) {
        self.warnings.push(Issue {
            code: code.into(),
            location,
            message,
        });
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaxonomyRow {
    #[serde(skip)]
    pub line: u64,
    pub sds_code: String,
    pub uda_code: String,
    pub byline_convention: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResearcherRow {
    #[serde(skip)]
    pub line: u64,
    pub researcher_id: String,
    pub university_id: String,
    pub sds_code: String,
    pub academic_rank: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SalaryRow {
    #[serde(skip)]
    pub line: u64,
    pub academic_rank: String,
    pub annual_salary: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PublicationRow {
    #[serde(skip)]
    pub line: u64,
    pub pub_id: String,
    pub year: String,
    pub citation_count: String,
    /// `;`-separated subject categories.
    pub categories: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuthorshipRow {
    #[serde(skip)]
    pub line: u64,
    pub pub_id: String,
    pub position: String,
    pub author_key: String,
    pub researcher_id: String,
    pub affiliation_university_id: String,
}

/// Unvalidated contents of the five input tables.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DatasetRows {
    pub taxonomy: Vec<TaxonomyRow>,
    pub researchers: Vec<ResearcherRow>,
    pub salaries: Vec<SalaryRow>,
    pub publications: Vec<PublicationRow>,
    pub authorships: Vec<AuthorshipRow>,
}

impl DatasetRows {
    /// Parses the five CSV texts. Row-level problems land in the report.
    pub fn parse(texts: [&str; 5], report: &mut ValidationReport) -> Self {
        let [tax, res, sal, pubs, auth] = texts;
        DatasetRows {
            taxonomy: read_table(
                TAXONOMY_FILE,
                tax,
                TAXONOMY_HEADER,
                report,
                |r: &mut TaxonomyRow, l| r.line = l,
            ),
            researchers: read_table(
                RESEARCHERS_FILE,
                res,
                RESEARCHERS_HEADER,
                report,
                |r: &mut ResearcherRow, l| r.line = l,
            ),
            salaries: read_table(
                SALARIES_FILE,
                sal,
                SALARIES_HEADER,
                report,
                |r: &mut SalaryRow, l| r.line = l,
            ),
            publications: read_table(
                PUBLICATIONS_FILE,
                pubs,
                PUBLICATIONS_HEADER,
                report,
                |r: &mut PublicationRow, l| r.line = l,
            ),
            authorships: read_table(
                AUTHORSHIPS_FILE,
                auth,
                AUTHORSHIPS_HEADER,
                report,
                |r: &mut AuthorshipRow, l| r.line = l,
            ),
        }
    }

    /// Serializes all five tables, in that order, as CSV text.
    pub fn to_csv_strings(&self) -> Result<[String; 5]> {
        Ok([
            write_table(TAXONOMY_HEADER, &self.taxonomy)?,
            write_table(RESEARCHERS_HEADER, &self.researchers)?,
            write_table(SALARIES_HEADER, &self.salaries)?,
            write_table(PUBLICATIONS_HEADER, &self.publications)?,
            write_table(AUTHORSHIPS_HEADER, &self.authorships)?,
        ])
    }

    /// Writes the five standard files into `dir`, creating it if needed.
    pub fn write_dir(&self, dir: impl AsRef<Path>) -> Result<InputPaths> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let paths = InputPaths::in_dir(dir);
        for (path, text) in paths.all().into_iter().zip(self.to_csv_strings()?) {
            fs::write(path, text).map_err(|e| Error::io(path, e))?;
        }
        Ok(paths)
    }
}

fn read_table<R>(
    file: &str,
    text: &str,
    header: &[&str],
    report: &mut ValidationReport,
    set_line: fn(&mut R, u64),
) -> Vec<R>
where
    R: for<'de> Deserialize<'de>,
{
    if text.trim().is_empty() {
        return Vec::new();
    }
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    match rdr.headers() {
        Ok(h) if h.iter().eq(header.iter().copied()) => {}
        Ok(h) => {
            report.error(
                "bad_header",
                format!("{file}:1"),
                format!(
                    "expected header {:?}, found {:?}",
                    header,
                    h.iter().collect::<Vec<_>>()
                ),
            );
            return Vec::new();
        }
        Err(e) => {
            report.error("malformed_row", format!("{file}:1"), e.to_string());
            return Vec::new();
        }
    }
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                report.error("malformed_row", format!("{file}:{line}"), e.to_string());
                continue;
            }
        };
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != header.len() {
            report.error(
                "malformed_row",
                format!("{file}:{line}"),
                format!("expected {} fields, found {}", header.len(), record.len()),
            );
            continue;
        }
        match record.deserialize::<R>(None) {
            Ok(mut row) => {
                set_line(&mut row, line);
                out.push(row);
            }
            Err(e) => report.error("malformed_row", format!("{file}:{line}"), e.to_string()),
        }
    }
    out
}

fn write_table<R: Serialize>(header: &[&str], rows: &[R]) -> Result<String> {
    let mut wtr = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    wtr.write_record(header)
        .map_err(|e| Error::parse("csv output", e))?;
    for row in rows {
        wtr.serialize(row)
            .map_err(|e| Error::parse("csv output", e))?;
    }
    let bytes = wtr
        .into_inner()
        .map_err(|e| Error::parse("csv output", e))?;
    Ok(String::from_utf8(bytes).expect("csv writer emits utf-8"))
}

/// Validated in-memory dataset for one observation period.
///
/// Researchers are kept sorted by id and publications by pub_id, so any
/// computation that walks them in order is independent of input row order.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    taxonomy: Taxonomy,
    universities: BTreeSet<String>,
    researchers: Vec<Researcher>,
    researcher_index: BTreeMap<String, usize>,
    publications: Vec<Publication>,
    salary_table: SalaryTable,
    config: AnalysisConfig,
}

impl Dataset {
    /// Validates raw rows and builds the dataset.
    ///
    /// Returns [`Error::Invalid`] carrying the report when any error was found.
    pub fn from_rows(
        rows: &DatasetRows,
        config: AnalysisConfig,
    ) -> Result<(Dataset, ValidationReport)> {
        let mut report = ValidationReport::default();
        match assemble(rows, config, &mut report) {
            Some(ds) if report.is_ok() => {
                report.counts = ds.counts();
                Ok((ds, report))
            }
            _ => Err(Error::Invalid(Box::new(report))),
        }
    }

    pub fn taxonomy(&self) -> &Taxonomy {
        &self.taxonomy
    }

    pub fn universities(&self) -> &BTreeSet<String> {
        &self.universities
    }

    /// Sorted by researcher_id.
    pub fn researchers(&self) -> &[Researcher] {
        &self.researchers
    }

    pub fn researcher(&self, researcher_id: &str) -> Option<&Researcher> {
        self.researcher_index
            .get(researcher_id)
            .map(|&i| &self.researchers[i])
    }

    /// Sorted by pub_id.
    pub fn publications(&self) -> &[Publication] {
        &self.publications
    }

    pub fn salary_table(&self) -> &SalaryTable {
        &self.salary_table
    }

    pub fn config(&self) -> &AnalysisConfig {
        &self.config
    }

    /// Researchers grouped by (university_id, sds_code), each group sorted by id.
    pub fn rosters(&self) -> BTreeMap<(&str, &str), Vec<&Researcher>> {
        let mut cells: BTreeMap<(&str, &str), Vec<&Researcher>> = BTreeMap::new();
        for r in &self.researchers {
            cells
                .entry((r.university_id.as_str(), r.sds_code.as_str()))
                .or_default()
                .push(r);
        }
        cells
    }

    pub fn roster<'a>(
        &'a self,
        university_id: &'a str,
        sds_code: &'a str,
    ) -> impl Iterator<Item = &'a Researcher> + 'a {
        self.researchers
            .iter()
            .filter(move |r| r.university_id == university_id && r.sds_code == sds_code)
    }

    pub fn with_config(mut self, config: AnalysisConfig) -> Self {
        self.config = config;
        self
    }

    pub fn with_salary_table(mut self, table: SalaryTable) -> Result<Self> {
        if let Some(r) = self
            .researchers
            .iter()
            .find(|r| table.annual(r.academic_rank).is_none())
        {
            return Err(Error::Config(format!(
                "salary table has no entry for rank '{}'",
                r.academic_rank
            )));
        }
        self.salary_table = table;
        Ok(self)
    }

    /// Raw rows that reproduce this dataset through [`Dataset::from_rows`].
    pub fn to_rows(&self) -> DatasetRows {
        let mut rows = DatasetRows {
            taxonomy: self
                .taxonomy
                .entries()
                .map(|(sds, e)| TaxonomyRow {
                    line: 0,
                    sds_code: sds.into(),
                    uda_code: e.uda_code.clone(),
                    byline_convention: e.convention.to_string(),
                })
                .collect(),
            researchers: self
                .researchers
                .iter()
                .map(|r| ResearcherRow {
                    line: 0,
                    researcher_id: r.researcher_id.clone(),
                    university_id: r.university_id.clone(),
                    sds_code: r.sds_code.clone(),
                    academic_rank: r.academic_rank.to_string(),
                })
                .collect(),
            salaries: self
                .salary_table
                .iter()
                .map(|(rank, s)| SalaryRow {
                    line: 0,
                    academic_rank: rank.to_string(),
                    annual_salary: s.to_string(),
                })
                .collect(),
            publications: Vec::new(),
            authorships: Vec::new(),
        };
        for p in &self.publications {
            rows.publications.push(PublicationRow {
                line: 0,
                pub_id: p.pub_id.clone(),
                year: p.year.to_string(),
                citation_count: p.citation_count.to_string(),
                categories: p.categories.join(";"),
            });
            for a in &p.byline {
                rows.authorships.push(AuthorshipRow {
                    line: 0,
                    pub_id: p.pub_id.clone(),
                    position: a.position.to_string(),
                    author_key: a.author_key.clone(),
                    researcher_id: a.researcher_id.clone().unwrap_or_default(),
                    affiliation_university_id: a
                        .affiliation_university_id
                        .clone()
                        .unwrap_or_default(),
                });
            }
        }
        rows
    }

    /// Entity totals plus per-UDA staff / publication / citation counts.
    pub fn counts(&self) -> BTreeMap<String, u64> {
        let mut counts = BTreeMap::new();
        counts.insert("uda".to_string(), self.taxonomy.uda_codes().len() as u64);
        counts.insert("sds".to_string(), self.taxonomy.len() as u64);
        counts.insert("universities".to_string(), self.universities.len() as u64);
        counts.insert("researchers".to_string(), self.researchers.len() as u64);
        counts.insert("publications".to_string(), self.publications.len() as u64);
        counts.insert(
            "authorships".to_string(),
            self.publications
                .iter()
                .map(|p| p.byline.len() as u64)
                .sum(),
        );
        for row in portfolio_summary(self) {
            let prefix = format!("uda.{}", row.uda_code);
            counts.insert(format!("{prefix}.sds"), row.sds);
            counts.insert(format!("{prefix}.universities"), row.universities);
            counts.insert(format!("{prefix}.staff"), row.staff);
            counts.insert(format!("{prefix}.publications"), row.publications);
            counts.insert(format!("{prefix}.citations"), row.citations);
        }
        counts
    }
}

/// One row of the staff/portfolio summary, per UDA.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PortfolioRow {
    pub uda_code: String,
    pub sds: u64,
    pub universities: u64,
    pub staff: u64,
    /// Publications with at least one roster author of the UDA.
    pub publications: u64,
    pub citations: u64,
}

/// Staff and publication portfolio by UDA. A publication co-authored across
/// UDAs is counted once in each of them.
pub fn portfolio_summary(ds: &Dataset) -> Vec<PortfolioRow> {
    let mut rows = Vec::new();
    for uda in ds.taxonomy.uda_codes() {
        let sds: BTreeSet<&str> = ds.taxonomy.sds_in_uda(uda).collect();
        let staff: Vec<&Researcher> = ds
            .researchers
            .iter()
            .filter(|r| sds.contains(r.sds_code.as_str()))
            .collect();
        let universities: BTreeSet<&str> = staff.iter().map(|r| r.university_id.as_str()).collect();
        let in_uda = |p: &&Publication| {
            p.byline.iter().any(|a| {
                a.researcher_id
                    .as_deref()
                    .and_then(|id| ds.researcher(id))
                    .is_some_and(|r| sds.contains(r.sds_code.as_str()))
            })
        };
        let pubs: Vec<&Publication> = ds.publications.iter().filter(in_uda).collect();
        rows.push(PortfolioRow {
            uda_code: uda.to_string(),
            sds: sds.len() as u64,
            universities: universities.len() as u64,
            staff: staff.len() as u64,
            publications: pubs.len() as u64,
            citations: pubs.iter().map(|p| p.citation_count).sum(),
        });
    }
    rows
}

/// Reads the five files and validates them.
///
/// A missing or unreadable file is an [`Error::Io`]; data problems are an
/// [`Error::Invalid`] carrying the full report.
pub fn load_dataset(
    paths: &InputPaths,
    config: AnalysisConfig,
) -> Result<(Dataset, ValidationReport)> {
    let read = |p: &Path| fs::read_to_string(p).map_err(|e| Error::io(p, e));
    let texts = [
        read(&paths.taxonomy)?,
        read(&paths.researchers)?,
        read(&paths.salaries)?,
        read(&paths.publications)?,
        read(&paths.authorships)?,
    ];
    parse_dataset(
        [&texts[0], &texts[1], &texts[2], &texts[3], &texts[4]],
        config,
    )
}

/// Same as [`load_dataset`] but from in-memory CSV texts.
pub fn parse_dataset(
    texts: [&str; 5],
    config: AnalysisConfig,
) -> Result<(Dataset, ValidationReport)> {
    config.validate()?;
    let mut report = ValidationReport::default();
    let rows = DatasetRows::parse(texts, &mut report);
    if !report.is_ok() {
        return Err(Error::Invalid(Box::new(report)));
    }
    let (ds, mut full) = Dataset::from_rows(&rows, config).map_err(|e| match e {
        Error::Invalid(mut r) => {
            r.warnings.splice(0..0, report.warnings.drain(..));
            Error::Invalid(r)
        }
        other => other,
    })?;
    full.warnings.splice(0..0, report.warnings);
    Ok((ds, full))
}

fn loc(file: &str, line: u64) -> String {
    format!("{file}:{line}")
}

fn non_empty(s: &str) -> Option<String> {
    let s = s.trim();
    (!s.is_empty()).then(|| s.to_string())
}

fn assemble(
    rows: &DatasetRows,
    config: AnalysisConfig,
    report: &mut ValidationReport,
) -> Option<Dataset> {
    // taxonomy
    let mut tax_entries: Vec<(String, String, BylineConvention)> = Vec::new();
    let mut seen_sds = BTreeSet::new();
    for r in &rows.taxonomy {
        let at = loc(TAXONOMY_FILE, r.line);
        let (Some(sds), Some(uda)) = (non_empty(&r.sds_code), non_empty(&r.uda_code)) else {
            report.error(
                "missing_field",
                at,
                "sds_code and uda_code are required".into(),
            );
            continue;
        };
        let convention = match r.byline_convention.parse::<BylineConvention>() {
            Ok(c) => c,
            Err(e) => {
                report.error("invalid_value", at, e.to_string());
                continue;
            }
        };
        if !seen_sds.insert(sds.clone()) {
            report.error("duplicate_key", at, format!("duplicate sds_code '{sds}'"));
            continue;
        }
        tax_entries.push((sds, uda, convention));
    }
    let taxonomy = Taxonomy::new(tax_entries).ok()?;

    // salaries
    let mut salaries = Vec::new();
    let mut seen_ranks = BTreeSet::new();
    for r in &rows.salaries {
        let at = loc(SALARIES_FILE, r.line);
        let rank = match r.academic_rank.parse::<AcademicRank>() {
            Ok(rank) => rank,
            Err(e) => {
                report.error("invalid_value", at, e.to_string());
                continue;
            }
        };
        let salary = match r.annual_salary.trim().parse::<f64>() {
            Ok(s) if s.is_finite() && s > 0.0 => s,
            _ => {
                report.error(
                    "invalid_value",
                    at,
                    format!(
                        "annual_salary '{}' must be a positive number",
                        r.annual_salary
                    ),
                );
                continue;
            }
        };
        if !seen_ranks.insert(rank) {
            report.error(
                "duplicate_key",
                at,
                format!("duplicate salary for rank '{rank}'"),
            );
            continue;
        }
        salaries.push((rank, salary));
    }
    let salary_table = SalaryTable::new(salaries).ok()?;

    // researchers
    let mut researchers: Vec<Researcher> = Vec::new();
    let mut seen_researchers = BTreeSet::new();
    for r in &rows.researchers {
        let at = loc(RESEARCHERS_FILE, r.line);
        let (Some(id), Some(uni), Some(sds)) = (
            non_empty(&r.researcher_id),
            non_empty(&r.university_id),
            non_empty(&r.sds_code),
        ) else {
            report.error(
                "missing_field",
                at,
                "researcher_id, university_id and sds_code are required".into(),
            );
            continue;
        };
        let rank = match r.academic_rank.parse::<AcademicRank>() {
            Ok(rank) => rank,
            Err(e) => {
                report.error("invalid_value", at, e.to_string());
                continue;
            }
        };
        if !taxonomy.contains_sds(&sds) {
            report.error(
                "dangling_reference",
                at,
                format!("researcher '{id}' references unknown sds_code '{sds}'"),
            );
            continue;
        }
        if salary_table.annual(rank).is_none() {
            report.error(
                "missing_salary_rank",
                at,
                format!("researcher '{id}' has rank '{rank}' with no entry in {SALARIES_FILE}"),
            );
            continue;
        }
        if !seen_researchers.insert(id.clone()) {
            report.error(
                "duplicate_key",
                at,
                format!("duplicate researcher_id '{id}'"),
            );
            continue;
        }
        researchers.push(Researcher {
            researcher_id: id,
            university_id: uni,
            sds_code: sds,
            academic_rank: rank,
        });
    }
    researchers.sort_by(|a, b| a.researcher_id.cmp(&b.researcher_id));
    let researcher_index: BTreeMap<String, usize> = researchers
        .iter()
        .enumerate()
        .map(|(i, r)| (r.researcher_id.clone(), i))
        .collect();
    let universities: BTreeSet<String> = researchers
        .iter()
        .map(|r| r.university_id.clone())
        .collect();

    // publications
    let mut publications: BTreeMap<String, Publication> = BTreeMap::new();
    let mut dropped: BTreeSet<String> = BTreeSet::new();
    for r in &rows.publications {
        let at = loc(PUBLICATIONS_FILE, r.line);
        let Some(id) = non_empty(&r.pub_id) else {
            report.error("missing_field", at, "pub_id is required".into());
            continue;
        };
        let Ok(year) = r.year.trim().parse::<i32>() else {
            report.error(
                "invalid_value",
                at,
                format!("year '{}' is not an integer", r.year),
            );
            continue;
        };
        let Ok(citations) = r.citation_count.trim().parse::<u64>() else {
            report.error(
                "invalid_value",
                at,
                format!(
                    "citation_count '{}' is not a non-negative integer",
                    r.citation_count
                ),
            );
            continue;
        };
        let mut categories: Vec<String> = Vec::new();
        for c in r.categories.split(';').filter_map(non_empty) {
            if !categories.contains(&c) {
                categories.push(c);
            }
        }
        if categories.is_empty() {
            report.error(
                "missing_field",
                at,
                format!("publication '{id}' has no categories"),
            );
            continue;
        }
        if publications.contains_key(&id) || dropped.contains(&id) {
            report.error("duplicate_key", at, format!("duplicate pub_id '{id}'"));
            continue;
        }
        if !config.period.contains(year) {
            report.warn(
                "out_of_period",
                at,
                format!(
                    "publication '{id}' ({year}) is outside {}; dropped",
                    config.period
                ),
            );
            dropped.insert(id);
            continue;
        }
        publications.insert(
            id.clone(),
            Publication {
                pub_id: id,
                year,
                citation_count: citations,
                categories,
                byline: Vec::new(),
            },
        );
    }

    // authorships
    let mut line_of: BTreeMap<String, u64> = BTreeMap::new();
    // publications with at least one rejected authorship row: their byline is
    // incomplete, so structural checks would only repeat the row error
    let mut incomplete: BTreeSet<String> = BTreeSet::new();
    for r in &rows.authorships {
        let at = loc(AUTHORSHIPS_FILE, r.line);
        let Some(pub_id) = non_empty(&r.pub_id) else {
            report.error("missing_field", at, "pub_id is required".into());
            continue;
        };
        if dropped.contains(&pub_id) {
            continue;
        }
        let Some(publication) = publications.get_mut(&pub_id) else {
            report.error(
                "dangling_reference",
                at,
                format!("authorship references unknown pub_id '{pub_id}'"),
            );
            continue;
        };
        let position = match r.position.trim().parse::<u32>() {
            Ok(p) if p >= 1 => p,
            _ => {
                report.error(
                    "invalid_value",
                    at,
                    format!("position '{}' must be a positive integer", r.position),
                );
                incomplete.insert(pub_id.clone());
                continue;
            }
        };
        let researcher_id = non_empty(&r.researcher_id);
        let mut affiliation = non_empty(&r.affiliation_university_id);
        if let Some(rid) = &researcher_id {
            let Some(&idx) = researcher_index.get(rid) else {
                report.error(
                    "dangling_reference",
                    at,
                    format!("publication '{pub_id}' references unknown researcher_id '{rid}'"),
                );
                incomplete.insert(pub_id.clone());
                continue;
            };
            let home = &researchers[idx].university_id;
            match &affiliation {
                Some(a) if a != home => {
                    report.error(
                        "affiliation_mismatch",
                        at,
                        format!(
                            "publication '{pub_id}': researcher '{rid}' belongs to '{home}' but affiliation is '{a}'"
                        ),
                    );
                    incomplete.insert(pub_id.clone());
                    continue;
                }
                Some(_) => {}
                None => affiliation = Some(home.clone()),
            }
        }
        let Some(author_key) = non_empty(&r.author_key).or_else(|| researcher_id.clone()) else {
            report.error(
                "missing_field",
                at,
                format!("publication '{pub_id}': author_key is required"),
            );
            incomplete.insert(pub_id.clone());
            continue;
        };
        line_of.entry(pub_id.clone()).or_insert(r.line);
        publication.byline.push(Authorship {
            position,
            author_key,
            researcher_id,
            affiliation_university_id: affiliation,
        });
    }

    for p in publications.values_mut() {
        p.byline.sort_by_key(|a| a.position);
        let at = line_of.get(&p.pub_id).map_or_else(
            || PUBLICATIONS_FILE.to_string(),
            |l| loc(AUTHORSHIPS_FILE, *l),
        );
        if incomplete.contains(&p.pub_id) {
            continue;
        }
        if p.byline.is_empty() {
            report.error(
                "empty_byline",
                at,
                format!("publication '{}' has no authorships", p.pub_id),
            );
            continue;
        }
        let contiguous = p
            .byline
            .iter()
            .enumerate()
            .all(|(i, a)| a.position as usize == i + 1);
        if !contiguous {
            let positions: Vec<u32> = p.byline.iter().map(|a| a.position).collect();
            report.error(
                "byline_positions",
                at,
                format!(
                    "publication '{}' has byline positions {positions:?}, expected 1..={}",
                    p.pub_id,
                    positions.len()
                ),
            );
        }
    }

    Some(Dataset {
        taxonomy,
        universities,
        researchers,
        researcher_index,
        publications: publications.into_values().collect(),
        salary_table,
        config,
    })
}

/// Per SDS, nation-wide: (researchers with at least one publication, all researchers).
pub fn sds_publishing_counts(ds: &Dataset) -> BTreeMap<&str, (usize, usize)> {
    let published: BTreeSet<&str> = ds
        .publications
        .iter()
        .flat_map(|p| p.byline.iter().filter_map(|a| a.researcher_id.as_deref()))
        .collect();
    let mut counts: BTreeMap<&str, (usize, usize)> = ds
        .taxonomy
        .entries()
        .map(|(sds, _)| (sds, (0, 0)))
        .collect();
    for r in &ds.researchers {
        let entry = counts.entry(r.sds_code.as_str()).or_default();
        entry.1 += 1;
        if published.contains(r.researcher_id.as_str()) {
            entry.0 += 1;
        }
    }
    counts
}

/// Drops SDSs where fewer than `min_publishing_share` of researchers published.
///
/// The share is taken across all universities. Removed researchers stay on
/// their bylines as non-roster authors with their affiliation. SDSs with no
/// researchers at all are dropped too.
pub fn apply_sds_inclusion_filter(ds: &Dataset) -> Dataset {
    let threshold = ds.config.min_publishing_share;
    let kept: BTreeSet<String> = sds_publishing_counts(ds)
        .into_iter()
        .filter(|&(_, (published, total))| {
            total > 0 && published as f64 / total as f64 >= threshold
        })
        .map(|(sds, _)| sds.to_string())
        .collect();

    let mut out = ds.clone();
    out.taxonomy.retain(|sds| kept.contains(sds));
    out.researchers.retain(|r| kept.contains(&r.sds_code));
    out.researcher_index = out
        .researchers
        .iter()
        .enumerate()
        .map(|(i, r)| (r.researcher_id.clone(), i))
        .collect();
    out.universities = out
        .researchers
        .iter()
        .map(|r| r.university_id.clone())
        .collect();
    for p in &mut out.publications {
        for a in &mut p.byline {
            if let Some(id) = &a.researcher_id {
                if !out.researcher_index.contains_key(id) {
                    a.researcher_id = None;
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const TAX: &str =
        "sds_code,uda_code,byline_convention\nS1,U1,alphabetical\nS2,U1,position_weighted\n";
    const SAL: &str = "academic_rank,annual_salary\nassistant,1.0\nassociate,1.4\nfull,2.0\n";

    fn parse(res: &str, pubs: &str, auth: &str) -> Result<(Dataset, ValidationReport)> {
        parse_dataset([TAX, res, SAL, pubs, auth], AnalysisConfig::default())
    }

    fn report_of(r: Result<(Dataset, ValidationReport)>) -> ValidationReport {
        match r {
            Err(Error::Invalid(rep)) => *rep,
            other => panic!("expected validation failure, got {other:?}"),
        }
    }

    #[test]
    fn empty_files_are_valid() {
        let (ds, rep) = parse_dataset(["", "", "", "", ""], AnalysisConfig::default()).unwrap();
        assert!(rep.errors.is_empty());
        assert!(ds.researchers().is_empty());
        assert!(ds.publications().is_empty());
        assert!(ds.taxonomy().is_empty());
    }

    #[test]
    fn header_only_files_are_valid() {
        let (ds, rep) = parse_dataset(
            [
                "sds_code,uda_code,byline_convention\n",
                "researcher_id,university_id,sds_code,academic_rank\n",
                "academic_rank,annual_salary\n",
                "pub_id,year,citation_count,categories\n",
                "pub_id,position,author_key,researcher_id,affiliation_university_id\n",
            ],
            AnalysisConfig::default(),
        )
        .unwrap();
        assert!(rep.is_ok());
        assert_eq!(ds.universities().len(), 0);
    }

    #[test]
    fn unknown_researcher_in_byline() {
        let rep = report_of(parse(
            "researcher_id,university_id,sds_code,academic_rank\nR1,UA,S1,full\n",
            "pub_id,year,citation_count,categories\nP1,2005,3,CAT\n",
            "pub_id,position,author_key,researcher_id,affiliation_university_id\nP1,1,k1,R999,\n",
        ));
        assert_eq!(rep.errors.len(), 1, "{:?}", rep.errors);
        let e = &rep.errors[0];
        assert_eq!(e.code, "dangling_reference");
        assert!(e.message.contains("R999") && e.message.contains("P1"));
        assert_eq!(e.location, "authorships.csv:2");
    }

    #[test]
    fn malformed_row_reports_line() {
        let rep = report_of(parse(
            "researcher_id,university_id,sds_code,academic_rank\nR1,UA,S1,full\nR2,UA\n",
            "pub_id,year,citation_count,categories\n",
            "pub_id,position,author_key,researcher_id,affiliation_university_id\n",
        ));
        assert_eq!(rep.errors[0].code, "malformed_row");
        assert_eq!(rep.errors[0].location, "researchers.csv:3");
    }

    #[test]
    fn out_of_period_is_dropped_with_warning() {
        let (ds, rep) = parse(
            "researcher_id,university_id,sds_code,academic_rank\nR1,UA,S1,full\n",
            "pub_id,year,citation_count,categories\nP1,2005,3,CAT\nP2,1999,3,CAT\n",
            "pub_id,position,author_key,researcher_id,affiliation_university_id\nP1,1,k1,R1,\nP2,1,k1,R1,UA\n",
        )
        .unwrap();
        assert_eq!(ds.publications().len(), 1);
        assert_eq!(rep.warnings.len(), 1);
        assert_eq!(rep.warnings[0].code, "out_of_period");
        // missing affiliation filled from roster
        assert_eq!(
            ds.publications()[0].byline[0]
                .affiliation_university_id
                .as_deref(),
            Some("UA")
        );
    }

    #[test]
    fn byline_gap_is_an_error() {
        let rep = report_of(parse(
            "researcher_id,university_id,sds_code,academic_rank\nR1,UA,S1,full\n",
            "pub_id,year,citation_count,categories\nP1,2005,3,CAT\n",
            "pub_id,position,author_key,researcher_id,affiliation_university_id\nP1,1,k1,R1,\nP1,3,k3,,\n",
        ));
        assert_eq!(rep.errors[0].code, "byline_positions");
    }

    #[test]
    fn affiliation_mismatch_is_an_error() {
        let rep = report_of(parse(
            "researcher_id,university_id,sds_code,academic_rank\nR1,UA,S1,full\n",
            "pub_id,year,citation_count,categories\nP1,2005,3,CAT\n",
            "pub_id,position,author_key,researcher_id,affiliation_university_id\nP1,1,k1,R1,UB\n",
        ));
        assert_eq!(rep.errors[0].code, "affiliation_mismatch");
    }

    #[test]
    fn duplicate_ids_and_unknown_sds() {
        let rep = report_of(parse(
            "researcher_id,university_id,sds_code,academic_rank\nR1,UA,S1,full\nR1,UA,S1,full\nR2,UA,S9,full\n",
            "pub_id,year,citation_count,categories\nP1,2005,3,CAT\nP1,2005,3,CAT\n",
            "pub_id,position,author_key,researcher_id,affiliation_university_id\nP1,1,k1,R1,\n",
        ));
        let codes: Vec<&str> = rep.errors.iter().map(|e| e.code.as_str()).collect();
        assert_eq!(
            codes,
            ["duplicate_key", "dangling_reference", "duplicate_key"]
        );
    }

    #[test]
    fn bad_header_is_rejected() {
        let rep = report_of(parse(
            "id,university_id,sds_code,academic_rank\nR1,UA,S1,full\n",
            "pub_id,year,citation_count,categories\n",
            "pub_id,position,author_key,researcher_id,affiliation_university_id\n",
        ));
        assert_eq!(rep.errors[0].code, "bad_header");
    }

    #[test]
    fn categories_are_deduplicated_in_order() {
        let (ds, _) = parse(
            "researcher_id,university_id,sds_code,academic_rank\nR1,UA,S1,full\n",
            "pub_id,year,citation_count,categories\nP1,2005,3,Y; X ;Y\n",
            "pub_id,position,author_key,researcher_id,affiliation_university_id\nP1,1,k1,R1,\n",
        )
        .unwrap();
        assert_eq!(ds.publications()[0].categories, ["Y", "X"]);
    }

    fn filter_fixture() -> Dataset {
        // S1: 4 researchers, 2 publish (share 0.5). S2: 3 researchers, 1 publishes.
        let res = "researcher_id,university_id,sds_code,academic_rank\n\
            A1,UA,S1,full\nA2,UA,S1,full\nA3,UB,S1,full\nA4,UB,S1,full\n\
            B1,UA,S2,full\nB2,UB,S2,full\nB3,UB,S2,full\n";
        let pubs = "pub_id,year,citation_count,categories\nP1,2005,3,CAT\nP2,2006,1,CAT\n";
        let auth = "pub_id,position,author_key,researcher_id,affiliation_university_id\n\
            P1,1,a1,A1,\nP1,2,b1,B1,\nP2,1,a3,A3,\n";
        parse(res, pubs, auth).unwrap().0
    }

    #[test]
    fn inclusion_filter_boundary() {
        let ds = filter_fixture();
        let counts = sds_publishing_counts(&ds);
        assert_eq!(counts["S1"], (2, 4));
        assert_eq!(counts["S2"], (1, 3));
        let f = apply_sds_inclusion_filter(&ds);
        assert!(f.taxonomy().contains_sds("S1"));
        assert!(!f.taxonomy().contains_sds("S2"));
        assert_eq!(f.researchers().len(), 4);
        // B1 stays on the byline as an external author
        let p1 = &f.publications()[0];
        assert_eq!(p1.byline.len(), 2);
        assert_eq!(p1.byline[1].researcher_id, None);
        assert_eq!(
            p1.byline[1].affiliation_university_id.as_deref(),
            Some("UA")
        );
    }

    #[test]
    fn inclusion_filter_is_idempotent() {
        let once = apply_sds_inclusion_filter(&filter_fixture());
        let twice = apply_sds_inclusion_filter(&once);
        assert_eq!(once, twice);
    }

    #[test]
    fn rows_round_trip_through_csv() {
        let ds = filter_fixture();
        let texts = ds.to_rows().to_csv_strings().unwrap();
        let (back, _) = parse_dataset(
            [&texts[0], &texts[1], &texts[2], &texts[3], &texts[4]],
            AnalysisConfig::default(),
        )
        .unwrap();
        assert_eq!(back, ds);
    }

    #[test]
    fn portfolio_counts_cross_uda_publications_in_each() {
        let tax = "sds_code,uda_code,byline_convention\nS1,U1,alphabetical\nS2,U2,alphabetical\n";
        let res =
            "researcher_id,university_id,sds_code,academic_rank\nA1,UA,S1,full\nB1,UA,S2,full\n";
        let pubs = "pub_id,year,citation_count,categories\nP1,2005,3,CAT\nP2,2005,2,CAT\n";
        let auth = "pub_id,position,author_key,researcher_id,affiliation_university_id\nP1,1,a,A1,\nP1,2,b,B1,\nP2,1,a,A1,\n";
        let (ds, rep) =
            parse_dataset([tax, res, SAL, pubs, auth], AnalysisConfig::default()).unwrap();
        let summary = portfolio_summary(&ds);
        let total: u64 = summary.iter().map(|r| r.publications).sum();
        assert_eq!(total, 3);
        assert!(rep.counts["publications"] <= total);
        assert_eq!(rep.counts["uda.U1.publications"], 2);
        assert_eq!(rep.counts["uda.U2.citations"], 3);
    }
}
