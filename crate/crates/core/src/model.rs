//! Domain types shared by every stage of the pipeline.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Scalar;

/// Closed observation window, in calendar years.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Period {
    start_year: i32,
    end_year: i32,
}

impl Period {
    pub fn new(start_year: i32, end_year: i32) -> Result<Self> {
        if start_year > end_year {
            return Err(Error::Config(format!(
                "period start {start_year} is after end {end_year}"
            )));
        }
        Ok(Self {
            start_year,
            end_year,
        })
    }

    pub fn start_year(&self) -> i32 {
        self.start_year
    }

    pub fn end_year(&self) -> i32 {
        self.end_year
    }

    /// Number of years covered, both ends included.
    pub fn years(&self) -> u32 {
        (self.end_year - self.start_year + 1) as u32
    }

    pub fn contains(&self, year: i32) -> bool {
        (self.start_year..=self.end_year).contains(&year)
    }
}

impl fmt::Display for Period {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.start_year, self.end_year)
    }
}

impl FromStr for Period {
    type Err = Error;

    /// Accepts `2004-2008` or a single year `2004`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (a, b) = match s.split_once('-') {
            Some((a, b)) => (a.trim(), b.trim()),
            None => (s, s),
        };
        let parse = |v: &str| {
            v.parse::<i32>()
                .map_err(|_| Error::Config(format!("invalid period '{s}'")))
        };
        Period::new(parse(a)?, parse(b)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AcademicRank {
    Assistant,
    Associate,
    Full,
}

impl AcademicRank {
    pub const ALL: [AcademicRank; 3] = [
        AcademicRank::Assistant,
        AcademicRank::Associate,
        AcademicRank::Full,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            AcademicRank::Assistant => "assistant",
            AcademicRank::Associate => "associate",
            AcademicRank::Full => "full",
        }
    }
}

impl fmt::Display for AcademicRank {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AcademicRank {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "assistant" => Ok(AcademicRank::Assistant),
            "associate" => Ok(AcademicRank::Associate),
            "full" => Ok(AcademicRank::Full),
            other => Err(Error::parse(
                "academic rank",
                format!("unknown rank '{other}'"),
            )),
        }
    }
}

/// How a field orders its bylines, which decides fractional credit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BylineConvention {
    /// Authors listed alphabetically; every author gets `1/n`.
    Alphabetical,
    /// Byline order carries meaning; first and last authors weigh most.
    PositionWeighted,
}

impl BylineConvention {
    pub fn as_str(&self) -> &'static str {
        match self {
            BylineConvention::Alphabetical => "alphabetical",
            BylineConvention::PositionWeighted => "position_weighted",
        }
    }
}

impl fmt::Display for BylineConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BylineConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "alphabetical" => Ok(BylineConvention::Alphabetical),
            "position_weighted" => Ok(BylineConvention::PositionWeighted),
            other => Err(Error::parse(
                "byline convention",
                format!("unknown convention '{other}'"),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SdsEntry {
    pub uda_code: String,
    pub convention: BylineConvention,
}

/// Field (SDS) to discipline (UDA) classification.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Taxonomy {
    sds: BTreeMap<String, SdsEntry>,
}

impl Taxonomy {
    pub fn new<I, S, U>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, U, BylineConvention)>,
        S: Into<String>,
        U: Into<String>,
    {
        let mut sds = BTreeMap::new();
        for (code, uda, convention) in entries {
            let code = code.into();
            let uda_code = uda.into();
            if code.is_empty() || uda_code.is_empty() {
                return Err(Error::Config("empty SDS or UDA code".into()));
            }
            if sds.contains_key(&code) {
                return Err(Error::Config(format!("duplicate SDS code '{code}'")));
            }
            sds.insert(
                code,
                SdsEntry {
                    uda_code,
                    convention,
                },
            );
        }
        Ok(Self { sds })
    }

    pub fn uda_of(&self, sds_code: &str) -> Option<&str> {
        self.sds.get(sds_code).map(|e| e.uda_code.as_str())
    }

    pub fn convention_of(&self, sds_code: &str) -> Option<BylineConvention> {
        self.sds.get(sds_code).map(|e| e.convention)
    }

    pub fn contains_sds(&self, sds_code: &str) -> bool {
        self.sds.contains_key(sds_code)
    }

    /// SDS entries in code order.
    pub fn entries(&self) -> impl Iterator<Item = (&str, &SdsEntry)> {
        self.sds.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn uda_codes(&self) -> BTreeSet<&str> {
        self.sds.values().map(|e| e.uda_code.as_str()).collect()
    }

    pub fn sds_in_uda<'a>(&'a self, uda_code: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.sds
            .iter()
            .filter(move |(_, e)| e.uda_code == uda_code)
            .map(|(k, _)| k.as_str())
    }

    pub fn len(&self) -> usize {
        self.sds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sds.is_empty()
    }

    pub(crate) fn retain(&mut self, mut keep: impl FnMut(&str) -> bool) {
        self.sds.retain(|k, _| keep(k));
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Researcher {
    pub researcher_id: String,
    pub university_id: String,
    pub sds_code: String,
    pub academic_rank: AcademicRank,
}

/// Average annual salary per academic rank, in arbitrary currency units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SalaryTable {
    entries: BTreeMap<AcademicRank, f64>,
}

impl SalaryTable {
    pub fn new(entries: impl IntoIterator<Item = (AcademicRank, f64)>) -> Result<Self> {
        let entries: BTreeMap<_, _> = entries.into_iter().collect();
        for (rank, salary) in &entries {
            if !(salary.is_finite() && *salary > 0.0) {
                return Err(Error::Config(format!(
                    "salary for rank {rank} must be positive, got {salary}"
                )));
            }
        }
        Ok(Self { entries })
    }

    /// Relative-unit table used by fixtures: assistant 1.0, associate 1.4, full 2.0.
    pub fn relative_units() -> Self {
        Self {
            entries: [
                (AcademicRank::Assistant, 1.0),
                (AcademicRank::Associate, 1.4),
                (AcademicRank::Full, 2.0),
            ]
            .into_iter()
            .collect(),
        }
    }

    pub fn annual(&self, rank: AcademicRank) -> Option<f64> {
        self.entries.get(&rank).copied()
    }

    pub fn missing_ranks(&self) -> Vec<AcademicRank> {
        AcademicRank::ALL
            .into_iter()
            .filter(|r| !self.entries.contains_key(r))
            .collect()
    }

    /// Every entry multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.entries.iter().map(|(r, s)| (*r, s * factor)))
    }

    pub fn iter(&self) -> impl Iterator<Item = (AcademicRank, f64)> + '_ {
        self.entries.iter().map(|(r, s)| (*r, *s))
    }
}

impl Default for SalaryTable {
    fn default() -> Self {
        Self::relative_units()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Authorship {
    /// 1-based byline index.
    pub position: u32,
    pub author_key: String,
    /// Present iff the author is on a university roster.
    pub researcher_id: Option<String>,
    pub affiliation_university_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Publication {
    pub pub_id: String,
    pub year: i32,
    pub citation_count: u64,
    /// Subject categories, first one is the primary category.
    pub categories: Vec<String>,
    /// Ordered by position, positions are `1..=n`.
    pub byline: Vec<Authorship>,
}

impl Publication {
    pub fn n_authors(&self) -> usize {
        self.byline.len()
    }

    pub fn has_researcher(&self, researcher_id: &str) -> bool {
        self.byline
            .iter()
            .any(|a| a.researcher_id.as_deref() == Some(researcher_id))
    }
}

/// Which publications feed a citation baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineScope {
    /// Only publications with at least one citation.
    #[default]
    CitedOnly,
    All,
}

impl FromStr for BaselineScope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cited_only" => Ok(BaselineScope::CitedOnly),
            "all" => Ok(BaselineScope::All),
            other => Err(Error::Config(format!("unknown baseline_scope '{other}'"))),
        }
    }
}

impl fmt::Display for BaselineScope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BaselineScope::CitedOnly => "cited_only",
            BaselineScope::All => "all",
        })
    }
}

/// How a publication listed under several subject categories is normalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MultiCategoryRule {
    /// Arithmetic mean of the per-category ratios.
    #[default]
    MeanOfRatios,
    /// Ratio against the first listed category only.
    PrimaryCategory,
}

impl FromStr for MultiCategoryRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mean_of_ratios" => Ok(MultiCategoryRule::MeanOfRatios),
            "primary_category" => Ok(MultiCategoryRule::PrimaryCategory),
            other => Err(Error::Config(format!(
                "unknown multi_category_rule '{other}'"
            ))),
        }
    }
}

impl fmt::Display for MultiCategoryRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MultiCategoryRule::MeanOfRatios => "mean_of_ratios",
            MultiCategoryRule::PrimaryCategory => "primary_category",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisConfig {
    pub period: Period,
    /// An SDS is analyzed when at least this share of its researchers published.
    pub min_publishing_share: f64,
    pub min_staff_university: u32,
    pub min_staff_uda: u32,
    pub baseline_scope: BaselineScope,
    pub multi_category_rule: MultiCategoryRule,
}

impl AnalysisConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.min_publishing_share) {
            return Err(Error::Config(format!(
                "min_publishing_share must be in [0,1], got {}",
                self.min_publishing_share
            )));
        }
        Ok(())
    }
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            period: Period {
                start_year: 2004,
                end_year: 2008,
            },
            min_publishing_share: 0.5,
            min_staff_university: 20,
            min_staff_uda: 10,
            baseline_scope: BaselineScope::CitedOnly,
            multi_category_rule: MultiCategoryRule::MeanOfRatios,
        }
    }
}

/// Quintile of a ranking list. `A` is the top fifth and has code 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum QuintileClass {
    A,
    B,
    C,
    D,
    E,
}

impl QuintileClass {
    /// Best to worst.
    pub const ALL: [QuintileClass; 5] = [
        QuintileClass::A,
        QuintileClass::B,
        QuintileClass::C,
        QuintileClass::D,
        QuintileClass::E,
    ];

    pub fn code(self) -> u8 {
        self as u8 + 1
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.get(usize::from(code).checked_sub(1)?).copied()
    }

    pub fn letter(self) -> char {
        (b'A' + self as u8) as char
    }

    pub fn from_letter(c: char) -> Option<Self> {
        match c.to_ascii_uppercase() {
            'A' => Some(QuintileClass::A),
            'B' => Some(QuintileClass::B),
            'C' => Some(QuintileClass::C),
            'D' => Some(QuintileClass::D),
            'E' => Some(QuintileClass::E),
            _ => None,
        }
    }

    /// Index into `A..=E` arrays.
    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for QuintileClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

impl FromStr for QuintileClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let mut chars = s.chars();
        match (chars.next(), chars.next()) {
            (Some(c), None) => Self::from_letter(c),
            _ => None,
        }
        .ok_or_else(|| Error::parse("quintile class", format!("'{s}' is not one of A-E")))
    }
}

impl Serialize for QuintileClass {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for QuintileClass {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Aggregation level of a score or ranking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Sds,
    Uda,
    University,
}

impl Level {
    pub fn as_str(&self) -> &'static str {
        match self {
            Level::Sds => "sds",
            Level::Uda => "uda",
            Level::University => "university",
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Level {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sds" => Ok(Level::Sds),
            "uda" => Ok(Level::Uda),
            "university" => Ok(Level::University),
            other => Err(Error::parse("level", format!("unknown level '{other}'"))),
        }
    }
}

/// Salary cost of one researcher over the whole period.
pub fn salary_of<T: Scalar>(
    researcher: &Researcher,
    table: &SalaryTable,
    period: &Period,
) -> Result<T> {
    let annual = table.annual(researcher.academic_rank).ok_or_else(|| {
        Error::Config(format!(
            "no salary for rank '{}' (researcher {})",
            researcher.academic_rank, researcher.researcher_id
        ))
    })?;
    Ok(T::lit(annual) * T::lit(f64::from(period.years())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn researcher(rank: AcademicRank) -> Researcher {
        Researcher {
            researcher_id: "R1".into(),
            university_id: "U1".into(),
            sds_code: "S1".into(),
            academic_rank: rank,
        }
    }

    #[test]
    fn salary_over_period() {
        let table = SalaryTable::relative_units();
        let p5 = Period::new(2004, 2008).unwrap();
        let p1 = Period::new(2004, 2004).unwrap();
        assert_eq!(
            salary_of::<f64>(&researcher(AcademicRank::Assistant), &table, &p5).unwrap(),
            5.0
        );
        assert_eq!(
            salary_of::<f64>(&researcher(AcademicRank::Full), &table, &p1).unwrap(),
            2.0
        );
        let assoc = salary_of::<f64>(&researcher(AcademicRank::Associate), &table, &p5).unwrap();
        assert!((assoc - 7.0).abs() < 1e-12);
    }

    #[test]
    fn salary_missing_rank_names_it() {
        let table = SalaryTable::new([(AcademicRank::Full, 2.0)]).unwrap();
        let p = Period::new(2004, 2008).unwrap();
        let err = salary_of::<f64>(&researcher(AcademicRank::Associate), &table, &p).unwrap_err();
        assert!(
            matches!(err, Error::Config(ref m) if m.contains("associate")),
            "{err}"
        );
    }

    #[test]
    fn salary_table_rejects_non_positive() {
        assert!(SalaryTable::new([(AcademicRank::Full, 0.0)]).is_err());
        assert!(SalaryTable::new([(AcademicRank::Full, f64::NAN)]).is_err());
    }

    #[test]
    fn class_codes_round_trip() {
        for (i, c) in QuintileClass::ALL.into_iter().enumerate() {
            assert_eq!(c.code() as usize, i + 1);
            assert_eq!(QuintileClass::from_code(c.code()), Some(c));
            assert_eq!(QuintileClass::from_letter(c.letter()), Some(c));
            assert_eq!(c.to_string().parse::<QuintileClass>().unwrap(), c);
        }
        assert_eq!(QuintileClass::from_code(0), None);
        assert_eq!(QuintileClass::from_code(6), None);
        assert!("F".parse::<QuintileClass>().is_err());
        assert!("AB".parse::<QuintileClass>().is_err());
    }

    #[test]
    fn period_parsing() {
        assert_eq!("2004-2008".parse::<Period>().unwrap().years(), 5);
        assert_eq!("2010".parse::<Period>().unwrap().years(), 1);
        assert!("2008-2004".parse::<Period>().is_err());
        assert!("abc".parse::<Period>().is_err());
    }

    #[test]
    fn taxonomy_rejects_duplicates() {
        let t = Taxonomy::new([
            ("FIS/01", "PHYS", BylineConvention::Alphabetical),
            ("FIS/01", "PHYS", BylineConvention::Alphabetical),
        ]);
        assert!(t.is_err());
    }

    #[test]
    fn taxonomy_lookup() {
        let t = Taxonomy::new([
            ("FIS/01", "PHYS", BylineConvention::Alphabetical),
            ("MED/01", "MED", BylineConvention::PositionWeighted),
        ])
        .unwrap();
        assert_eq!(t.uda_of("FIS/01"), Some("PHYS"));
        assert_eq!(
            t.convention_of("MED/01"),
            Some(BylineConvention::PositionWeighted)
        );
        assert_eq!(t.uda_codes().len(), 2);
        assert_eq!(t.sds_in_uda("MED").collect::<Vec<_>>(), vec!["MED/01"]);
    }

    #[test]
    fn config_share_bounds() {
        let mut c = AnalysisConfig::default();
        assert!(c.validate().is_ok());
        c.min_publishing_share = 1.5;
        assert!(c.validate().is_err());
    }
}
