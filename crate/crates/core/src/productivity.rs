//! Fractional Scientific Strength at field (SDS), discipline (UDA) and
//! university level.
//!
//! At SDS level a cell is one university's roster in one SDS:
//!
//! ```text
//! FSS_S = (1 / S_RS) * Σ_i (c_i / c̄_i) * f_i
//! ```
//!
//! with `S_RS` the cell's salary mass over the period and `f_i` the credit the
//! cell's authors hold on publication `i`. UDA and university scores are
//! salary-weighted means of `FSS_S / national mean` over the member SDSs.
//!
//! All sums run in key order (publications by id, cells by key) so results are
//! bit-identical whatever the input row order.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::credit::{credit_vector, CreditVector, WeightRules};
use crate::error::{Error, Result};
use crate::ingest::Dataset;
use crate::model::{salary_of, BylineConvention, Level, Publication};
use crate::normalize::{scaled_citation, BaselineTable};
use crate::Scalar;

/// Scope code of university-level scores and rankings.
pub const OVERALL_SCOPE: &str = "ALL";

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct ScoreKey {
    pub university_id: String,
    pub scope_code: String,
}

impl ScoreKey {
    pub fn new(university_id: impl Into<String>, scope_code: impl Into<String>) -> Self {
        Self {
            university_id: university_id.into(),
            scope_code: scope_code.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Score<T> {
    pub fss: T,
    /// Salary mass of the unit that the score is normalized by.
    pub salary_mass: T,
}

/// FSS values at one level, keyed by (university, scope).
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreSet<T> {
    level: Level,
    entries: BTreeMap<ScoreKey, Score<T>>,
}

impl<T: Scalar> ScoreSet<T> {
    pub fn new(level: Level) -> Self {
        Self {
            level,
            entries: BTreeMap::new(),
        }
    }

    pub fn level(&self) -> Level {
        self.level
    }

    pub fn insert(&mut self, key: ScoreKey, score: Score<T>) {
        self.entries.insert(key, score);
    }

    pub fn get(&self, university_id: &str, scope_code: &str) -> Option<&Score<T>> {
        self.entries.get(&ScoreKey::new(university_id, scope_code))
    }

    pub fn fss(&self, university_id: &str, scope_code: &str) -> Option<T> {
        self.get(university_id, scope_code).map(|s| s.fss)
    }

    pub fn salary_mass(&self, university_id: &str, scope_code: &str) -> Option<T> {
        self.get(university_id, scope_code).map(|s| s.salary_mass)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ScoreKey, &Score<T>)> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn scope_codes(&self) -> BTreeSet<&str> {
        self.entries.keys().map(|k| k.scope_code.as_str()).collect()
    }

    /// (university_id, score) pairs of one scope, by university.
    pub fn in_scope<'a>(
        &'a self,
        scope_code: &'a str,
    ) -> impl Iterator<Item = (&'a str, &'a Score<T>)> + 'a {
        self.entries
            .iter()
            .filter(move |(k, _)| k.scope_code == scope_code)
            .map(|(k, s)| (k.university_id.as_str(), s))
    }

    /// Cells of one university, by scope code.
    pub fn of_university<'a>(
        &'a self,
        university_id: &'a str,
    ) -> impl Iterator<Item = (&'a str, &'a Score<T>)> + 'a {
        self.entries
            .iter()
            .filter(move |(k, _)| k.university_id == university_id)
            .map(|(k, s)| (k.scope_code.as_str(), s))
    }
}

/// Salary-weighted national mean FSS per SDS, over productive universities only.
#[derive(Debug, Clone, PartialEq)]
pub struct NationalMeans<T> {
    means: BTreeMap<String, T>,
}

impl<T: Scalar> NationalMeans<T> {
    pub fn get(&self, sds_code: &str) -> Option<T> {
        self.means.get(sds_code).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, T)> + '_ {
        self.means.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn len(&self) -> usize {
        self.means.len()
    }

    pub fn is_empty(&self) -> bool {
        self.means.is_empty()
    }
}

/// Per-publication inputs shared by every cell that co-authored it.
struct PublicationTerms<T> {
    scaled: T,
    alphabetical: Option<CreditVector<T>>,
    position_weighted: Option<CreditVector<T>>,
}

impl<T: Scalar> PublicationTerms<T> {
    fn new(publication: &Publication, baselines: &BaselineTable<T>, ds: &Dataset) -> Result<Self> {
        Ok(Self {
            scaled: scaled_citation(publication, baselines, ds.config().multi_category_rule)?,
            alphabetical: None,
            position_weighted: None,
        })
    }

    fn credit(
        &mut self,
        publication: &Publication,
        convention: BylineConvention,
        rules: &WeightRules,
    ) -> &CreditVector<T> {
        let slot = match convention {
            BylineConvention::Alphabetical => &mut self.alphabetical,
            BylineConvention::PositionWeighted => &mut self.position_weighted,
        };
        slot.get_or_insert_with(|| credit_vector(publication, convention, rules))
    }
}

fn convention(ds: &Dataset, sds_code: &str) -> Result<BylineConvention> {
    ds.taxonomy()
        .convention_of(sds_code)
        .ok_or_else(|| Error::Analysis(format!("SDS '{sds_code}' is not in the taxonomy")))
}

fn cell_salary_mass<T: Scalar>(
    ds: &Dataset,
    university_id: &str,
    sds_code: &str,
) -> Result<Option<T>> {
    let mut mass: Option<T> = None;
    for r in ds.roster(university_id, sds_code) {
        let s = salary_of::<T>(r, ds.salary_table(), &ds.config().period)?;
        mass = Some(mass.map_or(s, |m| m + s));
    }
    Ok(mass)
}

/// FSS of one (university, SDS) cell.
pub fn fss_sds<T: Scalar>(
    ds: &Dataset,
    baselines: &BaselineTable<T>,
    rules: &WeightRules,
    university_id: &str,
    sds_code: &str,
) -> Result<T> {
    let mass = cell_salary_mass::<T>(ds, university_id, sds_code)?.ok_or_else(|| {
        Error::Domain(format!(
            "university '{university_id}' has no researchers in SDS '{sds_code}'"
        ))
    })?;
    let convention = convention(ds, sds_code)?;
    let in_cell = |id: &str| {
        ds.researcher(id)
            .is_some_and(|r| r.university_id == university_id && r.sds_code == sds_code)
    };
    let mut total = T::zero();
    for p in ds.publications() {
        if !p
            .byline
            .iter()
            .any(|a| a.researcher_id.as_deref().is_some_and(in_cell))
        {
            continue;
        }
        let mut terms = PublicationTerms::new(p, baselines, ds)?;
        let scaled = terms.scaled;
        let credit = terms.credit(p, convention, rules);
        let share: T = p
            .byline
            .iter()
            .zip(credit.weights())
            .filter(|(a, _)| a.researcher_id.as_deref().is_some_and(in_cell))
            .map(|(_, w)| *w)
            .sum();
        total = total + scaled * share;
    }
    Ok(total / mass)
}

/// FSS of every populated (university, SDS) cell.
pub fn sds_scores<T: Scalar>(
    ds: &Dataset,
    baselines: &BaselineTable<T>,
    rules: &WeightRules,
) -> Result<ScoreSet<T>> {
    let mut totals: BTreeMap<(&str, &str), T> = BTreeMap::new();
    for p in ds.publications() {
        // cell -> credit share over the cell's authors, per byline position
        let mut touched: BTreeMap<(&str, &str), Vec<usize>> = BTreeMap::new();
        for (i, a) in p.byline.iter().enumerate() {
            if let Some(r) = a.researcher_id.as_deref().and_then(|id| ds.researcher(id)) {
                touched
                    .entry((r.university_id.as_str(), r.sds_code.as_str()))
                    .or_default()
                    .push(i);
            }
        }
        if touched.is_empty() {
            continue;
        }
        let mut terms = PublicationTerms::new(p, baselines, ds)?;
        for (cell, positions) in touched {
            let convention = convention(ds, cell.1)?;
            let scaled = terms.scaled;
            let weights = terms.credit(p, convention, rules).weights();
            let share: T = positions.iter().map(|&i| weights[i]).sum();
            let acc = totals.entry(cell).or_insert_with(T::zero);
            *acc = *acc + scaled * share;
        }
    }

    let mut set = ScoreSet::new(Level::Sds);
    for (university_id, sds_code) in ds.rosters().keys() {
        let mass = cell_salary_mass::<T>(ds, university_id, sds_code)?
            .expect("roster cells are non-empty");
        let total = totals
            .get(&(*university_id, *sds_code))
            .copied()
            .unwrap_or_else(T::zero);
        set.insert(
            ScoreKey::new(*university_id, *sds_code),
            Score {
                fss: total / mass,
                salary_mass: mass,
            },
        );
    }
    Ok(set)
}

/// Salary-weighted mean of FSS_S over universities with FSS_S > 0 in the SDS.
pub fn national_mean_fss_sds<T: Scalar>(scores: &ScoreSet<T>, sds_code: &str) -> Option<T> {
    let (weighted, mass) = scores
        .in_scope(sds_code)
        .filter(|(_, s)| s.fss > T::zero())
        .fold((T::zero(), T::zero()), |(w, m), (_, s)| {
            (w + s.fss * s.salary_mass, m + s.salary_mass)
        });
    (mass > T::zero()).then(|| weighted / mass)
}

pub fn national_means<T: Scalar>(scores: &ScoreSet<T>) -> NationalMeans<T> {
    let means = scores
        .scope_codes()
        .into_iter()
        .filter_map(|sds| national_mean_fss_sds(scores, sds).map(|m| (sds.to_string(), m)))
        .collect();
    NationalMeans { means }
}

/// Salary-weighted mean of `FSS_S / mean` over the given SDS cells that have a
/// national mean. The weight denominator only counts those cells.
fn rollup<'a, T: Scalar>(
    cells: impl Iterator<Item = (&'a str, &'a Score<T>)>,
    means: &NationalMeans<T>,
) -> Option<Score<T>> {
    let terms: Vec<(T, T)> = cells
        .filter_map(|(sds, s)| means.get(sds).map(|m| (s.fss / m, s.salary_mass)))
        .collect();
    let mass: T = terms.iter().map(|(_, m)| *m).sum();
    if terms.is_empty() || mass <= T::zero() {
        return None;
    }
    let fss = terms.iter().map(|(ratio, m)| *ratio * (*m / mass)).sum();
    Some(Score {
        fss,
        salary_mass: mass,
    })
}

/// FSS_U of one university in one UDA.
pub fn fss_uda<T: Scalar>(
    ds: &Dataset,
    sds_scores: &ScoreSet<T>,
    means: &NationalMeans<T>,
    university_id: &str,
    uda_code: &str,
) -> Result<Score<T>> {
    let cells = sds_scores
        .of_university(university_id)
        .filter(|(sds, _)| ds.taxonomy().uda_of(sds) == Some(uda_code));
    rollup(cells, means).ok_or_else(|| {
        Error::Domain(format!(
            "university '{university_id}' has no SDS with a national mean in UDA '{uda_code}'"
        ))
    })
}

/// Overall FSS of one university across all its SDSs.
pub fn fss_university<T: Scalar>(
    ds: &Dataset,
    sds_scores: &ScoreSet<T>,
    means: &NationalMeans<T>,
    university_id: &str,
) -> Result<Score<T>> {
    let _ = ds;
    rollup(sds_scores.of_university(university_id), means).ok_or_else(|| {
        Error::Domain(format!(
            "university '{university_id}' has no SDS with a national mean"
        ))
    })
}

/// FSS_U for every (university, UDA) pair that can be computed.
pub fn uda_scores<T: Scalar>(
    ds: &Dataset,
    sds_scores: &ScoreSet<T>,
    means: &NationalMeans<T>,
) -> ScoreSet<T> {
    let mut set = ScoreSet::new(Level::Uda);
    let pairs: BTreeSet<(&str, &str)> = sds_scores
        .iter()
        .filter_map(|(k, _)| {
            ds.taxonomy()
                .uda_of(&k.scope_code)
                .map(|uda| (k.university_id.as_str(), uda))
        })
        .collect();
    for (uni, uda) in pairs {
        if let Ok(score) = fss_uda(ds, sds_scores, means, uni, uda) {
            set.insert(ScoreKey::new(uni, uda), score);
        }
    }
    set
}

/// Overall FSS for every university that can be computed, under [`OVERALL_SCOPE`].
pub fn university_scores<T: Scalar>(
    ds: &Dataset,
    sds_scores: &ScoreSet<T>,
    means: &NationalMeans<T>,
) -> ScoreSet<T> {
    let mut set = ScoreSet::new(Level::University);
    let universities: BTreeSet<&str> = sds_scores
        .iter()
        .map(|(k, _)| k.university_id.as_str())
        .collect();
    for uni in universities {
        if let Ok(score) = fss_university(ds, sds_scores, means, uni) {
            set.insert(ScoreKey::new(uni, OVERALL_SCOPE), score);
        }
    }
    set
}
