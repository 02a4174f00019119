//! Percentile rankings and quintile classes.
//!
//! Within a scope, universities are sorted by FSS ascending (ties by id), get
//! rank `r` in `1..=N` (1 is worst) and percentile `100 (r - 1) / (N - 1)`.
//! Classes bin the percentile: E `[0,20]`, D `(20,40]`, C `(40,60]`,
//! B `(60,80]`, A `(80,100]`. With this rule N = 61 splits 12/12/12/12/13
//! and N = 43 splits 9/8/9/8/9 (A to E).

use std::cmp::Ordering;
use std::collections::BTreeSet;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ingest::Dataset;
use crate::model::{Level, QuintileClass};
use crate::productivity::ScoreSet;
use crate::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedEntry<T> {
    pub university_id: String,
    pub fss: T,
    /// 1 is the worst.
    pub rank: usize,
    pub percentile: T,
    pub class: QuintileClass,
}

/// One scope's ranking, sorted by FSS ascending.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankingList<T> {
    pub level: Level,
    pub scope_code: String,
    entries: Vec<RankedEntry<T>>,
}

impl<T: Scalar> RankingList<T> {
    pub fn entries(&self) -> &[RankedEntry<T>] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, university_id: &str) -> Option<&RankedEntry<T>> {
        self.entries
            .iter()
            .find(|e| e.university_id == university_id)
    }

    pub fn class_of(&self, university_id: &str) -> Option<QuintileClass> {
        self.get(university_id).map(|e| e.class)
    }

    /// Number of universities per class, A to E.
    pub fn class_counts(&self) -> [usize; 5] {
        let mut counts = [0; 5];
        for e in &self.entries {
            counts[e.class.index()] += 1;
        }
        counts
    }

    /// Ranks the list's own (university, fss) pairs again.
    pub fn rerank(&self) -> Result<RankingList<T>> {
        rank_entries(
            self.level,
            &self.scope_code,
            self.entries
                .iter()
                .map(|e| (e.university_id.clone(), e.fss))
                .collect(),
        )
    }
}

/// Quintile class of rank `rank` among `n`, in exact integer arithmetic.
pub fn class_for_rank(rank: usize, n: usize) -> QuintileClass {
    assert!(
        n >= 2 && (1..=n).contains(&rank),
        "rank {rank} out of 1..={n}"
    );
    // percentile ≤ 20k  ⇔  100 (r - 1) ≤ 20 k (n - 1)
    let scaled = 100 * (rank - 1);
    let k = (1..=5).find(|k| scaled <= 20 * k * (n - 1)).unwrap_or(5);
    QuintileClass::ALL[5 - k]
}

pub fn percentile<T: Scalar>(rank: usize, n: usize) -> T {
    let hundred = T::lit(100.0);
    hundred * T::from_usize(rank - 1).expect("rank") / T::from_usize(n - 1).expect("size")
}

/// Ranks (university_id, fss) pairs. Needs at least two entries.
pub fn rank_entries<T: Scalar>(
    level: Level,
    scope_code: &str,
    mut entries: Vec<(String, T)>,
) -> Result<RankingList<T>> {
    if entries.len() < 2 {
        return Err(Error::Domain(format!(
            "{level} scope '{scope_code}' has {} eligible universities, need at least 2",
            entries.len()
        )));
    }
    entries.sort_by(|a, b| {
        a.1.partial_cmp(&b.1)
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.0.cmp(&b.0))
    });
    let n = entries.len();
    let entries = entries
        .into_iter()
        .enumerate()
        .map(|(i, (university_id, fss))| RankedEntry {
            university_id,
            fss,
            rank: i + 1,
            percentile: percentile(i + 1, n),
            class: class_for_rank(i + 1, n),
        })
        .collect();
    Ok(RankingList {
        level,
        scope_code: scope_code.to_string(),
        entries,
    })
}

/// Ranks the universities of `scope_code` in `scores` that are in `eligible`.
pub fn rank_and_classify<T: Scalar>(
    scores: &ScoreSet<T>,
    scope_code: &str,
    eligible: &BTreeSet<String>,
) -> Result<RankingList<T>> {
    let entries = scores
        .in_scope(scope_code)
        .filter(|(u, _)| eligible.contains(*u))
        .map(|(u, s)| (u.to_string(), s.fss))
        .collect();
    rank_entries(scores.level(), scope_code, entries)
}

/// Universities allowed into a ranking, by research-staff headcount.
///
/// SDS level admits every university with staff in the SDS; UDA and
/// university level apply `min_staff_uda` / `min_staff_university`.
pub fn eligible_universities(ds: &Dataset, level: Level, scope_code: &str) -> BTreeSet<String> {
    let config = ds.config();
    let threshold = match level {
        Level::Sds => 1,
        Level::Uda => config.min_staff_uda,
        Level::University => config.min_staff_university,
    };
    let in_scope = |sds: &str| match level {
        Level::Sds => sds == scope_code,
        Level::Uda => ds.taxonomy().uda_of(sds) == Some(scope_code),
        Level::University => true,
    };
    let mut headcount: std::collections::BTreeMap<&str, u32> = Default::default();
    for r in ds.researchers() {
        if in_scope(&r.sds_code) {
            *headcount.entry(r.university_id.as_str()).or_default() += 1;
        }
    }
    headcount
        .into_iter()
        .filter(|&(_, n)| n >= threshold.max(1))
        .map(|(u, _)| u.to_string())
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankingOutcome<T> {
    /// By level (SDS, UDA, university) then scope code.
    pub lists: Vec<RankingList<T>>,
    pub warnings: Vec<String>,
}

/// Ranks every scope of every score set; scopes with fewer than two eligible
/// universities are skipped with a warning.
pub fn rank_all<T: Scalar>(ds: &Dataset, sets: &[&ScoreSet<T>]) -> RankingOutcome<T> {
    let mut lists = Vec::new();
    let mut warnings = Vec::new();
    let mut sets: Vec<&&ScoreSet<T>> = sets.iter().collect();
    sets.sort_by_key(|s| s.level());
    for set in sets {
        for scope in set.scope_codes() {
            let eligible = eligible_universities(ds, set.level(), scope);
            match rank_and_classify(set, scope, &eligible) {
                Ok(list) => lists.push(list),
                Err(e) => warnings.push(e.to_string()),
            }
        }
    }
    RankingOutcome { lists, warnings }
}
