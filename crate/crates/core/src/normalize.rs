//! Field-normalized citation scores.
//!
//! A publication's citations are divided by the mean citations of the
//! publications sharing its year and subject category. Under
//! [`BaselineScope::CitedOnly`] the mean is taken over cited publications only.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::ingest::Dataset;
use crate::model::{BaselineScope, MultiCategoryRule, Publication};
use crate::Scalar;

/// (year, subject category)
pub type CellKey = (i32, String);

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineTable<T> {
    means: BTreeMap<CellKey, T>,
    counts: BTreeMap<CellKey, usize>,
    scope: BaselineScope,
}

impl<T: Scalar> BaselineTable<T> {
    pub fn mean(&self, year: i32, category: &str) -> Option<T> {
        self.means.get(&(year, category.to_string())).copied()
    }

    /// Publications that contributed to the cell's mean.
    pub fn count(&self, year: i32, category: &str) -> usize {
        self.counts
            .get(&(year, category.to_string()))
            .copied()
            .unwrap_or(0)
    }

    pub fn scope(&self) -> BaselineScope {
        self.scope
    }

    pub fn len(&self) -> usize {
        self.means.len()
    }

    pub fn is_empty(&self) -> bool {
        self.means.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&CellKey, T)> + '_ {
        self.means.iter().map(|(k, v)| (k, *v))
    }
}

/// Mean of a cell's citation values, or `None` when no value qualifies.
pub fn cell_baseline<T: Scalar>(values: &[T], scope: BaselineScope) -> Option<T> {
    let (sum, n) = values
        .iter()
        .filter(|&&v| scope == BaselineScope::All || v > T::zero())
        .fold((T::zero(), 0usize), |(s, n), &v| (s + v, n + 1));
    if n == 0 || sum <= T::zero() {
        return None;
    }
    Some(sum / T::from_usize(n)?)
}

/// Builds the per-(year, category) denominators from every publication in the dataset.
///
/// A publication listed under several categories feeds each of their cells.
pub fn build_baselines<T: Scalar>(ds: &Dataset) -> BaselineTable<T> {
    let scope = ds.config().baseline_scope;
    let mut values: BTreeMap<CellKey, Vec<T>> = BTreeMap::new();
    for p in ds.publications() {
        let c = T::from_u64(p.citation_count).expect("citation count fits the scalar type");
        for cat in &p.categories {
            values.entry((p.year, cat.clone())).or_default().push(c);
        }
    }
    let mut means = BTreeMap::new();
    let mut counts = BTreeMap::new();
    for (key, vals) in values {
        if let Some(m) = cell_baseline(&vals, scope) {
            let n = vals
                .iter()
                .filter(|&&v| scope == BaselineScope::All || v > T::zero())
                .count();
            counts.insert(key.clone(), n);
            means.insert(key, m);
        }
    }
    BaselineTable {
        means,
        counts,
        scope,
    }
}

/// Citation count divided by the category baseline (`c / c̄`).
pub fn scaled_citation<T: Scalar>(
    publication: &Publication,
    baselines: &BaselineTable<T>,
    rule: MultiCategoryRule,
) -> Result<T> {
    if publication.citation_count == 0 {
        return Ok(T::zero());
    }
    let c = T::from_u64(publication.citation_count).expect("citation count fits the scalar type");
    let missing = || {
        Error::Analysis(format!(
            "publication '{}' ({}) has no citation baseline for categories {:?}",
            publication.pub_id, publication.year, publication.categories
        ))
    };
    match rule {
        MultiCategoryRule::PrimaryCategory => {
            let primary = publication.categories.first().ok_or_else(missing)?;
            let mean = baselines
                .mean(publication.year, primary)
                .ok_or_else(missing)?;
            Ok(c / mean)
        }
        MultiCategoryRule::MeanOfRatios => {
            let ratios: Vec<T> = publication
                .categories
                .iter()
                .filter_map(|cat| baselines.mean(publication.year, cat))
                .map(|mean| c / mean)
                .collect();
            if ratios.is_empty() {
                return Err(missing());
            }
            let n = T::from_usize(ratios.len()).expect("small count");
            Ok(ratios.into_iter().sum::<T>() / n)
        }
    }
}
