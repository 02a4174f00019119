//! Fractional author credit.
//!
//! Alphabetical fields split a publication equally among its authors. In
//! position-weighted fields first and last authors carry most of the credit;
//! how much depends on whether they share a university. When slots of the
//! weight table are empty (short bylines) the raw weights are rescaled to
//! sum to one, which keeps the ratios between the filled slots.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BylineConvention, Publication};
use crate::Scalar;

/// First and last authors from the same university.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntramuralWeights {
    pub first: f64,
    pub last: f64,
    /// Split equally among all middle authors.
    pub others: f64,
}

/// Every other affiliation pattern.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtramuralWeights {
    pub first: f64,
    pub last: f64,
    pub second: f64,
    pub second_to_last: f64,
    /// Split equally among positions 3..n-2.
    pub others: f64,
}

/// Positional weight table for [`BylineConvention::PositionWeighted`].
///
/// Serialized as TOML:
///
/// ```toml
/// [same_university]
/// first = 0.4
/// last = 0.4
/// others = 0.2
///
/// [different_universities]
/// first = 0.3
/// last = 0.3
/// second = 0.15
/// second_to_last = 0.15
/// others = 0.1
/// ```
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightRules {
    pub same_university: IntramuralWeights,
    pub different_universities: ExtramuralWeights,
}

impl Default for WeightRules {
    fn default() -> Self {
        Self {
            same_university: IntramuralWeights {
                first: 0.40,
                last: 0.40,
                others: 0.20,
            },
            different_universities: ExtramuralWeights {
                first: 0.30,
                last: 0.30,
                second: 0.15,
                second_to_last: 0.15,
                others: 0.10,
            },
        }
    }
}

impl WeightRules {
    pub fn validate(&self) -> Result<()> {
        let s = &self.same_university;
        let d = &self.different_universities;
        let all = [
            ("same_university.first", s.first),
            ("same_university.last", s.last),
            ("same_university.others", s.others),
            ("different_universities.first", d.first),
            ("different_universities.last", d.last),
            ("different_universities.second", d.second),
            ("different_universities.second_to_last", d.second_to_last),
            ("different_universities.others", d.others),
        ];
        for (name, w) in all {
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::Config(format!(
                    "weight {name} must be positive, got {w}"
                )));
            }
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let rules: WeightRules =
            toml::from_str(text).map_err(|e| Error::Config(format!("weight rules: {e}")))?;
        rules.validate()?;
        Ok(rules)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("weight rules serialize")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }
}

/// Credit share of every byline position; index 0 is position 1.
#[derive(Debug, Clone, PartialEq)]
pub struct CreditVector<T> {
    weights: Vec<T>,
}

impl<T: Scalar> CreditVector<T> {
    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    /// Weight at a 1-based position.
    pub fn weight(&self, position: u32) -> Option<T> {
        self.weights
            .get(usize::try_from(position).ok()?.checked_sub(1)?)
            .copied()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn total(&self) -> T {
        self.weights.iter().copied().sum()
    }

    fn normalized(raw: Vec<T>) -> Self {
        let total: T = raw.iter().copied().sum();
        Self {
            weights: raw.into_iter().map(|w| w / total).collect(),
        }
    }
}

fn same_university(publication: &Publication) -> bool {
    let first = publication
        .byline
        .first()
        .and_then(|a| a.affiliation_university_id.as_deref());
    let last = publication
        .byline
        .last()
        .and_then(|a| a.affiliation_university_id.as_deref());
    matches!((first, last), (Some(f), Some(l)) if f == l)
}

/// Fractional credit for every byline position of `publication`.
pub fn credit_vector<T: Scalar>(
    publication: &Publication,
    convention: BylineConvention,
    rules: &WeightRules,
) -> CreditVector<T> {
    let n = publication.byline.len();
    if n == 0 {
        return CreditVector {
            weights: Vec::new(),
        };
    }
    let count = |k: usize| T::from_usize(k).expect("small count");
    if n == 1 {
        return CreditVector {
            weights: vec![T::one()],
        };
    }
    match convention {
        BylineConvention::Alphabetical => CreditVector {
            weights: vec![T::one() / count(n); n],
        },
        BylineConvention::PositionWeighted if same_university(publication) => {
            let w = &rules.same_university;
            let mut raw = vec![T::zero(); n];
            raw[0] = T::lit(w.first);
            raw[n - 1] = T::lit(w.last);
            if n > 2 {
                let each = T::lit(w.others) / count(n - 2);
                for slot in &mut raw[1..n - 1] {
                    *slot = each;
                }
            }
            CreditVector::normalized(raw)
        }
        BylineConvention::PositionWeighted => {
            let w = &rules.different_universities;
            log_mixed_pattern(publication);
            let mut raw = vec![T::zero(); n];
            raw[0] = T::lit(w.first);
            raw[n - 1] = T::lit(w.last);
            match n {
                2 => {}
                // second and second-to-last are the same author
                3 => raw[1] = (T::lit(w.second) + T::lit(w.second_to_last)) / count(2),
                _ => {
                    raw[1] = T::lit(w.second);
                    raw[n - 2] = T::lit(w.second_to_last);
                    if n > 4 {
                        let each = T::lit(w.others) / count(n - 4);
                        for slot in &mut raw[2..n - 2] {
                            *slot = each;
                        }
                    }
                }
            }
            CreditVector::normalized(raw)
        }
    }
}

fn log_mixed_pattern(publication: &Publication) {
    if !log::log_enabled!(log::Level::Debug) {
        return;
    }
    let aff = |i: usize| {
        publication
            .byline
            .get(i)
            .and_then(|a| a.affiliation_university_id.as_deref())
    };
    let n = publication.byline.len();
    if n < 4 {
        return;
    }
    let head = [aff(0), aff(1)];
    let tail = [aff(n - 2), aff(n - 1)];
    let overlap = head
        .iter()
        .flatten()
        .any(|h| tail.iter().flatten().any(|t| t == h));
    if overlap || head.contains(&None) || tail.contains(&None) {
        log::debug!(
            "publication {}: mixed or incomplete affiliation pattern, using different-university weights",
            publication.pub_id
        );
    }
}

/// Total credit `researcher_id` holds on `publication` (normally a single position).
pub fn contribution_of<T: Scalar>(
    publication: &Publication,
    researcher_id: &str,
    convention: BylineConvention,
    rules: &WeightRules,
) -> Result<T> {
    if !publication.has_researcher(researcher_id) {
        return Err(Error::Lookup(format!(
            "researcher '{researcher_id}' is not on the byline of '{}'",
            publication.pub_id
        )));
    }
    let credit = credit_vector::<T>(publication, convention, rules);
    Ok(publication
        .byline
        .iter()
        .zip(credit.weights())
        .filter(|(a, _)| a.researcher_id.as_deref() == Some(researcher_id))
        .map(|(_, w)| *w)
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Authorship;
    use proptest::prelude::*;

    fn publication(affiliations: &[&str]) -> Publication {
        Publication {
            pub_id: "P".into(),
            year: 2005,
            citation_count: 1,
            categories: vec!["X".into()],
            byline: affiliations
                .iter()
                .enumerate()
                .map(|(i, a)| Authorship {
                    position: i as u32 + 1,
                    author_key: format!("k{i}"),
                    researcher_id: Some(format!("R{i}")),
                    affiliation_university_id: (!a.is_empty()).then(|| a.to_string()),
                })
                .collect(),
        }
    }

    fn weights(p: &Publication, c: BylineConvention) -> Vec<f64> {
        credit_vector::<f64>(p, c, &WeightRules::default())
            .weights()
            .to_vec()
    }

    fn assert_close(actual: &[f64], expected: &[f64], tol: f64) {
        assert_eq!(actual.len(), expected.len());
        for (a, e) in actual.iter().zip(expected) {
            assert!((a - e).abs() < tol, "{actual:?} vs {expected:?}");
        }
    }

    #[test]
    fn alphabetical_is_equal_split() {
        let p = publication(&["U", "V", "W", "U"]);
        assert_close(
            &weights(&p, BylineConvention::Alphabetical),
            &[0.25; 4],
            1e-15,
        );
    }

    #[test]
    fn position_weighted_same_university() {
        let p = publication(&["U", "V", "W", "X", "U"]);
        let m = 0.2 / 3.0;
        assert_close(
            &weights(&p, BylineConvention::PositionWeighted),
            &[0.40, m, m, m, 0.40],
            1e-12,
        );
    }

    #[test]
    fn position_weighted_different_universities() {
        let p = publication(&["U", "V", "W", "X", "Y", "Z"]);
        assert_close(
            &weights(&p, BylineConvention::PositionWeighted),
            &[0.30, 0.15, 0.05, 0.05, 0.15, 0.30],
            1e-12,
        );
    }

    #[test]
    fn four_authors_different_universities_renormalized() {
        let p = publication(&["U", "V", "W", "X"]);
        assert_close(
            &weights(&p, BylineConvention::PositionWeighted),
            &[0.3 / 0.9, 0.15 / 0.9, 0.15 / 0.9, 0.3 / 0.9],
            1e-12,
        );
    }

    #[test]
    fn short_bylines() {
        for c in [
            BylineConvention::Alphabetical,
            BylineConvention::PositionWeighted,
        ] {
            assert_eq!(weights(&publication(&["U"]), c), [1.0]);
            assert_close(&weights(&publication(&["U", "U"]), c), &[0.5, 0.5], 1e-15);
            assert_close(&weights(&publication(&["U", "V"]), c), &[0.5, 0.5], 1e-15);
        }
        // n = 3, different universities: raw (0.30, 0.15, 0.30)
        assert_close(
            &weights(
                &publication(&["U", "V", "W"]),
                BylineConvention::PositionWeighted,
            ),
            &[0.4, 0.2, 0.4],
            1e-12,
        );
        assert_close(
            &weights(
                &publication(&["U", "V", "U"]),
                BylineConvention::PositionWeighted,
            ),
            &[0.4, 0.2, 0.4],
            1e-12,
        );
    }

    #[test]
    fn missing_affiliation_counts_as_different() {
        let p = publication(&["", "V", "W", "X", "Y", ""]);
        assert_close(
            &weights(&p, BylineConvention::PositionWeighted),
            &[0.30, 0.15, 0.05, 0.05, 0.15, 0.30],
            1e-12,
        );
    }

    #[test]
    fn contribution_lookup() {
        let solo = publication(&["U"]);
        let c: f64 = contribution_of(
            &solo,
            "R0",
            BylineConvention::PositionWeighted,
            &WeightRules::default(),
        )
        .unwrap();
        assert_eq!(c, 1.0);

        let p = publication(&["U", "V", "W", "X", "U"]);
        let c: f64 = contribution_of(
            &p,
            "R2",
            BylineConvention::PositionWeighted,
            &WeightRules::default(),
        )
        .unwrap();
        assert!((c - 0.0667).abs() < 1e-4);

        let err = contribution_of::<f64>(
            &p,
            "R9",
            BylineConvention::Alphabetical,
            &WeightRules::default(),
        );
        assert!(matches!(err, Err(Error::Lookup(_))));
    }

    #[test]
    fn contribution_sums_repeated_positions() {
        let mut p = publication(&["U", "V", "W", "X"]);
        p.byline[3].researcher_id = Some("R0".into());
        let c: f64 = contribution_of(
            &p,
            "R0",
            BylineConvention::Alphabetical,
            &WeightRules::default(),
        )
        .unwrap();
        assert!((c - 0.5).abs() < 1e-15);
    }

    #[test]
    fn toml_round_trip_and_validation() {
        let rules = WeightRules::default();
        let text = rules.to_toml_string();
        assert_eq!(WeightRules::from_toml_str(&text).unwrap(), rules);

        let bad = text.replace("others = 0.2", "others = 0.0");
        assert!(WeightRules::from_toml_str(&bad).is_err());
        assert!(WeightRules::from_toml_str("[same_university]\nfirst = 1.0\n").is_err());
    }

    fn byline_strategy() -> impl Strategy<Value = Vec<&'static str>> {
        prop::collection::vec(prop::sample::select(vec!["U", "V", "W", ""]), 1..12)
    }

    proptest! {
        #[test]
        fn credit_is_conserved_and_positive(affs in byline_strategy()) {
            let p = publication(&affs);
            for c in [BylineConvention::Alphabetical, BylineConvention::PositionWeighted] {
                let w = credit_vector::<f64>(&p, c, &WeightRules::default());
                prop_assert_eq!(w.len(), affs.len());
                prop_assert!((w.total() - 1.0).abs() < 1e-12);
                prop_assert!(w.weights().iter().all(|&x| x > 0.0));
            }
        }

        #[test]
        fn position_weighted_is_reversal_symmetric(affs in byline_strategy()) {
            let p = publication(&affs);
            let mut rev: Vec<&str> = affs.clone();
            rev.reverse();
            let q = publication(&rev);
            let w = weights(&p, BylineConvention::PositionWeighted);
            let mut wr = weights(&q, BylineConvention::PositionWeighted);
            wr.reverse();
            for (a, b) in w.iter().zip(&wr) {
                prop_assert!((a - b).abs() < 1e-15);
            }
        }

        #[test]
        fn alphabetical_is_permutation_invariant(affs in byline_strategy(), seed in any::<u64>()) {
            let p = publication(&affs);
            let mut shuffled = affs.clone();
            let k = (seed as usize) % shuffled.len();
            shuffled.rotate_left(k);
            let q = publication(&shuffled);
            prop_assert_eq!(weights(&p, BylineConvention::Alphabetical), weights(&q, BylineConvention::Alphabetical));
        }
    }
}
