//! Within-university performance dispersion.
//!
//! For a university active in `n ≥ 2` sub-scopes with quintile codes `x_i`
//! (A = 1 ... E = 5), the mutual variability index is the mean absolute
//! difference over ordered pairs:
//!
//! ```text
//! Δ = Σ_{i≠j} |x_i - x_j| / (n (n - 1))
//! ```
//!
//! (equivalently twice the unordered-pair sum over the same denominator).
//! `R = Δ / max Δ`, the maximum taken over the analyzed population.
//!
//! Δ and R are kept as exact rationals internally so that band edges
//! (0.2, 0.4, ...) and the median are decided without rounding; they are
//! converted to the float type only on output.

use std::collections::BTreeMap;

use num_rational::Ratio;
use num_traits::ToPrimitive;
use serde::Serialize;

use crate::model::{Level, QuintileClass};
use crate::productivity::OVERALL_SCOPE;
use crate::ranking::RankingList;
use crate::Scalar;

/// Exact rational used for Δ and R.
pub type Exact = Ratio<u64>;

/// Quintile classes of one university across the sub-scopes it is ranked in.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassProfile {
    pub university_id: String,
    /// Class at the enclosing level (overall, or the UDA for an SDS breakdown).
    pub overall_class: QuintileClass,
    pub sub_classes: BTreeMap<String, QuintileClass>,
    /// Research staff headcount, when known.
    pub staff: Option<u64>,
}

impl ClassProfile {
    pub fn n_active(&self) -> usize {
        self.sub_classes.len()
    }

    pub fn codes(&self) -> Vec<u8> {
        self.sub_classes.values().map(|c| c.code()).collect()
    }
}

/// Δ as an exact fraction; `None` for fewer than two classes.
pub fn delta_exact(codes: &[u8]) -> Option<Exact> {
    let n = codes.len() as u64;
    if n < 2 {
        return None;
    }
    let mut sum = 0u64;
    for (i, a) in codes.iter().enumerate() {
        for b in &codes[i + 1..] {
            sum += u64::from(a.abs_diff(*b));
        }
    }
    Some(Ratio::new(2 * sum, n * (n - 1)))
}

pub fn delta_index<T: Scalar>(classes: &[QuintileClass]) -> Option<T> {
    let codes: Vec<u8> = classes.iter().map(|c| c.code()).collect();
    delta_exact(&codes).map(to_scalar)
}

fn to_scalar<T: Scalar>(r: Exact) -> T {
    T::from_f64(r.to_f64().expect("finite ratio")).expect("finite value")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniversityDispersion<T> {
    pub university_id: String,
    pub overall_class: QuintileClass,
    pub n_active: usize,
    pub staff: Option<u64>,
    /// `None` when `n_active < 2`.
    pub delta: Option<T>,
    /// `None` when `n_active < 2`.
    pub r: Option<T>,
    #[serde(skip)]
    r_exact: Option<Exact>,
}

impl<T: Scalar> UniversityDispersion<T> {
    pub fn r_exact(&self) -> Option<Exact> {
        self.r_exact
    }
}

/// Δ and R for every profile, plus the population maximum Δ.
///
/// Profiles with a single active sub-scope keep a row with `delta`/`r` unset.
/// The maximum is `None` when no profile has two or more sub-scopes.
pub fn standardized_r<T: Scalar>(
    profiles: &[ClassProfile],
) -> (Vec<UniversityDispersion<T>>, Option<T>) {
    let deltas: Vec<Option<Exact>> = profiles.iter().map(|p| delta_exact(&p.codes())).collect();
    let max = deltas.iter().flatten().max().copied();
    let rows = profiles
        .iter()
        .zip(&deltas)
        .map(|(p, d)| {
            let r_exact = match (d, max) {
                (Some(d), Some(m)) if *m.numer() > 0 => Some(d / m),
                (Some(_), Some(_)) => Some(Ratio::from_integer(0)),
                _ => None,
            };
            UniversityDispersion {
                university_id: p.university_id.clone(),
                overall_class: p.overall_class,
                n_active: p.n_active(),
                staff: p.staff,
                delta: d.map(to_scalar),
                r: r_exact.map(to_scalar),
                r_exact,
            }
        })
        .collect();
    (rows, max.map(to_scalar))
}

/// How a concordance row averages the sub-scope classes of its universities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConcordanceMode {
    /// Mean over universities of each university's class shares.
    #[default]
    MeanOfShares,
    /// Shares of all sub-scopes of the group pooled together.
    Pooled,
}

impl std::str::FromStr for ConcordanceMode {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mean" | "mean_of_shares" => Ok(ConcordanceMode::MeanOfShares),
            "pooled" => Ok(ConcordanceMode::Pooled),
            other => Err(crate::Error::Config(format!(
                "unknown concordance mode '{other}'"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcordanceRow<T> {
    pub overall_class: QuintileClass,
    pub n_universities: usize,
    /// Percentages of sub-scopes in A..E; `None` for an empty group.
    pub shares: Option<[T; 5]>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcordanceMatrix<T> {
    pub mode: ConcordanceMode,
    /// One row per overall class, A first.
    pub rows: Vec<ConcordanceRow<T>>,
}

impl<T: Scalar> ConcordanceMatrix<T> {
    pub fn row(&self, class: QuintileClass) -> &ConcordanceRow<T> {
        &self.rows[class.index()]
    }
}

pub fn concordance_matrix<T: Scalar>(
    profiles: &[ClassProfile],
    mode: ConcordanceMode,
) -> ConcordanceMatrix<T> {
    let hundred = T::lit(100.0);
    let rows = QuintileClass::ALL
        .into_iter()
        .map(|g| {
            let group: Vec<&ClassProfile> = profiles
                .iter()
                .filter(|p| p.overall_class == g && !p.sub_classes.is_empty())
                .collect();
            let shares = (!group.is_empty()).then(|| {
                let mut acc = [T::zero(); 5];
                match mode {
                    ConcordanceMode::MeanOfShares => {
                        for p in &group {
                            let n = T::from_usize(p.n_active()).expect("count");
                            for c in p.sub_classes.values() {
                                acc[c.index()] = acc[c.index()] + T::one() / n;
                            }
                        }
                        let m = T::from_usize(group.len()).expect("count");
                        acc.map(|v| v / m * hundred)
                    }
                    ConcordanceMode::Pooled => {
                        let mut counts = [0usize; 5];
                        for p in &group {
                            for c in p.sub_classes.values() {
                                counts[c.index()] += 1;
                            }
                        }
                        let total = T::from_usize(counts.iter().sum()).expect("count");
                        counts.map(|c| T::from_usize(c).expect("count") / total * hundred)
                    }
                }
            });
            ConcordanceRow {
                overall_class: g,
                n_universities: group.len(),
                shares,
            }
        })
        .collect();
    ConcordanceMatrix { mode, rows }
}

/// Sample Pearson correlation; `None` for length mismatch, `n < 2` or zero variance.
pub fn pearson<T: Scalar>(x: &[T], y: &[T]) -> Option<T> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let n = T::from_usize(x.len())?;
    let mx = x.iter().copied().sum::<T>() / n;
    let my = y.iter().copied().sum::<T>() / n;
    let (mut sxy, mut sxx, mut syy) = (T::zero(), T::zero(), T::zero());
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (*a - mx, *b - my);
        sxy = sxy + dx * dy;
        sxx = sxx + dx * dx;
        syy = syy + dy * dy;
    }
    if sxx <= T::zero() || syy <= T::zero() {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).max(-T::one()).min(T::one()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Band<T> {
    pub lower: T,
    pub upper: T,
    pub count: usize,
    /// Percentage of defined R values.
    pub share: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RDistribution<T> {
    pub n: usize,
    pub median: T,
    /// `[0,0.2)`, `[0.2,0.4)`, `[0.4,0.6)`, `[0.6,0.8)`, `[0.8,1]`.
    pub bands: Vec<Band<T>>,
}

/// Band index of an exact R: `floor(5 R)`, with R = 1 in the last band.
pub fn band_of(r: Exact) -> usize {
    (r * Ratio::from_integer(5)).to_integer().min(4) as usize
}

pub fn r_distribution_stats<T: Scalar>(
    rows: &[UniversityDispersion<T>],
) -> Option<RDistribution<T>> {
    let mut rs: Vec<Exact> = rows.iter().filter_map(|r| r.r_exact).collect();
    if rs.is_empty() {
        return None;
    }
    rs.sort();
    let n = rs.len();
    let median = if n % 2 == 1 {
        rs[n / 2]
    } else {
        (rs[n / 2 - 1] + rs[n / 2]) / Ratio::from_integer(2)
    };
    let mut counts = [0usize; 5];
    for r in &rs {
        counts[band_of(*r)] += 1;
    }
    let total = T::from_usize(n).expect("count");
    let bands = counts
        .iter()
        .enumerate()
        .map(|(i, &count)| Band {
            lower: T::lit(i as f64 * 0.2),
            upper: T::lit((i + 1) as f64 * 0.2),
            count,
            share: T::from_usize(count).expect("count") / total * T::lit(100.0),
        })
        .collect();
    Some(RDistribution {
        n,
        median: to_scalar(median),
        bands,
    })
}

pub const CORR_N_ACTIVE_R: &str = "n_active_vs_r";
pub const CORR_STAFF_R: &str = "staff_vs_r";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DispersionReport<T> {
    pub per_university: Vec<UniversityDispersion<T>>,
    pub max_delta: Option<T>,
    pub concordance: ConcordanceMatrix<T>,
    pub stats: Option<RDistribution<T>>,
    /// `None` values are undefined correlations (zero variance).
    pub correlations: BTreeMap<String, Option<T>>,
    pub warnings: Vec<String>,
}

impl<T: Scalar> DispersionReport<T> {
    pub fn row(&self, university_id: &str) -> Option<&UniversityDispersion<T>> {
        self.per_university
            .iter()
            .find(|r| r.university_id == university_id)
    }
}

/// Everything at once: Δ/R rows, concordance, R distribution and correlations
/// of R with the number of active sub-scopes and (if known for all) staff size.
pub fn dispersion_report<T: Scalar>(
    profiles: &[ClassProfile],
    mode: ConcordanceMode,
) -> DispersionReport<T> {
    let (per_university, max_delta) = standardized_r::<T>(profiles);
    let mut warnings = Vec::new();
    if max_delta.is_none() {
        warnings.push("no university is active in two or more scopes; R is undefined".to_string());
    }
    let defined: Vec<&UniversityDispersion<T>> =
        per_university.iter().filter(|r| r.r.is_some()).collect();
    let r_values: Vec<T> = defined.iter().map(|r| r.r.expect("defined")).collect();
    let mut correlations = BTreeMap::new();
    if !defined.is_empty() {
        let n_active: Vec<T> = defined
            .iter()
            .map(|r| T::from_usize(r.n_active).expect("count"))
            .collect();
        correlations.insert(CORR_N_ACTIVE_R.to_string(), pearson(&n_active, &r_values));
        let staff: Option<Vec<T>> = defined
            .iter()
            .map(|r| r.staff.map(|s| T::from_u64(s).expect("count")))
            .collect();
        if let Some(staff) = staff {
            correlations.insert(CORR_STAFF_R.to_string(), pearson(&staff, &r_values));
        }
    }
    DispersionReport {
        stats: r_distribution_stats(&per_university),
        concordance: concordance_matrix(profiles, mode),
        per_university,
        max_delta,
        correlations,
        warnings,
    }
}

/// Profiles from computed rankings: the parent list gives the overall class,
/// each child list a sub-scope class. Universities missing from the parent
/// list are not profiled.
pub fn profiles_from_rankings<T: Scalar>(
    parent: &RankingList<T>,
    children: &[&RankingList<T>],
    staff: Option<&BTreeMap<String, u64>>,
) -> Vec<ClassProfile> {
    parent
        .entries()
        .iter()
        .map(|e| ClassProfile {
            university_id: e.university_id.clone(),
            overall_class: e.class,
            sub_classes: children
                .iter()
                .filter_map(|l| {
                    l.class_of(&e.university_id)
                        .map(|c| (l.scope_code.clone(), c))
                })
                .collect(),
            staff: staff.and_then(|s| s.get(&e.university_id).copied()),
        })
        .collect()
}

/// Overall-vs-UDA profiles from a full set of ranking lists.
pub fn overall_profiles<T: Scalar>(lists: &[RankingList<T>]) -> Vec<ClassProfile> {
    let Some(parent) = lists
        .iter()
        .find(|l| l.level == Level::University && l.scope_code == OVERALL_SCOPE)
    else {
        return Vec::new();
    };
    let children: Vec<&RankingList<T>> = lists.iter().filter(|l| l.level == Level::Uda).collect();
    profiles_from_rankings(parent, &children, None)
}
