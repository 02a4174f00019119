//! Brute-force recomputation, deliberately sharing nothing with the pipeline
//! beyond the dataset accessors. Every quantity is a direct loop over the
//! formula's index set, in `f64`, with no caching.

use std::collections::{BTreeMap, BTreeSet};

use crate::credit::WeightRules;
use crate::ingest::Dataset;
use crate::model::{
    AcademicRank, BaselineScope, BylineConvention, Level, MultiCategoryRule, Publication,
    QuintileClass,
};

#[derive(Debug, Clone, PartialEq)]
pub struct OracleRank {
    pub university_id: String,
    pub fss: f64,
    pub rank: usize,
    pub percentile: f64,
    pub class: QuintileClass,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct OracleOutput {
    /// SDS codes that survive the publishing-share rule.
    pub kept_sds: BTreeSet<String>,
    /// (university, SDS) → FSS_S
    pub sds: BTreeMap<(String, String), f64>,
    /// (university, UDA) → FSS_U
    pub uda: BTreeMap<(String, String), f64>,
    pub university: BTreeMap<String, f64>,
    /// (level, scope) → entries from worst to best
    pub rankings: BTreeMap<(Level, String), Vec<OracleRank>>,
    /// Overall-vs-UDA R per university; `None` when active in one UDA only.
    pub r_values: BTreeMap<String, Option<f64>>,
}

fn annual_salary(ds: &Dataset, rank: AcademicRank) -> f64 {
    ds.salary_table()
        .iter()
        .find(|(r, _)| *r == rank)
        .map(|(_, s)| s)
        .expect("salary table covers every used rank")
}

fn credit(
    p: &Publication,
    position_index: usize,
    convention: BylineConvention,
    rules: &WeightRules,
) -> f64 {
    let n = p.byline.len();
    if n == 1 {
        return 1.0;
    }
    if convention == BylineConvention::Alphabetical {
        return 1.0 / n as f64;
    }
    let first_aff = &p.byline[0].affiliation_university_id;
    let last_aff = &p.byline[n - 1].affiliation_university_id;
    let same = first_aff.is_some() && first_aff == last_aff;
    let mut raw = Vec::with_capacity(n);
    for i in 0..n {
        let w = if same {
            let w = rules.same_university;
            if i == 0 {
                w.first
            } else if i == n - 1 {
                w.last
            } else {
                w.others / (n - 2) as f64
            }
        } else {
            let w = rules.different_universities;
            if i == 0 {
                w.first
            } else if i == n - 1 {
                w.last
            } else if n == 3 {
                (w.second + w.second_to_last) / 2.0
            } else if i == 1 {
                w.second
            } else if i == n - 2 {
                w.second_to_last
            } else {
                w.others / (n - 4) as f64
            }
        };
        raw.push(w);
    }
    let total: f64 = raw.iter().sum();
    raw[position_index] / total
}

fn baseline(ds: &Dataset, year: i32, category: &str) -> Option<f64> {
    let scope = ds.config().baseline_scope;
    let mut sum = 0.0;
    let mut n = 0usize;
    for q in ds.publications() {
        if q.year == year && q.categories.iter().any(|c| c == category) {
            if scope == BaselineScope::CitedOnly && q.citation_count == 0 {
                continue;
            }
            sum += q.citation_count as f64;
            n += 1;
        }
    }
    (n > 0 && sum > 0.0).then(|| sum / n as f64)
}

fn scaled(ds: &Dataset, p: &Publication) -> f64 {
    if p.citation_count == 0 {
        return 0.0;
    }
    let c = p.citation_count as f64;
    match ds.config().multi_category_rule {
        MultiCategoryRule::PrimaryCategory => {
            c / baseline(ds, p.year, &p.categories[0]).expect("baseline")
        }
        MultiCategoryRule::MeanOfRatios => {
            let ratios: Vec<f64> = p
                .categories
                .iter()
                .filter_map(|cat| baseline(ds, p.year, cat))
                .map(|m| c / m)
                .collect();
            ratios.iter().sum::<f64>() / ratios.len() as f64
        }
    }
}

fn class_of_percentile(p: f64) -> QuintileClass {
    if p <= 20.0 {
        QuintileClass::E
    } else if p <= 40.0 {
        QuintileClass::D
    } else if p <= 60.0 {
        QuintileClass::C
    } else if p <= 80.0 {
        QuintileClass::B
    } else {
        QuintileClass::A
    }
}

fn rank(values: &BTreeMap<String, f64>) -> Option<Vec<OracleRank>> {
    if values.len() < 2 {
        return None;
    }
    let mut order: Vec<(&String, f64)> = values.iter().map(|(k, v)| (k, *v)).collect();
    // stable sort over id-ordered input: ties stay in id order
    order.sort_by(|a, b| a.1.partial_cmp(&b.1).expect("finite"));
    let n = order.len();
    Some(
        order
            .into_iter()
            .enumerate()
            .map(|(i, (u, fss))| {
                let percentile = 100.0 * i as f64 / (n - 1) as f64;
                OracleRank {
                    university_id: u.clone(),
                    fss,
                    rank: i + 1,
                    percentile,
                    class: class_of_percentile(percentile),
                }
            })
            .collect(),
    )
}

/// Recomputes filter, FSS at every level, rankings and overall R.
pub fn oracle_recompute(ds: &Dataset, rules: &WeightRules) -> OracleOutput {
    let config = ds.config();
    let years = (config.period.end_year() - config.period.start_year() + 1) as f64;
    let mut out = OracleOutput::default();

    // publishing-share filter, nation-wide per SDS
    for (sds, _) in ds.taxonomy().entries() {
        let mut total = 0usize;
        let mut published = 0usize;
        for r in ds.researchers().iter().filter(|r| r.sds_code == sds) {
            total += 1;
            let appears = ds.publications().iter().any(|p| {
                p.byline
                    .iter()
                    .any(|a| a.researcher_id.as_deref() == Some(r.researcher_id.as_str()))
            });
            if appears {
                published += 1;
            }
        }
        if total > 0 && published as f64 / total as f64 >= config.min_publishing_share {
            out.kept_sds.insert(sds.to_string());
        }
    }
    let roster: Vec<_> = ds
        .researchers()
        .iter()
        .filter(|r| out.kept_sds.contains(&r.sds_code))
        .collect();
    let cells: BTreeSet<(String, String)> = roster
        .iter()
        .map(|r| (r.university_id.clone(), r.sds_code.clone()))
        .collect();

    // FSS_S and salary mass per cell
    let mut mass: BTreeMap<(String, String), f64> = BTreeMap::new();
    for (u, s) in &cells {
        let convention = ds.taxonomy().convention_of(s).expect("taxonomy");
        let in_cell = |id: &str| {
            ds.researcher(id).is_some_and(|r| {
                out.kept_sds.contains(&r.sds_code) && &r.university_id == u && &r.sds_code == s
            })
        };
        let s_rs: f64 = roster
            .iter()
            .filter(|r| &r.university_id == u && &r.sds_code == s)
            .map(|r| annual_salary(ds, r.academic_rank) * years)
            .sum();
        let mut numerator = 0.0;
        for p in ds.publications() {
            for (i, a) in p.byline.iter().enumerate() {
                if a.researcher_id.as_deref().is_some_and(in_cell) {
                    numerator += scaled(ds, p) * credit(p, i, convention, rules);
                }
            }
        }
        out.sds.insert((u.clone(), s.clone()), numerator / s_rs);
        mass.insert((u.clone(), s.clone()), s_rs);
    }

    // national salary-weighted means over cells with FSS_S > 0
    let mut national: BTreeMap<String, f64> = BTreeMap::new();
    for s in &out.kept_sds {
        let (mut num, mut den) = (0.0, 0.0);
        for ((u, s2), fss) in &out.sds {
            if s2 == s && *fss > 0.0 {
                num += fss * mass[&(u.clone(), s2.clone())];
                den += mass[&(u.clone(), s2.clone())];
            }
        }
        if den > 0.0 {
            national.insert(s.clone(), num / den);
        }
    }

    let universities: BTreeSet<String> = cells.iter().map(|(u, _)| u.clone()).collect();
    let udas: BTreeSet<String> = out
        .kept_sds
        .iter()
        .map(|s| ds.taxonomy().uda_of(s).expect("taxonomy").to_string())
        .collect();
    let rollup = |u: &str, keep: &dyn Fn(&str) -> bool| -> Option<f64> {
        let members: Vec<&(String, String)> = cells
            .iter()
            .filter(|(u2, s)| u2 == u && keep(s) && national.contains_key(s))
            .collect();
        let total: f64 = members.iter().map(|k| mass[*k]).sum();
        if members.is_empty() || total <= 0.0 {
            return None;
        }
        Some(
            members
                .iter()
                .map(|k| out.sds[*k] / national[&k.1] * mass[*k] / total)
                .sum(),
        )
    };
    for u in &universities {
        for d in &udas {
            if let Some(v) = rollup(u, &|s| ds.taxonomy().uda_of(s) == Some(d.as_str())) {
                out.uda.insert((u.clone(), d.clone()), v);
            }
        }
        if let Some(v) = rollup(u, &|_| true) {
            out.university.insert(u.clone(), v);
        }
    }

    // rankings with headcount eligibility
    let headcount = |u: &str, keep: &dyn Fn(&str) -> bool| {
        roster
            .iter()
            .filter(|r| r.university_id == u && keep(&r.sds_code))
            .count()
    };
    for s in &out.kept_sds {
        let values = out
            .sds
            .iter()
            .filter(|((_, s2), _)| s2 == s)
            .map(|((u, _), v)| (u.clone(), *v))
            .collect();
        if let Some(list) = rank(&values) {
            out.rankings.insert((Level::Sds, s.clone()), list);
        }
    }
    for d in &udas {
        let values = out
            .uda
            .iter()
            .filter(|((u, d2), _)| {
                d2 == d
                    && headcount(u, &|s| ds.taxonomy().uda_of(s) == Some(d.as_str()))
                        >= config.min_staff_uda.max(1) as usize
            })
            .map(|((u, _), v)| (u.clone(), *v))
            .collect();
        if let Some(list) = rank(&values) {
            out.rankings.insert((Level::Uda, d.clone()), list);
        }
    }
    let values = out
        .university
        .iter()
        .filter(|(u, _)| headcount(u, &|_| true) >= config.min_staff_university.max(1) as usize)
        .map(|(u, v)| (u.clone(), *v))
        .collect();
    if let Some(list) = rank(&values) {
        out.rankings
            .insert((Level::University, "ALL".to_string()), list);
    }

    // overall R: Δ over UDA classes, divided by the population maximum
    if let Some(overall) = out.rankings.get(&(Level::University, "ALL".to_string())) {
        let mut deltas: BTreeMap<String, Option<f64>> = BTreeMap::new();
        for e in overall {
            let codes: Vec<f64> = out
                .rankings
                .iter()
                .filter(|((level, _), _)| *level == Level::Uda)
                .filter_map(|(_, list)| list.iter().find(|x| x.university_id == e.university_id))
                .map(|x| x.class.code() as f64)
                .collect();
            let n = codes.len();
            let delta = (n >= 2).then(|| {
                let mut s = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        if i != j {
                            s += (codes[i] - codes[j]).abs();
                        }
                    }
                }
                s / (n * (n - 1)) as f64
            });
            deltas.insert(e.university_id.clone(), delta);
        }
        let max = deltas.values().flatten().fold(f64::NAN, |m, d| m.max(*d));
        out.r_values = deltas
            .into_iter()
            .map(|(u, d)| (u, d.map(|d| if max > 0.0 { d / max } else { 0.0 })))
            .collect();
    }
    out
}
