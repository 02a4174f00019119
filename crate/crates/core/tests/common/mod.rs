//! Checks shared by the acceptance runner and the property tests. Each
//! returns `Err(description)` on the first violation.
#![allow(dead_code)]

use std::collections::BTreeMap;

use fss_core::dispersion::delta_exact;
use fss_core::export::{write_rankings_csv, write_scores_csv};
use fss_core::pipeline::run;
use fss_core::synth::{generate, OracleOutput, SynthConfig};
use fss_core::{
    credit_vector, Authorship, BylineConvention, Dataset, DatasetRows, Level, PipelineOutputF64,
    Publication, WeightRules,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Check = Result<String, String>;

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
}

/// Synthetic sizes cycling up to 30 universities × 12 SDS.
pub fn sized_config(seed: u64) -> SynthConfig {
    let n_sds = 2 + (seed as usize % 11);
    SynthConfig {
        n_universities: 4 + (seed as usize * 7 % 27),
        n_sds,
        n_uda: 1 + (seed as usize % n_sds.min(4)),
        ..SynthConfig::with_seed(seed)
    }
}

pub fn run_f64(ds: &Dataset) -> PipelineOutputF64 {
    run::<f64>(ds, &WeightRules::default()).expect("pipeline runs")
}

/// Scores and rankings as CSV bytes, the comparison key for invariance checks.
pub fn serialize(out: &PipelineOutputF64) -> Vec<u8> {
    let mut buf = Vec::new();
    for set in [&out.sds, &out.uda, &out.university] {
        write_scores_csv(set, &mut buf).unwrap();
    }
    write_rankings_csv(&out.rankings, &mut buf).unwrap();
    buf
}

fn reparse(rows: &DatasetRows, ds: &Dataset) -> Dataset {
    Dataset::from_rows(rows, ds.config().clone())
        .expect("still valid")
        .0
}

pub fn credit_conservation(cases: usize) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let rules = WeightRules::default();
    for case in 0..cases {
        let n = rng.random_range(1..=40usize);
        let byline = (1..=n)
            .map(|i| Authorship {
                position: i as u32,
                author_key: format!("a{i}"),
                researcher_id: None,
                affiliation_university_id: match rng.random_range(0..3) {
                    0 => None,
                    k => Some(format!("U{k}")),
                },
            })
            .collect();
        let p = Publication {
            pub_id: format!("P{case}"),
            year: 2005,
            citation_count: 1,
            categories: vec!["X".into()],
            byline,
        };
        for conv in [
            BylineConvention::Alphabetical,
            BylineConvention::PositionWeighted,
        ] {
            let v = credit_vector::<f64>(&p, conv, &rules);
            if v.weights().iter().any(|w| *w <= 0.0) || (v.total() - 1.0).abs() > 1e-12 {
                return Err(format!("n={n} {conv:?}: total {}", v.total()));
            }
        }
    }
    Ok(format!(
        "{cases} bylines × 2 conventions sum to 1 within 1e-12"
    ))
}

/// Scaling every citation of one year by λ keeps every FSS value: each
/// (year, category) cell is scaled uniformly, multi-category papers included.
pub fn citation_scale_invariance(seeds: std::ops::RangeInclusive<u64>) -> Check {
    let mut n = 0;
    for seed in seeds {
        let ds = generate(&SynthConfig::with_seed(seed)).unwrap();
        let base = run_f64(&ds);
        let mut rows = ds.to_rows();
        let year = ds.config().period.start_year() + (seed % 5) as i32;
        let lambda = 3 + seed % 5;
        for p in &mut rows.publications {
            if p.year == year.to_string() {
                p.citation_count = (p.citation_count.parse::<u64>().unwrap() * lambda).to_string();
            }
        }
        let scaled = run_f64(&reparse(&rows, &ds));
        for (k, s) in base.sds.iter() {
            let t = scaled
                .sds
                .fss(&k.university_id, &k.scope_code)
                .ok_or("cell vanished")?;
            if !rel_close(s.fss, t, 1e-9) {
                return Err(format!("seed {seed}: {k:?} {} → {t}", s.fss));
            }
        }
        n += 1;
    }
    Ok(format!(
        "{n} datasets, one year's citations ×λ, FSS_S unchanged within 1e-9"
    ))
}

pub fn salary_scale_rank_invariance(seeds: std::ops::RangeInclusive<u64>) -> Check {
    let mut n = 0;
    for seed in seeds {
        let ds = generate(&SynthConfig::with_seed(seed)).unwrap();
        let base = run_f64(&ds);
        let factor = 0.37 * seed as f64 + 0.5;
        let table = ds.salary_table().scaled(factor).unwrap();
        let scaled = run_f64(&ds.clone().with_salary_table(table).unwrap());
        if base.rankings.len() != scaled.rankings.len() {
            return Err(format!("seed {seed}: list count changed"));
        }
        for (a, b) in base.rankings.iter().zip(&scaled.rankings) {
            for (x, y) in a.entries().iter().zip(b.entries()) {
                if x.university_id != y.university_id || x.rank != y.rank || x.class != y.class {
                    return Err(format!("seed {seed}: {}/{} changed", a.level, a.scope_code));
                }
            }
        }
        n += 1;
    }
    Ok(format!(
        "{n} datasets, salaries ×k, all ranks and classes unchanged"
    ))
}

/// Salary-weighted mean of FSS_S / national mean over contributing
/// universities is 1 in every SDS.
pub fn weighted_mean_closure(seeds: std::ops::RangeInclusive<u64>) -> Check {
    let mut sds_checked = 0;
    for seed in seeds {
        let ds = generate(&sized_config(seed)).unwrap();
        let out = run_f64(&ds);
        for (sds, mean) in out.national_means.iter() {
            let (mut num, mut den) = (0.0, 0.0);
            for (_, s) in out.sds.in_scope(sds).filter(|(_, s)| s.fss > 0.0) {
                num += s.fss / mean * s.salary_mass;
                den += s.salary_mass;
            }
            if (num / den - 1.0).abs() > 1e-9 {
                return Err(format!("seed {seed} {sds}: {}", num / den));
            }
            sds_checked += 1;
        }
    }
    Ok(format!(
        "{sds_checked} SDS populations average to 1 within 1e-9"
    ))
}

pub fn delta_symmetries(cases: usize) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..cases {
        let n = rng.random_range(2..=10);
        let codes: Vec<u8> = (0..n).map(|_| rng.random_range(1..=5)).collect();
        let base = delta_exact(&codes);
        let mut perm = codes.clone();
        perm.shuffle(&mut rng);
        let reflected: Vec<u8> = codes.iter().map(|c| 6 - c).collect();
        if delta_exact(&perm) != base || delta_exact(&reflected) != base {
            return Err(format!("{codes:?}"));
        }
    }
    Ok(format!(
        "{cases} class vectors: Δ permutation- and reflection-invariant"
    ))
}

pub fn input_order_invariance(seeds: std::ops::RangeInclusive<u64>) -> Check {
    let mut n = 0;
    for seed in seeds {
        let ds = generate(&SynthConfig::with_seed(seed)).unwrap();
        let base = serialize(&run_f64(&ds));
        let mut rows = ds.to_rows();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        rows.taxonomy.shuffle(&mut rng);
        rows.researchers.shuffle(&mut rng);
        rows.salaries.shuffle(&mut rng);
        rows.publications.shuffle(&mut rng);
        rows.authorships.shuffle(&mut rng);
        // round-trip through CSV text so the shuffled order is what gets parsed
        let texts = rows.to_csv_strings().unwrap();
        let [a, b, c, d, e] = texts.each_ref().map(String::as_str);
        let (shuffled, _) =
            fss_core::ingest::parse_dataset([a, b, c, d, e], ds.config().clone()).unwrap();
        if serialize(&run_f64(&shuffled)) != base {
            return Err(format!("seed {seed}: outputs differ after shuffling rows"));
        }
        n += 1;
    }
    Ok(format!(
        "{n} datasets with all five tables shuffled give identical outputs"
    ))
}

/// Class counts of an N-entry ranking with distinct scores.
pub fn split_counts(n: usize) -> [usize; 5] {
    let mut set = fss_core::ScoreSet::new(Level::University);
    for i in 0..n {
        set.insert(
            fss_core::ScoreKey::new(format!("U{i:03}"), "ALL"),
            fss_core::Score {
                fss: i as f64,
                salary_mass: 1.0,
            },
        );
    }
    let eligible = (0..n).map(|i| format!("U{i:03}")).collect();
    fss_core::rank_and_classify(&set, "ALL", &eligible)
        .unwrap()
        .class_counts()
}

pub fn reference_r(csv_text: &str) -> BTreeMap<String, Option<f64>> {
    let mut rdr = csv::Reader::from_reader(csv_text.as_bytes());
    rdr.records()
        .map(|r| {
            let r = r.unwrap();
            (r[0].to_string(), r[3].parse::<f64>().ok())
        })
        .collect()
}

/// Compares pipeline and oracle; returns a description of the first mismatch.
pub fn compare(out: &PipelineOutputF64, oracle: &OracleOutput) -> Result<(), String> {
    let close =
        |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
    let kept: Vec<&str> = out.dataset.taxonomy().entries().map(|(s, _)| s).collect();
    if kept
        != oracle
            .kept_sds
            .iter()
            .map(String::as_str)
            .collect::<Vec<_>>()
    {
        return Err(format!(
            "kept SDS differ: {kept:?} vs {:?}",
            oracle.kept_sds
        ));
    }
    let levels = [
        (
            &out.sds,
            oracle
                .sds
                .iter()
                .map(|((u, s), v)| (u.clone(), s.clone(), *v))
                .collect::<Vec<_>>(),
        ),
        (
            &out.uda,
            oracle
                .uda
                .iter()
                .map(|((u, s), v)| (u.clone(), s.clone(), *v))
                .collect(),
        ),
        (
            &out.university,
            oracle
                .university
                .iter()
                .map(|(u, v)| (u.clone(), "ALL".to_string(), *v))
                .collect(),
        ),
    ];
    for (set, expected) in levels {
        if set.len() != expected.len() {
            return Err(format!(
                "{} scores: {} vs oracle {}",
                set.level(),
                set.len(),
                expected.len()
            ));
        }
        for (u, s, v) in expected {
            let got = set
                .fss(&u, &s)
                .ok_or_else(|| format!("{} ({u},{s}) missing", set.level()))?;
            if !close(got, v) {
                return Err(format!("{} ({u},{s}): {got} vs oracle {v}", set.level()));
            }
        }
    }
    if out.rankings.len() != oracle.rankings.len() {
        return Err(format!(
            "{} ranking lists vs oracle {}",
            out.rankings.len(),
            oracle.rankings.len()
        ));
    }
    for ((level, scope), expected) in &oracle.rankings {
        let list = out
            .ranking(*level, scope)
            .ok_or_else(|| format!("list {level}/{scope} missing"))?;
        if list.len() != expected.len() {
            return Err(format!("list {level}/{scope} length"));
        }
        for (e, o) in list.entries().iter().zip(expected) {
            if e.university_id != o.university_id
                || e.rank != o.rank
                || e.class != o.class
                || e.percentile != o.percentile
            {
                return Err(format!("list {level}/{scope}: {e:?} vs oracle {o:?}"));
            }
        }
    }
    let report = fss_core::dispersion_report::<f64>(&out.overall_profiles(), Default::default());
    for r in &report.per_university {
        let o = oracle
            .r_values
            .get(&r.university_id)
            .ok_or("R row missing")?;
        match (r.r, o) {
            (None, None) => {}
            (Some(a), Some(b)) if (a - b).abs() < 1e-12 => {}
            other => return Err(format!("R for {}: {other:?}", r.university_id)),
        }
    }
    if report.per_university.len() != oracle.r_values.len() {
        return Err("R row count".into());
    }
    Ok(())
}
