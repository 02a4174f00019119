//! Seeded synthetic academies and a brute-force recomputation of every
//! indicator for equivalence testing.
//!
//! Randomness comes from ChaCha8 (`rand_chacha`) seeded with
//! `seed_from_u64(seed)`, so a seed maps to the same dataset on every
//! platform. Citation counts are zero with probability `uncited_share`,
//! otherwise `floor(X)` for `X ~ Pareto(scale = 1, shape = citation_shape)`,
//! capped at `citation_cap`.

mod oracle;

pub use oracle::{oracle_recompute, OracleOutput, OracleRank};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Pareto, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{
    AuthorshipRow, Dataset, DatasetRows, PublicationRow, ResearcherRow, SalaryRow, TaxonomyRow,
};
use crate::model::{AcademicRank, AnalysisConfig, BylineConvention, SalaryTable};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_universities: usize,
    pub n_sds: usize,
    pub n_uda: usize,
    /// Inclusive headcount range of a populated (university, SDS) cell.
    pub researchers_per_cell: (usize, usize),
    /// Probability that a (university, SDS) cell is populated.
    pub cell_presence: f64,
    /// Poisson mean of publications led by each researcher.
    pub pubs_per_researcher: f64,
    /// Co-authors beyond the lead, uniform in `0..=max_coauthors`.
    pub max_coauthors: usize,
    /// Chance that a co-author comes from the lead's own university.
    pub same_university_coauthor: f64,
    /// Chance that a co-author is not on any roster.
    pub external_coauthor: f64,
    pub uncited_share: f64,
    pub citation_shape: f64,
    pub citation_cap: u64,
    pub n_categories: usize,
    pub multi_category: f64,
    pub share_position_weighted: f64,
    pub analysis: AnalysisConfig,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            n_universities: 12,
            n_sds: 6,
            n_uda: 3,
            researchers_per_cell: (1, 6),
            cell_presence: 0.8,
            pubs_per_researcher: 2.0,
            max_coauthors: 4,
            same_university_coauthor: 0.6,
            external_coauthor: 0.25,
            uncited_share: 0.25,
            citation_shape: 1.3,
            citation_cap: 5_000,
            n_categories: 4,
            multi_category: 0.2,
            share_position_weighted: 0.5,
            analysis: AnalysisConfig {
                min_staff_university: 5,
                min_staff_uda: 3,
                ..AnalysisConfig::default()
            },
        }
    }
}

impl SynthConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(format!("synthetic config: {m}")));
        if self.n_universities == 0 || self.n_sds == 0 || self.n_uda == 0 || self.n_categories == 0
        {
            return bad("universities, SDSs, UDAs and categories must all be at least 1".into());
        }
        if self.n_uda > self.n_sds {
            return bad(format!(
                "{} UDAs cannot be covered by {} SDSs",
                self.n_uda, self.n_sds
            ));
        }
        let (lo, hi) = self.researchers_per_cell;
        if lo == 0 || lo > hi {
            return bad(format!(
                "researchers_per_cell {lo}..={hi} is empty or allows zero"
            ));
        }
        if !(self.cell_presence > 0.0 && self.cell_presence <= 1.0) {
            return bad("cell_presence must be in (0,1]: zero cells is infeasible".into());
        }
        for (name, p) in [
            ("same_university_coauthor", self.same_university_coauthor),
            ("external_coauthor", self.external_coauthor),
            ("uncited_share", self.uncited_share),
            ("multi_category", self.multi_category),
            ("share_position_weighted", self.share_position_weighted),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} = {p} is not a probability"));
            }
        }
        if !(self.pubs_per_researcher.is_finite() && self.pubs_per_researcher > 0.0) {
            return bad("pubs_per_researcher must be positive".into());
        }
        if !(self.citation_shape.is_finite() && self.citation_shape > 0.0) || self.citation_cap == 0
        {
            return bad("citation_shape and citation_cap must be positive".into());
        }
        self.analysis.validate()
    }
}

fn conventions(cfg: &SynthConfig, rng: &mut ChaCha8Rng) -> Vec<BylineConvention> {
    let n = cfg.n_sds;
    let mut k = (cfg.share_position_weighted * n as f64).round() as usize;
    // keep both conventions present whenever the share is strictly fractional
    if cfg.share_position_weighted > 0.0 && cfg.share_position_weighted < 1.0 && n >= 2 {
        k = k.clamp(1, n - 1);
    }
    let mut out: Vec<BylineConvention> = (0..n)
        .map(|i| {
            if i < k {
                BylineConvention::PositionWeighted
            } else {
                BylineConvention::Alphabetical
            }
        })
        .collect();
    out.shuffle(rng);
    out
}

struct Member {
    id: String,
    university: usize,
    sds: usize,
}

/// The five input tables of a synthetic dataset.
pub fn generate_rows(cfg: &SynthConfig) -> Result<DatasetRows> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let uni_id = |u: usize| format!("UNIV_{:02}", u + 1);
    let sds_id = |s: usize| format!("SDS_{:02}", s + 1);
    let mut rows = DatasetRows::default();

    for (s, conv) in conventions(cfg, &mut rng).into_iter().enumerate() {
        rows.taxonomy.push(TaxonomyRow {
            sds_code: sds_id(s),
            uda_code: format!("UDA_{}", s % cfg.n_uda + 1),
            byline_convention: conv.as_str().to_string(),
            ..Default::default()
        });
    }
    for (rank, salary) in SalaryTable::relative_units().iter() {
        rows.salaries.push(SalaryRow {
            academic_rank: rank.as_str().to_string(),
            annual_salary: salary.to_string(),
            ..Default::default()
        });
    }

    let mut present = vec![vec![false; cfg.n_sds]; cfg.n_universities];
    for row in present.iter_mut() {
        for cell in row.iter_mut() {
            *cell = rng.random_bool(cfg.cell_presence);
        }
    }
    for s in 0..cfg.n_sds {
        if !present.iter().any(|row| row[s]) {
            present[rng.random_range(0..cfg.n_universities)][s] = true;
        }
    }
    for row in present.iter_mut() {
        if !row.contains(&true) {
            row[rng.random_range(0..cfg.n_sds)] = true;
        }
    }

    let mut members = Vec::new();
    for (u, row) in present.iter().enumerate() {
        for (s, _) in row.iter().enumerate().filter(|(_, p)| **p) {
            let n = rng.random_range(cfg.researchers_per_cell.0..=cfg.researchers_per_cell.1);
            for _ in 0..n {
                let id = format!("R{:05}", members.len() + 1);
                let rank = *AcademicRank::ALL.choose(&mut rng).expect("non-empty");
                rows.researchers.push(ResearcherRow {
                    researcher_id: id.clone(),
                    university_id: uni_id(u),
                    sds_code: sds_id(s),
                    academic_rank: rank.as_str().to_string(),
                    ..Default::default()
                });
                members.push(Member {
                    id,
                    university: u,
                    sds: s,
                });
            }
        }
    }
    let by_university: Vec<Vec<usize>> = (0..cfg.n_universities)
        .map(|u| {
            (0..members.len())
                .filter(|&i| members[i].university == u)
                .collect()
        })
        .collect();

    let everyone: Vec<usize> = (0..members.len()).collect();
    let poisson =
        Poisson::new(cfg.pubs_per_researcher).map_err(|e| Error::Config(e.to_string()))?;
    let pareto = Pareto::new(1.0, cfg.citation_shape).map_err(|e| Error::Config(e.to_string()))?;
    let period = cfg.analysis.period;
    let mut n_external = 0usize;
    for lead in 0..members.len() {
        let n_pubs = poisson.sample(&mut rng) as usize;
        for _ in 0..n_pubs {
            let pub_id = format!("P{:06}", rows.publications.len() + 1);
            // (author_key, researcher_id, affiliation)
            let mut byline: Vec<(String, String, String)> = Vec::new();
            let mut on_byline = vec![lead];
            let lm = &members[lead];
            byline.push((lm.id.clone(), lm.id.clone(), uni_id(lm.university)));
            for _ in 0..rng.random_range(0..=cfg.max_coauthors) {
                if rng.random_bool(cfg.external_coauthor) {
                    n_external += 1;
                    let aff = match rng.random_range(0..3) {
                        0 => String::new(),
                        1 => uni_id(rng.random_range(0..cfg.n_universities)),
                        _ => format!("EXT_{}", rng.random_range(1..=5)),
                    };
                    byline.push((format!("X{n_external:06}"), String::new(), aff));
                    continue;
                }
                let pool = if rng.random_bool(cfg.same_university_coauthor) {
                    &by_university[lm.university]
                } else {
                    &everyone
                };
                let pick = *pool.choose(&mut rng).expect("non-empty pool");
                if on_byline.contains(&pick) {
                    continue;
                }
                on_byline.push(pick);
                let m = &members[pick];
                byline.push((m.id.clone(), m.id.clone(), uni_id(m.university)));
            }
            byline.shuffle(&mut rng);

            let mut cats = vec![format!("CAT_{}", lm.sds % cfg.n_categories + 1)];
            if cfg.n_categories > 1 && rng.random_bool(cfg.multi_category) {
                let extra = format!("CAT_{}", rng.random_range(1..=cfg.n_categories));
                if !cats.contains(&extra) {
                    cats.push(extra);
                }
            }
            let citations = if rng.random_bool(cfg.uncited_share) {
                0
            } else {
                (pareto.sample(&mut rng).floor() as u64).clamp(1, cfg.citation_cap)
            };
            rows.publications.push(PublicationRow {
                pub_id: pub_id.clone(),
                year: rng
                    .random_range(period.start_year()..=period.end_year())
                    .to_string(),
                citation_count: citations.to_string(),
                categories: cats.join(";"),
                ..Default::default()
            });
            for (i, (key, rid, aff)) in byline.into_iter().enumerate() {
                rows.authorships.push(AuthorshipRow {
                    pub_id: pub_id.clone(),
                    position: (i + 1).to_string(),
                    author_key: key,
                    researcher_id: rid,
                    affiliation_university_id: aff,
                    ..Default::default()
                });
            }
        }
    }
    Ok(rows)
}

/// Generates and validates a synthetic dataset.
pub fn generate(cfg: &SynthConfig) -> Result<Dataset> {
    let rows = generate_rows(cfg)?;
    let (ds, _) = Dataset::from_rows(&rows, cfg.analysis.clone())?;
    Ok(ds)
}
