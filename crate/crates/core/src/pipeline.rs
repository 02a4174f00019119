//! End-to-end computation: inclusion filter → baselines → FSS at the three
//! levels → rankings.

use crate::credit::WeightRules;
use crate::dispersion::{profiles_from_rankings, ClassProfile};
use crate::error::Result;
use crate::ingest::{apply_sds_inclusion_filter, Dataset};
use crate::model::Level;
use crate::normalize::{build_baselines, BaselineTable};
use crate::productivity::{
    national_means, sds_scores, uda_scores, university_scores, NationalMeans, ScoreSet,
    OVERALL_SCOPE,
};
use crate::ranking::{rank_all, RankingList};
use crate::Scalar;

pub const NO_ELIGIBLE_SCOPE: &str = "no eligible scope: nothing to rank";

#[derive(Debug, Clone)]
pub struct PipelineOutput<T> {
    /// The dataset after the SDS inclusion filter.
    pub dataset: Dataset,
    pub baselines: BaselineTable<T>,
    pub sds: ScoreSet<T>,
    pub national_means: NationalMeans<T>,
    pub uda: ScoreSet<T>,
    pub university: ScoreSet<T>,
    /// SDS lists first, then UDA, then the overall list.
    pub rankings: Vec<RankingList<T>>,
    pub warnings: Vec<String>,
}

impl<T: Scalar> PipelineOutput<T> {
    pub fn ranking(&self, level: Level, scope_code: &str) -> Option<&RankingList<T>> {
        self.rankings
            .iter()
            .find(|l| l.level == level && l.scope_code == scope_code)
    }

    pub fn rankings_at(&self, level: Level) -> impl Iterator<Item = &RankingList<T>> {
        self.rankings.iter().filter(move |l| l.level == level)
    }

    /// Nothing could be ranked.
    pub fn is_empty(&self) -> bool {
        self.rankings.is_empty()
    }

    /// Overall class vs UDA classes, one profile per university in the overall list.
    pub fn overall_profiles(&self) -> Vec<ClassProfile> {
        let Some(parent) = self.ranking(Level::University, OVERALL_SCOPE) else {
            return Vec::new();
        };
        let children: Vec<&RankingList<T>> = self.rankings_at(Level::Uda).collect();
        profiles_from_rankings(parent, &children, None)
    }

    /// UDA class vs its SDS classes, with UDA headcount as staff size.
    pub fn uda_profiles(&self, uda_code: &str) -> Vec<ClassProfile> {
        let Some(parent) = self.ranking(Level::Uda, uda_code) else {
            return Vec::new();
        };
        let taxonomy = self.dataset.taxonomy();
        let children: Vec<&RankingList<T>> = self
            .rankings_at(Level::Sds)
            .filter(|l| taxonomy.uda_of(&l.scope_code) == Some(uda_code))
            .collect();
        let mut staff = std::collections::BTreeMap::new();
        for r in self.dataset.researchers() {
            if taxonomy.uda_of(&r.sds_code) == Some(uda_code) {
                *staff.entry(r.university_id.clone()).or_insert(0u64) += 1;
            }
        }
        profiles_from_rankings(parent, &children, Some(&staff))
    }
}

pub fn run<T: Scalar>(ds: &Dataset, rules: &WeightRules) -> Result<PipelineOutput<T>> {
    rules.validate()?;
    let dataset = apply_sds_inclusion_filter(ds);
    let baselines = build_baselines::<T>(&dataset);
    let sds = sds_scores(&dataset, &baselines, rules)?;
    let means = national_means(&sds);
    let uda = uda_scores(&dataset, &sds, &means);
    let university = university_scores(&dataset, &sds, &means);
    let outcome = rank_all(&dataset, &[&sds, &uda, &university]);
    let mut warnings = outcome.warnings;
    let removed = ds.taxonomy().len() - dataset.taxonomy().len();
    if removed > 0 {
        warnings.insert(
            0,
            format!("{removed} SDS(s) removed by the publishing-share filter"),
        );
    }
    if outcome.lists.is_empty() {
        warnings.push(NO_ELIGIBLE_SCOPE.to_string());
    }
    Ok(PipelineOutput {
        dataset,
        baselines,
        sds,
        national_means: means,
        uda,
        university,
        rankings: outcome.lists,
        warnings,
    })
}
