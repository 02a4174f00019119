//! Research productivity at field, discipline and institution level.
//!
//! The pipeline loads a publication/byline/roster/salary dataset, normalizes
//! citations against per-(year, subject category) baselines, assigns
//! fractional author credit, aggregates salary-normalized productivity
//! (Fractional Scientific Strength, FSS) from fields up to whole universities,
//! ranks universities on a 0-100 percentile scale with quintile classes, and
//! measures how uneven a university's classes are across its fields.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`). The `*F64`
//! aliases below are what the CLI uses.

pub mod config;
pub mod credit;
pub mod dispersion;
pub mod error;
pub mod export;
pub mod fixtures;
pub mod ingest;
pub mod model;
pub mod normalize;
pub mod pipeline;
pub mod productivity;
pub mod ranking;
pub mod synth;

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

pub use credit::{contribution_of, credit_vector, CreditVector, WeightRules};
pub use dispersion::{
    concordance_matrix, delta_index, dispersion_report, pearson, r_distribution_stats,
    standardized_r, ClassProfile, ConcordanceMatrix, ConcordanceMode, DispersionReport,
};
pub use error::{Error, Result};
pub use ingest::{
    apply_sds_inclusion_filter, load_dataset, Dataset, DatasetRows, InputPaths, ValidationReport,
};
pub use model::{
    salary_of, AcademicRank, AnalysisConfig, Authorship, BaselineScope, BylineConvention, Level,
    MultiCategoryRule, Period, Publication, QuintileClass, Researcher, SalaryTable, Taxonomy,
};
pub use normalize::{build_baselines, scaled_citation, BaselineTable};
pub use pipeline::PipelineOutput;
pub use productivity::{NationalMeans, Score, ScoreKey, ScoreSet, OVERALL_SCOPE};
pub use ranking::{eligible_universities, rank_and_classify, RankingList};

/// Floating-point type the numeric pipeline can run on.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` constant; exact for `f64`, rounded for `f32`.
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("finite constant")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

pub type BaselineTableF64 = BaselineTable<f64>;
pub type CreditVectorF64 = CreditVector<f64>;
pub type ScoreSetF64 = ScoreSet<f64>;
pub type NationalMeansF64 = NationalMeans<f64>;
pub type RankingListF64 = RankingList<f64>;
pub type DispersionReportF64 = DispersionReport<f64>;
pub type PipelineOutputF64 = PipelineOutput<f64>;

pub type ScoreSetF32 = ScoreSet<f32>;
pub type RankingListF32 = RankingList<f32>;
pub type DispersionReportF32 = DispersionReport<f32>;
