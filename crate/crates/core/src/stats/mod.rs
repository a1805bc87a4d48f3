//! Summary statistics and the hypothesis tests used to compare the two
//! curve models.

mod compare;
mod shapiro;
mod summary;
mod ttest;
mod wilcoxon;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use compare::{compare_models, render_text, write_summary_csv, ComparisonReport, ModelErrors, ParamSummary, Selection};
pub use shapiro::shapiro_wilk;
pub use summary::{quantile_sorted, summarize, SummaryStats};
pub use ttest::paired_t_test;
pub use wilcoxon::{wilcoxon_signed_rank, EXACT_MAX};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("input is empty")]
    EmptyInput,
    #[error("input contains non-finite values")]
    NonFinite,
    #[error("sample size {n} outside [{min}, {max}]")]
    SampleSize { n: usize, min: usize, max: usize },
    #[error("sample has zero range")]
    DegenerateSample,
    #[error("paired differences have zero variance")]
    ZeroVariance,
    #[error("paired samples differ in length ({a} vs {b})")]
    LengthMismatch { a: usize, b: usize },
    #[error("every paired difference is zero")]
    AllZeroDifferences,
    #[error("fit dates differ at position {index}")]
    DateMismatch { index: usize },
    #[error("model parameters in the {0} series belong to another model")]
    ModelMismatch(&'static str),
    #[error("need at least {min} paired dates, got {n}")]
    InsufficientPairs { n: usize, min: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TestMethod {
    ShapiroWilk,
    PairedT,
    WilcoxonSignedRank,
}

impl TestMethod {
    pub fn label(self) -> &'static str {
        match self {
            TestMethod::ShapiroWilk => "Shapiro-Wilk",
            TestMethod::PairedT => "paired t-test",
            TestMethod::WilcoxonSignedRank => "Wilcoxon signed-rank",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub method: TestMethod,
    pub statistic: f64,
    pub p_value: f64,
    /// Sample size the statistic was computed on (non-zero differences for
    /// the signed-rank test).
    pub n: usize,
}
