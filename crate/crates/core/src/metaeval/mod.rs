//! Agreement between judge scores and human ratings.

mod aggregate;
mod report;
mod stats;

pub use aggregate::{
    aggregate_correlation, aggregate_pairs, join_pairs, Aggregate, AggregationMode, AggregationSpec,
    PairFilter, ScoredPair, UndefinedPolicy,
};
pub use report::{compute_row, AverageCell, ColumnSpec, CorrelationReport, ReportCell, ReportRow, TableSpec};
pub use stats::{
    average_ranks, correlate, kendall_tau, pearson, spearman, tie_fraction, Coefficient, CorrelationError,
    PairedSeries, TauVariant,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetaevalError {
    #[error("result refers to unknown record `{0}`")]
    UnknownRecord(String),
    #[error("record `{record_id}` has no human rating for aspect `{aspect}`")]
    MissingAspect { record_id: String, aspect: String },
    #[error("no results for aspect `{0}`")]
    NoPairs(String),
    #[error("no defined {coefficient:?} groups for aspect `{aspect}`")]
    NoDefinedGroups { aspect: String, coefficient: Coefficient },
    #[error("report cell missing: {column} / {coefficient:?}")]
    MissingCell { column: String, coefficient: Coefficient },
    #[error(transparent)]
    Correlation(#[from] CorrelationError),
    #[error("report rendering: {0}")]
    Render(String),
}
