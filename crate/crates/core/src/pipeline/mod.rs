//! Records to model-ready matrices: one-hot encoding, standardization
//! fitted on training rows, stratified splitting and SMOTE oversampling.

mod schema;
mod smote;
mod split;

pub use schema::{
    encode, encode_features, fit_schema, FeatureMatrix, FeatureSchema, NumericColumn, OneHotGroup, UnseenCategory,
};
pub use smote::smote_oversample;
pub use split::{split_indices, split_items, stratified_split, SplitSpec};

use crate::domain::RecordError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PipelineError {
    #[error("no rows")]
    Empty,
    #[error("row {row}: `{field}` is missing")]
    MissingValue { row: usize, field: String },
    #[error("row {row}: {variable} level `{level}` was not seen when the schema was fitted")]
    UnseenCategory { row: usize, variable: String, level: String },
    #[error("row {row}: {source}")]
    Label { row: usize, source: RecordError },
    #[error("no {} rows to stratify", if *positive { "positive" } else { "negative" })]
    EmptyClass { positive: bool },
    #[error("train_fraction must lie in (0, 1), got {0}")]
    TrainFraction(f64),
    #[error("SMOTE needs at least 2 minority rows, got {0}")]
    TooFewMinority(usize),
    #[error("SMOTE neighbour count must be at least 1")]
    ZeroNeighbours,
    #[error("matrix width {found} does not match schema width {expected}")]
    Width { expected: usize, found: usize },
    #[error("schema does not describe the visit record layout")]
    SchemaLayout,
}
