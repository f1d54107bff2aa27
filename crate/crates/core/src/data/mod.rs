//! Dataset schema, CSV ingestion, splitting and synthetic generators.

mod dataset;
mod schema;
mod toy;

pub use dataset::{
    load_csv, load_csv_with_schema, sensitive_groups, split, split_by_indices, split_indices, write_csv, Dataset,
    SplitTag,
};
pub use schema::{ColumnSpec, Kind, Role, Schema, Task, VariableBlock};
pub use toy::{
    toy_classification, toy_regression, toy_regression_mean, toy_regression_schema, toy_regression_split,
    ToyClassification, TOY_TEST_SIZE, TOY_TRAIN_SIZE,
};
