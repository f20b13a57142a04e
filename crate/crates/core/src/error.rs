use alloc::string::String;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TermError {
    #[error("IRI must not be empty")]
    EmptyIri,
    #[error("invalid IRI `{0}`")]
    InvalidIri(String),
    #[error("a literal cannot be the subject of a triple")]
    LiteralSubject,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message} (at `{token}`)")]
pub struct NtParseError {
    pub line: usize,
    pub token: String,
    pub message: String,
}

/// Rejections raised while recording operators on a frame.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FrameError {
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("column `{0}` already exists")]
    DuplicateColumn(String),
    #[error("invalid column name `{0}`")]
    InvalidColumnName(String),
    #[error("seed pattern needs at least one column")]
    NoColumns,
    #[error("frame is terminal (after aggregate/head); no further operators allowed")]
    Terminal,
    #[error("aggregation called without a preceding group_by")]
    AggregationWithoutGroupBy,
    #[error("group_by must be followed by an aggregation")]
    GroupByWithoutAggregation,
    #[error("invalid condition `{0}`")]
    InvalidCondition(String),
    #[error("unknown prefix `{0}`")]
    UnknownPrefix(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Term(#[from] TermError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("grouping already set on this model")]
    GroupingSetTwice,
    #[error("variable ?{0} is not in scope")]
    OutOfScope(String),
    #[error("union branches are not union-compatible: {0}")]
    IncompatibleUnion(String),
    #[error("cannot merge a grouped model; nest it instead")]
    MergeGrouped,
    #[error("empty pattern group")]
    EmptyGroup,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenerateError {
    #[error("operator queue is empty")]
    EmptyQueue,
    #[error("operator queue must start with a seed")]
    MissingSeed,
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("graph <{0}> is not loaded")]
    UnknownGraph(String),
    #[error("construct outside the evaluable fragment: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Generate(#[from] GenerateError),
}
