use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised anywhere in the reliability pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("no records supplied")]
    EmptyTable,

    #[error("duplicate annotation for (replication={replication}, item={item}, slot={slot}, label={label}){}", describe_lines(*.first_line, *.second_line))]
    DuplicateKey {
        replication: String,
        item: String,
        slot: String,
        label: String,
        first_line: Option<usize>,
        second_line: Option<usize>,
    },

    #[error("scale mismatch for label `{label}`: {detail}")]
    ScaleMismatch { label: String, detail: String },

    #[error("unknown label `{0}`")]
    UnknownLabel(String),

    #[error("unknown replication `{0}`")]
    UnknownReplication(String),

    #[error("label `{label}`: no item is annotated in both `{x}` and `{y}`")]
    EmptyIntersection { label: String, x: String, y: String },

    #[error("paired view is empty")]
    EmptyView,

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("no pairable items (every item has fewer than two annotations)")]
    NoPairableItems,

    #[error("naive oracle would enumerate {pairs} pairs (limit {limit})")]
    OracleTooLarge { pairs: u128, limit: u128 },

    #[error("reliability must be positive to normalize, got {0}")]
    NonPositiveReliability(f64),

    #[error("label `{label}` has {categories} categories; mean scores need a binary or interval label")]
    MultiCategoryMean { label: String, categories: usize },

    #[error("sequence is constant; correlation undefined")]
    ConstantSequence,

    #[error("sequence lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),

    #[error("need at least 3 paired points, got {0}")]
    TooFewPoints(usize),

    #[error("every split-half partition was degenerate")]
    DegenerateSplit,

    #[error("invalid bootstrap configuration: {0}")]
    InvalidBootstrapConfig(String),

    #[error("all {0} bootstrap replicates were degenerate")]
    AllReplicatesDegenerate(usize),

    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),

    #[error("prevalence {0} leaves no item signal; agreement is degenerate")]
    NoItemSignal(f64),

    #[error("line {line}: malformed row: {message}")]
    MalformedRow { line: usize, message: String },

    #[error("header mismatch: missing column `{0}`")]
    HeaderMismatch(String),

    #[error("line {line}, column `{column}`: cannot parse `{value}`")]
    ValueParseError {
        line: usize,
        column: String,
        value: String,
    },

    #[error("report has no rows")]
    EmptyReport,

    #[error("no estimates supplied")]
    EmptyInput,

    #[error("invalid schema: {0}")]
    Schema(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by the data carrying no usable signal, as opposed
    /// to malformed input.
    pub fn is_degenerate(&self) -> bool {
        matches!(
            self,
            Error::DegenerateData(_)
                | Error::NoPairableItems
                | Error::NonPositiveReliability(_)
                | Error::ConstantSequence
                | Error::DegenerateSplit
                | Error::AllReplicatesDegenerate(_)
                | Error::NoItemSignal(_)
        )
    }
}

fn describe_lines(first: Option<usize>, second: Option<usize>) -> String {
    match (first, second) {
        (Some(a), Some(b)) => format!(" at lines {a} and {b}"),
        (None, Some(b)) => format!(" at line {b}"),
        _ => String::new(),
    }
}
