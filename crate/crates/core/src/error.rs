use chrono::NaiveDate;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("empty series")]
    EmptySeries,
    #[error("invalid price {close} on {date}")]
    InvalidPrice { date: NaiveDate, close: f64 },
    #[error("non-finite value at {week}")]
    NonFinite { week: NaiveDate },
    #[error("dates not strictly increasing at {date}")]
    Unordered { date: NaiveDate },
    #[error("irregular spacing between {prev} and {next}")]
    IrregularSpacing { prev: NaiveDate, next: NaiveDate },
    #[error("insufficient history: need {needed} observations, have {available}")]
    InsufficientHistory { needed: usize, available: usize },
    #[error("disjoint spans")]
    DisjointSpans,
    #[error("out-of-range SVI value {value} at {week}")]
    OutOfRangeSvi { week: NaiveDate, value: f64 },
    #[error("insufficient overlap between windows starting {first} and {second}: {overlap} weeks, need {required}")]
    InsufficientOverlap {
        first: NaiveDate,
        second: NaiveDate,
        overlap: usize,
        required: usize,
    },
    #[error("degenerate overlap between windows starting {first} and {second}")]
    DegenerateOverlap { first: NaiveDate, second: NaiveDate },
    #[error("windows belong to different keywords: {0:?} and {1:?}")]
    MixedKeywords(String, String),
    #[error("unpriced position: asset {asset} has no return for week {week}")]
    UnpricedPosition { asset: String, week: NaiveDate },
    #[error("signals belong to different assets: {0:?} and {1:?}")]
    MixedAssets(String, String),
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("feature mode {0} requires SVI data but none was supplied")]
    MissingSvi(&'static str),
    #[error("unknown keyword set {0:?}")]
    UnknownKeywordSet(String),
    #[error("duplicate keyword {0:?}")]
    DuplicateKeyword(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
