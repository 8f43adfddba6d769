use std::path::PathBuf;

use crate::lattice::LatticeVector;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("site {site} lies outside the {width}x{height} window anchored at {origin}")]
    OutOfWindow {
        site: LatticeVector,
        origin: LatticeVector,
        width: usize,
        height: usize,
    },
    #[error("invalid window: {0}")]
    InvalidWindow(String),
    #[error("invalid weight law: {0}")]
    InvalidLaw(String),
    #[error("weight {re}+{im}i does not have unit modulus")]
    NotUnitModulus { re: f64, im: f64 },
    #[error("operation requires a +1/-1 window")]
    AlphabetMismatch,
    #[error("no valid sites for the requested offsets in a {width}x{height} window")]
    NoValidSites { width: usize, height: usize },
    #[error("lag range {range} too large for a {width}x{height} window")]
    RangeTooLarge { range: usize, width: usize, height: usize },
    #[error("guard_bits must be at least {min}, got {got}")]
    GuardBitsTooSmall { min: u32, got: u32 },
    #[error("brute-force box {0} exceeds the limit of 20")]
    BoxTooLarge(usize),
    #[error("query site {0} lies outside the brute-force box")]
    QueryOutsideBox(LatticeVector),
    #[error("query must contain at least one term")]
    EmptyQuery,
    #[error("degenerate periodogram grid: {0}")]
    DegenerateGrid(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

impl Error {
    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::OutOfWindow { .. } => "out_of_window",
            Error::InvalidWindow(_) => "invalid_window",
            Error::InvalidLaw(_) => "invalid_law",
            Error::NotUnitModulus { .. } => "not_unit_modulus",
            Error::AlphabetMismatch => "alphabet_mismatch",
            Error::NoValidSites { .. } => "no_valid_sites",
            Error::RangeTooLarge { .. } => "range_too_large",
            Error::GuardBitsTooSmall { .. } => "guard_bits_too_small",
            Error::BoxTooLarge(_) => "box_too_large",
            Error::QueryOutsideBox(_) => "query_outside_box",
            Error::EmptyQuery => "empty_query",
            Error::DegenerateGrid(_) => "degenerate_grid",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::Parse(_) => "parse",
            Error::Io { .. } => "io",
        }
    }
}
