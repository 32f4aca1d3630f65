use std::fmt;

use crate::base::ElementId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Which resource cap was hit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BudgetKind {
    /// Number of minimal inconsistent subsets of one base.
    MinimalInconsistentSubsets,
    /// Number of minimal supports kept for a single literal.
    SupportsPerLiteral,
    /// Number of players in an exact Shapley enumeration.
    CoalitionPlayers,
    /// Exact values no longer fit the integer accumulators.
    ValueRange,
}

impl fmt::Display for BudgetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BudgetKind::MinimalInconsistentSubsets => "minimal inconsistent subsets per base",
            BudgetKind::SupportsPerLiteral => "minimal supports per literal",
            BudgetKind::CoalitionPlayers => "players in exact coalition enumeration",
            BudgetKind::ValueRange => "exact value range",
        })
    }
}

/// A syntax or ingestion problem, located in its source.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    /// 1-based; 0 when only the line is known.
    pub column: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.column > 0 {
            write!(f, "line {}, column {}: {}", self.line, self.column, self.message)
        } else {
            write!(f, "line {}: {}", self.line, self.message)
        }
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("budget exhausted: {kind} (limit {limit})")]
    BudgetExhausted { kind: BudgetKind, limit: usize },

    #[error("unknown element id {0}")]
    UnknownElement(ElementId),

    #[error("unknown rule `{0}`")]
    UnknownRule(String),

    #[error("brute-force enumeration is capped at {cap} elements, base has {size}")]
    OracleCapExceeded { cap: usize, size: usize },

    #[error("unknown measure `{0}`")]
    UnknownMeasure(String),

    #[error("measure `{measure}` does not declare {property}")]
    MissingProperty { measure: String, property: &'static str },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn is_budget(&self) -> bool {
        matches!(self, Error::BudgetExhausted { .. })
    }

    pub(crate) fn budget(kind: BudgetKind, limit: usize) -> Self {
        Error::BudgetExhausted { kind, limit }
    }
}
