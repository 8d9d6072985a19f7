use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure the library can report.
///
/// Context variants (`AtSample`, `AtOutput`) wrap a root cause with the index
/// at which it occurred; [`Error::root`] strips them.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("DomainViolation: {value} is outside the domain [{lo}, {hi}] of `{activation}`")]
    DomainViolation {
        activation: String,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("RangeViolation: {value} is not strictly inside the range {range} of `{activation}`")]
    RangeViolation {
        activation: String,
        value: f64,
        range: String,
    },

    #[error("NotInvertible: `{activation}` has no monotonicity certificate")]
    NotInvertible { activation: String },

    #[error("WeightUndefined: hidden activation {hidden:e} at preimage {preimage} is too close to zero")]
    WeightUndefined { preimage: f64, hidden: f64 },

    #[error("DimensionMismatch: {what} has length {found}, expected {expected}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("CertificateMissing: {0}")]
    CertificateMissing(String),

    #[error("NoMatchingAnchor: no anchor matches input {0:?}")]
    NoMatchingAnchor(Vec<f64>),

    #[error("UnitIndex: unit {index} requested but the network has {count} units")]
    UnitIndex { index: usize, count: usize },

    #[error("AnchorMismatch: {0}")]
    AnchorMismatch(String),

    #[error("SampleMismatch: reports were produced from different sample sets")]
    SampleMismatch,

    #[error("NumericalDivergence: loss became non-finite at iteration {iteration} (last finite mse {last_finite_mse:e})")]
    NumericalDivergence {
        iteration: usize,
        last_finite_mse: f64,
    },

    #[error("NotApplicable: {0}")]
    NotApplicable(String),

    #[error("InvalidInterval: [{lo}, {hi}]")]
    InvalidInterval { lo: f64, hi: f64 },

    #[error("InvalidArgument: {0}")]
    InvalidArgument(String),

    #[error("FormatError: line {line}: {message}")]
    Format { line: usize, message: String },

    #[error("ParseError: line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("ConflictingDuplicate: line {line} repeats the input of line {first_line} with a different output")]
    ConflictingDuplicate { first_line: usize, line: usize },

    #[error("IoError: {0}")]
    Io(String),

    #[error("sample {index}: {source}")]
    AtSample { index: usize, source: Box<Error> },

    #[error("output {index}: {source}")]
    AtOutput { index: usize, source: Box<Error> },
}

impl Error {
    pub(crate) fn at_sample(self, index: usize) -> Error {
        Error::AtSample {
            index,
            source: Box::new(self),
        }
    }

    pub(crate) fn at_output(self, index: usize) -> Error {
        Error::AtOutput {
            index,
            source: Box::new(self),
        }
    }

    /// The innermost error with index context removed.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtSample { source, .. } | Error::AtOutput { source, .. } => source.root(),
            other => other,
        }
    }

    /// Sample index recorded in the context chain, if any.
    pub fn sample_index(&self) -> Option<usize> {
        match self {
            Error::AtSample { index, .. } => Some(*index),
            Error::AtOutput { source, .. } => source.sample_index(),
            _ => None,
        }
    }

    /// Output index recorded in the context chain, if any.
    pub fn output_index(&self) -> Option<usize> {
        match self {
            Error::AtOutput { index, .. } => Some(*index),
            Error::AtSample { source, .. } => source.output_index(),
            _ => None,
        }
    }

    /// Stable name of the root error, as printed by the CLI.
    pub fn name(&self) -> &'static str {
        match self.root() {
            Error::DomainViolation { .. } => "DomainViolation",
            Error::RangeViolation { .. } => "RangeViolation",
            Error::NotInvertible { .. } => "NotInvertible",
            Error::WeightUndefined { .. } => "WeightUndefined",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::CertificateMissing(_) => "CertificateMissing",
            Error::NoMatchingAnchor(_) => "NoMatchingAnchor",
            Error::UnitIndex { .. } => "UnitIndex",
            Error::AnchorMismatch(_) => "AnchorMismatch",
            Error::SampleMismatch => "SampleMismatch",
            Error::NumericalDivergence { .. } => "NumericalDivergence",
            Error::NotApplicable(_) => "NotApplicable",
            Error::InvalidInterval { .. } => "InvalidInterval",
            Error::InvalidArgument(_) => "InvalidArgument",
            Error::Format { .. } => "FormatError",
            Error::Parse { .. } => "ParseError",
            Error::ConflictingDuplicate { .. } => "ConflictingDuplicate",
            Error::Io(_) => "IoError",
            Error::AtSample { .. } | Error::AtOutput { .. } => unreachable!("root strips context"),
        }
    }

    /// True for failures of the construction hypotheses (range containment,
    /// invertibility, nonvanishing hidden activation, domain membership).
    pub fn is_hypothesis_failure(&self) -> bool {
        matches!(
            self.root(),
            Error::DomainViolation { .. }
                | Error::RangeViolation { .. }
                | Error::NotInvertible { .. }
                | Error::WeightUndefined { .. }
                | Error::CertificateMissing(_)
                | Error::NumericalDivergence { .. }
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn context_is_stripped() {
        let e = Error::WeightUndefined {
            preimage: 0.0,
            hidden: 0.0,
        }
        .at_output(1)
        .at_sample(7);
        assert_eq!(e.name(), "WeightUndefined");
        assert_eq!(e.sample_index(), Some(7));
        assert_eq!(e.output_index(), Some(1));
        assert!(e.to_string().starts_with("sample 7: output 1: WeightUndefined"));
    }
}
