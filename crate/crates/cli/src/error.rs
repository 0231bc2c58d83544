use hierens::datio::DataError;
use hierens::ensemble::EnsembleError;
use hierens::metrics::MetricError;
use hierens::riskmin::RiskError;
use hierens::scorespace::ScoreError;
use hierens::synthlab::SynthError;
use hierens::taxonomy::TaxonomyError;
use thiserror::Error;

/// Bad flags, unreadable or invalid input files.
pub const EXIT_INPUT: i32 = 2;
/// Inputs that load fine but do not fit together.
pub const EXIT_SHAPE: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("DuplicateMethod: {0} listed more than once")]
    DuplicateMethod(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Score(#[from] ScoreError),
    #[error(transparent)]
    Ensemble(#[from] EnsembleError),
    #[error(transparent)]
    Risk(#[from] RiskError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Synth(#[from] SynthError),
}

fn taxonomy_code(e: &TaxonomyError) -> i32 {
    match e {
        TaxonomyError::NonLeveledTree { .. } | TaxonomyError::DepthOutOfRange { .. } => EXIT_SHAPE,
        _ => EXIT_INPUT,
    }
}

fn score_code(e: &ScoreError) -> i32 {
    match e {
        ScoreError::ShapeMismatch { .. }
        | ScoreError::ClassNameCount { .. }
        | ScoreError::KTooLarge { .. } => EXIT_SHAPE,
        _ => EXIT_INPUT,
    }
}

fn metric_code(e: &MetricError) -> i32 {
    match e {
        MetricError::LengthMismatch { .. } | MetricError::KTooLarge { .. } => EXIT_SHAPE,
        MetricError::Score(s) => score_code(s),
        _ => EXIT_INPUT,
    }
}

fn ensemble_code(e: &EnsembleError) -> i32 {
    match e {
        EnsembleError::DimensionMismatch(_) | EnsembleError::ZeroDenominator { .. } => EXIT_SHAPE,
        EnsembleError::Taxonomy(t) => taxonomy_code(t),
        EnsembleError::Score(s) => score_code(s),
        EnsembleError::InvalidIndex(_) => EXIT_INPUT,
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::DuplicateMethod(_) | CliError::Synth(_) => EXIT_INPUT,
            CliError::Data(DataError::Metric(m)) | CliError::Metric(m) => metric_code(m),
            CliError::Data(_) => EXIT_INPUT,
            CliError::Score(s) => score_code(s),
            CliError::Ensemble(e) => ensemble_code(e),
            CliError::Risk(RiskError::DimensionMismatch(_)) => EXIT_SHAPE,
            CliError::Risk(RiskError::Ensemble(e)) => ensemble_code(e),
            CliError::Risk(RiskError::Score(s)) => score_code(s),
            CliError::Risk(RiskError::InvalidCostMatrix(_)) => EXIT_INPUT,
        }
    }
}
