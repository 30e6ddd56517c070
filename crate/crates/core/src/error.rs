use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o failure: {0}")]
    IoFailure(#[from] io::Error),

    #[error("malformed header: {0}")]
    MalformedHeader(String),

    #[error("declared size {declared} does not match payload size {actual}")]
    DimensionMismatch { declared: usize, actual: usize },

    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),

    #[error("PGM output requires integer values in [0, 255]")]
    PgmRequiresIntegerRange,

    #[error("raster contains a non-finite value")]
    NonFiniteValue,

    #[error("SAR raster contains a negative value ({0})")]
    NegativeSarValue(f64),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("raster is empty")]
    EmptyRaster,

    #[error("object id {id} out of range (n_objects = {n_objects})")]
    BadObjectId { id: usize, n_objects: usize },

    #[error("model has no vertex decoder head")]
    WrongHead,

    #[error("training set is empty")]
    EmptyTrainingSet,

    #[error("object count mismatch: {0}")]
    ObjectCountMismatch(String),

    #[error("k = {k} must be smaller than the number of objects ({n_objects})")]
    KTooLarge { k: usize, n_objects: usize },

    #[error("neighbor id {0} is not a valid object")]
    BadNeighbor(usize),

    #[error("both difference images have zero variance")]
    BothVariancesZero,

    #[error("difference image has fewer than two distinct values")]
    ConstantImage,

    #[error("confusion counts are empty")]
    EmptyCounts,

    #[error("reference map must contain both classes")]
    SingleClassReference,

    #[error("cannot reach change fraction {requested:.3} (best achievable {achieved:.3})")]
    ChangeFractionUnreachable { requested: f64, achieved: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl Error {
    /// Stable machine-readable identifier, used on the CLI error line.
    pub fn code(&self) -> &'static str {
        match self {
            Error::IoFailure(_) => "IoFailure",
            Error::MalformedHeader(_) => "MalformedHeader",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::UnsupportedFormat(_) => "UnsupportedFormat",
            Error::PgmRequiresIntegerRange => "PgmRequiresIntegerRange",
            Error::NonFiniteValue => "NonFiniteValue",
            Error::NegativeSarValue(_) => "NegativeSarValue",
            Error::ShapeMismatch(_) => "ShapeMismatch",
            Error::EmptyRaster => "EmptyRaster",
            Error::BadObjectId { .. } => "BadObjectId",
            Error::WrongHead => "WrongHead",
            Error::EmptyTrainingSet => "EmptyTrainingSet",
            Error::ObjectCountMismatch(_) => "ObjectCountMismatch",
            Error::KTooLarge { .. } => "KTooLarge",
            Error::BadNeighbor(_) => "BadNeighbor",
            Error::BothVariancesZero => "BothVariancesZero",
            Error::ConstantImage => "ConstantImage",
            Error::EmptyCounts => "EmptyCounts",
            Error::SingleClassReference => "SingleClassReference",
            Error::ChangeFractionUnreachable { .. } => "ChangeFractionUnreachable",
            Error::InvalidConfig(_) => "InvalidConfig",
        }
    }
}
