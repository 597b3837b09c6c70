use thiserror::Error;

use crate::observables::Label;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite complex entry ({re}, {im})")]
    NonFinite { re: f64, im: f64 },

    #[error("matrix is not Hermitian (max deviation {defect:e} > 1e-12)")]
    NotHermitian { defect: f64 },

    #[error("trace is not 1 (got {trace})")]
    NotUnitTrace { trace: f64 },

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("{name} = {value} outside [{min}, {max}]")]
    OutOfRange {
        name: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("Bloch vector for {label} has norm {norm}, expected 1")]
    NotUnitBloch { label: Label, norm: f64 },

    #[error("gamma_{label} = {value}: |gamma| must lie in [1e-6, 1]")]
    GammaOutOfRange { label: Label, value: f64 },

    #[error("gamma_{first}^2 + gamma_{second}^2 = {sum_sq} exceeds 1 for Bloch-orthogonal observables")]
    GammaPairTooLarge {
        first: Label,
        second: Label,
        sum_sq: f64,
    },

    #[error("joint POVM element ({first:+}, {second:+}) is not positive (min eigenvalue {min_eigenvalue:e})")]
    NotPositive {
        first: i8,
        second: i8,
        min_eigenvalue: f64,
    },

    #[error("outcome component must be +1 or -1, got {0}")]
    InvalidOutcome(i64),

    #[error("observables {0} and {1} do not form a pair on the same subsystem")]
    InvalidPair(Label, Label),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("shot list is empty")]
    EmptyShotList,

    #[error("stream count must be positive")]
    InvalidStreamCount,

    #[error("internal consistency check failed: {what} (deviation {deviation:e})")]
    Inconsistent { what: String, deviation: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
