use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WalkError {
    #[error("coin is not unitary (defect {0:e})")]
    NonUnitaryCoin(f64),
    #[error("coin has a = 0; transfer matrices do not exist for off-diagonal coins")]
    OffDiagonalCoin,
    #[error("spectral parameter z = 0")]
    ZeroSpectralParameter,
    #[error("empty or degenerate cell interval [{0}, {1}]")]
    DegenerateInterval(i64, i64),
    #[error("matrix is not unimodular (|det - 1| = {0:e})")]
    NotUnimodular(f64),
    #[error("spectral parameter off the unit circle (|z| = {0})")]
    OffCircle(f64),
    #[error("Verblunsky coefficient at index {index} has modulus {modulus} >= 1")]
    VerblunskyOutOfDisk { index: i64, modulus: f64 },
    #[error("index range {0}..{1} is not even-aligned")]
    Misaligned(i64, i64),
    #[error("sieving needs every second Verblunsky coefficient to vanish")]
    NotSparse,
    #[error("z lies within {distance:e} of the spectrum")]
    NearSpectrum { distance: f64 },
    #[error("Wronskian of the compatible solutions vanishes")]
    VanishingWronskian,
    #[error("entry-formula and factor constructions disagree by {0:e}")]
    ConventionMismatch(f64),
    #[error("evolution needs {needed} indices, cap is {cap}; truncate to at most {max_steps} steps or raise the cap")]
    MemoryCap { needed: usize, cap: usize, max_steps: usize },
    #[error("window of {0} indices exceeds the dense eigensolver limit of {1}")]
    WindowTooLarge(usize, usize),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("field fails the finite Diophantine condition at k = {k}")]
    NotDiophantine { k: i64 },
    #[error("eigensolver failed")]
    EigenFailure,
}

pub type Result<T> = std::result::Result<T, WalkError>;
