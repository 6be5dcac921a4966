use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("argument {value} lies outside the domain of the characteristic function (abscissa {abscissa})")]
    Domain { value: f64, abscissa: f64 },

    #[error("characteristic function has neither a closed form nor a quadrature representation")]
    NoClosedForm,

    #[error("no Malthusian exponent: φ(β_a+) = {phi_at_abscissa} < 1")]
    NoMalthusianExponent { phi_at_abscissa: f64 },

    #[error("root bracketing failed: {0}")]
    RootFindingFailure(String),

    #[error("no sampler for this law: {0}")]
    UnsupportedSampler(String),

    #[error("invalid intensity: {0}")]
    InvalidIntensity(String),

    #[error("no tilted (tagged-fragment) representation: {0}")]
    UnsupportedTilt(String),

    #[error("invalid law: {0}")]
    InvalidLaw(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(
        "precision exhausted at {bits} bits ({digits_lost:.1} digits lost to cancellation, last two values differ by {discrepancy:e})"
    )]
    PrecisionExhausted { bits: u32, digits_lost: f64, discrepancy: f64 },

    #[error("σ has no density or atomic representation usable by the integro-differential solver")]
    UnsupportedRepresentation,

    #[error("pole of γ(·, β): ψ vanishes at {at}")]
    Pole { at: f64 },

    #[error("arithmetic structural measure: the single-residue coefficient does not apply")]
    ArithmeticLaw,

    #[error("E(Σ ξ^β*)² appears infinite: {0}")]
    SecondMomentInfinite(String),

    #[error("empty snapshot: every replicate is extinct or carries no particles")]
    EmptySnapshot,

    #[error("law specification: {0}")]
    Spec(String),
}

pub type Result<T> = std::result::Result<T, Error>;
