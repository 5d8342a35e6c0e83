use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("speed beta = {0} outside [0, 1]")]
    BetaOutOfRange(f64),

    #[error("beta = {0} too close to 1: Lorentz factor gamma_L = 1/sqrt(1 - beta^2) diverges (limit {1})")]
    LorentzFactorDivergent(f64, f64),

    #[error("beta = {0} below {1}: momentum transfer t vanishes and the t-channel propagator has a pole")]
    TChannelPole(f64, f64),

    #[error("gamma matrix index {0} out of range 0..=3")]
    GammaIndex(usize),

    #[error("trace of an empty matrix product")]
    EmptyProduct,

    #[error("trigonometric fit system is singular after {0} re-sampling attempts")]
    SingularFit(usize),

    #[error("invalid search settings: {0}")]
    InvalidSettings(String),

    #[error("non-finite value: {0}")]
    NonFinite(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;
