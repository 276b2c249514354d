use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid state law: gamma must exceed 1 (got {0})")]
    InvalidStateLaw(f64),
    #[error("degenerate triple point: ell = {ell} is within 1e-6 of d = {d}")]
    DegenerateTriplePoint { d: u32, ell: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("gauge singularity: r = {0} is too close to 2")]
    GaugeSingularity(f64),
    #[error("no sonic root on the sonic line for r = {0}")]
    NoSonicRoot(f64),
    #[error("not a critical point: {0}")]
    NotCritical(String),
    #[error("no root in bracket [{lo}, {hi}]")]
    NoRootInBracket { lo: f64, hi: f64 },
    #[error("crossing failed: {0}")]
    CrossingFailed(String),
    #[error("wrong branch: {0}")]
    WrongBranch(String),
    #[error("integration failed: {0}")]
    Integration(String),
    #[error("non-integrable energy: n_P = {n_p} must exceed {min}")]
    NonIntegrableEnergy { n_p: f64, min: f64 },
    #[error("root not bracketed: {0}")]
    RootNotBracketed(String),
    #[error("assembly failed: {0}")]
    AssemblyFailed(String),
    #[error("vacuum: density became non-positive at tau = {0}")]
    Vacuum(f64),
    #[error("blow-up: non-finite state at tau = {0}")]
    Blowup(f64),
    #[error("input error: {0}")]
    Input(String),
}

pub type Result<T> = std::result::Result<T, Error>;
